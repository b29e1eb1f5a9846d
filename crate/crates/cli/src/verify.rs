//! Quick randomized battery over the library's internal consistency checks.

use apmoments::coeffs::{self, WeightKind};
use apmoments::expsum::{self, Method};
use apmoments::saliemoments::{self, MomentTuple};
use apmoments::voronoi::{self, WindowSpec, WindowTransform};
use apmoments::{modarith, PrimePowerModulus};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

#[derive(Debug, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

fn check(name: &'static str, outcome: Result<(bool, String), String>) -> Check {
    match outcome {
        Ok((pass, detail)) => Check { name, pass, detail },
        Err(detail) => Check { name, pass: false, detail },
    }
}

const MODULI: [(u64, u32); 6] = [(3, 2), (5, 2), (3, 3), (7, 2), (11, 2), (13, 3)];

fn random_modulus(rng: &mut ChaCha8Rng) -> PrimePowerModulus {
    let (p, n) = MODULI[rng.gen_range(0..MODULI.len())];
    PrimePowerModulus::new(p, n).expect("odd prime power")
}

fn random_unit(rng: &mut ChaCha8Rng, q: &PrimePowerModulus) -> i64 {
    loop {
        let x = rng.gen_range(1..q.q()) as i64;
        if x as u64 % q.p() != 0 {
            return x;
        }
    }
}

fn closed_vs_direct(samples: usize, rng: &mut ChaCha8Rng) -> Result<(bool, String), String> {
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let q = random_modulus(rng);
        let (m, n) = (random_unit(rng, &q), random_unit(rng, &q));
        let k = |method| expsum::kloosterman(m, n, &q, method).map(|v| v.value);
        let s = |method| expsum::salie(m, n, &q, method).map(|v| v.value);
        let dk = (k(Method::ClosedForm).map_err(|e| e.to_string())? - k(Method::Direct).map_err(|e| e.to_string())?).norm();
        let ds = (s(Method::ClosedForm).map_err(|e| e.to_string())? - s(Method::Direct).map_err(|e| e.to_string())?).norm();
        worst = worst.max(dk).max(ds);
    }
    Ok((worst < 1e-9, format!("max |closed - direct| = {worst:.3e}")))
}

fn weil_bound(samples: usize, rng: &mut ChaCha8Rng) -> Result<(bool, String), String> {
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let q = random_modulus(rng);
        let (m, n) = (random_unit(rng, &q), random_unit(rng, &q));
        let v = expsum::kloosterman(m, n, &q, Method::ClosedForm).map_err(|e| e.to_string())?;
        worst = worst.max(v.value.norm() / (2.0 * (q.q() as f64).sqrt()));
    }
    Ok((worst <= 1.0 + 1e-9, format!("max |K| / 2 sqrt(q) = {worst:.6}")))
}

fn moment_formula(samples: usize, rng: &mut ChaCha8Rng) -> Result<(bool, String), String> {
    let mut worst = 0.0f64;
    for _ in 0..samples.div_ceil(4) {
        let q = PrimePowerModulus::new([3, 5, 7][rng.gen_range(0..3)], 2).expect("odd prime power");
        let nu = rng.gen_range(1..=4);
        let m: Vec<u64> = (0..nu).map(|_| random_unit(rng, &q) as u64).collect();
        let e = if rng.gen_bool(0.5) { 1 } else { -1 };
        let t = MomentTuple::new(q, m, e).map_err(|e| e.to_string())?;
        let f = saliemoments::salie_moment_formula(&t).map_err(|e| e.to_string())?;
        let b = saliemoments::salie_moment_bruteforce(&t).map_err(|e| e.to_string())?;
        worst = worst.max((f - b).abs());
    }
    Ok((worst < 1e-8, format!("max |formula - brute| = {worst:.3e}")))
}

fn zero_detection(samples: usize, rng: &mut ChaCha8Rng) -> Result<(bool, String), String> {
    let mut disagreements = 0;
    for _ in 0..samples {
        let len = rng.gen_range(2..=6);
        let values: Vec<u64> = (0..len).map(|_| {
            let k = rng.gen_range(1..=4u64);
            [2, 3, 5, 6][rng.gen_range(0..4)] * k * k
        }).collect();
        let signs: Vec<i8> = (0..len).map(|_| if rng.gen_bool(0.5) { 1 } else { -1 }).collect();
        let exact = saliemoments::sqrt_sum_is_zero(&signs, &values).map_err(|e| e.to_string())?;
        let fixed = saliemoments::sqrt_sum_fixed_point(&signs, &values, 60);
        let numeric = fixed.bits() < 100;
        if exact != numeric {
            disagreements += 1;
        }
    }
    Ok((disagreements == 0, format!("{disagreements} disagreements with 60-digit arithmetic")))
}

fn tau_agreement() -> Result<(bool, String), String> {
    let n = 2000;
    let fast = coeffs::tau_exact(n).map_err(|e| e.to_string())?;
    let slow = coeffs::tau_schoolbook(n);
    let bad = fast.iter().zip(&slow).filter(|(a, b)| a != b).count();
    Ok((bad == 0, format!("{bad} mismatches in tau(1..={n})")))
}

fn plancherel() -> Result<(bool, String), String> {
    let t = WindowTransform::with_defaults(WindowSpec::default_bump(), WeightKind::Integral { kappa: 12 })
        .map_err(|e| e.to_string())?;
    let r = voronoi::plancherel_check(&t).map_err(|e| e.to_string())?;
    Ok((r.gap < 1e-6, format!("relative norm gap {:.3e}", r.gap)))
}

fn voronoi_identity(rng: &mut ChaCha8Rng) -> Result<(bool, String), String> {
    let kind = WeightKind::Integral { kappa: 12 };
    let t = WindowTransform::with_defaults(WindowSpec::default_bump(), kind).map_err(|e| e.to_string())?;
    let s = coeffs::generate_delta(1 << 16).map_err(|e| e.to_string())?;
    let q = PrimePowerModulus::new(3, 2).expect("odd prime power");
    let b = random_unit(rng, &q) as u64;
    let r = voronoi::voronoi_residual(&s, None, &q, b, 200.0, &t, voronoi::DEFAULT_TAIL_TOL)
        .map_err(|e| e.to_string())?;
    Ok((r.residual < 1e-8, format!("b = {b}: residual {:.3e}", r.residual)))
}

fn kronecker_multiplicative(samples: usize, rng: &mut ChaCha8Rng) -> Result<(bool, String), String> {
    let mut bad = 0;
    for _ in 0..samples {
        let (a, b) = (rng.gen_range(-500..500i64), rng.gen_range(-500..500i64));
        let n = 2 * rng.gen_range(1..500i64) + 1;
        if modarith::kronecker_symbol(a * b, n) != modarith::kronecker_symbol(a, n) * modarith::kronecker_symbol(b, n) {
            bad += 1;
        }
    }
    Ok((bad == 0, format!("{bad} failures of (ab/n) = (a/n)(b/n)")))
}

/// Every check, deterministic for a given seed.
pub fn run_battery(samples: usize, seed: u64) -> Vec<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    vec![
        check("kronecker_multiplicative", kronecker_multiplicative(samples, &mut rng)),
        check("closed_form_vs_direct", closed_vs_direct(samples, &mut rng)),
        check("kloosterman_weil_bound", weil_bound(samples, &mut rng)),
        check("salie_moment_formula", moment_formula(samples, &mut rng)),
        check("sqrt_sum_zero_detection", zero_detection(samples, &mut rng)),
        check("tau_exact_vs_schoolbook", tau_agreement()),
        check("plancherel", plancherel()),
        check("voronoi_identity", voronoi_identity(&mut rng)),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn battery_passes_and_is_seeded() {
        let a = run_battery(20, 3);
        assert!(a.iter().all(|c| c.pass), "{a:?}");
        let b = run_battery(20, 3);
        let details = |v: &[Check]| v.iter().map(|c| c.detail.clone()).collect::<Vec<_>>();
        assert_eq!(details(&a), details(&b));
    }
}
