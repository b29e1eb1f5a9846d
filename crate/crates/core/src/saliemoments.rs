//! Residue-class moments of products of Sa_q values.
//!
//! The exact moment formula reduces a product of Sa_q values averaged over a
//! quadratic class to counting sign patterns e for which the signed sum of
//! modular square roots vanishes. Deciding the integer analogue of that
//! vanishing is done exactly through squarefree kernels.

use crate::error::{invalid, Result};
use crate::expsum::sa_table;
use crate::modarith::{find_nonresidue, legendre, mod_sqrt, PrimePowerModulus, SqrtTable};
use crate::reduce::det_sum;
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};
use serde::Serialize;
use std::collections::BTreeMap;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MomentTuple {
    pub q: PrimePowerModulus,
    pub m: Vec<u64>,
    /// Class selector, +1 for squares and -1 for non-squares.
    pub e: i8,
}

impl MomentTuple {
    pub fn new(q: PrimePowerModulus, m: Vec<u64>, e: i8) -> Result<Self> {
        if e != 1 && e != -1 {
            return invalid(format!("class selector must be +1 or -1, got {e}"));
        }
        if let Some(bad) = m.iter().find(|&&x| x % q.p() == 0) {
            return invalid(format!("shift {bad} is divisible by p={}", q.p()));
        }
        Ok(Self { q, m, e })
    }

    /// Whether every shift lies in the selected class.
    fn class_matches(&self) -> bool {
        self.m.iter().all(|&x| legendre(x as i64, self.q.p()) == self.e as i32)
    }

    fn mu(&self) -> u64 {
        if self.e == 1 {
            1
        } else {
            find_nonresidue(self.q.p())
        }
    }
}

/// Number of sign vectors e with sum e_i r_i = 0 mod modulus.
fn count_vanishing(roots: &[u64], modulus: u64) -> u64 {
    let nu = roots.len();
    let mut count = 0;
    for mask in 0u64..(1 << nu) {
        let mut s: i128 = 0;
        for (i, &r) in roots.iter().enumerate() {
            if mask >> i & 1 == 1 {
                s -= r as i128;
            } else {
                s += r as i128;
            }
        }
        if s.rem_euclid(modulus as i128) == 0 {
            count += 1;
        }
    }
    count
}

fn canonical_roots(xs: &[u64], q: &PrimePowerModulus) -> Vec<u64> {
    xs.iter()
        .map(|&x| mod_sqrt(x as i64, q).expect("unit").expect("residue").value)
        .collect()
}

/// Exact class moment of prod Sa_q(m_i a).
pub fn salie_moment_formula(tuple: &MomentTuple) -> Result<f64> {
    let q = tuple.q;
    MomentTuple::new(q, tuple.m.clone(), tuple.e)?;
    if !tuple.class_matches() {
        return Ok(0.0);
    }
    let mu = tuple.mu() as u128;
    let shifted: Vec<u64> =
        tuple.m.iter().map(|&x| (x as u128 * mu % q.q() as u128) as u64).collect();
    let full = count_vanishing(&canonical_roots(&shifted, &q), q.q()) as f64;
    let partial = match q.parent() {
        Some(qp) => {
            let reduced: Vec<u64> = shifted.iter().map(|&x| x % qp.q()).collect();
            count_vanishing(&canonical_roots(&reduced, &qp), qp.q()) as f64
        }
        None => (1u64 << tuple.m.len()) as f64,
    };
    let ratio = q.q() as f64 / q.phi() as f64;
    Ok(ratio * (full - partial / q.p() as f64))
}

/// (2/phi(q)) times the sum of prod Sa_q(m_i a) over the selected class.
///
/// The class is enumerated as a = mu b^2 with b in [1, (q-1)/2], which meets
/// every element exactly once.
pub fn salie_moment_bruteforce(tuple: &MomentTuple) -> Result<f64> {
    let q = tuple.q;
    let table = SqrtTable::new(&q)?;
    salie_moment_bruteforce_with(tuple, &table)
}

pub fn salie_moment_bruteforce_with(tuple: &MomentTuple, table: &SqrtTable) -> Result<f64> {
    let q = tuple.q;
    if table.modulus() != &q {
        return invalid("square-root table built for a different modulus");
    }
    let qq = q.q();
    let mu = tuple.mu() as u128;
    let half = ((qq - 1) / 2) as usize;
    let total: f64 = det_sum(half, |i| {
        let b = (i + 1) as u64;
        if b % q.p() == 0 {
            return 0.0;
        }
        let a = (mu * (b as u128 * b as u128 % qq as u128) % qq as u128) as u64;
        tuple
            .m
            .iter()
            .map(|&x| sa_table((x as u128 * a as u128 % qq as u128) as u64, table))
            .product()
    });
    Ok(2.0 * total / q.phi() as f64)
}

/// m = r^2 t with t squarefree.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct SquarefreeDecomposition {
    pub m: u64,
    pub r: u64,
    pub t: u64,
}

pub fn squarefree_decompose(m: u64) -> Result<SquarefreeDecomposition> {
    if m == 0 {
        return invalid("squarefree decomposition needs m >= 1");
    }
    let (mut rest, mut r, mut t) = (m, 1u64, 1u64);
    let mut d = 2u64;
    while d * d <= rest {
        while rest % (d * d) == 0 {
            rest /= d * d;
            r *= d;
        }
        if rest % d == 0 {
            rest /= d;
            t *= d;
        }
        d += 1;
    }
    t *= rest;
    Ok(SquarefreeDecomposition { m, r, t })
}

/// True iff sum e_i sqrt(m_i) = 0 exactly.
pub fn sqrt_sum_is_zero(signs: &[i8], values: &[u64]) -> Result<bool> {
    if signs.len() != values.len() {
        return invalid("signs and values differ in length");
    }
    let mut by_kernel: BTreeMap<u64, i128> = BTreeMap::new();
    for (&e, &m) in signs.iter().zip(values) {
        let d = squarefree_decompose(m)?;
        *by_kernel.entry(d.t).or_default() += e as i128 * d.r as i128;
    }
    Ok(by_kernel.values().all(|&c| c == 0))
}

/// Element of Z[sqrt t : t squarefree], keyed by kernel.
type Radical = BTreeMap<u64, BigInt>;

fn radical_mul(a: &Radical, b: &Radical) -> Radical {
    let mut out = Radical::new();
    for (&t1, c1) in a {
        for (&t2, c2) in b {
            let g = t1.gcd(&t2);
            let t = (t1 / g) * (t2 / g);
            let coeff = c1 * c2 * BigInt::from(g);
            *out.entry(t).or_insert_with(BigInt::zero) += coeff;
        }
    }
    out.retain(|_, c| !c.is_zero());
    out
}

/// Q_r(m_1..m_r) = prod over e with e_1 = 1 of sum e_i sqrt(m_i), exactly.
pub fn q_poly(values: &[u64]) -> Result<BigInt> {
    match values.len() {
        0 => return Ok(BigInt::zero()),
        1 => return Ok(BigInt::from(values[0])),
        _ => {}
    }
    let parts: Vec<SquarefreeDecomposition> =
        values.iter().map(|&m| squarefree_decompose(m)).collect::<Result<_>>()?;
    let r = values.len();
    let mut acc: Radical = BTreeMap::from([(1u64, BigInt::one())]);
    for mask in 0u64..(1 << (r - 1)) {
        let mut factor = Radical::new();
        for (i, d) in parts.iter().enumerate() {
            let negative = i > 0 && mask >> (i - 1) & 1 == 1;
            let c = BigInt::from(d.r) * if negative { -1 } else { 1 };
            *factor.entry(d.t).or_insert_with(BigInt::zero) += c;
        }
        factor.retain(|_, c| !c.is_zero());
        acc = radical_mul(&acc, &factor);
        if acc.is_empty() {
            return Ok(BigInt::zero());
        }
    }
    if acc.keys().any(|&t| t != 1) {
        return Err(crate::Error::Numerical("Q_r expansion left irrational terms".into()));
    }
    Ok(acc.remove(&1).unwrap_or_else(BigInt::zero))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct DeltaBoundRecord {
    pub lhs: u64,
    pub rhs: u64,
    pub holds: bool,
}

/// Compare modular and integer vanishing counts of signed root sums.
pub fn check_delta_bound(q: &PrimePowerModulus, y: f64, m: &[u64]) -> Result<DeltaBoundRecord> {
    let nu = m.len();
    if nu == 0 {
        return invalid("need at least one shift");
    }
    let lhs_hyp = (nu as f64 * nu as f64 * y).powf(2f64.powi(nu as i32 - 2));
    if lhs_hyp >= q.q() as f64 / 2.0 {
        return invalid(format!("(nu^2 Y)^(2^(nu-2)) = {lhs_hyp} is not below q/2"));
    }
    for &x in m {
        if x as f64 >= y || x == 0 {
            return invalid(format!("shift {x} must lie in [1, Y)"));
        }
        if legendre(x as i64, q.p()) != 1 {
            return invalid(format!("shift {x} is not a quadratic residue"));
        }
    }
    let lhs = count_vanishing(&canonical_roots(m, q), q.q());
    let mut zero_patterns = 0u64;
    for mask in 0u64..(1 << nu) {
        let signs: Vec<i8> = (0..nu).map(|i| if mask >> i & 1 == 1 { -1 } else { 1 }).collect();
        if sqrt_sum_is_zero(&signs, m)? {
            zero_patterns += 1;
        }
    }
    let rhs = (1u64 << nu) * zero_patterns;
    Ok(DeltaBoundRecord { lhs, rhs, holds: lhs <= rhs })
}

/// sum e_i floor(sqrt(m_i) 10^digits), an independent high-precision view
/// of the signed root sum. Each term is off by less than one unit.
pub fn sqrt_sum_fixed_point(signs: &[i8], values: &[u64], digits: u32) -> BigInt {
    let scale = BigInt::from(10u32).pow(2 * digits);
    signs.iter().zip(values).map(|(&e, &m)| (BigInt::from(m) * &scale).sqrt() * e as i32).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
        use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn modulus(q: u64) -> PrimePowerModulus {
        PrimePowerModulus::from_q(q).unwrap()
    }

    fn tuple(q: u64, m: &[u64], e: i8) -> MomentTuple {
        MomentTuple::new(modulus(q), m.to_vec(), e).unwrap()
    }

    #[test]
    fn formula_examples() {
        let t = tuple(7, &[1], 1);
        assert!((salie_moment_formula(&t).unwrap() + 1.0 / 3.0).abs() < 1e-12);
        assert!((salie_moment_bruteforce(&t).unwrap() + 1.0 / 3.0).abs() < 1e-12);
        let t = tuple(9, &[1, 1], 1);
        assert!((salie_moment_formula(&t).unwrap() - 2.0).abs() < 1e-12);
        assert!((salie_moment_bruteforce(&t).unwrap() - 2.0).abs() < 1e-12);
        let t = tuple(9, &[1], -1);
        assert_eq!(salie_moment_formula(&t).unwrap(), 0.0);
        assert!(salie_moment_bruteforce(&t).unwrap().abs() < 1e-12);
        let t = tuple(25, &[1, 4], 1);
        let d = salie_moment_formula(&t).unwrap() - salie_moment_bruteforce(&t).unwrap();
        assert!(d.abs() < 1e-9);
        assert!(MomentTuple::new(modulus(9), vec![3], 1).is_err());
    }

    #[test]
    fn q7_brute_force_by_cosines() {
        let c: f64 = (1..=3).map(|k| (2.0 * std::f64::consts::PI * k as f64 / 7.0).cos()).sum();
        assert!((2.0 * c / 3.0 + 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn formula_matches_bruteforce_on_random_tuples() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for q in [7u64, 9, 25, 27, 49] {
            let pq = modulus(q);
            let table = SqrtTable::new(&pq).unwrap();
            let mut done = 0;
            while done < 200 {
                let nu = rng.gen_range(1..=3);
                let m: Vec<u64> = (0..nu).map(|_| rng.gen_range(1..200)).collect();
                if m.iter().any(|x| x % pq.p() == 0) {
                    continue;
                }
                let e = if rng.gen_bool(0.5) { 1 } else { -1 };
                let t = MomentTuple::new(pq, m, e).unwrap();
                let f = salie_moment_formula(&t).unwrap();
                let b = salie_moment_bruteforce_with(&t, &table).unwrap();
                assert!((f - b).abs() < 1e-9, "{t:?} {f} {b}");
                done += 1;
            }
        }
    }

    #[test]
    fn decomposition_examples() {
        let d = |m| {
            let s = squarefree_decompose(m).unwrap();
            (s.r, s.t)
        };
        assert_eq!(d(1), (1, 1));
        assert_eq!(d(12), (2, 3));
        assert_eq!(d(49), (7, 1));
        assert_eq!(d(2 * 2 * 2 * 3 * 3 * 3 * 5), (6, 30));
        assert_eq!(d(999_983), (1, 999_983));
        assert!(squarefree_decompose(0).is_err());
    }

    #[test]
    fn q_poly_examples() {
        assert_eq!(q_poly(&[9, 4]).unwrap(), BigInt::from(5));
        assert_eq!(q_poly(&[4, 4]).unwrap(), BigInt::from(0));
        assert_eq!(q_poly(&[1, 4, 9]).unwrap(), BigInt::from(0));
        assert_eq!(q_poly(&[7]).unwrap(), BigInt::from(7));
        assert_eq!(q_poly(&[]).unwrap(), BigInt::from(0));
    }

    #[test]
    fn q3_matches_expansion() {
        for (a, b, c) in [(2i64, 3, 5), (1, 2, 7), (6, 10, 15), (11, 13, 2)] {
            let want = a * a + b * b + c * c - 2 * a * b - 2 * b * c - 2 * c * a;
            assert_eq!(q_poly(&[a as u64, b as u64, c as u64]).unwrap(), BigInt::from(want));
        }
        assert_eq!(q_poly(&[2, 3]).unwrap(), BigInt::from(-1));
    }

    #[test]
    fn q_poly_is_homogeneous_of_degree_two_pow_r_minus_two() {
        let base = [2u64, 3, 5, 7];
        for r in 2..=4usize {
            let m = &base[..r];
            let scaled: Vec<u64> = m.iter().map(|x| 4 * x).collect();
            let factor = BigInt::from(4).pow(1u32 << (r - 2));
            assert_eq!(q_poly(&scaled).unwrap(), q_poly(m).unwrap() * factor);
        }
    }

    #[test]
    fn sqrt_sum_examples() {
        assert!(sqrt_sum_is_zero(&[1, -1], &[4, 4]).unwrap());
        assert!(sqrt_sum_is_zero(&[1, 1, -1], &[1, 4, 9]).unwrap());
        assert!(!sqrt_sum_is_zero(&[1, -1], &[2, 3]).unwrap());
        assert!(sqrt_sum_is_zero(&[1, 1, -1], &[2, 8, 18]).unwrap());
    }

    #[test]
    fn modular_vanishing_forces_q_to_divide_q_poly() {
        let q = modulus(27);
        let qr: Vec<u64> = (1..27).filter(|&x| legendre(x as i64, 3) == 1).collect();
        for &a in &qr {
            for &b in &qr {
                if count_vanishing(&canonical_roots(&[a, b], &q), 27) > 0 {
                    assert!((q_poly(&[a, b]).unwrap() % 27u32).is_zero(), "{a} {b}");
                }
            }
        }
    }

    #[test]
    fn delta_bound_examples() {
        let q = PrimePowerModulus::new(5, 9).unwrap();
        let r = check_delta_bound(&q, 2.0, &[1, 1]).unwrap();
        assert_eq!((r.lhs, r.rhs, r.holds), (2, 8, true));
        let r = check_delta_bound(&q, 5.0, &[1, 4]).unwrap();
        assert_eq!((r.lhs, r.rhs, r.holds), (0, 0, true));
        let r = check_delta_bound(&q, 10.0, &[1, 4, 9]).unwrap();
        assert!(r.holds && r.rhs >= 16);
        assert!(check_delta_bound(&q, 1e6, &[1, 4, 9]).is_err());
        assert!(check_delta_bound(&q, 10.0, &[2]).is_err());
    }

    fn oracle_is_zero(signs: &[i8], values: &[u64]) -> bool {
        sqrt_sum_fixed_point(signs, values, 200).magnitude() < BigInt::from(10u32).pow(50).magnitude()
    }

    #[test]
    fn zero_detection_matches_high_precision() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..2000 {
            let nu = rng.gen_range(1..=5);
            let (signs, values) = if rng.gen_bool(0.5) {
                let nu = nu.max(2);
                let t = [1u64, 2, 3, 5, 6][rng.gen_range(0..5)];
                let mut r: Vec<i64> = (0..nu - 1).map(|_| rng.gen_range(1..200)).collect();
                let s: i64 = r.iter().sum();
                r.push(s);
                let signs: Vec<i8> = (0..nu).map(|i| if i + 1 == nu { -1 } else { 1 }).collect();
                let values: Vec<u64> = r.iter().map(|&x| (x * x) as u64 * t).collect();
                (signs, values)
            } else {
                let signs: Vec<i8> = (0..nu).map(|_| if rng.gen_bool(0.5) { 1 } else { -1 }).collect();
                let values: Vec<u64> = (0..nu).map(|_| rng.gen_range(1..=1_000_000)).collect();
                (signs, values)
            };
            if values.iter().any(|&v| v > 1_000_000) {
                continue;
            }
            assert_eq!(
                sqrt_sum_is_zero(&signs, &values).unwrap(),
                oracle_is_zero(&signs, &values),
                "{signs:?} {values:?}"
            );
        }
    }

    proptest! {
        #[test]
        fn q2_is_difference(a in 1u64..10_000, b in 1u64..10_000) {
            prop_assert_eq!(q_poly(&[a, b]).unwrap(), BigInt::from(a as i64 - b as i64));
        }

        #[test]
        fn decomposition_reassembles(m in 1u64..10_000_000) {
            let d = squarefree_decompose(m).unwrap();
            prop_assert_eq!(d.r * d.r * d.t, m);
            let mut k = 2;
            while k * k <= d.t {
                prop_assert!(d.t % (k * k) != 0);
                k += 1;
            }
        }
    }
}
