//! Smooth windows, the B transform and numerical checks of the Voronoi
//! summation formula.

pub mod gamma;
pub mod quad;
pub mod transform;
pub mod window;

pub use transform::{gamma_shift, plancherel_check, PlancherelRecord, TransformConfig, WindowTransform};
pub use window::{mellin_w, WindowKind, WindowSpec};

use crate::coeffs::{CoefficientSeries, Cusp, WeightKind};
use crate::error::{invalid, Result};
use crate::modarith::{e_q, epsilon_factor, inv_mod, kronecker_symbol, PrimePowerModulus};
use crate::reduce::det_sum;
use num_complex::Complex64;
use serde::Serialize;

/// Default bound on the discarded part of the dual sum.
pub const DEFAULT_TAIL_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum VoronoiMode {
    Integral,
    Half,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VoronoiRecord {
    pub mode: VoronoiMode,
    pub q: u64,
    pub b: u64,
    pub x: f64,
    /// Dual length scale: q^2/X, or 4q^2/X in half-integral weight.
    pub y: f64,
    pub lhs: Complex64,
    pub rhs: Complex64,
    /// |lhs - rhs| / (1 + |lhs|).
    pub residual: f64,
    pub dual_terms: usize,
    /// Absolute contribution of the last dual block kept.
    pub dual_tail: f64,
}

/// Sum over n of a(n) e_q(b n) w(n / X).
pub fn smoothed_sum(series: &CoefficientSeries, q: u64, b: u64, x: f64, window: &WindowSpec) -> Result<Complex64> {
    let (lo, hi) = window.support();
    let n_lo = (lo * x).ceil().max(1.0) as usize;
    let n_hi = (hi * x).floor() as usize;
    if n_hi > series.len() {
        return invalid(format!("series has {} terms, the window needs {n_hi}", series.len()));
    }
    if n_hi < n_lo {
        return Ok(Complex64::new(0.0, 0.0));
    }
    Ok(det_sum(n_hi - n_lo + 1, |i| {
        let n = n_lo + i;
        let wv = window.eval(n as f64 / x);
        if wv == 0.0 {
            Complex64::new(0.0, 0.0)
        } else {
            e_q((b as u128 * n as u128 % q as u128) as i64, q) * (series.get(n) * wv)
        }
    }))
}

/// Both sides of the Voronoi formula for one additive twist.
///
/// Integral weight uses the level-one series on both sides. Half-integral
/// weight needs the expansion at the cusp 0 for the dual side.
pub fn voronoi_residual(
    series: &CoefficientSeries,
    dual: Option<&CoefficientSeries>,
    q: &PrimePowerModulus,
    b: u64,
    x: f64,
    transform: &WindowTransform,
    tail_tol: f64,
) -> Result<VoronoiRecord> {
    let qq = q.q();
    let Some(b_inv) = inv_mod(b as i64, qq) else {
        return invalid(format!("b = {b} is not invertible modulo {qq}"));
    };
    if !(x > 0.0 && x.is_finite()) {
        return invalid(format!("X must be positive, got {x}"));
    }
    if transform.kind() != series.kind {
        return invalid("transform weight does not match the series");
    }
    let qf = qq as f64;
    let (mode, dual, y, front, twist) = match series.kind {
        WeightKind::Integral { kappa } => {
            let front = Complex64::i().powu(kappa) * (x / qf);
            (VoronoiMode::Integral, series, qf * qf / x, front, (qq - b_inv) % qq)
        }
        WeightKind::HalfIntegral { ell } => {
            let Some(dual) = dual else {
                return invalid("half-integral mode needs the cusp-0 series");
            };
            if series.cusp != Cusp::Infinity || dual.cusp != Cusp::Zero || dual.kind != series.kind {
                return invalid("half-integral mode needs matching cusp-infinity and cusp-0 series");
            }
            let eps = epsilon_factor(qq as i64)?;
            let chi = kronecker_symbol(((qq - b_inv) % qq) as i64, qq as i64) as f64;
            let front = eps.powi(-(2 * ell as i32 + 1)) * chi * (x / (2.0 * qf));
            let four_b_inv = inv_mod((4 * b as u128 % qq as u128) as i64, qq).expect("q is odd");
            (VoronoiMode::Half, dual, 4.0 * qf * qf / x, front, (qq - four_b_inv) % qq)
        }
    };
    let lhs = smoothed_sum(series, qq, b % qq, x, transform.window())?;

    let mut rhs = Complex64::new(0.0, 0.0);
    let mut start = 1usize;
    let mut end = ((10.0 * y).ceil() as usize).max(64);
    let mut prev_abs = f64::INFINITY;
    loop {
        if end - 1 > dual.len() {
            return invalid(format!(
                "dual series has {} terms; the tail is not yet below {tail_tol:e} at m = {start}",
                dual.len()
            ));
        }
        let xs: Vec<f64> = (start..end).map(|m| m as f64 / y).collect();
        let bs = transform.b_values(&xs)?;
        let block = det_sum(bs.len(), |i| {
            let m = start + i;
            e_q((twist as u128 * m as u128 % qq as u128) as i64, qq) * (dual.get(m) * bs[i])
        });
        let block_abs = front.norm() * det_sum(bs.len(), |i| (dual.get(start + i) * bs[i]).abs());
        rhs += block * front;
        let done = block_abs < 0.25 * tail_tol && block_abs <= prev_abs;
        prev_abs = block_abs;
        start = end;
        end *= 2;
        if done {
            let residual = (lhs - rhs).norm() / (1.0 + lhs.norm());
            return Ok(VoronoiRecord {
                mode,
                q: qq,
                b,
                x,
                y,
                lhs,
                rhs,
                residual,
                dual_terms: start - 1,
                dual_tail: block_abs,
            });
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeffs::{generate_delta, theta_eta_form};
    use std::sync::OnceLock;

    fn delta() -> &'static CoefficientSeries {
        static D: OnceLock<CoefficientSeries> = OnceLock::new();
        D.get_or_init(|| generate_delta(1 << 20).unwrap())
    }

    fn delta_transform() -> &'static WindowTransform {
        static T: OnceLock<WindowTransform> = OnceLock::new();
        T.get_or_init(|| {
            WindowTransform::with_defaults(WindowSpec::default_bump(), WeightKind::Integral { kappa: 12 }).unwrap()
        })
    }

    fn check(p: u64, n: u32, b: u64, x: f64) -> VoronoiRecord {
        let q = PrimePowerModulus::new(p, n).unwrap();
        voronoi_residual(delta(), None, &q, b, x, delta_transform(), DEFAULT_TAIL_TOL).unwrap()
    }

    #[test]
    fn delta_identity_small_moduli() {
        for (p, n, b, x) in [(3, 2, 1, 2000.0), (5, 2, 7, 5000.0), (7, 2, 47, 2000.0), (3, 3, 25, 500.0)] {
            let r = check(p, n, b, x);
            assert!(r.residual < 1e-3, "{r:?}");
            assert!(r.lhs.norm() > 1e-3);
        }
    }

    #[test]
    fn empty_window_has_vanishing_dual_side() {
        // No integer lies in (X, 2X) when X < 1/2.
        let q = PrimePowerModulus::new(3, 1).unwrap();
        // Y = 20 needs the dual sum out to m / Y ~ 1e5.
        let long = generate_delta(1 << 22).unwrap();
        let r = voronoi_residual(&long, None, &q, 1, 0.45, delta_transform(), DEFAULT_TAIL_TOL).unwrap();
        assert_eq!(r.lhs, Complex64::new(0.0, 0.0));
        assert!(r.rhs.norm() < 1e-8, "{r:?}");
    }

    #[test]
    fn half_integral_identity() {
        let (f, f0) = theta_eta_form(1 << 18).unwrap();
        let t = WindowTransform::with_defaults(WindowSpec::default_bump(), f.kind).unwrap();
        for (p, n, b) in [(7, 1, 2), (3, 2, 4)] {
            let q = PrimePowerModulus::new(p, n).unwrap();
            let r = voronoi_residual(&f, Some(&f0), &q, b, 500.0, &t, DEFAULT_TAIL_TOL).unwrap();
            assert_eq!(r.mode, VoronoiMode::Half);
            assert!(r.residual < 1e-3, "{r:?}");
        }
    }

    #[test]
    fn rejects_invalid_input() {
        let q = PrimePowerModulus::new(3, 2).unwrap();
        let t = delta_transform();
        assert!(voronoi_residual(delta(), None, &q, 3, 2000.0, t, DEFAULT_TAIL_TOL).is_err());
        assert!(voronoi_residual(delta(), None, &q, 1, -1.0, t, DEFAULT_TAIL_TOL).is_err());
        let short = delta().truncated(1000);
        assert!(voronoi_residual(&short, None, &q, 1, 2000.0, t, DEFAULT_TAIL_TOL).is_err());
        let (f, _) = theta_eta_form(5000).unwrap();
        let th = WindowTransform::with_defaults(WindowSpec::default_bump(), f.kind).unwrap();
        assert!(voronoi_residual(&f, None, &q, 1, 500.0, &th, DEFAULT_TAIL_TOL).is_err());
        assert!(voronoi_residual(&f, Some(&f), &q, 1, 500.0, &th, DEFAULT_TAIL_TOL).is_err());
        assert!(voronoi_residual(delta(), None, &q, 1, 2000.0, &th, DEFAULT_TAIL_TOL).is_err());
    }

    #[test]
    fn smoothed_sum_of_a_single_term() {
        let mut v = vec![0.0; 30];
        v[14] = 2.0;
        let s = CoefficientSeries::synthetic(WeightKind::Integral { kappa: 12 }, v).unwrap();
        let w = WindowSpec::default_bump();
        let got = smoothed_sum(&s, 7, 3, 10.0, &w).unwrap();
        let want = e_q(45 % 7, 7) * (2.0 * w.eval(1.5));
        assert!((got - want).norm() < 1e-15);
    }
}
