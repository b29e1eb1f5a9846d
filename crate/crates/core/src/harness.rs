//! Coefficient sums over residue classes, their dual Kloosterman and Salie
//! expansions, empirical moments and the Gaussian main term.

use crate::coeffs::{CoefficientSeries, Cusp, WeightKind};
use crate::error::{invalid, Result};
use crate::expsum::{self, kloosterman_even_table, sa_table, Method};
use crate::modarith::{epsilon_factor, legendre, PrimePowerModulus, SqrtTable};
use crate::reduce::{det_buckets, det_sum};
use crate::voronoi::{VoronoiMode, WindowSpec, WindowTransform};
use rayon::prelude::*;
use serde::Serialize;

pub const DEFAULT_ETA: f64 = 0.5;
pub const DEFAULT_DELTA: f64 = 0.1;

/// Largest dual cutoff accepted.
pub const MAX_CUTOFF: usize = 1 << 32;

fn mode_of(kind: WeightKind) -> VoronoiMode {
    match kind {
        WeightKind::Integral { .. } => VoronoiMode::Integral,
        WeightKind::HalfIntegral { .. } => VoronoiMode::Half,
    }
}

/// X, q and the dual length Y with the cutoff M_max = ceil(Y^(1 + eta)).
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DualParams {
    pub x: f64,
    pub q: PrimePowerModulus,
    /// q^2/X in integral weight, 4q^2/X in half-integral weight.
    pub y: f64,
    pub eta: f64,
    /// Dual sums run over 1 <= m < m_max.
    pub m_max: usize,
    pub mode: VoronoiMode,
}

impl DualParams {
    pub fn new(x: f64, q: PrimePowerModulus, kind: WeightKind, eta: f64) -> Result<Self> {
        if !(x > 0.0 && x.is_finite()) {
            return invalid(format!("X must be positive, got {x}"));
        }
        if !(eta > 0.0 && eta.is_finite()) {
            return invalid(format!("eta must be positive, got {eta}"));
        }
        let mode = mode_of(kind);
        let qf = q.q() as f64;
        let y = match mode {
            VoronoiMode::Integral => qf * qf / x,
            VoronoiMode::Half => 4.0 * qf * qf / x,
        };
        let m_max = y.powf(1.0 + eta).ceil().max(1.0);
        if m_max > MAX_CUTOFF as f64 {
            return invalid(format!("cutoff Y^(1+eta) = {m_max:e} is too large"));
        }
        Ok(Self { x, q, y, eta, m_max: m_max as usize, mode })
    }

    /// Parameters fixed by the dual length Y.
    pub fn from_y(y: f64, q: PrimePowerModulus, kind: WeightKind, eta: f64) -> Result<Self> {
        if !(y > 0.0 && y.is_finite()) {
            return invalid(format!("Y must be positive, got {y}"));
        }
        let qf = q.q() as f64;
        let x = match mode_of(kind) {
            VoronoiMode::Integral => qf * qf / y,
            VoronoiMode::Half => 4.0 * qf * qf / y,
        };
        Self::new(x, q, kind, eta)
    }

    /// The same X and Y with eta raised so that the cutoff is `m_max`.
    pub fn with_cutoff(self, m_max: usize) -> Result<Self> {
        if self.y <= 1.0 || (m_max as f64) <= self.y || m_max > MAX_CUTOFF {
            return invalid(format!("cutoff {m_max} needs Y > 1 and Y < cutoff <= 2^32 (Y = {})", self.y));
        }
        let eta = (m_max as f64).ln() / self.y.ln() - 1.0;
        Ok(Self { eta, m_max, ..self })
    }

    fn check_kind(&self, kind: WeightKind) -> Result<()> {
        if mode_of(kind) != self.mode {
            return invalid("series weight does not match the parameters");
        }
        Ok(())
    }
}

/// One real value per residue class modulo q.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClassMap {
    pub q: PrimePowerModulus,
    values: Vec<f64>,
}

impl ClassMap {
    pub fn new(q: PrimePowerModulus, values: Vec<f64>) -> Result<Self> {
        if values.len() as u64 != q.q() {
            return invalid(format!("class map modulo {} needs {} values, got {}", q.q(), q.q(), values.len()));
        }
        Ok(Self { q, values })
    }

    pub fn from_fn(q: PrimePowerModulus, f: impl Fn(u64) -> f64) -> Self {
        Self { q, values: (0..q.q()).map(f).collect() }
    }

    pub fn get(&self, a: u64) -> f64 {
        self.values[(a % self.q.q()) as usize]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Values at the units a with (a/p) = e, in increasing order of a.
    pub fn class_values(&self, e: i8) -> Vec<f64> {
        let p = self.q.p();
        (1..self.q.q())
            .filter(|&a| legendre(a as i64, p) == e as i32)
            .map(|a| self.values[a as usize])
            .collect()
    }

    /// Values at all units, in increasing order.
    pub fn unit_values(&self) -> Vec<f64> {
        let p = self.q.p();
        (1..self.q.q()).filter(|a| a % p != 0).map(|a| self.values[a as usize]).collect()
    }
}

/// Direct-side sums S(X, q, a) and E(X, q, a) for every class a mod q.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DirectSums {
    pub s: ClassMap,
    pub e: ClassMap,
    /// (S_q(a) - S_{q/p}(a)/p) / sqrt(X/q); absent when N = 1.
    pub e_alt: Option<ClassMap>,
    /// Sum over all n of a(n) w(n/X).
    pub total: f64,
    pub terms: usize,
}

impl DirectSums {
    /// Sum of S over all q classes minus the unsplit total.
    pub fn partition_defect(&self) -> f64 {
        det_sum(self.s.values.len(), |i| self.s.values[i]) - self.total
    }
}

/// S(X, q, a) = sum over n = a mod q of a(n) w(n/X), and E = S / sqrt(X/q).
pub fn compute_e(series: &CoefficientSeries, params: &DualParams, window: &WindowSpec) -> Result<DirectSums> {
    params.check_kind(series.kind)?;
    let x = params.x;
    let (lo, hi) = window.support();
    let n_lo = (lo * x).ceil().max(1.0) as usize;
    let n_hi = (hi * x).floor() as usize;
    if n_hi > series.len() {
        return invalid(format!("series has {} terms, the window needs {n_hi}", series.len()));
    }
    let qq = params.q.q() as usize;
    let terms = (n_hi + 1).saturating_sub(n_lo);
    let term = |i: usize| {
        let n = n_lo + i;
        (n % qq, series.get(n) * window.eval(n as f64 / x))
    };
    let s = det_buckets(terms, qq, term);
    let total = det_sum(terms, |i| term(i).1);
    let norm = (x / qq as f64).sqrt();
    let e: Vec<f64> = s.iter().map(|v| v / norm).collect();
    let e_alt = params.q.parent().map(|parent| {
        let r = parent.q() as usize;
        let mut coarse = vec![0.0; r];
        for (a, v) in s.iter().enumerate() {
            coarse[a % r] += v;
        }
        let p = params.q.p() as f64;
        ClassMap::from_fn(params.q, |a| (s[a as usize] - coarse[a as usize % r] / p) / norm)
    });
    Ok(DirectSums {
        s: ClassMap::new(params.q, s)?,
        e: ClassMap::new(params.q, e)?,
        e_alt,
        total,
        terms,
    })
}

/// Real front factor of the dual sum: i^kappa, or eps_q^(-2 ell).
fn front_factor(kind: WeightKind, q: &PrimePowerModulus) -> Result<f64> {
    Ok(match kind {
        WeightKind::Integral { kappa } => {
            if kappa % 2 == 1 {
                return invalid("integral weight must be even");
            }
            if kappa % 4 == 0 { 1.0 } else { -1.0 }
        }
        WeightKind::HalfIntegral { ell } => epsilon_factor(q.q() as i64)?.powi(-2 * ell as i32).re,
    })
}

/// Twisting sum as a function of ma mod q: Kl_q(1, x) in integral weight,
/// Sa_q(x) in half-integral weight. Zero off the units.
fn twist_table(mode: VoronoiMode, q: &PrimePowerModulus) -> Result<Vec<f64>> {
    let qq = q.q();
    match mode {
        VoronoiMode::Integral if q.exponent() < 2 => {
            invalid("the closed-form Kloosterman path needs q = p^N with N >= 2")
        }
        VoronoiMode::Integral if q.exponent() % 2 == 0 => {
            let table = SqrtTable::new(q)?;
            Ok((0..qq).into_par_iter().map(|x| kloosterman_even_table(1, x, &table)).collect())
        }
        VoronoiMode::Integral => (0..qq)
            .into_par_iter()
            .map(|x| {
                if x % q.p() == 0 {
                    Ok(0.0)
                } else {
                    Ok(expsum::kloosterman(1, x as i64, q, Method::ClosedForm)?.value.re)
                }
            })
            .collect(),
        VoronoiMode::Half => {
            let table = SqrtTable::new(q)?;
            Ok((0..qq).into_par_iter().map(|x| sa_table(x, &table)).collect())
        }
    }
}

fn check_dual(dual: &CoefficientSeries, params: &DualParams, transform: &WindowTransform) -> Result<()> {
    params.check_kind(dual.kind)?;
    if transform.kind() != dual.kind {
        return invalid("transform weight does not match the series");
    }
    if params.mode == VoronoiMode::Half && dual.cusp != Cusp::Zero {
        return invalid("half-integral dual sums need the cusp-0 series");
    }
    if dual.len() + 1 < params.m_max {
        return invalid(format!("dual series has {} terms, the cutoff needs {}", dual.len(), params.m_max - 1));
    }
    Ok(())
}

/// a(m) B(m/Y) for 1 <= m < M_max.
fn weighted_terms(dual: &CoefficientSeries, params: &DualParams, transform: &WindowTransform) -> Result<Vec<f64>> {
    let xs: Vec<f64> = (1..params.m_max).map(|m| m as f64 / params.y).collect();
    let bs = transform.b_values(&xs)?;
    Ok(bs.iter().enumerate().map(|(i, b)| dual.get(i + 1) * b).collect())
}

/// The dual sum with its front factor, for every unit a:
/// i^kappa / sqrt(Y) sum a(m) Kl_q(m, a) B(m/Y) in integral weight and
/// eps_q^(-2 ell) / sqrt(Y) sum f_0(m) Sa_q(ma) B(m/Y) in half-integral
/// weight, over 1 <= m < M_max. Non-units a map to zero.
pub fn compute_dual_m(dual: &CoefficientSeries, params: &DualParams, transform: &WindowTransform) -> Result<ClassMap> {
    check_dual(dual, params, transform)?;
    let q = params.q;
    let qq = q.q() as usize;
    let front = front_factor(dual.kind, &q)? / params.y.sqrt();
    let twist = twist_table(params.mode, &q)?;
    let terms = weighted_terms(dual, params, transform)?;
    let buckets = det_buckets(terms.len(), qq, |i| ((i + 1) % qq, terms[i]));
    let live: Vec<(usize, f64)> =
        buckets.iter().enumerate().filter(|&(r, &c)| c != 0.0 && r as u64 % q.p() != 0).map(|(r, &c)| (r, c)).collect();
    let values: Vec<f64> = (0..qq)
        .into_par_iter()
        .map(|a| {
            if a as u64 % q.p() == 0 {
                return 0.0;
            }
            let sum = live.iter().fold(0.0, |acc, &(r, c)| acc + c * twist[(r as u128 * a as u128 % qq as u128) as usize]);
            front * sum
        })
        .collect();
    ClassMap::new(q, values)
}

fn check_class(e: i8) -> Result<()> {
    if e != 1 && e != -1 {
        return invalid(format!("class must be +1 or -1, got {e}"));
    }
    Ok(())
}

/// (2/phi(q)) times the sum of value^nu over units a with (a/p) = e.
pub fn empirical_moment(values: &ClassMap, nu: u32, e: i8) -> Result<f64> {
    check_class(e)?;
    let class = values.class_values(e);
    if class.is_empty() {
        return invalid(format!("no units a mod {} with (a/p) = {e}", values.q.q()));
    }
    let sum = det_sum(class.len(), |i| class[i].powi(nu as i32));
    Ok(2.0 * sum / values.q.phi() as f64)
}

/// nu!/(nu/2)! for even nu, zero for odd nu.
pub fn main_term_factor(nu: u32) -> f64 {
    if nu % 2 == 1 {
        return 0.0;
    }
    ((nu / 2 + 1)..=nu).map(f64::from).product()
}

/// (nu - 1)!! for even nu, zero for odd nu.
pub fn gaussian_double_factorial(nu: u32) -> f64 {
    if nu % 2 == 1 {
        return 0.0;
    }
    (1..nu).step_by(2).map(f64::from).product()
}

/// V_e = (1/Y) sum over 1 <= m < M_max with (m/p) = e of a(m)^2 B(m/Y)^2.
pub fn restricted_variance(
    dual: &CoefficientSeries,
    params: &DualParams,
    transform: &WindowTransform,
    e: i8,
) -> Result<f64> {
    check_class(e)?;
    check_dual(dual, params, transform)?;
    let terms = weighted_terms(dual, params, transform)?;
    let p = params.q.p();
    let sum = det_sum(terms.len(), |i| {
        if legendre((i + 1) as i64, p) == e as i32 {
            terms[i] * terms[i]
        } else {
            0.0
        }
    });
    Ok(sum / params.y)
}

/// nu!/(nu/2)! V_e^(nu/2) for even nu, zero for odd nu.
pub fn main_term(
    dual: &CoefficientSeries,
    params: &DualParams,
    transform: &WindowTransform,
    nu: u32,
    e: i8,
) -> Result<f64> {
    let v = restricted_variance(dual, params, transform, e)?;
    Ok(main_term_factor(nu) * v.powi(nu as i32 / 2))
}

/// C_nu = 1 / (2 nu^(2^(nu - 1))).
pub fn c_nu(nu: u32) -> f64 {
    1.0 / (2.0 * (nu as f64).powf(2f64.powi(nu as i32 - 1)))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ErrorBudget {
    /// Y^(-1/2) in integral weight, Y^(-1/3) in half-integral weight.
    pub decay: f64,
    /// Y^(nu/2) / p.
    pub moment: f64,
    pub total: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct ReportOptions {
    /// Growth exponent slack in 1 <= Y^(2^(nu-2) + delta) < C_nu q.
    pub delta: f64,
    /// Multiplier applied to the error budget, from a reference run.
    pub calibration: Option<f64>,
}

impl ReportOptions {
    pub fn new() -> Self {
        Self { delta: DEFAULT_DELTA, calibration: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MomentReport {
    pub nu: u32,
    pub class: i8,
    pub mode: VoronoiMode,
    pub params: DualParams,
    pub delta: f64,
    pub direct_cusp: Cusp,
    pub dual_cusp: Cusp,
    pub lhs: f64,
    pub rhs_main: f64,
    pub v_e: f64,
    pub class_size: usize,
    pub error_budget: ErrorBudget,
    /// |lhs - rhs_main|.
    pub gap: f64,
    /// gap / error_budget.total.
    pub budget_ratio: f64,
    pub calibration: Option<f64>,
    /// gap <= calibration * error_budget.total, when calibrated.
    pub within_budget: Option<bool>,
    pub c_nu: f64,
    pub in_regime: bool,
    pub eta_admissible: bool,
    /// Bound on the discarded dual terms m >= M_max from |a(m)| <= d(m)
    /// and the contour-shift bound on B; Hecke-normalized integral weight
    /// only.
    pub tail_bound: Option<f64>,
    pub warnings: Vec<String>,
}

/// Bound on (1/sqrt Y) sum over m >= M_max of 2 |a(m)| |B(m/Y)| using
/// |a(m)| <= d(m) <= 2 sqrt(m), summed over dyadic blocks.
fn dual_tail_bound(params: &DualParams, transform: &WindowTransform) -> Result<f64> {
    let mut total = 0.0;
    let mut lo = params.m_max.max(1) as f64;
    for _ in 0..64 {
        let block = lo * 2.0 * (2.0 * lo).sqrt() * transform.b_bound(lo / params.y)?;
        total += block;
        if block < 1e-6 * total || block < 1e-300 {
            break;
        }
        lo *= 2.0;
    }
    Ok(2.0 * total / params.y.sqrt())
}

/// Empirical moment of E against the main term, with the error budget and
/// the growth-condition diagnostics.
pub fn moment_report(
    direct: &DirectSums,
    direct_cusp: Cusp,
    dual: &CoefficientSeries,
    params: &DualParams,
    transform: &WindowTransform,
    nu: u32,
    e: i8,
    options: ReportOptions,
) -> Result<MomentReport> {
    if nu == 0 {
        return invalid("nu must be at least 1");
    }
    if direct.e.q != params.q {
        return invalid("direct sums were computed for another modulus");
    }
    let lhs = empirical_moment(&direct.e, nu, e)?;
    let v_e = restricted_variance(dual, params, transform, e)?;
    let rhs_main = main_term_factor(nu) * v_e.powi(nu as i32 / 2);
    let y = params.y;
    let decay = match params.mode {
        VoronoiMode::Integral => y.powf(-0.5),
        VoronoiMode::Half => y.powf(-1.0 / 3.0),
    };
    let moment = y.powf(nu as f64 / 2.0) / params.q.p() as f64;
    let budget = ErrorBudget { decay, moment, total: decay + moment };
    let gap = (lhs - rhs_main).abs();
    let c = c_nu(nu);
    let growth = y.powf(2f64.powi(nu as i32 - 2) + options.delta);
    let in_regime = 1.0 <= growth && growth < c * params.q.q() as f64;
    let eta_admissible = params.eta < options.delta * 2f64.powi(2 - nu as i32);
    let mut warnings = Vec::new();
    if !in_regime {
        warnings.push(format!(
            "out of regime: Y^(2^(nu-2)+delta) = {growth:.4e} is not in [1, C_nu q = {:.4e})",
            c * params.q.q() as f64
        ));
    }
    if !eta_admissible {
        warnings.push(format!("eta = {} is not below delta 2^(2-nu) = {}", params.eta, options.delta * 2f64.powi(2 - nu as i32)));
    }
    if params.mode == VoronoiMode::Integral && params.q.exponent() < 2 {
        warnings.push("the integral-weight statement assumes N > 1".into());
    }
    let tail_bound = match (params.mode, dual.hecke_normalized) {
        (VoronoiMode::Integral, true) => Some(dual_tail_bound(params, transform)?),
        _ => None,
    };
    Ok(MomentReport {
        nu,
        class: e,
        mode: params.mode,
        params: *params,
        delta: options.delta,
        direct_cusp,
        dual_cusp: dual.cusp,
        lhs,
        rhs_main,
        v_e,
        class_size: direct.e.class_values(e).len(),
        error_budget: budget,
        gap,
        budget_ratio: gap / budget.total,
        calibration: options.calibration,
        within_budget: options.calibration.map(|k| gap <= k * budget.total),
        c_nu: c,
        in_regime,
        eta_admissible,
        tail_bound,
        warnings,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DistributionRecord {
    pub count: usize,
    pub v: f64,
    /// Fraction of values exactly equal to 0.
    pub zero_mass: f64,
    /// Mean of value^nu for nu = 1..4.
    pub empirical: [f64; 4],
    /// Moments of (delta_0 + N(0, 2V)) / 2.
    pub mixture: [f64; 4],
    /// |empirical - mixture|.
    pub gaps: [f64; 4],
}

/// Moments of the mixture (delta_0 + N(0, 2V)) / 2.
pub fn mixture_moment(nu: u32, v: f64) -> f64 {
    0.5 * gaussian_double_factorial(nu) * (2.0 * v).powi(nu as i32 / 2)
}

/// Compare values with the mixture (delta_0 + N(0, 2V)) / 2.
pub fn distribution_test(values: &[f64], v: f64) -> Result<DistributionRecord> {
    if !(v > 0.0 && v.is_finite()) {
        return invalid(format!("V must be positive, got {v}"));
    }
    if values.is_empty() {
        return invalid("no values");
    }
    let n = values.len() as f64;
    let zeros = values.iter().filter(|&&x| x == 0.0).count();
    let mut empirical = [0.0; 4];
    let mut mixture = [0.0; 4];
    let mut gaps = [0.0; 4];
    for k in 0..4 {
        let nu = k as u32 + 1;
        empirical[k] = det_sum(values.len(), |i| values[i].powi(nu as i32)) / n;
        mixture[k] = mixture_moment(nu, v);
        gaps[k] = (empirical[k] - mixture[k]).abs();
    }
    Ok(DistributionRecord { count: values.len(), v, zero_mass: zeros as f64 / n, empirical, mixture, gaps })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TrendRow {
    pub p: u64,
    pub q: u64,
    pub x: f64,
    pub y: f64,
    pub m_max: usize,
    /// max over units a of |E(a) - M(a)|.
    pub max_gap: f64,
    /// Mean of |E(a) - M(a)| over units.
    pub mean_gap: f64,
}

/// max_a |E(a) - M(a)| for q = p^N at fixed Y and dual cutoff, for each p.
pub fn dual_vs_direct(
    series: &CoefficientSeries,
    transform: &WindowTransform,
    primes: &[u64],
    exponent: u32,
    y: f64,
    m_max: usize,
) -> Result<Vec<TrendRow>> {
    primes
        .iter()
        .map(|&p| {
            let q = PrimePowerModulus::new(p, exponent)?;
            let params = DualParams::from_y(y, q, series.kind, DEFAULT_ETA)?.with_cutoff(m_max)?;
            let direct = compute_e(series, &params, transform.window())?;
            let dual = compute_dual_m(series, &params, transform)?;
            let gaps: Vec<f64> = (1..q.q())
                .filter(|a| a % p != 0)
                .map(|a| (direct.e.get(a) - dual.get(a)).abs())
                .collect();
            Ok(TrendRow {
                p,
                q: q.q(),
                x: params.x,
                y: params.y,
                m_max,
                max_gap: gaps.iter().copied().fold(0.0, f64::max),
                mean_gap: det_sum(gaps.len(), |i| gaps[i]) / gaps.len() as f64,
            })
        })
        .collect()
}

/// True when every entry is strictly below the previous one.
pub fn strictly_decreasing(xs: &[f64]) -> bool {
    xs.windows(2).all(|w| w[1] < w[0])
}
