//! The inverse-Mellin transform B of a window against a gamma-factor ratio.
//!
//! B(x) = (1/2 pi i) int_(sigma) G(s) w^(1 - s) x^(-s) ds with
//! G(s) = (2 pi)^(1 - 2s) Gamma(s + a) / Gamma(1 - s + a), evaluated by the
//! trapezoid rule in t = Im s. The integrand samples H(t) do not depend on x,
//! so they are tabulated once per abscissa; evaluating B is then a single
//! trigonometric sum. Larger x use larger abscissae (the integrand is entire
//! to the right of -a), where x^(-sigma) damps the tail much sooner.

use super::gamma::ln_gamma;
use super::quad::gauss_legendre;
use super::window::{WindowKind, WindowSpec};
use crate::coeffs::WeightKind;
use crate::error::{invalid, Error, Result};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Mutex, OnceLock};

/// Abscissa bands: (smallest x, contour shift above the base abscissa,
/// trapezoid step). A step h aliases B(x) with e^(2 pi sigma / h) B(x e^(2 pi / h)),
/// so small arguments need finer steps while large ones tolerate coarse steps.
/// The first band sits left of the base abscissa (the integrand is entire for
/// Re s > -a), which keeps x^(-sigma) from amplifying rounding as x -> 0.
const BANDS: [(f64, f64, f64); 7] = [
    (1e-15, f64::NAN, 0.125),
    (0.1, 0.0, 0.3),
    (1e1, 1.0, 0.5),
    (1e2, 2.0, 0.5),
    (1e3, 3.0, 0.5),
    (1e4, 4.0, 0.5),
    (1e5, 5.0, 0.5),
];
pub const MIN_ARGUMENT: f64 = 1e-15;
const BLOCK: usize = 128;
const RESYNC: usize = 256;
const MAX_RULE_LEVEL: u32 = 6;
/// Largest base abscissa. Rounding in the samples is amplified by x^(-sigma)
/// for small x, roughly 1e-10 at x = 0.1 and sigma = 2.5.
pub const MAX_SIGMA: f64 = 2.5;
/// Largest trapezoid step for tabulated windows.
const TABLE_STEP: f64 = 0.2;
/// Points per band at which the imaginary part of B is checked.
const REALITY_PROBES: usize = 16;
/// Grid points per Nyquist interval of the trigonometric sum.
const OVERSAMPLE: usize = 8;
/// Interpolation stencil width on the grid.
const STENCIL: usize = 20;
/// The last band is tabulated up to this factor above its lower bound.
const TOP_SPAN: f64 = 1e4;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TransformConfig {
    /// Base abscissa of the contour for the default bump, in (1, MAX_SIGMA].
    pub sigma: f64,
    /// Multiplier applied to every trapezoid step.
    pub step_scale: f64,
    /// Accuracy target: the error in B(x) stays below tol min(1, 1/x).
    pub tol: f64,
    /// Hard ceiling on the truncation height.
    pub max_height: f64,
}

impl Default for TransformConfig {
    fn default() -> Self {
        Self { sigma: 1.5, step_scale: 1.0, tol: 1e-12, max_height: 1e5 }
    }
}

/// The shift a in Gamma(s + a) for each weight convention.
pub fn gamma_shift(kind: WeightKind) -> f64 {
    match kind {
        WeightKind::Integral { kappa } => (kappa as f64 - 1.0) / 2.0,
        WeightKind::HalfIntegral { ell } => ell as f64 / 2.0 - 0.25,
    }
}

/// log of (2 pi)^(1 - 2s) Gamma(s + a) / Gamma(1 - s + a), modulo 2 pi i.
pub fn ln_gamma_ratio(a: f64, s: Complex64) -> Complex64 {
    (1.0 - 2.0 * s) * (2.0 * PI).ln() + ln_gamma(s + a) - ln_gamma(1.0 - s + a)
}

#[derive(Debug)]
struct Rung {
    sigma: f64,
    step: f64,
    /// H(k h) and H(-k h) for k = 0..len.
    pos: Vec<Complex64>,
    neg: Vec<Complex64>,
    /// h / 2 pi times the sum of |H(-kh) - conj H(kh)|, a bound on x^sigma |Im B(x)|.
    reality_gap: f64,
    /// ln x range served from the grid.
    range: (f64, f64),
    grid: OnceLock<Grid>,
}

/// The real trigonometric sum tabulated on a uniform grid in v = ln x.
#[derive(Debug)]
struct Grid {
    v0: f64,
    dv: f64,
    values: Vec<f64>,
    weights: [f64; STENCIL],
}

impl Grid {
    fn build(rung: &Rung) -> Self {
        let n = rung.pos.len();
        let size = (2 * OVERSAMPLE * n).next_power_of_two();
        let dv = 2.0 * PI / (size as f64 * rung.step);
        let margin = STENCIL as f64 * dv;
        let (lo, hi) = (rung.range.0 - margin, rung.range.1 + margin);
        let v0 = lo;
        // sum_k c_k e^(-i k h (v0 + j dv)) with h dv = 2 pi / size is a forward DFT.
        let mut buf = vec![Complex64::new(0.0, 0.0); size];
        for (k, h) in rung.pos.iter().enumerate() {
            let c = if k == 0 { *h } else { 2.0 * h };
            buf[k % size] += c * Complex64::cis(-(k as f64) * rung.step * v0);
        }
        rustfft::FftPlanner::new().plan_fft_forward(size).process(&mut buf);
        let count = (((hi - lo) / dv).ceil() as usize + 1).min(size);
        let values = buf[..count].iter().map(|z| z.re).collect();
        let mut weights = [0.0; STENCIL];
        let mut binom = 1.0;
        for (i, w) in weights.iter_mut().enumerate() {
            *w = if i % 2 == 0 { binom } else { -binom };
            binom = binom * (STENCIL - 1 - i) as f64 / (i + 1) as f64;
        }
        Self { v0, dv, values, weights }
    }

    /// Barycentric Lagrange interpolation on the stencil around v.
    fn eval(&self, v: f64) -> f64 {
        let u = (v - self.v0) / self.dv;
        let first = (u.floor() as usize + 1).saturating_sub(STENCIL / 2).min(self.values.len() - STENCIL);
        let s = u - first as f64;
        let (mut num, mut den) = (0.0, 0.0);
        for (i, w) in self.weights.iter().enumerate() {
            let d = s - i as f64;
            if d == 0.0 {
                return self.values[first + i];
            }
            num += w / d * self.values[first + i];
            den += w / d;
        }
        num / den
    }
}

impl Rung {
    fn height(&self) -> f64 {
        (self.pos.len() - 1) as f64 * self.step
    }

    fn scale(&self, v: f64) -> f64 {
        (-self.sigma * v).exp() * self.step / (2.0 * PI)
    }

    /// Both half-lines summed independently.
    fn eval_full(&self, x: f64) -> Complex64 {
        let v = x.ln();
        let z = Complex64::cis(-self.step * v);
        let mut zk = Complex64::new(1.0, 0.0);
        let mut sum = self.pos[0];
        for k in 1..self.pos.len() {
            zk = if k % RESYNC == 0 { Complex64::cis(-(k as f64) * self.step * v) } else { zk * z };
            sum += self.pos[k] * zk + self.neg[k] * zk.conj();
        }
        sum * self.scale(v)
    }

    /// Real part using H(-t) = conj H(t), interpolated from the grid inside
    /// the band.
    fn eval_real(&self, x: f64) -> f64 {
        let v = x.ln();
        if v < self.range.0 || v > self.range.1 {
            return self.eval_direct(x);
        }
        self.grid.get_or_init(|| Grid::build(self)).eval(v) * self.scale(v)
    }

    /// Real part summed term by term.
    fn eval_direct(&self, x: f64) -> f64 {
        let v = x.ln();
        let z = Complex64::cis(-self.step * v);
        let mut zk = Complex64::new(1.0, 0.0);
        let mut sum = 0.0;
        for k in 1..self.pos.len() {
            zk = if k % RESYNC == 0 { Complex64::cis(-(k as f64) * self.step * v) } else { zk * z };
            let h = self.pos[k];
            sum += h.re * zk.re - h.im * zk.im;
        }
        (self.pos[0].re + 2.0 * sum) * self.scale(v)
    }

    fn abs_mass(&self) -> f64 {
        self.pos.iter().chain(&self.neg).map(|v| v.norm()).sum::<f64>() * self.step
    }
}

/// Tabulated B transform for one window and weight.
#[derive(Debug)]
pub struct WindowTransform {
    window: WindowSpec,
    kind: WeightKind,
    shift: f64,
    config: TransformConfig,
    rungs: Vec<OnceLock<Result<Rung>>>,
    cache: Mutex<HashMap<u64, f64>>,
}

impl WindowTransform {
    pub fn new(window: WindowSpec, kind: WeightKind, config: TransformConfig) -> Result<Self> {
        if !(config.sigma > 1.0 && config.sigma <= MAX_SIGMA) {
            return invalid(format!("contour abscissa must lie in (1, {MAX_SIGMA}], got {}", config.sigma));
        }
        if !(config.step_scale > 0.0 && config.step_scale <= 1.0) {
            return invalid(format!("step scale must lie in (0, 1], got {}", config.step_scale));
        }
        if !(config.tol > 0.0) || !(config.max_height > 0.0) {
            return invalid("tolerance and height ceiling must be positive");
        }
        Ok(Self {
            window,
            kind,
            shift: gamma_shift(kind),
            config,
            rungs: (0..BANDS.len()).map(|_| OnceLock::new()).collect(),
            cache: Mutex::new(HashMap::new()),
        })
    }

    pub fn with_defaults(window: WindowSpec, kind: WeightKind) -> Result<Self> {
        Self::new(window, kind, TransformConfig::default())
    }

    pub fn window(&self) -> &WindowSpec {
        &self.window
    }

    pub fn kind(&self) -> WeightKind {
        self.kind
    }

    pub fn config(&self) -> TransformConfig {
        self.config
    }

    fn rung_index(x: f64) -> usize {
        BANDS.iter().rposition(|b| x >= b.0).unwrap_or(0)
    }

    fn rung(&self, j: usize) -> Result<&Rung> {
        self.rungs[j].get_or_init(|| self.build_rung(j)).as_ref().map_err(Clone::clone)
    }

    /// Walks the bent-path rule along t = sign k h by multiplying each node
    /// by its phase increment, resynchronizing periodically.
    fn rule_walk(&self, sigma: f64, step: f64, sign: f64, level: u32) -> impl FnMut(usize) -> Result<(Complex64, bool)> {
        // Im (1 - s) has the sign opposite to t.
        let rule = self.window.mellin_rule(-sign as i8, level);
        let base: Vec<Complex64> =
            rule.weight.iter().zip(&rule.log_x).map(|(c, l)| c * (-sigma * l).exp()).collect();
        let mult: Vec<Complex64> =
            rule.log_x.iter().map(|l| (Complex64::new(0.0, -sign * step) * l).exp()).collect();
        let mut cur = base.clone();
        move |k| {
            if k % RESYNC == 0 && k > 0 {
                let t = sign * k as f64 * step;
                for ((c, b), l) in cur.iter_mut().zip(&base).zip(&rule.log_x) {
                    *c = b * (Complex64::new(0.0, -t) * l).exp();
                }
            }
            let what: Complex64 = cur.iter().sum();
            for (c, m) in cur.iter_mut().zip(&mult) {
                *c *= m;
            }
            Ok((what, false))
        }
    }

    /// Window transform samples for a tabulated window from one FFT:
    /// w^(1 - sigma - i t) is the Fourier transform of w(e^v) e^((1 - sigma) v).
    /// Returns the values at t = k h and t = -k h and the rounding floor.
    fn table_samples(&self, sigma: f64, step: f64) -> Result<(Vec<Complex64>, Vec<Complex64>, f64)> {
        let (lo, hi) = self.window.support();
        let (va, vb) = (lo.ln(), hi.ln());
        let size = ((2.0 * self.config.max_height / step).ceil() as usize + 2 * BLOCK).next_power_of_two().max(1 << 12);
        let dv = 2.0 * PI / (size as f64 * step);
        let count = ((vb - va) / dv).floor() as usize + 1;
        if count > size {
            return invalid("window support is too wide for the trapezoid step");
        }
        let mut buf = vec![Complex64::new(0.0, 0.0); size];
        let mut mass = 0.0;
        for (j, slot) in buf[..count].iter_mut().enumerate() {
            let v = va + j as f64 * dv;
            let g = self.window.eval(v.exp()) * ((1.0 - sigma) * v).exp();
            mass += g.abs();
            *slot = Complex64::new(g, 0.0);
        }
        rustfft::FftPlanner::new().plan_fft_forward(size).process(&mut buf);
        let half = size / 2;
        let phase = |k: usize| Complex64::cis(-(k as f64) * step * va) * dv;
        let pos = (0..half).map(|k| buf[k] * phase(k)).collect();
        let neg = (0..half).map(|k| buf[(size - k) % size] * phase(k).conj()).collect();
        Ok((pos, neg, 1e-14 * dv * mass))
    }

    /// Samples H(k h) along one half-line from window-transform values, until
    /// the tail is negligible or for exactly `len` samples.
    #[allow(clippy::too_many_arguments)]
    fn half_line(
        &self,
        sigma: f64,
        step: f64,
        sign: f64,
        len: Option<usize>,
        scale: f64,
        what_at: &mut dyn FnMut(usize) -> Result<(Complex64, bool)>,
    ) -> Result<Vec<Complex64>> {
        // Tail mass of |H| that keeps the B error within the band target.
        let allowed = self.config.tol * PI * scale / step;
        // Past this height |G| grows more slowly than the window transform decays.
        let t_min = 6.0 * (2.0 * sigma - 1.0).powi(2) + 4.0 * self.shift;
        let mut out = Vec::new();
        let (mut block, mut prev, mut noisy) = (0.0f64, f64::INFINITY, 0usize);
        for k in 0.. {
            if len.is_some_and(|n| k == n) {
                break;
            }
            let t = sign * k as f64 * step;
            let (what, below_floor) = what_at(k)?;
            let lg = ln_gamma_ratio(self.shift, Complex64::new(sigma, t));
            let value = if lg.re.is_finite() { lg.exp() * what } else { Complex64::new(0.0, 0.0) };
            if !value.re.is_finite() || !value.im.is_finite() {
                return Err(Error::Numerical(format!("non-finite transform sample at t = {t}")));
            }
            out.push(value);
            noisy = if below_floor { noisy + 1 } else { 0 };
            block += value.norm();
            if len.is_none() && (k + 1) % BLOCK == 0 {
                let ratio = block / prev;
                let tail = if ratio < 1.0 { block / (1.0 - ratio) } else { f64::INFINITY };
                if (tail < 0.5 * allowed && k as f64 * step >= t_min) || noisy >= BLOCK {
                    break;
                }
                prev = block;
                block = 0.0;
                if k as f64 * step > self.config.max_height {
                    return Err(Error::Numerical(format!(
                        "transform tail at abscissa {sigma} did not decay below height {}",
                        self.config.max_height
                    )));
                }
            }
        }
        Ok(out)
    }

    fn build_rung(&self, j: usize) -> Result<Rung> {
        let (x_lo, lift, step) = BANDS[j];
        let sigma = match (j, self.window.kind()) {
            (0, _) => 0.5 - 0.5 * self.shift,
            // |G| = 1 on the critical line, so slowly decaying table transforms
            // are not amplified.
            (_, WindowKind::UserTable) => 0.5,
            _ => self.config.sigma + lift,
        };
        let x_hi = BANDS.get(j + 1).map_or(f64::INFINITY, |b| b.0);
        // The B error is x^(-sigma) times the error in the trigonometric sum
        // and the target is tol min(1, 1/x). `scale` is the smallest allowed
        // sum error over the band divided by tol.
        let pts: Vec<f64> = [x_lo, x_hi, 1.0].into_iter().filter(|&x| x >= x_lo && x <= x_hi && x.is_finite()).collect();
        let pow = |x: f64| (sigma * x.ln()).exp();
        let scale = pts.iter().map(|&x| pow(x) * x.recip().min(1.0)).fold(f64::INFINITY, f64::min);
        let step = match self.window.kind() {
            // B decays slowly for tables, so aliased copies B(x e^(2 pi k / h))
            // need a finer step to stay negligible.
            WindowKind::UserTable => step.min(TABLE_STEP),
            WindowKind::DefaultBump => step,
        } * self.config.step_scale;
        let (pos, neg) = match self.window.kind() {
            WindowKind::DefaultBump => self.bump_half_lines(sigma, step, scale)?,
            WindowKind::UserTable => {
                let (wp, wn, floor) = self.table_samples(sigma, step)?;
                let sample = |values: &[Complex64], k: usize| {
                    values
                        .get(k)
                        .map(|&w| (w, w.norm() <= floor))
                        .ok_or_else(|| Error::Numerical("window table transform ran past its grid".into()))
                };
                let pos = self.half_line(sigma, step, 1.0, None, scale, &mut |k| sample(&wp, k))?;
                let neg = self.half_line(sigma, step, -1.0, Some(pos.len()), scale, &mut |k| sample(&wn, k))?;
                (pos, neg)
            }
        };
        let gap = pos.iter().zip(&neg).map(|(p, m)| (m - p.conj()).norm()).sum::<f64>() * step / (2.0 * PI);
        let top = if x_hi.is_finite() { x_hi } else { x_lo * TOP_SPAN };
        let range = (x_lo.ln(), top.ln());
        let rung = Rung { sigma, step, pos, neg, reality_gap: gap, range, grid: OnceLock::new() };
        for i in 0..=REALITY_PROBES {
            let x = (range.0 + (range.1 - range.0) * i as f64 / REALITY_PROBES as f64).exp();
            let im = rung.eval_full(x).im;
            if !(im.abs() < 1e-8) {
                return Err(Error::Numerical(format!("B({x:e}) has imaginary part {im:e}")));
            }
        }
        Ok(rung)
    }

    /// Both half-lines for the default bump, refining the path rule until
    /// the next level agrees within the per-sample budget.
    fn bump_half_lines(&self, sigma: f64, step: f64, scale: f64) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
        for level in 0..=MAX_RULE_LEVEL {
            let pos = self.half_line(sigma, step, 1.0, None, scale, &mut self.rule_walk(sigma, step, 1.0, level))?;
            let n = pos.len();
            let rule = self.window.mellin_rule(-1, level);
            let finer = self.window.mellin_rule(-1, level + 1);
            let budget = self.config.tol * PI * scale / (step * n as f64);
            let mut ok = true;
            for frac in [0.125, 0.25, 0.5, 1.0] {
                let t = ((n - 1) as f64 * frac).floor() * step;
                let s = Complex64::new(1.0 - sigma, -t);
                let g = ln_gamma_ratio(self.shift, Complex64::new(sigma, t));
                let g = if g.re.is_finite() { g.exp().norm() } else { 0.0 };
                let diff = (rule.eval(s) - finer.eval(s)).norm() * g;
                let floor = 1e-14 * finer.abs_sum(s) * g;
                ok &= diff <= budget.max(floor);
            }
            if ok || level == MAX_RULE_LEVEL {
                let neg = self.half_line(sigma, step, -1.0, Some(n), scale, &mut self.rule_walk(sigma, step, -1.0, level))?;
                return Ok((pos, neg));
            }
        }
        unreachable!("loop returns at the last level")
    }

    fn check_argument(x: f64) -> Result<()> {
        if !(x >= MIN_ARGUMENT && x.is_finite()) {
            return invalid(format!("B is tabulated for finite x >= {MIN_ARGUMENT:e}, got {x}"));
        }
        Ok(())
    }

    /// Truncation height used for arguments near x.
    pub fn truncation_height(&self, x: f64) -> Result<f64> {
        Self::check_argument(x)?;
        Ok(self.rung(Self::rung_index(x))?.height())
    }

    /// Bound on |Im B(x)| implied by the asymmetry of the tabulated samples.
    pub fn imaginary_bound(&self, x: f64) -> Result<f64> {
        Self::check_argument(x)?;
        let r = self.rung(Self::rung_index(x))?;
        Ok(x.powf(-r.sigma) * r.reality_gap)
    }

    /// B(x) with both half-lines summed separately; the imaginary part is
    /// pure quadrature error.
    pub fn b_complex(&self, x: f64) -> Result<Complex64> {
        Self::check_argument(x)?;
        let z = self.rung(Self::rung_index(x))?.eval_full(x);
        if z.im.abs() >= 1e-8 {
            return Err(Error::Numerical(format!("B({x}) has imaginary part {:e}", z.im)));
        }
        Ok(z)
    }

    /// B(x), memoized. The imaginary part is bounded below 1e-8 once per
    /// abscissa band when its samples are built.
    pub fn b_transform(&self, x: f64) -> Result<f64> {
        Self::check_argument(x)?;
        if let Some(&v) = self.cache.lock().expect("cache lock").get(&x.to_bits()) {
            return Ok(v);
        }
        let v = self.rung(Self::rung_index(x))?.eval_real(x);
        self.cache.lock().expect("cache lock").insert(x.to_bits(), v);
        Ok(v)
    }

    /// B at many points, evaluated in parallel.
    pub fn b_values(&self, xs: &[f64]) -> Result<Vec<f64>> {
        for &x in xs {
            Self::check_argument(x)?;
        }
        let mut bands: Vec<usize> = xs.iter().map(|&x| Self::rung_index(x)).collect();
        bands.sort_unstable();
        bands.dedup();
        for j in bands {
            self.rung(j)?;
        }
        xs.par_iter().map(|&x| self.b_transform(x)).collect()
    }

    pub fn cache_len(&self) -> usize {
        self.cache.lock().expect("cache lock").len()
    }

    /// Contour-shift bound |B(x)| <= x^(-sigma) / (2 pi) int |H|, minimized
    /// over the abscissae tabulated so far (building the one for x).
    pub fn b_bound(&self, x: f64) -> Result<f64> {
        Self::check_argument(x)?;
        self.rung(Self::rung_index(x))?;
        Ok(self
            .rungs
            .iter()
            .filter_map(|r| r.get().and_then(|r| r.as_ref().ok()))
            .map(|r| x.powf(-r.sigma) * r.abs_mass() / (2.0 * PI))
            .fold(f64::INFINITY, f64::min))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PlancherelRecord {
    pub w_norm: f64,
    pub b_norm: f64,
    /// |‖w‖ - ‖B‖| / ‖w‖.
    pub gap: f64,
    /// ‖B‖ from panels twice as wide, as a resolution check.
    pub b_norm_coarse: f64,
    /// B was integrated over [MIN_ARGUMENT, x_max].
    pub x_max: f64,
}

/// Integral of B(v^4)^2 4 v^3 over [a, b] with `panels` panels.
fn b_square_integral(t: &WindowTransform, a: f64, b: f64, panels: usize) -> Result<f64> {
    let (nodes, weights) = gauss_legendre(20);
    let width = (b - a) / panels as f64;
    let mut vs = Vec::with_capacity(panels * nodes.len());
    for j in 0..panels {
        let mid = a + (j as f64 + 0.5) * width;
        vs.extend(nodes.iter().map(|x| mid + 0.5 * width * x));
    }
    let xs: Vec<f64> = vs.iter().map(|v| v.powi(4)).collect();
    let bs = t.b_values(&xs)?;
    let mut total = 0.0;
    for (i, (v, bx)) in vs.iter().zip(&bs).enumerate() {
        total += 0.5 * width * weights[i % nodes.len()] * bx * bx * 4.0 * v.powi(3);
    }
    Ok(total)
}

/// Compare the L2 norms of w and B, integrating B^2 in v = x^(1/4).
pub fn plancherel_check(transform: &WindowTransform) -> Result<PlancherelRecord> {
    let w2 = transform.window().l2_norm_sq();
    let v0 = MIN_ARGUMENT.powf(0.25);
    let (mut fine, mut coarse) = (0.0, 0.0);
    let mut v = 0.0f64;
    loop {
        let panels = 8 * (1 + v as usize);
        let lo = v.max(v0);
        let f = b_square_integral(transform, lo, v + 1.0, 2 * panels)?;
        let c = b_square_integral(transform, lo, v + 1.0, panels)?;
        fine += f;
        coarse += c;
        v += 1.0;
        if v >= 4.0 && f < 1e-13 * w2 {
            break;
        }
        if v > 40.0 {
            return Err(Error::Numerical("B^2 tail did not decay".into()));
        }
    }
    let (w_norm, b_norm) = (w2.sqrt(), fine.sqrt());
    Ok(PlancherelRecord {
        w_norm,
        b_norm,
        gap: (w_norm - b_norm).abs() / w_norm,
        b_norm_coarse: coarse.sqrt(),
        x_max: v.powi(4),
    })
}
