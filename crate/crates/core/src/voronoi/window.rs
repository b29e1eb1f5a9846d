//! Smooth compactly supported windows and their Mellin transforms.

use super::quad::gauss_legendre;
use crate::error::{invalid, Error, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::path::Path;

const RULE_ORDER: usize = 20;
const GRADED_LEVELS: i32 = 40;
/// Depth of the parabolic path used for the default bump.
const PATH_DEPTH: f64 = 0.5;
const MAX_LEVEL: u32 = 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowKind {
    DefaultBump,
    UserTable,
}

/// exp(-1 / (1 - z^2)) on (-1, 1), zero elsewhere.
pub fn bump(z: f64) -> f64 {
    if z.abs() >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - z * z)).exp()
    }
}

/// The bump at y = tau + i d (1 - tau^2), with 1 - y^2 factored to avoid
/// cancellation near the endpoints.
fn bump_on_path(tau: f64, d: f64) -> Complex64 {
    let e = (1.0 - tau) * (1.0 + tau);
    if e <= 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    let one_minus_y2 = Complex64::new(1.0 + d * d * e, -2.0 * tau * d) * e;
    let z = -one_minus_y2.inv();
    if z.re < -746.0 {
        Complex64::new(0.0, 0.0)
    } else {
        z.exp()
    }
}

#[derive(Clone, Debug, PartialEq)]
struct Table {
    x0: f64,
    step: f64,
    values: Vec<f64>,
}

impl Table {
    fn eval(&self, x: f64) -> f64 {
        let pos = (x - self.x0) / self.step;
        if pos <= 0.0 || pos >= (self.values.len() - 1) as f64 {
            return 0.0;
        }
        let i = pos.floor() as usize;
        let z = pos - i as f64;
        let (bl, br) = (bump(z), bump(z - 1.0));
        (self.values[i] * bl + self.values[i + 1] * br) / (bl + br)
    }
}

/// A smooth non-negative window with compact support in (0, inf).
///
/// The user-table variant blends tabulated values on a uniform grid with a
/// smooth partition of unity, so it interpolates the table and is C^inf as
/// long as the table starts and ends with zeros.
#[derive(Clone, Debug, PartialEq)]
pub struct WindowSpec {
    kind: WindowKind,
    support: (f64, f64),
    table: Option<Table>,
}

impl Default for WindowSpec {
    fn default() -> Self {
        Self::default_bump()
    }
}

impl WindowSpec {
    /// w(x) = exp(-1 / (1 - (2x - 3)^2)) on (1, 2).
    pub fn default_bump() -> Self {
        Self { kind: WindowKind::DefaultBump, support: (1.0, 2.0), table: None }
    }

    pub fn user_table(xs: &[f64], ws: &[f64]) -> Result<Self> {
        if xs.len() != ws.len() || xs.len() < 3 {
            return invalid("window table needs at least three (x, w) rows");
        }
        if xs[0] <= 0.0 || xs.iter().any(|x| !x.is_finite()) {
            return invalid("window nodes must be finite and positive");
        }
        let step = (xs[xs.len() - 1] - xs[0]) / (xs.len() - 1) as f64;
        if step <= 0.0
            || xs.iter().enumerate().any(|(i, &x)| (x - (xs[0] + i as f64 * step)).abs() > 1e-9 * step)
        {
            return invalid("window nodes must be uniformly spaced and increasing");
        }
        if ws.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return invalid("window values must be finite and non-negative");
        }
        let Some(first) = ws.iter().position(|&w| w > 0.0) else {
            return invalid("window is identically zero");
        };
        let last = ws.iter().rposition(|&w| w > 0.0).expect("non-zero entry exists");
        if first == 0 || last == ws.len() - 1 {
            return invalid("window table must start and end with w = 0");
        }
        let (lo, hi) = (first - 1, last + 1);
        let x0 = xs[0] + lo as f64 * step;
        let table = Table { x0, step, values: ws[lo..=hi].to_vec() };
        let support = (x0, x0 + (hi - lo) as f64 * step);
        Ok(Self { kind: WindowKind::UserTable, support, table: Some(table) })
    }

    /// Read an `x,w` CSV table.
    pub fn from_csv(path: &Path) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path).map_err(|e| {
            match e.kind() {
                csv::ErrorKind::Io(_) => Error::Io(e.to_string()),
                _ => Error::Validation(e.to_string()),
            }
        })?;
        let headers = rdr.headers().map_err(|e| Error::Validation(e.to_string()))?.clone();
        if headers.len() != 2 || &headers[0] != "x" || &headers[1] != "w" {
            return invalid("window header must be `x,w`");
        }
        let (mut xs, mut ws) = (Vec::new(), Vec::new());
        for rec in rdr.records() {
            let rec = rec.map_err(|e| Error::Validation(e.to_string()))?;
            let parse = |i: usize| {
                rec[i].parse::<f64>().map_err(|_| Error::Validation(format!("bad number `{}`", &rec[i])))
            };
            xs.push(parse(0)?);
            ws.push(parse(1)?);
        }
        Self::user_table(&xs, &ws)
    }

    pub fn kind(&self) -> WindowKind {
        self.kind
    }

    pub fn support(&self) -> (f64, f64) {
        self.support
    }

    pub fn eval(&self, x: f64) -> f64 {
        match &self.table {
            None => bump(2.0 * x - 3.0),
            Some(t) => t.eval(x),
        }
    }

    /// Panel boundaries for real-line quadrature.
    fn breakpoints(&self) -> Vec<f64> {
        match &self.table {
            None => vec![1.0, 1.5, 2.0],
            Some(t) => (0..t.values.len()).map(|i| t.x0 + i as f64 * t.step).collect(),
        }
    }

    /// Squared L2 norm of w.
    pub fn l2_norm_sq(&self) -> f64 {
        let mut prev = f64::NAN;
        for level in 0..MAX_LEVEL {
            let cur = self.real_line_integral(level, |x| self.eval(x).powi(2));
            if (cur - prev).abs() <= 1e-15 * cur.abs() {
                return cur;
            }
            prev = cur;
        }
        prev
    }

    fn real_line_integral<F: Fn(f64) -> f64>(&self, level: u32, f: F) -> f64 {
        let (nodes, weights) = gauss_legendre(RULE_ORDER);
        let bp = self.breakpoints();
        let mut total = 0.0;
        for pair in bp.windows(2) {
            let sub = 1usize << level;
            let width = (pair[1] - pair[0]) / sub as f64;
            for j in 0..sub {
                let mid = pair[0] + (j as f64 + 0.5) * width;
                total += 0.5 * width * nodes.iter().zip(&weights).map(|(x, w)| w * f(mid + 0.5 * width * x)).sum::<f64>();
            }
        }
        total
    }

    /// Quadrature rule for s -> integral of w(x) x^(s-1) dx.
    ///
    /// `direction` is the sign of Im s the rule is tuned for; the default bump
    /// is integrated along a path bent into the half-plane where x^(s-1)
    /// decays, which keeps tiny transform values accurate to full relative
    /// precision.
    pub fn mellin_rule(&self, direction: i8, level: u32) -> MellinRule {
        let (nodes, weights) = gauss_legendre(RULE_ORDER);
        let mut rule = MellinRule { weight: Vec::new(), log_x: Vec::new() };
        let sub = 1usize << level;
        let add_panel = |a: f64, b: f64, rule: &mut MellinRule, point: &dyn Fn(f64) -> Option<(Complex64, Complex64)>| {
            let width = (b - a) / sub as f64;
            for j in 0..sub {
                let mid = a + (j as f64 + 0.5) * width;
                for (x, w) in nodes.iter().zip(&weights) {
                    if let Some((val, lx)) = point(mid + 0.5 * width * x) {
                        let c = val * (0.5 * width * w);
                        if c != Complex64::new(0.0, 0.0) {
                            rule.weight.push(c);
                            rule.log_x.push(lx);
                        }
                    }
                }
            }
        };
        match &self.table {
            None => {
                let d = PATH_DEPTH * direction.signum() as f64;
                let point = |tau: f64| {
                    let y = Complex64::new(tau, d * (1.0 - tau) * (1.0 + tau));
                    let dy = Complex64::new(1.0, -2.0 * d * tau);
                    let u = (y + 3.0) * 0.5;
                    Some((bump_on_path(tau, d) * dy * 0.5, u.ln()))
                };
                let mut edges = vec![0.0];
                for k in 1..=GRADED_LEVELS {
                    edges.push(1.0 - 0.5f64.powi(k));
                }
                edges.push(1.0);
                for pair in edges.windows(2) {
                    add_panel(pair[0], pair[1], &mut rule, &point);
                    add_panel(-pair[1], -pair[0], &mut rule, &point);
                }
            }
            Some(_) => {
                let point = |x: f64| {
                    let w = self.eval(x);
                    (w != 0.0).then(|| (Complex64::new(w, 0.0), Complex64::new(x.ln(), 0.0)))
                };
                for pair in self.breakpoints().windows(2) {
                    add_panel(pair[0], pair[1], &mut rule, &point);
                }
            }
        }
        rule
    }
}

/// Nodes c_j, log x_j with integral ~ sum c_j exp((s - 1) log x_j).
#[derive(Clone, Debug)]
pub struct MellinRule {
    pub weight: Vec<Complex64>,
    pub log_x: Vec<Complex64>,
}

impl MellinRule {
    pub fn eval(&self, s: Complex64) -> Complex64 {
        self.weight.iter().zip(&self.log_x).map(|(c, l)| c * ((s - 1.0) * l).exp()).sum()
    }

    /// Sum of absolute values of the terms, a noise floor for `eval`.
    pub fn abs_sum(&self, s: Complex64) -> f64 {
        self.weight.iter().zip(&self.log_x).map(|(c, l)| c.norm() * ((s - 1.0) * l).exp().norm()).sum()
    }
}

/// The Mellin transform of w at s, refined until successive rules agree to
/// 1e-12 relative.
pub fn mellin_w(spec: &WindowSpec, s: Complex64) -> Complex64 {
    let direction = if s.im > 0.0 {
        1
    } else if s.im < 0.0 {
        -1
    } else {
        0
    };
    let mut prev = spec.mellin_rule(direction, 0).eval(s);
    for level in 1..=MAX_LEVEL {
        let rule = spec.mellin_rule(direction, level);
        let cur = rule.eval(s);
        let floor = 1e-15 * rule.abs_sum(s);
        if (cur - prev).norm() <= 1e-12 * cur.norm() + floor {
            return cur;
        }
        prev = cur;
    }
    prev
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn bump_shape() {
        let w = WindowSpec::default_bump();
        assert_eq!(w.eval(1.0), 0.0);
        assert_eq!(w.eval(2.5), 0.0);
        assert!((w.eval(1.5) - (-1f64).exp()).abs() < 1e-16);
        assert!(w.eval(1.01) > 0.0);
    }

    #[test]
    fn mass_is_positive_and_matches_real_quadrature() {
        let w = WindowSpec::default_bump();
        let mass = mellin_w(&w, c(1.0, 0.0));
        let direct = super::super::quad::composite(|x| w.eval(x), 1.0, 2.0, 64, 20);
        assert!(mass.re > 0.0 && mass.im.abs() < 1e-16);
        assert!((mass.re - direct).abs() < 1e-13);
    }

    #[test]
    fn conjugate_symmetry() {
        let w = WindowSpec::default_bump();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let s = c(rng.gen_range(-3.0..3.0), rng.gen_range(-80.0..80.0));
            let a = mellin_w(&w, s);
            let b = mellin_w(&w, s.conj());
            assert!((a - b.conj()).norm() <= 1e-12 * a.norm(), "s={s}");
        }
    }

    #[test]
    fn bent_path_matches_real_line() {
        let w = WindowSpec::default_bump();
        for t in [0.5, 7.0, 25.0, 60.0] {
            let s = c(2.0, t);
            let bent = mellin_w(&w, s);
            let flat = super::super::quad::composite(|x| w.eval(x) * x, 1.0, 2.0, 256, 20);
            let re = super::super::quad::composite(|x| w.eval(x) * x * (t * x.ln()).cos(), 1.0, 2.0, 256, 20);
            let im = super::super::quad::composite(|x| w.eval(x) * x * (t * x.ln()).sin(), 1.0, 2.0, 256, 20);
            assert!((bent - c(re, im)).norm() < 1e-14 * flat, "t={t}");
        }
    }

    #[test]
    fn decay_on_vertical_line() {
        // Reference values from 30-digit quadrature of the real-line integral.
        let w = WindowSpec::default_bump();
        let at60 = mellin_w(&w, c(2.0, 60.0)).norm();
        assert!((at60 - 2.884_755_578_469_812e-3).abs() < 1e-15, "{at60}");
        let mut prev = f64::INFINITY;
        for t in [100.0, 400.0, 1600.0, 6400.0] {
            let v = mellin_w(&w, c(2.0, t)).norm();
            assert!(v < prev && v > 0.0);
            prev = v;
        }
        assert!(prev < 1e-19);
    }

    #[test]
    fn user_table_interpolates_and_pads() {
        let xs: Vec<f64> = (0..=10).map(|i| 1.0 + 0.1 * i as f64).collect();
        let ws: Vec<f64> = xs.iter().map(|&x| if x > 1.05 && x < 1.95 { (x - 1.0) * (2.0 - x) } else { 0.0 }).collect();
        let w = WindowSpec::user_table(&xs, &ws).unwrap();
        assert_eq!(w.kind(), WindowKind::UserTable);
        for (x, v) in xs.iter().zip(&ws) {
            assert!((w.eval(*x) - v).abs() < 1e-15);
        }
        let mut xs2 = vec![0.8, 0.9];
        xs2.extend(&xs);
        xs2.extend([2.1, 2.2]);
        let mut ws2 = vec![0.0, 0.0];
        ws2.extend(&ws);
        ws2.extend([0.0, 0.0]);
        let padded = WindowSpec::user_table(&xs2, &ws2).unwrap();
        assert!((padded.support().0 - w.support().0).abs() < 1e-14);
        assert!((padded.support().1 - w.support().1).abs() < 1e-14);
        assert!((padded.l2_norm_sq() - w.l2_norm_sq()).abs() < 1e-15);
        assert!(WindowSpec::user_table(&xs, &vec![0.0; xs.len()]).is_err());
        assert!(WindowSpec::user_table(&[1.0, 1.1, 1.3], &[0.0, 1.0, 0.0]).is_err());
        assert!(WindowSpec::user_table(&[1.0, 1.1, 1.2], &[1.0, 1.0, 0.0]).is_err());
    }
}
