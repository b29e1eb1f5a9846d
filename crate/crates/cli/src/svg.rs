//! Histogram of dual values with the point mass at zero drawn as a spike.

use std::fmt::Write;

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 500.0;
const MARGIN: f64 = 50.0;

fn is_zero(v: f64) -> bool {
    v.abs() < 1e-12
}

/// SVG histogram of `values`. Exact zeros form a separate spike labelled
/// with their mass; the remaining values are binned as a density. With
/// `overlay = Some(v)` the curve (1 - zero mass) N(0, 2v) is drawn on top.
pub fn emit_histogram(values: &[f64], bins: usize, overlay: Option<f64>) -> String {
    let bins = bins.max(1);
    let nonzero: Vec<f64> = values.iter().copied().filter(|v| !is_zero(*v)).collect();
    let total = values.len().max(1) as f64;
    let zero_mass = (values.len() - nonzero.len()) as f64 / total;

    let mut half = nonzero.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if let Some(v) = overlay.filter(|v| *v > 0.0) {
        half = half.max(3.0 * (2.0 * v).sqrt());
    }
    if half == 0.0 {
        half = 1.0;
    }
    let (lo, hi) = (-half, half);
    let width = (hi - lo) / bins as f64;

    let mut counts = vec![0usize; bins];
    for v in &nonzero {
        let k = (((v - lo) / width) as usize).min(bins - 1);
        counts[k] += 1;
    }
    let density: Vec<f64> = counts.iter().map(|&c| c as f64 / (total * width)).collect();
    let curve = |x: f64, v: f64| (1.0 - zero_mass) * (-x * x / (4.0 * v)).exp() / (4.0 * std::f64::consts::PI * v).sqrt();
    let mut top = density.iter().fold(0.0f64, |m, d| m.max(*d));
    if let Some(v) = overlay.filter(|v| *v > 0.0) {
        top = top.max(curve(0.0, v));
    }
    if top == 0.0 {
        top = 1.0;
    }

    let plot_w = WIDTH - 2.0 * MARGIN;
    let plot_h = HEIGHT - 2.0 * MARGIN;
    let sx = |x: f64| MARGIN + (x - lo) / (hi - lo) * plot_w;
    let sy = |d: f64| HEIGHT - MARGIN - d / top * plot_h;

    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {WIDTH} {HEIGHT}">"#);
    let _ = writeln!(
        s,
        r#"<line x1="{MARGIN}" y1="{y}" x2="{x2}" y2="{y}" stroke="black"/>"#,
        y = HEIGHT - MARGIN,
        x2 = WIDTH - MARGIN
    );
    for (k, d) in density.iter().enumerate().filter(|(_, d)| **d > 0.0) {
        let x0 = sx(lo + k as f64 * width);
        let _ = writeln!(
            s,
            r##"<rect class="bar" x="{x0:.2}" y="{y:.2}" width="{w:.2}" height="{h:.2}" fill="#8aa9d6"/>"##,
            y = sy(*d),
            w = sx(lo + (k + 1) as f64 * width) - x0,
            h = HEIGHT - MARGIN - sy(*d)
        );
    }
    if zero_mass > 0.0 {
        let x0 = sx(0.0);
        let _ = writeln!(
            s,
            r##"<line class="spike" x1="{x0:.2}" y1="{y0}" x2="{x0:.2}" y2="{y1}" stroke="#c0392b" stroke-width="3"/>"##,
            y0 = HEIGHT - MARGIN,
            y1 = MARGIN
        );
        let _ = writeln!(
            s,
            r#"<text x="{x:.2}" y="{y}" font-size="14">mass at 0: {zero_mass:.4}</text>"#,
            x = x0 + 6.0,
            y = MARGIN + 14.0
        );
    }
    if let Some(v) = overlay.filter(|v| *v > 0.0) {
        let steps = 400;
        let mut d = String::new();
        for i in 0..=steps {
            let x = lo + (hi - lo) * i as f64 / steps as f64;
            let _ = write!(d, "{}{:.2},{:.2} ", if i == 0 { "M" } else { "L" }, sx(x), sy(curve(x, v)));
        }
        let _ = writeln!(s, r#"<path class="density" d="{}" fill="none" stroke="black"/>"#, d.trim_end());
    }
    let _ = writeln!(
        s,
        r#"<text x="{MARGIN}" y="{y}" font-size="12">{lo:.4}</text><text x="{x}" y="{y}" font-size="12" text-anchor="end">{hi:.4}</text>"#,
        y = HEIGHT - MARGIN + 18.0,
        x = WIDTH - MARGIN
    );
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    #[test]
    fn all_zero_is_a_single_spike() {
        let s = emit_histogram(&[0.0; 50], 10, None);
        assert_eq!(s.matches("class=\"spike\"").count(), 1);
        assert!(!s.contains("class=\"bar\""));
        assert!(s.contains("mass at 0: 1.0000"));
    }

    #[test]
    fn no_overlay_no_path() {
        let s = emit_histogram(&[0.5, -0.25, 1.0], 5, None);
        assert!(!s.contains("<path"));
        assert!(emit_histogram(&[0.5, -0.25, 1.0], 5, Some(0.3)).contains("<path"));
    }

    #[test]
    fn gaussian_bars_track_the_curve() {
        let v: f64 = 0.5;
        let normal = Normal::new(0.0, (2.0 * v).sqrt()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut xs: Vec<f64> = (0..200_000).map(|_| normal.sample(&mut rng)).collect();
        xs.extend(std::iter::repeat_n(0.0, 200_000));
        let s = emit_histogram(&xs, 30, Some(v));
        assert!(s.contains("mass at 0: 0.5000"));
        // Tallest bar sits at the curve's peak height, i.e. near the top margin.
        let tops: Vec<f64> = s
            .lines()
            .filter(|l| l.contains("class=\"bar\""))
            .map(|l| {
                let y = l.split("y=\"").nth(1).unwrap();
                y[..y.find('"').unwrap()].parse().unwrap()
            })
            .collect();
        let best = tops.iter().fold(f64::INFINITY, |m, y| m.min(*y));
        assert!((best - MARGIN).abs() < 0.03 * (HEIGHT - 2.0 * MARGIN), "top bar at {best}");
    }
}
