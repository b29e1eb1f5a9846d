//! Complex log-gamma by upward shift and the Stirling series.

use num_complex::Complex64;
use std::f64::consts::PI;

/// B_{2k} / (2k (2k - 1)) for k = 1..=8.
const STIRLING: [f64; 8] = [
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360_360.0,
    1.0 / 156.0,
    -3617.0 / 122_400.0,
];

const SHIFT_RADIUS: f64 = 15.0;

fn stirling(z: Complex64) -> Complex64 {
    let inv = z.inv();
    let inv2 = inv * inv;
    let mut term = inv;
    let mut series = Complex64::new(0.0, 0.0);
    for c in STIRLING {
        series += term * c;
        term *= inv2;
    }
    (z - 0.5) * z.ln() - z + 0.5 * (2.0 * PI).ln() + series
}

/// log sin(pi z), stable for large |Im z|.
fn ln_sin_pi(z: Complex64) -> Complex64 {
    if z.im < 0.0 {
        return ln_sin_pi(z.conj()).conj();
    }
    let i = Complex64::i();
    let e = (2.0 * PI * i * z).exp();
    -i * PI * z + (1.0 - e).ln() + (i * 0.5).ln()
}

/// A logarithm of Gamma(z), correct modulo 2 pi i.
///
/// Only exponentials of sums and differences of these values are used, so
/// the branch of the imaginary part is irrelevant.
pub fn ln_gamma(z: Complex64) -> Complex64 {
    if z.re < 0.5 {
        return PI.ln() - ln_sin_pi(z) - ln_gamma(1.0 - z);
    }
    let mut w = z;
    let mut prod = Complex64::new(1.0, 0.0);
    while w.norm() < SHIFT_RADIUS {
        prod *= w;
        w += 1.0;
    }
    stirling(w) - prod.ln()
}
