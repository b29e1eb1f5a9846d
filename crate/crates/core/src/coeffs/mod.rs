//! Fourier-coefficient series: generated Ramanujan Delta coefficients and
//! file-backed half-integral weight data.

pub mod ntt;

use crate::error::{invalid, Error, Result};
use ntt::{multiply_mod, to_residue, Garner, PRIMES};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

/// Longest Delta series the three-prime pipeline accepts (NTT size 2^26).
pub const MAX_DELTA_LENGTH: usize = 1 << 25;

/// Longest series for which exact tau(n) fit in i128.
pub const MAX_EXACT_LENGTH: usize = 1 << 21;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Cusp {
    Infinity,
    Zero,
    MinusHalf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    GeneratedDelta,
    File,
    Synthetic,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WeightKind {
    /// Weight kappa, even.
    Integral { kappa: u32 },
    /// Weight ell + 1/2.
    HalfIntegral { ell: u32 },
}

/// Normalized real coefficients a(1), a(2), ... with metadata.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoefficientSeries {
    pub kind: WeightKind,
    pub cusp: Cusp,
    pub source: Source,
    pub hecke_normalized: bool,
    values: Vec<f64>,
}

impl CoefficientSeries {
    pub fn new(
        kind: WeightKind,
        cusp: Cusp,
        source: Source,
        hecke_normalized: bool,
        values: Vec<f64>,
    ) -> Result<Self> {
        if values.is_empty() {
            return invalid("empty series");
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return invalid(format!("non-finite coefficient at {}", i + 1));
        }
        if hecke_normalized && values[0] != 1.0 {
            return invalid("Hecke-normalized series must start with a(1) = 1");
        }
        Ok(Self { kind, cusp, source, hecke_normalized, values })
    }

    pub fn synthetic(kind: WeightKind, values: Vec<f64>) -> Result<Self> {
        Self::new(kind, Cusp::Infinity, Source::Synthetic, false, values)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// a(n) for n >= 1; zero beyond the stored range is not implied, so
    /// callers must check `len`.
    #[inline]
    pub fn get(&self, n: usize) -> f64 {
        self.values[n - 1]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Copy with every coefficient multiplied by c.
    pub fn scaled(&self, c: f64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= c);
        out.hecke_normalized = false;
        out
    }

    pub fn truncated(&self, len: usize) -> Self {
        let mut out = self.clone();
        out.values.truncate(len.max(1));
        out
    }
}

/// Coefficients of prod (1 - q^n)^3 up to degree len - 1 (Jacobi).
fn eta_cubed(len: usize) -> Vec<(usize, i64)> {
    let mut out = Vec::new();
    let mut k = 0usize;
    while k * (k + 1) / 2 < len {
        let sign = if k % 2 == 0 { 1 } else { -1 };
        out.push((k * (k + 1) / 2, sign * (2 * k as i64 + 1)));
        k += 1;
    }
    out
}

/// Coefficients of prod (1 - q^n)^6 by squaring the sparse cube.
fn eta_sixth(len: usize) -> Vec<i64> {
    let cube = eta_cubed(len);
    let mut out = vec![0i64; len];
    for (i, &(e1, c1)) in cube.iter().enumerate() {
        for &(e2, c2) in &cube[i..] {
            if e1 + e2 >= len {
                break;
            }
            let factor = if e1 == e2 { 1 } else { 2 };
            out[e1 + e2] += factor * c1 * c2;
        }
    }
    out
}

/// Residues of prod (1 - q^n)^24 modulo `PRIMES[idx]`, degree < len.
fn eta24_mod(sixth: &[i64], idx: usize) -> Result<Vec<u64>> {
    let p = PRIMES[idx].0;
    let len = sixth.len();
    let base: Vec<u64> = sixth.iter().map(|&x| to_residue(x, p)).collect();
    let twelfth = multiply_mod(&base, None, len, idx)?;
    drop(base);
    multiply_mod(&twelfth, None, len, idx)
}

fn check_length(x: usize, limit: usize) -> Result<()> {
    if x == 0 {
        return invalid("series length must be at least 1");
    }
    if x > limit {
        return invalid(format!("length {x} exceeds the memory budget of {limit}"));
    }
    Ok(())
}

/// Residues modulo the three primes, combined into Garner digits (c0, c1)
/// plus the third residue.
fn delta_digits(x: usize) -> Result<(Vec<u64>, Vec<u64>, Vec<u64>)> {
    let sixth = eta_sixth(x);
    let r0 = eta24_mod(&sixth, 0)?;
    let mut c1 = eta24_mod(&sixth, 1)?;
    let garner = Garner::new();
    c1.iter_mut().zip(&r0).for_each(|(d, &a)| *d = garner.digit1(a, *d));
    let r2 = eta24_mod(&sixth, 2)?;
    Ok((r0, c1, r2))
}

/// Exact tau(1..=x).
pub fn tau_exact(x: usize) -> Result<Vec<i128>> {
    check_length(x, MAX_EXACT_LENGTH)?;
    let (r0, c1, r2) = delta_digits(x)?;
    let garner = Garner::new();
    (0..x)
        .map(|i| {
            garner
                .to_i128(r0[i], c1[i], r2[i])
                .ok_or_else(|| Error::Numerical(format!("tau({}) overflows i128", i + 1)))
        })
        .collect()
}

/// Normalized Ramanujan coefficients a(n) = tau(n) / n^(11/2) for n <= x.
pub fn generate_delta(x: usize) -> Result<CoefficientSeries> {
    check_length(x, MAX_DELTA_LENGTH)?;
    let (r0, c1, r2) = delta_digits(x)?;
    let garner = Garner::new();
    let values: Vec<f64> = (0..x)
        .map(|i| {
            let n = (i + 1) as f64;
            garner.to_f64(r0[i], c1[i], r2[i]) / (n.powi(5) * n.sqrt())
        })
        .collect();
    CoefficientSeries::new(
        WeightKind::Integral { kappa: 12 },
        Cusp::Infinity,
        Source::GeneratedDelta,
        true,
        values,
    )
}

/// Normalized coefficients of the weight 9/2 cusp form
/// eta(z)^6 eta(4z)^6 / eta(2z)^3 on Gamma_0(4), for n <= x, at the cusps
/// infinity and 0. The form is fixed by z -> -1/(4z) with the factor
/// (-2iz)^(-9/2), so both expansions coincide.
///
/// Computed as q T(q)^3 J(q^4)^2 with T = sum (-1)^n q^(n^2) over all n and
/// J = sum (-1)^k (2k+1) q^(k(k+1)/2).
pub fn theta_eta_form(x: usize) -> Result<(CoefficientSeries, CoefficientSeries)> {
    check_length(x, MAX_EXACT_LENGTH)?;
    let mut theta = vec![0i64; x];
    theta[0] = 1;
    let mut n = 1usize;
    while n * n < x {
        theta[n * n] = if n % 2 == 0 { 2 } else { -2 };
        n += 1;
    }
    let mut j4 = vec![0i64; x];
    for (e, c) in eta_cubed(x.div_ceil(4)) {
        j4[4 * e] = c;
    }
    let narrow = |v: Vec<i128>| -> Result<Vec<i64>> {
        v.into_iter()
            .map(|c| i64::try_from(c).map_err(|_| Error::Numerical("theta-eta coefficient overflow".into())))
            .collect()
    };
    let theta2 = narrow(ntt::series_multiply(&theta, &theta, x)?)?;
    let theta3 = narrow(ntt::series_multiply(&theta2, &theta, x)?)?;
    let j8 = narrow(ntt::series_multiply(&j4, &j4, x)?)?;
    let c = ntt::series_multiply(&theta3, &j8, x)?;
    let values: Vec<f64> = c.iter().enumerate().map(|(i, &v)| v as f64 / ((i + 1) as f64).powf(1.75)).collect();
    let kind = WeightKind::HalfIntegral { ell: 4 };
    let inf = CoefficientSeries::new(kind, Cusp::Infinity, Source::Synthetic, true, values.clone())?;
    let zero = CoefficientSeries::new(kind, Cusp::Zero, Source::Synthetic, true, values)?;
    Ok((inf, zero))
}

/// Number of divisors d(n) for n <= x, index 0 unused.
pub fn divisor_counts(x: usize) -> Vec<u32> {
    let mut d = vec![0u32; x + 1];
    for i in 1..=x {
        for j in (i..=x).step_by(i) {
            d[j] += 1;
        }
    }
    d
}

/// Sidecar metadata stored next to a coefficient CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesMetadata {
    #[serde(flatten)]
    pub kind: WeightKind,
    pub cusp: Cusp,
    pub normalized: bool,
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("json")
}

pub fn read_metadata(path: &Path) -> Result<SeriesMetadata> {
    let text = std::fs::read_to_string(sidecar_path(path))?;
    serde_json::from_str(&text).map_err(|e| Error::Validation(format!("bad sidecar: {e}")))
}

/// Parse `n,coeff` rows, contiguous from n = 1.
pub fn parse_coefficients<R: std::io::Read>(reader: R) -> Result<Vec<f64>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers().map_err(|e| Error::Validation(e.to_string()))?.clone();
    if headers.len() != 2 || &headers[0] != "n" || &headers[1] != "coeff" {
        return invalid("header must be `n,coeff`");
    }
    let mut values = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::Validation(format!("malformed row {}: {e}", line + 2)))?;
        if rec.len() != 2 {
            return invalid(format!("malformed row {}", line + 2));
        }
        let n: usize = rec[0]
            .parse()
            .map_err(|_| Error::Validation(format!("bad index `{}`", &rec[0])))?;
        let c: f64 = rec[1]
            .parse()
            .map_err(|_| Error::Validation(format!("bad coefficient `{}`", &rec[1])))?;
        let expected = values.len() + 1;
        if n != expected {
            return invalid(format!("index gap at {expected}"));
        }
        if !c.is_finite() {
            return invalid(format!("non-finite coefficient at {n}"));
        }
        values.push(c);
    }
    if values.is_empty() {
        return invalid("empty series");
    }
    Ok(values)
}

pub fn load_coefficients(path: &Path, meta: &SeriesMetadata) -> Result<CoefficientSeries> {
    let file = std::fs::File::open(path)?;
    let values = parse_coefficients(std::io::BufReader::new(file))?;
    let normalized = meta.normalized && values[0] == 1.0;
    CoefficientSeries::new(meta.kind, meta.cusp, Source::File, normalized, values)
}

/// Load a CSV together with its JSON sidecar.
pub fn load_with_sidecar(path: &Path) -> Result<CoefficientSeries> {
    let meta = read_metadata(path)?;
    load_coefficients(path, &meta)
}

pub fn write_coefficients(series: &CoefficientSeries, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::Io(e.to_string()))?;
    w.write_record(["n", "coeff"]).map_err(|e| Error::Io(e.to_string()))?;
    for (i, v) in series.values.iter().enumerate() {
        w.write_record([(i + 1).to_string(), format!("{v:e}")])
            .map_err(|e| Error::Io(e.to_string()))?;
    }
    w.flush()?;
    let meta = SeriesMetadata {
        kind: series.kind,
        cusp: series.cusp,
        normalized: series.hecke_normalized,
    };
    let text = serde_json::to_string_pretty(&meta).expect("metadata serializes");
    std::fs::write(sidecar_path(path), text)?;
    Ok(())
}

/// Indices exceeding C n^(1/6 + 0.05), with C fitted on the first 100 terms.
pub fn growth_advisory(series: &CoefficientSeries) -> Vec<usize> {
    let exponent = 1.0 / 6.0 + 0.05;
    let head = series.len().min(100);
    let c = (1..=head)
        .map(|n| series.get(n).abs() / (n as f64).powf(exponent))
        .fold(0.0f64, f64::max);
    (1..=series.len())
        .filter(|&n| series.get(n).abs() > c * (n as f64).powf(exponent))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RankinEstimate {
    pub grid: Vec<usize>,
    /// sum_{m <= Y} |a(m)|^2 / Y.
    pub ratios: Vec<f64>,
    /// sum_{m <= Y} |a(m)|^2 / sqrt(m), divided by sqrt(Y).
    pub weighted: Vec<f64>,
    pub c_f: f64,
}

pub fn rankin_estimate(series: &CoefficientSeries, grid: &[usize]) -> Result<RankinEstimate> {
    if grid.is_empty() {
        return invalid("empty grid");
    }
    if let Some(&y) = grid.iter().find(|&&y| y == 0 || y > series.len()) {
        return invalid(format!("grid point {y} outside [1, {}]", series.len()));
    }
    let mut sorted = grid.to_vec();
    sorted.sort_unstable();
    let (mut plain, mut weighted) = (0.0f64, 0.0f64);
    let mut next = 1usize;
    let mut ratios = Vec::with_capacity(grid.len());
    let mut weights = Vec::with_capacity(grid.len());
    for &y in &sorted {
        while next <= y {
            let a2 = series.get(next).powi(2);
            plain += a2;
            weighted += a2 / (next as f64).sqrt();
            next += 1;
        }
        ratios.push(plain / y as f64);
        weights.push(weighted / (y as f64).sqrt());
    }
    let c_f = *ratios.last().expect("non-empty");
    Ok(RankinEstimate { grid: sorted, ratios, weighted: weights, c_f })
}

/// tau(1..=x) from the 24th power of the pentagonal series by repeated
/// schoolbook multiplication; an independent check on `tau_exact`.
pub fn tau_schoolbook(x: usize) -> Vec<i128> {
    let mut pent = vec![0i128; x];
    let mut k = 0i64;
    loop {
        let mut any = false;
        for j in [k, -k] {
            let e = (j * (3 * j - 1) / 2) as usize;
            if e < x {
                pent[e] = if j % 2 == 0 { 1 } else { -1 };
                any = true;
            }
        }
        if !any {
            break;
        }
        k += 1;
    }
    let mut acc = pent.clone();
    for _ in 1..24 {
        let mut next = vec![0i128; x];
        for (i, &a) in acc.iter().enumerate() {
            if a == 0 {
                continue;
            }
            for (j, &b) in pent[..x - i].iter().enumerate() {
                next[i + j] += a * b;
            }
        }
        acc = next;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tau_examples() {
        let t = tau_exact(12).unwrap();
        assert_eq!(&t[..3], &[1, -24, 252]);
        assert_eq!(t[5], -6048);
        assert_eq!(t[5], t[1] * t[2]);
        assert_eq!(t[3], -1472);
        assert_eq!(t[3], t[1] * t[1] - 2048 * t[0]);
        assert_eq!(t[11], -370_944);
    }

    #[test]
    fn ntt_path_equals_schoolbook() {
        assert_eq!(tau_exact(2000).unwrap(), tau_schoolbook(2000));
    }

    #[test]
    fn eta_cube_to_the_eighth() {
        let len = 101;
        let mut cube = vec![0i64; len];
        for (e, c) in eta_cubed(len) {
            cube[e] = c;
        }
        let mut acc = vec![1i64];
        for _ in 0..8 {
            acc = ntt::series_multiply(&acc, &cube, len)
                .unwrap()
                .into_iter()
                .map(|v| v as i64)
                .collect();
        }
        let want = tau_schoolbook(len);
        assert_eq!(acc.iter().map(|&v| v as i128).collect::<Vec<_>>(), want);
    }

    #[test]
    fn normalized_values() {
        let s = generate_delta(1000).unwrap();
        assert_eq!(s.get(1), 1.0);
        assert!((s.get(2) + 24.0 / 2f64.powf(5.5)).abs() < 1e-15);
        let exact = tau_exact(1000).unwrap();
        for n in 1..=1000 {
            let want = exact[n - 1] as f64 / (n as f64).powf(5.5);
            assert!((s.get(n) - want).abs() <= 1e-14 * want.abs().max(1e-300));
        }
    }

    #[test]
    fn deligne_and_multiplicativity() {
        let x = 20_000;
        let s = generate_delta(x).unwrap();
        let d = divisor_counts(x);
        for n in 1..=x {
            assert!(s.get(n).abs() <= d[n] as f64 + 1e-9, "n={n}");
        }
        let mut checked = 0;
        for m in 2..200usize {
            for n in (m + 1)..200usize {
                if num_integer::gcd(m, n) == 1 && m * n <= x && checked < 100 {
                    let lhs = s.get(m * n);
                    assert!((lhs - s.get(m) * s.get(n)).abs() < 1e-12);
                    checked += 1;
                }
            }
        }
        assert_eq!(checked, 100);
    }

    #[test]
    fn length_limits() {
        assert!(generate_delta(0).is_err());
        assert!(generate_delta(MAX_DELTA_LENGTH + 1).is_err());
        assert!(tau_exact(MAX_EXACT_LENGTH + 1).is_err());
    }

    #[test]
    fn parse_examples() {
        let v = parse_coefficients("n,coeff\n1,1.0\n2,-0.53\n".as_bytes()).unwrap();
        assert_eq!(v, vec![1.0, -0.53]);
        let e = parse_coefficients("n,coeff\n1,1.0\n3,0.2\n".as_bytes()).unwrap_err();
        assert_eq!(e.to_string(), "validation: index gap at 2");
        let e = parse_coefficients("n,coeff\n".as_bytes()).unwrap_err();
        assert_eq!(e.to_string(), "validation: empty series");
        assert!(parse_coefficients("n,coeff\n1,NaN\n".as_bytes()).is_err());
        assert!(parse_coefficients("n,coeff\n1,abc\n".as_bytes()).is_err());
        assert!(parse_coefficients("idx,value\n1,1\n".as_bytes()).is_err());
        assert!(parse_coefficients("n,coeff\n1,1,2\n".as_bytes()).is_err());
    }

    #[test]
    fn csv_roundtrip_with_sidecar() {
        let dir = std::env::temp_dir().join(format!("apm-coeffs-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("half.csv");
        let s = CoefficientSeries::new(
            WeightKind::HalfIntegral { ell: 4 },
            Cusp::Zero,
            Source::File,
            true,
            vec![1.0, -0.53, 0.25],
        )
        .unwrap();
        write_coefficients(&s, &path).unwrap();
        let meta_text = std::fs::read_to_string(sidecar_path(&path)).unwrap();
        let meta: serde_json::Value = serde_json::from_str(&meta_text).unwrap();
        assert_eq!(meta["kind"], "half_integral");
        assert_eq!(meta["ell"], 4);
        assert_eq!(meta["cusp"], "zero");
        let back = load_with_sidecar(&path).unwrap();
        assert_eq!(back.values(), s.values());
        assert_eq!(back.kind, s.kind);
        assert_eq!(back.cusp, Cusp::Zero);
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn rankin_synthetic() {
        let kind = WeightKind::Integral { kappa: 12 };
        let ones = CoefficientSeries::synthetic(kind, vec![1.0; 1000]).unwrap();
        let r = rankin_estimate(&ones, &[10, 100, 1000]).unwrap();
        assert!(r.ratios.iter().all(|&v| (v - 1.0).abs() < 1e-15));
        let mut spike = vec![0.0; 1000];
        spike[0] = 1.0;
        let spike = CoefficientSeries::synthetic(kind, spike).unwrap();
        let r = rankin_estimate(&spike, &[10, 100, 1000]).unwrap();
        assert!(r.ratios.windows(2).all(|w| w[1] < w[0]) && r.ratios[2] < 2e-3);
        assert!(rankin_estimate(&spike, &[1001]).is_err());
    }

    #[test]
    fn rankin_delta_stabilizes() {
        let s = generate_delta(100_000).unwrap();
        let r = rankin_estimate(&s, &[1_000, 10_000, 100_000]).unwrap();
        let rel = |a: f64, b: f64| ((b - a) / a).abs();
        assert!(rel(r.ratios[1], r.ratios[2]) < 0.1, "{:?}", r.ratios);
        assert!(rel(r.ratios[1], r.ratios[2]) < rel(r.ratios[0], r.ratios[1]));
        assert!(r.weighted.iter().all(|&w| w.is_finite() && w > 0.0 && w < 10.0));
    }

    #[test]
    fn advisory_flags_outliers() {
        let mut v: Vec<f64> = (1..=400).map(|n| (n as f64).powf(0.1)).collect();
        v[300] = 1e3;
        let s = CoefficientSeries::synthetic(WeightKind::HalfIntegral { ell: 4 }, v).unwrap();
        assert_eq!(growth_advisory(&s), vec![301]);
    }

    #[test]
    fn theta_eta_form_matches_eta_product() {
        // q prod (1 - q^n)^6 (1 - q^(4n))^6 / (1 - q^(2n))^3 by factor-wise updates.
        let len = 400;
        let mut c = vec![0i128; len];
        c[0] = 1;
        let times = |c: &mut Vec<i128>, k: usize| {
            for i in (k..c.len()).rev() {
                c[i] -= c[i - k];
            }
        };
        let divide = |c: &mut Vec<i128>, k: usize| {
            for i in k..c.len() {
                c[i] += c[i - k];
            }
        };
        for n in 1..len {
            for _ in 0..6 {
                times(&mut c, n);
                if 4 * n < len {
                    times(&mut c, 4 * n);
                }
            }
            for _ in 0..3 {
                if 2 * n < len {
                    divide(&mut c, 2 * n);
                }
            }
        }
        let (inf, zero) = theta_eta_form(len).unwrap();
        assert_eq!(inf.values(), zero.values());
        assert_eq!(zero.cusp, Cusp::Zero);
        for (i, &v) in inf.values().iter().enumerate() {
            let n = (i + 1) as f64;
            assert_eq!((v * n.powf(1.75)).round() as i128, c[i], "n = {}", i + 1);
        }
        assert_eq!(&c[..8], &[1, -6, 12, -8, 0, 12, -48, 48]);
    }
}
