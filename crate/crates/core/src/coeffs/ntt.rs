//! Number-theoretic transforms over three 62-bit primes and exact CRT.

use crate::error::{invalid, Result};
use crate::modarith::{inv_mod, mul_mod, pow_mod};
use rayon::prelude::*;

/// (prime, primitive root); each prime is k * 2^26 + 1.
pub const PRIMES: [(u64, u64); 3] = [
    (4_611_686_017_554_972_673, 5),
    (4_611_686_015_004_835_841, 3),
    (4_611_686_009_971_671_041, 6),
];

pub const MAX_LOG_SIZE: u32 = 26;

/// Montgomery arithmetic modulo an odd p < 2^62 with R = 2^64.
#[derive(Clone, Copy, Debug)]
pub struct Montgomery {
    pub p: u64,
    neg_inv: u64,
    r2: u64,
}

impl Montgomery {
    pub fn new(p: u64) -> Self {
        let mut inv: u64 = 1;
        for _ in 0..6 {
            inv = inv.wrapping_mul(2u64.wrapping_sub(p.wrapping_mul(inv)));
        }
        let r = ((1u128 << 64) % p as u128) as u64;
        let r2 = mul_mod(r, r, p);
        Self { p, neg_inv: inv.wrapping_neg(), r2 }
    }

    #[inline(always)]
    fn redc(&self, t: u128) -> u64 {
        let m = (t as u64).wrapping_mul(self.neg_inv);
        let u = ((t + m as u128 * self.p as u128) >> 64) as u64;
        // Branch-free: u - p wraps above u exactly when u < p.
        u.min(u.wrapping_sub(self.p))
    }

    #[inline(always)]
    pub fn mul(&self, a: u64, b: u64) -> u64 {
        self.redc(a as u128 * b as u128)
    }

    #[inline(always)]
    pub fn to_mont(&self, a: u64) -> u64 {
        self.mul(a % self.p, self.r2)
    }

    #[inline(always)]
    pub fn from_mont(&self, a: u64) -> u64 {
        self.redc(a as u128)
    }

    #[inline(always)]
    fn add(&self, a: u64, b: u64) -> u64 {
        let s = a + b;
        s.min(s.wrapping_sub(self.p))
    }

    #[inline(always)]
    fn sub(&self, a: u64, b: u64) -> u64 {
        let d = a.wrapping_sub(b);
        d.min(d.wrapping_add(self.p))
    }
}

/// Butterfly blocks shorter than this are grouped into one parallel task.
const GRAIN: usize = 1 << 14;

fn stage_roots(mont: &Montgomery, w: u64, half: usize, out: &mut [u64]) {
    let wm = mont.to_mont(w);
    let mut cur = mont.to_mont(1);
    for slot in out[..half].iter_mut() {
        *slot = cur;
        cur = mont.mul(cur, wm);
    }
}

/// Decimation in frequency: natural order in, bit-reversed order out.
fn forward(a: &mut [u64], mont: &Montgomery, g: u64, scratch: &mut [u64]) {
    let n = a.len();
    let p = mont.p;
    let mut len = n;
    while len >= 2 {
        let half = len / 2;
        stage_roots(mont, pow_mod(g, (p - 1) / len as u64, p), half, scratch);
        let roots = &scratch[..half];
        a.par_chunks_mut(len.max(GRAIN)).flat_map_iter(|c| c.chunks_mut(len)).for_each(|block| {
            let (lo, hi) = block.split_at_mut(half);
            for ((x, y), &w) in lo.iter_mut().zip(hi.iter_mut()).zip(roots) {
                let (u, v) = (*x, *y);
                *x = mont.add(u, v);
                *y = mont.mul(mont.sub(u, v), w);
            }
        });
        len = half;
    }
}

/// Decimation in time with inverse roots: bit-reversed in, natural out.
fn inverse(a: &mut [u64], mont: &Montgomery, g: u64, scratch: &mut [u64]) {
    let n = a.len();
    let p = mont.p;
    let g_inv = inv_mod(g as i64, p).expect("generator is a unit");
    let mut len = 2;
    while len <= n {
        let half = len / 2;
        stage_roots(mont, pow_mod(g_inv, (p - 1) / len as u64, p), half, scratch);
        let roots = &scratch[..half];
        a.par_chunks_mut(len.max(GRAIN)).flat_map_iter(|c| c.chunks_mut(len)).for_each(|block| {
            let (lo, hi) = block.split_at_mut(half);
            for ((x, y), &w) in lo.iter_mut().zip(hi.iter_mut()).zip(roots) {
                let u = *x;
                let v = mont.mul(*y, w);
                *x = mont.add(u, v);
                *y = mont.sub(u, v);
            }
        });
        len *= 2;
    }
    let n_inv = mont.to_mont(inv_mod(n as i64, p).expect("n is a unit"));
    a.par_iter_mut().for_each(|x| *x = mont.mul(*x, n_inv));
}

fn transform_size(len_a: usize, len_b: usize) -> Result<usize> {
    let need = (len_a + len_b).saturating_sub(1).max(1);
    let size = need.next_power_of_two();
    if size > 1 << MAX_LOG_SIZE {
        return invalid(format!("convolution of length {need} exceeds 2^{MAX_LOG_SIZE}"));
    }
    Ok(size)
}

/// Truncated product of residue sequences modulo `PRIMES[idx]`.
///
/// Inputs and output are plain residues in [0, p). When `b` is `None` the
/// square of `a` is formed with one forward transform.
pub fn multiply_mod(a: &[u64], b: Option<&[u64]>, cap: usize, idx: usize) -> Result<Vec<u64>> {
    let (p, g) = PRIMES[idx];
    let mont = Montgomery::new(p);
    let lb = b.map_or(a.len(), <[u64]>::len);
    let size = transform_size(a.len(), lb)?;
    let mut fa = vec![0u64; size];
    let mut scratch = vec![0u64; size / 2 + 1];
    fa[..a.len()].par_iter_mut().zip(a).for_each(|(d, &s)| *d = mont.to_mont(s));
    forward(&mut fa, &mont, g, &mut scratch);
    match b {
        None => fa.par_iter_mut().for_each(|x| *x = mont.mul(*x, *x)),
        Some(b) => {
            let mut fb = vec![0u64; size];
            fb[..b.len()].par_iter_mut().zip(b).for_each(|(d, &s)| *d = mont.to_mont(s));
            forward(&mut fb, &mont, g, &mut scratch);
            fa.par_iter_mut().zip(&fb).for_each(|(x, &y)| *x = mont.mul(*x, y));
        }
    }
    inverse(&mut fa, &mont, g, &mut scratch);
    let out_len = cap.min(a.len() + lb - 1);
    fa.truncate(out_len);
    fa.par_iter_mut().for_each(|x| *x = mont.from_mont(*x));
    Ok(fa)
}

pub fn to_residue(x: i64, p: u64) -> u64 {
    (x as i128).rem_euclid(p as i128) as u64
}

/// Mixed-radix digits of a CRT lift: x = c0 + c1 p0 + c2 p0 p1.
#[derive(Clone, Copy, Debug)]
pub struct Garner {
    inv_p0_mod_p1: u64,
    inv_p0p1_mod_p2: u64,
}

impl Default for Garner {
    fn default() -> Self {
        Self::new()
    }
}

impl Garner {
    pub fn new() -> Self {
        let (p0, p1, p2) = (PRIMES[0].0, PRIMES[1].0, PRIMES[2].0);
        let inv_p0_mod_p1 = inv_mod((p0 % p1) as i64, p1).expect("coprime");
        let p0p1 = mul_mod(p0 % p2, p1 % p2, p2);
        let inv_p0p1_mod_p2 = inv_mod(p0p1 as i64, p2).expect("coprime");
        Self { inv_p0_mod_p1, inv_p0p1_mod_p2 }
    }

    /// Second digit from residues modulo p0 and p1.
    #[inline]
    pub fn digit1(&self, r0: u64, r1: u64) -> u64 {
        let p1 = PRIMES[1].0;
        let d = (r1 + p1 - r0 % p1) % p1;
        mul_mod(d, self.inv_p0_mod_p1, p1)
    }

    /// Balanced lift as (c0, c1 + p1 * c2s) where c2s is the signed top digit.
    #[inline]
    pub fn lift(&self, c0: u64, c1: u64, r2: u64) -> (u64, i128) {
        let (p0, p1, p2) = (PRIMES[0].0, PRIMES[1].0, PRIMES[2].0);
        let partial = (c0 % p2 + mul_mod(c1 % p2, p0 % p2, p2)) % p2;
        let d = (r2 + p2 - partial) % p2;
        let c2 = mul_mod(d, self.inv_p0p1_mod_p2, p2);
        let c2s = if c2 > p2 / 2 { c2 as i128 - p2 as i128 } else { c2 as i128 };
        (c0, c1 as i128 + p1 as i128 * c2s)
    }

    pub fn to_f64(&self, c0: u64, c1: u64, r2: u64) -> f64 {
        let (c0, hi) = self.lift(c0, c1, r2);
        let p0 = PRIMES[0].0;
        if hi.unsigned_abs() < 1 << 64 {
            (c0 as i128 + hi * p0 as i128) as f64
        } else {
            c0 as f64 + hi as f64 * p0 as f64
        }
    }

    pub fn to_i128(&self, c0: u64, c1: u64, r2: u64) -> Option<i128> {
        let (c0, hi) = self.lift(c0, c1, r2);
        hi.checked_mul(PRIMES[0].0 as i128)?.checked_add(c0 as i128)
    }
}

/// Exact truncated product of integer sequences through three-prime CRT.
pub fn series_multiply(u: &[i64], v: &[i64], cap: usize) -> Result<Vec<i128>> {
    if u.is_empty() || v.is_empty() || cap == 0 {
        return Ok(Vec::new());
    }
    let mu = u.iter().map(|x| x.unsigned_abs()).max().unwrap_or(0) as f64;
    let mv = v.iter().map(|x| x.unsigned_abs()).max().unwrap_or(0) as f64;
    let bound = mu * mv * u.len().min(v.len()) as f64;
    if bound >= 2f64.powi(126) {
        return invalid("product coefficients may exceed 126 bits");
    }
    let residues: Vec<Vec<u64>> = (0..3)
        .map(|idx| {
            let p = PRIMES[idx].0;
            let a: Vec<u64> = u.iter().map(|&x| to_residue(x, p)).collect();
            let b: Vec<u64> = v.iter().map(|&x| to_residue(x, p)).collect();
            multiply_mod(&a, Some(&b), cap, idx)
        })
        .collect::<Result<_>>()?;
    let garner = Garner::new();
    Ok((0..residues[0].len())
        .map(|i| {
            let c1 = garner.digit1(residues[0][i], residues[1][i]);
            garner.to_i128(residues[0][i], c1, residues[2][i]).expect("bounded")
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modarith::is_prime;
    use proptest::prelude::*;

    fn schoolbook(u: &[i64], v: &[i64], cap: usize) -> Vec<i128> {
        let mut out = vec![0i128; (u.len() + v.len() - 1).min(cap)];
        for (i, &a) in u.iter().enumerate() {
            for (j, &b) in v.iter().enumerate() {
                if i + j < out.len() {
                    out[i + j] += a as i128 * b as i128;
                }
            }
        }
        out
    }

    #[test]
    fn primes_are_valid() {
        for (p, g) in PRIMES {
            assert!(is_prime(p) && p < 1 << 62);
            assert_eq!((p - 1) % (1 << MAX_LOG_SIZE), 0);
            assert_eq!(pow_mod(g, (p - 1) / 2, p), p - 1);
        }
    }

    #[test]
    fn montgomery_roundtrip() {
        let m = Montgomery::new(PRIMES[1].0);
        for a in [0u64, 1, 2, 12345, PRIMES[1].0 - 1] {
            assert_eq!(m.from_mont(m.to_mont(a)), a);
            let b = 987_654_321_123u64;
            assert_eq!(m.from_mont(m.mul(m.to_mont(a), m.to_mont(b))), mul_mod(a, b, m.p));
        }
    }

    #[test]
    fn small_products() {
        assert_eq!(series_multiply(&[1, 1], &[1, 1], 10).unwrap(), vec![1, 2, 1]);
        assert_eq!(series_multiply(&[1, -1], &[1, 1], 10).unwrap(), vec![1, 0, -1]);
        assert_eq!(series_multiply(&[3], &[-4], 10).unwrap(), vec![-12]);
    }

    #[test]
    fn pentagonal_square() {
        let mut pent = vec![0i64; 21];
        for k in -5i64..=5 {
            let e = k * (3 * k - 1) / 2;
            if (0..21).contains(&e) {
                pent[e as usize] = if k % 2 == 0 { 1 } else { -1 };
            }
        }
        assert_eq!(series_multiply(&pent, &pent, 21).unwrap(), schoolbook(&pent, &pent, 21));
    }

    #[test]
    fn large_values_need_three_primes() {
        let u = vec![(1i64 << 59) - 1; 255];
        let v = vec![-(1i64 << 59) + 7; 128];
        assert_eq!(series_multiply(&u, &v, 1000).unwrap(), schoolbook(&u, &v, 1000));
    }

    #[test]
    fn garner_float_matches_exact() {
        let g = Garner::new();
        for x in [0i128, 1, -1, 1 << 100, -(1 << 120) + 12345, 98_765_432_109_876_543_210] {
            let r: Vec<u64> =
                PRIMES.iter().map(|&(p, _)| x.rem_euclid(p as i128) as u64).collect();
            let c1 = g.digit1(r[0], r[1]);
            assert_eq!(g.to_i128(r[0], c1, r[2]), Some(x));
            assert!((g.to_f64(r[0], c1, r[2]) - x as f64).abs() <= (x as f64).abs() * 1e-15);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn matches_schoolbook(
            u in proptest::collection::vec(-1_000_000_000i64..1_000_000_000, 1..200),
            v in proptest::collection::vec(-1_000_000_000i64..1_000_000_000, 1..200),
            cap in 1usize..450,
        ) {
            prop_assert_eq!(series_multiply(&u, &v, cap).unwrap(), schoolbook(&u, &v, cap));
        }
    }
}
