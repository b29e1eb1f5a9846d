//! Primes whose first few integers are all quadratic residues.

use crate::error::{invalid, Result};
use crate::modarith::{kronecker_symbol, pow_mod};
use serde::Serialize;
use std::str::FromStr;

pub const SIEVE_CEILING: u64 = 100_000_000;
const SEGMENT: u64 = 1 << 18;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct QrPrimeRecord {
    pub p: u64,
    pub least_nonresidue: u64,
}

/// Threshold Z(p) below which every integer must be a residue.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ZSpec {
    Const(f64),
    LogLog,
}

impl ZSpec {
    /// Largest m that must be a residue, i.e. floor(Z(p)).
    pub fn bound(&self, p: u64) -> u64 {
        let z = match *self {
            ZSpec::Const(z) => z,
            ZSpec::LogLog => (p as f64).ln().ln(),
        };
        if z < 1.0 {
            0
        } else {
            z.floor() as u64
        }
    }
}

impl FromStr for ZSpec {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "loglog" {
            return Ok(ZSpec::LogLog);
        }
        match s.strip_prefix("const:").map(str::parse::<f64>) {
            Some(Ok(z)) if z.is_finite() => Ok(ZSpec::Const(z)),
            _ => invalid(format!("Z must be const:<number> or loglog, got {s}")),
        }
    }
}

/// Primes up to x by a segmented sieve of Eratosthenes.
pub fn primes_upto(x: u64) -> Result<Vec<u64>> {
    if x > SIEVE_CEILING {
        return invalid(format!("sieve limit {x} exceeds {SIEVE_CEILING}"));
    }
    if x < 2 {
        return Ok(Vec::new());
    }
    let root = (x as f64).sqrt() as u64 + 1;
    let mut small = vec![true; (root + 1) as usize];
    let mut base = Vec::new();
    for i in 2..=root {
        if small[i as usize] {
            base.push(i);
            let mut j = i * i;
            while j <= root {
                small[j as usize] = false;
                j += i;
            }
        }
    }
    let mut out = Vec::new();
    let mut lo = 2;
    let mut seg = vec![true; SEGMENT as usize];
    while lo <= x {
        let hi = (lo + SEGMENT - 1).min(x);
        let len = (hi - lo + 1) as usize;
        seg[..len].fill(true);
        for &p in &base {
            if p * p > hi {
                break;
            }
            let mut j = (p * p).max(lo.div_ceil(p) * p);
            while j <= hi {
                seg[(j - lo) as usize] = false;
                j += p;
            }
        }
        out.extend((0..len).filter(|&i| seg[i]).map(|i| lo + i as u64));
        lo = hi + 1;
    }
    Ok(out)
}

/// Smallest m >= 2 with (m/p) = -1, found by Euler's criterion.
pub fn least_nonresidue(p: u64) -> u64 {
    (2..p).find(|&m| pow_mod(m, (p - 1) / 2, p) == p - 1).expect("odd prime has a non-residue")
}

/// Odd primes up to x whose least non-residue exceeds floor(Z(p)).
pub fn search(x: u64, z: ZSpec) -> Result<Vec<QrPrimeRecord>> {
    if x < 3 {
        return invalid("x must be at least 3");
    }
    Ok(primes_upto(x)?
        .into_iter()
        .filter(|&p| p > 2)
        .map(|p| QrPrimeRecord { p, least_nonresidue: least_nonresidue(p) })
        .filter(|r| r.least_nonresidue > z.bound(r.p))
        .collect())
}

pub fn count_qr_primes(x: u64, z: ZSpec) -> Result<usize> {
    Ok(search(x, z)?.len())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CharacterSums {
    pub q_i: u64,
    pub x: u64,
    /// Sum of chi(p) over primes p <= x.
    pub pi_chi: i64,
    /// Sum of chi(n) Lambda(n) over n <= x.
    pub psi_chi: f64,
    /// Contribution of primes to psi_chi.
    pub psi_chi_primes: f64,
    /// Contribution of proper prime powers to psi_chi.
    pub psi_chi_prime_powers: f64,
}

/// pi_chi and psi_chi for chi = (q_I / .).
pub fn character_prime_sums(q_i: u64, x: u64) -> Result<CharacterSums> {
    if q_i % 2 == 0 {
        return invalid(format!("q_I must be odd, got {q_i}"));
    }
    let mut k = 2;
    while k * k <= q_i {
        if q_i % (k * k) == 0 {
            return invalid(format!("q_I must be squarefree, got {q_i}"));
        }
        k += 1;
    }
    let mut pi_chi = 0i64;
    let (mut primes_part, mut powers_part) = (0.0f64, 0.0f64);
    for p in primes_upto(x)? {
        let chi = kronecker_symbol(q_i as i64, p as i64);
        pi_chi += chi as i64;
        let log_p = (p as f64).ln();
        primes_part += chi as f64 * log_p;
        let mut pk = p as u128 * p as u128;
        let mut chi_k = chi * chi;
        while pk <= x as u128 {
            powers_part += chi_k as f64 * log_p;
            pk *= p as u128;
            chi_k *= chi;
        }
    }
    Ok(CharacterSums {
        q_i,
        x,
        pi_chi,
        psi_chi: primes_part + powers_part,
        psi_chi_primes: primes_part,
        psi_chi_prime_powers: powers_part,
    })
}
