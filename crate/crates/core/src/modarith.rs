//! Exact arithmetic modulo odd prime powers.

use crate::error::{invalid, Result};
use num_complex::Complex64;
use serde::Serialize;
use std::f64::consts::PI;

/// Largest admissible modulus.
pub const MAX_MODULUS: u64 = 1 << 62;

/// q = p^N with p an odd prime.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct PrimePowerModulus {
    p: u64,
    n: u32,
    q: u64,
}

impl PrimePowerModulus {
    pub fn new(p: u64, n: u32) -> Result<Self> {
        if p < 3 || p % 2 == 0 || !is_prime(p) {
            return invalid(format!("{p} is not an odd prime"));
        }
        if n == 0 {
            return invalid("exponent must be at least 1");
        }
        let mut q: u64 = 1;
        for _ in 0..n {
            q = match q.checked_mul(p) {
                Some(v) if v < MAX_MODULUS => v,
                _ => return invalid(format!("{p}^{n} exceeds 2^62")),
            };
        }
        Ok(Self { p, n, q })
    }

    /// Recover (p, N) from q.
    pub fn from_q(q: u64) -> Result<Self> {
        if q < 3 || q % 2 == 0 {
            return invalid(format!("{q} is not an odd prime power"));
        }
        let p = smallest_prime_factor(q);
        let mut rest = q;
        let mut n = 0;
        while rest % p == 0 {
            rest /= p;
            n += 1;
        }
        if rest != 1 {
            return invalid(format!("{q} is not an odd prime power"));
        }
        Self::new(p, n)
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn exponent(&self) -> u32 {
        self.n
    }

    pub fn q(&self) -> u64 {
        self.q
    }

    pub fn phi(&self) -> u64 {
        self.q / self.p * (self.p - 1)
    }

    /// q/p as a modulus, or `None` when N = 1.
    pub fn parent(&self) -> Option<Self> {
        (self.n > 1).then(|| Self { p: self.p, n: self.n - 1, q: self.q / self.p })
    }

    pub fn reduce(&self, x: i64) -> u64 {
        reduce_mod(x, self.q)
    }
}

/// Square root representative in [1, (q-1)/2].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct CanonicalSqrt {
    pub value: u64,
    pub modulus: PrimePowerModulus,
}

pub fn reduce_mod(x: i64, m: u64) -> u64 {
    (x as i128).rem_euclid(m as i128) as u64
}

#[inline]
pub fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

pub fn pow_mod(mut b: u64, mut e: u64, m: u64) -> u64 {
    let mut r = 1 % m;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            r = mul_mod(r, b, m);
        }
        b = mul_mod(b, b, m);
        e >>= 1;
    }
    r
}

fn smallest_prime_factor(n: u64) -> u64 {
    if n % 2 == 0 {
        return 2;
    }
    let mut d = 3;
    while d * d <= n {
        if n % d == 0 {
            return d;
        }
        d += 2;
    }
    n
}

/// Deterministic Miller-Rabin, exact for every u64.
pub fn is_prime(n: u64) -> bool {
    const BASES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    if n < 2 {
        return false;
    }
    for &b in &BASES {
        if n % b == 0 {
            return n == b;
        }
    }
    let s = (n - 1).trailing_zeros();
    let d = (n - 1) >> s;
    'outer: for &a in &BASES {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'outer;
            }
        }
        return false;
    }
    true
}

/// Kronecker symbol (a/n) for any integers.
pub fn kronecker_symbol(a: i64, n: i64) -> i32 {
    if n == 0 {
        return i32::from(a == 1 || a == -1);
    }
    let mut result = 1;
    let mut n = n as i128;
    let mut a = a as i128;
    if n < 0 {
        n = -n;
        if a < 0 {
            result = -1;
        }
    }
    let twos = n.trailing_zeros();
    if twos > 0 {
        if a % 2 == 0 {
            return 0;
        }
        if twos % 2 == 1 && matches!(a.rem_euclid(8), 3 | 5) {
            result = -result;
        }
        n >>= twos;
    }
    // Jacobi symbol (a/n) for odd positive n.
    a = a.rem_euclid(n);
    while a != 0 {
        let t = a.trailing_zeros();
        a >>= t;
        if t % 2 == 1 && matches!(n % 8, 3 | 5) {
            result = -result;
        }
        if a % 4 == 3 && n % 4 == 3 {
            result = -result;
        }
        std::mem::swap(&mut a, &mut n);
        a %= n;
    }
    if n == 1 {
        result
    } else {
        0
    }
}

/// Legendre symbol (x/p) for an odd prime p.
pub fn legendre(x: i64, p: u64) -> i32 {
    kronecker_symbol(reduce_mod(x, p) as i64, p as i64)
}

/// Jacobi symbol (x/q) for q = p^N, i.e. (x/p)^N.
pub fn jacobi_q(x: i64, q: &PrimePowerModulus) -> i32 {
    let l = legendre(x, q.p());
    if q.exponent() % 2 == 0 {
        l * l
    } else {
        l
    }
}

/// 1 if d = 1 mod 4, i if d = 3 mod 4.
pub fn epsilon_factor(d: i64) -> Result<Complex64> {
    match d.rem_euclid(4) {
        1 => Ok(Complex64::new(1.0, 0.0)),
        3 => Ok(Complex64::new(0.0, 1.0)),
        _ => invalid(format!("epsilon factor needs odd d, got {d}")),
    }
}

/// Inverse of u modulo any m > 1, if it exists.
pub fn inv_mod(u: i64, m: u64) -> Option<u64> {
    let (mut r0, mut r1) = (m as i128, reduce_mod(u, m) as i128);
    let (mut s0, mut s1) = (0i128, 1i128);
    while r1 != 0 {
        let k = r0 / r1;
        (r0, r1) = (r1, r0 - k * r1);
        (s0, s1) = (s1, s0 - k * s1);
    }
    (r0 == 1).then(|| s0.rem_euclid(m as i128) as u64)
}

pub fn mod_inverse(u: i64, q: &PrimePowerModulus) -> Result<u64> {
    match inv_mod(u, q.q()) {
        Some(v) => Ok(v),
        None => invalid(format!("{u} is not invertible modulo {}", q.q())),
    }
}

/// Smallest positive quadratic non-residue modulo p.
pub fn find_nonresidue(p: u64) -> u64 {
    (2..p).find(|&m| legendre(m as i64, p) == -1).expect("odd prime has a non-residue")
}

fn tonelli_shanks(x: u64, p: u64) -> u64 {
    let s = (p - 1).trailing_zeros();
    let d = (p - 1) >> s;
    let z = find_nonresidue(p);
    let mut m = s;
    let mut c = pow_mod(z, d, p);
    let mut t = pow_mod(x, d, p);
    let mut r = pow_mod(x, d.div_ceil(2), p);
    while t != 1 {
        let mut i = 0;
        let mut tt = t;
        while tt != 1 {
            tt = mul_mod(tt, tt, p);
            i += 1;
        }
        let b = pow_mod(c, 1 << (m - i - 1), p);
        m = i;
        c = mul_mod(b, b, p);
        t = mul_mod(t, c, p);
        r = mul_mod(r, b, p);
    }
    r
}

/// Canonical square root of x modulo q, or `None` for non-residues.
pub fn mod_sqrt(x: i64, q: &PrimePowerModulus) -> Result<Option<CanonicalSqrt>> {
    let p = q.p();
    let xp = reduce_mod(x, p);
    if xp == 0 {
        return invalid(format!("{x} is divisible by {p}"));
    }
    if legendre(xp as i64, p) != 1 {
        return Ok(None);
    }
    let mut r = tonelli_shanks(xp, p);
    let mut m = p;
    for _ in 1..q.exponent() {
        m *= p;
        let xm = reduce_mod(x, m);
        let f = (mul_mod(r, r, m) + m - xm) % m;
        let inv = inv_mod((2 * r % m) as i64, m).expect("2r is a unit");
        r = (r + m - mul_mod(f, inv, m)) % m;
    }
    let value = r.min(q.q() - r);
    Ok(Some(CanonicalSqrt { value, modulus: *q }))
}

/// Canonical square roots of every unit modulo q, built by squaring.
#[derive(Clone, Debug)]
pub struct SqrtTable {
    modulus: PrimePowerModulus,
    root: Vec<u32>,
}

impl SqrtTable {
    pub fn new(q: &PrimePowerModulus) -> Result<Self> {
        if q.q() > u32::MAX as u64 {
            return invalid(format!("square-root table for q={} is too large", q.q()));
        }
        let n = q.q();
        let mut root = vec![0u32; n as usize];
        for r in 1..=(n - 1) / 2 {
            if r % q.p() != 0 {
                root[mul_mod(r, r, n) as usize] = r as u32;
            }
        }
        Ok(Self { modulus: *q, root })
    }

    pub fn modulus(&self) -> &PrimePowerModulus {
        &self.modulus
    }

    /// Canonical root of x, `None` for non-residues and multiples of p.
    #[inline]
    pub fn get(&self, x: u64) -> Option<u64> {
        match self.root[(x % self.modulus.q()) as usize] {
            0 => None,
            r => Some(r as u64),
        }
    }
}

/// Sum of e_q(bx) over invertible b, by its closed form.
pub fn ramanujan_sum(x: i64, q: &PrimePowerModulus) -> i64 {
    let big = q.q();
    let small = big / q.p();
    if reduce_mod(x, big) == 0 {
        q.phi() as i64
    } else if reduce_mod(x, small) == 0 {
        -(small as i64)
    } else {
        0
    }
}

/// 1 iff q divides x.
pub fn dirac_mod(x: i64, q: u64) -> u8 {
    u8::from(reduce_mod(x, q) == 0)
}

/// exp(2 pi i x / q), reduced first so the angle stays small.
pub fn e_q(x: i64, q: u64) -> Complex64 {
    let r = reduce_mod(x, q);
    Complex64::from_polar(1.0, 2.0 * PI * r as f64 / q as f64)
}
