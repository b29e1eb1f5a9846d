//! Normalized Kloosterman, Salie and Gauss sums modulo odd prime powers.

use crate::error::{invalid, Result};
use crate::modarith::{
    epsilon_factor, inv_mod, jacobi_q, legendre, mod_sqrt, reduce_mod, PrimePowerModulus,
    SqrtTable,
};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Direct,
    ClosedForm,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TwistedSumValue {
    pub value: Complex64,
    pub method: Method,
}

/// Per-modulus tables for O(q) direct summation.
pub struct DirectTables {
    q: PrimePowerModulus,
    inv: Vec<u64>,
    chi: Vec<i8>,
    roots: Vec<Complex64>,
}

impl DirectTables {
    pub fn new(q: &PrimePowerModulus) -> Self {
        let n = q.q();
        let mut inv = vec![0u64; n as usize];
        let mut chi = vec![0i8; n as usize];
        for x in 1..n {
            if x % q.p() != 0 {
                inv[x as usize] = inv_mod(x as i64, n).expect("unit");
                chi[x as usize] = jacobi_q(x as i64, q) as i8;
            }
        }
        let roots = (0..n)
            .map(|k| Complex64::from_polar(1.0, 2.0 * PI * k as f64 / n as f64))
            .collect();
        Self { q: *q, inv, chi, roots }
    }

    fn sum(&self, m: i64, n: i64, twisted: bool) -> Complex64 {
        let qq = self.q.q();
        let m = reduce_mod(m, qq);
        let n = reduce_mod(n, qq);
        let mut acc = Complex64::new(0.0, 0.0);
        for x in 1..qq {
            let c = self.chi[x as usize];
            if c == 0 {
                continue;
            }
            let xi = self.inv[x as usize];
            let k = ((m as u128 * x as u128 + n as u128 * xi as u128) % qq as u128) as usize;
            if twisted && c < 0 {
                acc -= self.roots[k];
            } else {
                acc += self.roots[k];
            }
        }
        acc / (qq as f64).sqrt()
    }

    /// (1/sqrt q) sum over units x of e_q(mx + n x^-1).
    pub fn kloosterman(&self, m: i64, n: i64) -> Complex64 {
        self.sum(m, n, false)
    }

    /// (1/sqrt q) sum over units x of (x/q) e_q(mx + n x^-1).
    pub fn salie(&self, m: i64, n: i64) -> Complex64 {
        self.sum(m, n, true)
    }
}

enum Kind {
    Kloosterman,
    Salie,
}

fn closed_form(kind: Kind, m: i64, n: i64, q: &PrimePowerModulus) -> Result<Complex64> {
    let p = q.p();
    if reduce_mod(m, p) == 0 {
        return invalid(format!("closed form needs p={p} coprime to m={m}"));
    }
    if reduce_mod(n, p) == 0 {
        if q.exponent() == 1 {
            return invalid("closed form with p | n needs N >= 2");
        }
        return Ok(Complex64::new(0.0, 0.0));
    }
    if matches!(kind, Kind::Kloosterman) && q.exponent() == 1 {
        return invalid("closed-form Kloosterman sum needs N >= 2");
    }
    let qq = q.q();
    let mn = ((reduce_mod(m, qq) as u128 * reduce_mod(n, qq) as u128) % qq as u128) as i64;
    let Some(r) = mod_sqrt(mn, q)? else {
        return Ok(Complex64::new(0.0, 0.0));
    };
    let r = r.value as i64;
    let eps = epsilon_factor(qq as i64)?;
    let plus = crate::modarith::e_q(2 * r, qq);
    let minus = plus.conj();
    Ok(match kind {
        Kind::Salie => eps * (plus + minus) * jacobi_q(m, q) as f64,
        Kind::Kloosterman => {
            let cr = jacobi_q(r, q) as f64;
            let cm = jacobi_q(-r, q) as f64;
            eps * (plus * cr + minus * cm)
        }
    })
}

pub fn kloosterman(
    m: i64,
    n: i64,
    q: &PrimePowerModulus,
    method: Method,
) -> Result<TwistedSumValue> {
    let value = match method {
        Method::Direct => DirectTables::new(q).kloosterman(m, n),
        Method::ClosedForm => closed_form(Kind::Kloosterman, m, n, q)?,
    };
    Ok(TwistedSumValue { value, method })
}

pub fn salie(m: i64, n: i64, q: &PrimePowerModulus, method: Method) -> Result<TwistedSumValue> {
    let value = match method {
        Method::Direct => DirectTables::new(q).salie(m, n),
        Method::ClosedForm => closed_form(Kind::Salie, m, n, q)?,
    };
    Ok(TwistedSumValue { value, method })
}

/// Sa_q(x) = 2cos(2 pi sqrt(x)/q) on quadratic residues, 0 otherwise.
pub fn sa(x: i64, q: &PrimePowerModulus) -> f64 {
    if legendre(x, q.p()) != 1 {
        return 0.0;
    }
    let r = mod_sqrt(x, q).expect("x is a unit").expect("x is a residue");
    2.0 * (2.0 * PI * r.value as f64 / q.q() as f64).cos()
}

/// Sa_q backed by a square-root table.
#[inline]
pub fn sa_table(x: u64, table: &SqrtTable) -> f64 {
    match table.get(x) {
        Some(r) => 2.0 * (2.0 * PI * r as f64 / table.modulus().q() as f64).cos(),
        None => 0.0,
    }
}

/// Closed-form Kloosterman sum for even N backed by a square-root table:
/// Kl_q(m, a) = 2cos(4 pi sqrt(ma)/q), or 0 when ma is not a residue.
#[inline]
pub fn kloosterman_even_table(m: u64, a: u64, table: &SqrtTable) -> f64 {
    let q = table.modulus().q();
    match table.get(((m as u128 * a as u128) % q as u128) as u64) {
        Some(r) => 2.0 * (4.0 * PI * r as f64 / q as f64).cos(),
        None => 0.0,
    }
}

/// (1/q) sum over x mod q of (x/q)^nu e_q(ax); even powers are the
/// principal character.
pub fn gauss_sum(nu: i64, a: i64, q: &PrimePowerModulus) -> Complex64 {
    let qq = q.q();
    let a = reduce_mod(a, qq);
    let mut acc = Complex64::new(0.0, 0.0);
    for x in 1..qq {
        let c = jacobi_q(x as i64, q);
        if c == 0 {
            continue;
        }
        let chi = if nu.rem_euclid(2) == 0 { 1.0 } else { c as f64 };
        let k = ((a as u128 * x as u128) % qq as u128) as u64;
        acc += Complex64::from_polar(chi, 2.0 * PI * k as f64 / qq as f64);
    }
    acc / qq as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modarith::{mul_mod, SqrtTable};
    use proptest::prelude::*;

    fn m(q: u64) -> PrimePowerModulus {
        PrimePowerModulus::from_q(q).unwrap()
    }

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() < tol
    }

    #[test]
    fn kloosterman_examples() {
        let v = kloosterman(1, 1, &m(5), Method::Direct).unwrap().value;
        assert!(close(v, Complex64::new(0.170820393249937, 0.0), 1e-12), "{v}");
        let want = 2.0 * (4.0 * PI / 9.0).cos();
        let v = kloosterman(1, 1, &m(9), Method::ClosedForm).unwrap().value;
        assert!(close(v, Complex64::new(want, 0.0), 1e-12));
        assert!((want - 0.347296).abs() < 1e-6);
        let v = kloosterman(1, 3, &m(9), Method::ClosedForm).unwrap().value;
        assert_eq!(v, Complex64::new(0.0, 0.0));
        assert!(kloosterman(1, 1, &m(5), Method::ClosedForm).is_err());
        assert!(kloosterman(3, 1, &m(9), Method::ClosedForm).is_err());
    }

    #[test]
    fn salie_examples() {
        let want = 2.0 * (4.0 * PI / 9.0).cos();
        let v = salie(1, 1, &m(9), Method::ClosedForm).unwrap().value;
        assert!(close(v, Complex64::new(want, 0.0), 1e-12));
        let d = salie(1, 2, &m(25), Method::Direct).unwrap().value;
        let c = salie(1, 2, &m(25), Method::ClosedForm).unwrap().value;
        assert!(d.norm() <= 2.0 + 1e-12);
        assert!(close(c, d, 1e-12));
        let v = salie(1, 5, &m(25), Method::ClosedForm).unwrap().value;
        assert_eq!(v, Complex64::new(0.0, 0.0));
    }

    #[test]
    fn prime_modulus_salie_with_p_dividing_n_is_rejected() {
        assert!(salie(1, 7, &m(7), Method::ClosedForm).is_err());
        // The true value is (m/p) eps_p, not 0.
        let d = salie(3, 7, &m(7), Method::Direct).unwrap().value;
        assert!(close(d, Complex64::new(0.0, -1.0), 1e-12), "{d}");
    }

    #[test]
    fn sa_examples() {
        assert!((sa(4, &m(9)) - 0.347296).abs() < 1e-6);
        assert!((sa(7, &m(9)) + 1.879385).abs() < 1e-6);
        assert_eq!(sa(2, &m(25)), 0.0);
        assert_eq!(sa(5, &m(25)), 0.0);
    }

    #[test]
    fn gauss_examples() {
        let g = gauss_sum(1, 1, &m(3));
        assert!(close(g, Complex64::new(0.0, 1.0 / 3f64.sqrt()), 1e-12));
        let g = gauss_sum(2, 0, &m(9));
        assert!(close(g, Complex64::new(6.0 / 9.0, 0.0), 1e-12));
        assert!(gauss_sum(1, 0, &m(27)).norm() < 1e-12);
        // (x/9) = (x/3)^2 is principal on units.
        let g = gauss_sum(1, 0, &m(9));
        assert!(close(g, Complex64::new(6.0 / 9.0, 0.0), 1e-12));
    }

    #[test]
    fn closed_form_matches_direct() {
        for q in [9u64, 25, 27, 49, 81, 121, 125] {
            let pq = m(q);
            let t = DirectTables::new(&pq);
            for a in 1..=q as i64 {
                if a % pq.p() as i64 == 0 {
                    continue;
                }
                for b in 1..=q as i64 {
                    let s = closed_form(Kind::Salie, a, b, &pq).unwrap();
                    assert!(close(s, t.salie(a, b), 1e-9), "salie q={q} {a} {b}");
                    let k = closed_form(Kind::Kloosterman, a, b, &pq).unwrap();
                    assert!(close(k, t.kloosterman(a, b), 1e-9), "kl q={q} {a} {b}");
                    if b % pq.p() as i64 != 0 {
                        assert!(s.norm() <= 2.0 + 1e-12 && k.norm() <= 2.0 + 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn prime_modulus_salie_matches_direct() {
        for p in [3u64, 5, 7, 11, 13, 31] {
            let pq = m(p);
            let t = DirectTables::new(&pq);
            for a in 1..p as i64 {
                for b in 1..p as i64 {
                    let s = closed_form(Kind::Salie, a, b, &pq).unwrap();
                    assert!(close(s, t.salie(a, b), 1e-10));
                }
            }
        }
    }

    #[test]
    fn even_exponent_sums_coincide() {
        for q in [9u64, 25, 49, 121] {
            let t = DirectTables::new(&m(q));
            for a in 0..q as i64 {
                for b in 0..q as i64 {
                    assert!(close(t.salie(a, b), t.kloosterman(a, b), 1e-12));
                }
            }
        }
    }

    #[test]
    fn even_table_kloosterman() {
        for q in [9u64, 49, 121, 625] {
            let pq = m(q);
            let table = SqrtTable::new(&pq).unwrap();
            for a in (1..q).filter(|a| a % pq.p() != 0) {
                for mm in (1..40u64).filter(|mm| mm % pq.p() != 0) {
                    let want = closed_form(Kind::Kloosterman, mm as i64, a as i64, &pq).unwrap();
                    let got = kloosterman_even_table(mm, a, &table);
                    assert!((want.re - got).abs() < 1e-12 && want.im.abs() < 1e-12);
                    assert!((sa_table(4 * mm * a % q, &table) - got).abs() < 1e-12);
                }
            }
        }
    }

    fn odd_prime_powers_upto(bound: u64) -> Vec<u64> {
        (3..=bound).filter(|&q| PrimePowerModulus::from_q(q).is_ok()).collect()
    }

    #[test]
    fn chebyshev_identity() {
        for q in odd_prime_powers_upto(343) {
            let pq = m(q);
            let table = SqrtTable::new(&pq).unwrap();
            let residues: Vec<u64> = (1..q).filter(|&x| table.get(x).is_some()).collect();
            for &mm in &residues {
                let k = table.get(mm).unwrap() as f64;
                for &x in &residues {
                    let theta = 2.0 * PI * table.get(x).unwrap() as f64 / q as f64;
                    let lhs = sa((mm * x % q) as i64, &pq);
                    assert!((lhs - 2.0 * (k * theta).cos()).abs() < 1e-9, "q={q}");
                }
            }
        }
    }

    #[test]
    fn square_relabeling_permutes_values() {
        for q in [25u64, 27, 49, 121] {
            let pq = m(q);
            for s in [2u64, 3, 7] {
                if s % pq.p() == 0 {
                    continue;
                }
                let s2 = mul_mod(s, s, q);
                for mm in [1u64, 2, 3] {
                    let mut base: Vec<i64> = Vec::new();
                    let mut moved: Vec<i64> = Vec::new();
                    for x in (1..q).filter(|x| x % pq.p() != 0) {
                        let key = |v: f64| (v * 1e9).round() as i64;
                        base.push(key(sa((mm * x % q) as i64, &pq)));
                        moved.push(key(sa((mm * mul_mod(s2, x, q) % q) as i64, &pq)));
                    }
                    base.sort_unstable();
                    moved.sort_unstable();
                    assert_eq!(base, moved);
                }
            }
        }
    }

    proptest! {
        #[test]
        fn closed_form_bounded_and_exact(
            q_idx in 0usize..6, a in 1i64..100_000, b in 1i64..100_000,
        ) {
            let q = [9u64, 27, 243, 169, 289, 361][q_idx];
            let pq = m(q);
            let p = pq.p() as i64;
            prop_assume!(a % p != 0 && b % p != 0);
            let t = DirectTables::new(&pq);
            let s = salie(a, b, &pq, Method::ClosedForm).unwrap().value;
            let k = kloosterman(a, b, &pq, Method::ClosedForm).unwrap().value;
            prop_assert!(s.norm() <= 2.0 + 1e-12);
            prop_assert!(k.norm() <= 2.0 + 1e-12);
            prop_assert!(close(s, t.salie(a, b), 1e-9));
            prop_assert!(close(k, t.kloosterman(a, b), 1e-9));
        }
    }
}
