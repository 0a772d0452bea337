//! Exact arithmetic in the cyclotomic field Q(ζ_L).
//!
//! Elements live in Q[x]/(Φ_L) with [`num_rational::BigRational`]
//! coefficients, so every computation that stays inside the field is exact.
//! The context precomputes Φ_L and a reduction table for the powers
//! x^j that show up when multiplying two reduced elements, which keeps
//! products at schoolbook cost without repeated polynomial division.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::torus::Tor;

/// An element of Q(ζ_L), as coefficients over the power basis
/// 1, x, ..., x^(deg Φ_L - 1). The vector length always equals the degree
/// of the context that produced it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CycQ(pub Vec<BigRational>);

impl CycQ {
    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|c| c.is_zero())
    }

    /// The rational part if the element is rational, else None.
    pub fn as_rational(&self) -> Option<BigRational> {
        if self.0.iter().skip(1).all(|c| c.is_zero()) {
            Some(self.0[0].clone())
        } else {
            None
        }
    }
}

/// Shared context for Q(ζ_L): the minimal polynomial and reduction tables.
pub struct CycCtx {
    pub level: u32,
    /// deg Φ_L = φ(L).
    pub degree: usize,
    /// Monic Φ_L, low-to-high, length degree + 1.
    phi: Vec<BigRational>,
    /// pow[j] = x^j mod Φ_L, for j in 0..max(L, 2*degree - 1).
    pow: Vec<Vec<BigRational>>,
}

/// Φ_n as an integer polynomial (low-to-high), by exact division of x^n - 1
/// by the product of Φ_d over proper divisors d of n.
fn cyclotomic_poly(n: u32) -> Vec<BigInt> {
    assert!(n >= 1);
    let mut num = vec![BigInt::from(-1)];
    num.extend(std::iter::repeat_with(BigInt::zero).take(n as usize - 1));
    num.push(BigInt::one());
    let mut den = vec![BigInt::one()];
    for d in 1..n {
        if n % d == 0 {
            den = poly_mul_int(&den, &cyclotomic_poly(d));
        }
    }
    poly_div_exact_int(&num, &den)
}

fn poly_mul_int(a: &[BigInt], b: &[BigInt]) -> Vec<BigInt> {
    let mut out = vec![BigInt::zero(); a.len() + b.len() - 1];
    for (i, ai) in a.iter().enumerate() {
        if ai.is_zero() {
            continue;
        }
        for (j, bj) in b.iter().enumerate() {
            out[i + j] += ai * bj;
        }
    }
    out
}

/// Exact division of integer polynomials; panics on a nonzero remainder,
/// which cannot happen for cyclotomic inputs.
fn poly_div_exact_int(num: &[BigInt], den: &[BigInt]) -> Vec<BigInt> {
    let dn = den.len() - 1;
    assert!(den[dn].is_one(), "divisor must be monic");
    let mut rem: Vec<BigInt> = num.to_vec();
    let qn = num.len() - 1 - dn;
    let mut quo = vec![BigInt::zero(); qn + 1];
    for k in (0..=qn).rev() {
        let c = rem[k + dn].clone();
        quo[k] = c.clone();
        if c.is_zero() {
            continue;
        }
        for (i, di) in den.iter().enumerate() {
            let sub = di * &c;
            rem[k + i] -= sub;
        }
    }
    assert!(rem.iter().all(|r| r.is_zero()), "cyclotomic division must be exact");
    quo
}

impl CycCtx {
    pub fn new(level: u32) -> CycCtx {
        assert!(level >= 1, "cyclotomic level must be positive");
        let phi_int = cyclotomic_poly(level);
        let degree = phi_int.len() - 1;
        let phi: Vec<BigRational> =
            phi_int.into_iter().map(BigRational::from_integer).collect();
        let table_len = (level as usize).max(2 * degree.max(1) - 1);
        let mut pow: Vec<Vec<BigRational>> = Vec::with_capacity(table_len);
        for j in 0..table_len {
            if j < degree {
                let mut v = vec![BigRational::zero(); degree.max(1)];
                if degree > 0 {
                    v[j] = BigRational::one();
                } else if j == 0 {
                    // degree 0 cannot happen for level >= 1 (φ(1) = 1), keep
                    // the arm for completeness.
                }
                pow.push(v);
            } else {
                // x^j = x * x^(j-1) mod Φ, reducing the overflow coefficient
                // with x^degree = -(phi[0] + ... + phi[degree-1] x^(degree-1)).
                let prev = &pow[j - 1];
                let mut v = vec![BigRational::zero(); degree];
                let lead = prev[degree - 1].clone();
                for i in 1..degree {
                    v[i] = prev[i - 1].clone();
                }
                if !lead.is_zero() {
                    for i in 0..degree {
                        v[i] -= &lead * &phi[i];
                    }
                }
                pow.push(v);
            }
        }
        CycCtx { level, degree, phi, pow }
    }

    pub fn zero(&self) -> CycQ {
        CycQ(vec![BigRational::zero(); self.degree])
    }

    pub fn one(&self) -> CycQ {
        self.root(0)
    }

    /// ζ_L^k, any integer k.
    pub fn root(&self, k: i64) -> CycQ {
        let j = k.rem_euclid(self.level as i64) as usize;
        CycQ(self.pow[j].clone())
    }

    /// e^{2πi t} for t in Q/Z, exact when the denominator divides the level.
    pub fn from_tor(&self, t: Tor) -> CycQ {
        let den = t.denom();
        assert!(
            self.level as i64 % den == 0,
            "torus value {t} is not an order-{} root of unity",
            self.level
        );
        self.root(t.numer() * (self.level as i64 / den))
    }

    pub fn scalar(&self, q: BigRational) -> CycQ {
        let mut v = self.zero();
        v.0[0] = q;
        v
    }

    pub fn from_int(&self, n: i64) -> CycQ {
        self.scalar(BigRational::from_integer(BigInt::from(n)))
    }

    pub fn add(&self, a: &CycQ, b: &CycQ) -> CycQ {
        CycQ(a.0.iter().zip(&b.0).map(|(x, y)| x + y).collect())
    }

    pub fn sub(&self, a: &CycQ, b: &CycQ) -> CycQ {
        CycQ(a.0.iter().zip(&b.0).map(|(x, y)| x - y).collect())
    }

    pub fn neg(&self, a: &CycQ) -> CycQ {
        CycQ(a.0.iter().map(|x| -x).collect())
    }

    pub fn mul(&self, a: &CycQ, b: &CycQ) -> CycQ {
        let mut raw = vec![BigRational::zero(); 2 * self.degree - 1];
        for (i, ai) in a.0.iter().enumerate() {
            if ai.is_zero() {
                continue;
            }
            for (j, bj) in b.0.iter().enumerate() {
                if bj.is_zero() {
                    continue;
                }
                raw[i + j] += ai * bj;
            }
        }
        let mut out = self.zero();
        for (j, c) in raw.into_iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            for (i, p) in self.pow[j].iter().enumerate() {
                out.0[i] += &c * p;
            }
        }
        out
    }

    pub fn scale(&self, q: &BigRational, a: &CycQ) -> CycQ {
        CycQ(a.0.iter().map(|x| x * q).collect())
    }

    /// Complex conjugation, i.e. the field automorphism ζ ↦ ζ^{-1}.
    pub fn conj(&self, a: &CycQ) -> CycQ {
        let mut out = self.zero();
        for (j, c) in a.0.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let k = (self.level as usize - j % self.level as usize) % self.level as usize;
            for (i, p) in self.pow[k].iter().enumerate() {
                out.0[i] += c * p;
            }
        }
        out
    }

    /// Field inverse via the extended Euclidean algorithm in Q[x] against
    /// Φ_L. None exactly when the input is zero.
    pub fn inv(&self, a: &CycQ) -> Option<CycQ> {
        if a.is_zero() {
            return None;
        }
        // Invariants: r0 = s0*a mod Φ, r1 = s1*a mod Φ (t-coefficients of Φ
        // are never needed).
        let mut r0 = self.phi.clone();
        let mut r1 = trim(&a.0);
        let mut s0 = vec![BigRational::zero()];
        let mut s1 = vec![BigRational::one()];
        while !is_zero_poly(&r1) {
            let (q, r) = poly_divmod(&r0, &r1);
            let s = poly_sub(&s0, &poly_mul(&q, &s1));
            r0 = r1;
            r1 = r;
            s0 = s1;
            s1 = s;
        }
        // r0 is a nonzero constant multiple of gcd(a, Φ) = 1 since Φ_L is
        // irreducible over Q and deg a < deg Φ.
        assert!(r0.len() == 1 && !r0[0].is_zero(), "cyclotomic polynomial must be irreducible");
        let c = r0[0].clone();
        let mut out = self.zero();
        for (i, s) in s0.iter().enumerate() {
            out.0[i] = s / &c;
        }
        let check = self.mul(a, &out);
        assert!(check == self.one(), "inverse certificate failed");
        Some(out)
    }

    /// Numeric embedding at the principal root e^{2πi/L}: (re, im).
    pub fn to_complex(&self, a: &CycQ) -> (f64, f64) {
        let mut re = 0.0;
        let mut im = 0.0;
        for (j, c) in a.0.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let cf = rational_to_f64(c);
            let ang = 2.0 * std::f64::consts::PI * j as f64 / self.level as f64;
            re += cf * ang.cos();
            im += cf * ang.sin();
        }
        (re, im)
    }
}

pub fn rational_to_f64(q: &BigRational) -> f64 {
    // Good enough for certificates: exact for the small numbers we meet,
    // graceful for large ones.
    let n = q.numer();
    let d = q.denom();
    let fit = |b: &BigInt| -> f64 {
        let s = b.to_string();
        s.parse::<f64>().unwrap_or(if b.is_negative() { f64::MIN } else { f64::MAX })
    };
    fit(n) / fit(d)
}

fn trim(p: &[BigRational]) -> Vec<BigRational> {
    let mut v = p.to_vec();
    while v.len() > 1 && v.last().is_some_and(|c| c.is_zero()) {
        v.pop();
    }
    v
}

fn is_zero_poly(p: &[BigRational]) -> bool {
    p.iter().all(|c| c.is_zero())
}

fn poly_sub(a: &[BigRational], b: &[BigRational]) -> Vec<BigRational> {
    let mut out = vec![BigRational::zero(); a.len().max(b.len())];
    for (i, x) in a.iter().enumerate() {
        out[i] += x;
    }
    for (i, x) in b.iter().enumerate() {
        out[i] -= x;
    }
    trim(&out)
}

fn poly_mul(a: &[BigRational], b: &[BigRational]) -> Vec<BigRational> {
    if is_zero_poly(a) || is_zero_poly(b) {
        return vec![BigRational::zero()];
    }
    let mut out = vec![BigRational::zero(); a.len() + b.len() - 1];
    for (i, ai) in a.iter().enumerate() {
        for (j, bj) in b.iter().enumerate() {
            out[i + j] += ai * bj;
        }
    }
    trim(&out)
}

fn poly_divmod(a: &[BigRational], b: &[BigRational]) -> (Vec<BigRational>, Vec<BigRational>) {
    let b = trim(b);
    let db = b.len() - 1;
    let mut rem = trim(a);
    if rem.len() <= db && !(rem.len() == db + 1) {
        return (vec![BigRational::zero()], rem);
    }
    if rem.len() < b.len() {
        return (vec![BigRational::zero()], rem);
    }
    let mut quo = vec![BigRational::zero(); rem.len() - db];
    let lead = b[db].clone();
    for k in (0..quo.len()).rev() {
        let c = &rem[k + db] / &lead;
        quo[k] = c.clone();
        if c.is_zero() {
            continue;
        }
        for (i, bi) in b.iter().enumerate() {
            let sub = bi * &c;
            rem[k + i] -= sub;
        }
    }
    (trim(&quo), trim(&rem))
}
