//! Exact arithmetic in cyclotomic fields Q(ζ_m).
//!
//! Elements are kept as sparse combinations of powers of ζ_m; equality and
//! rationality are decided on the canonical representative modulo Φ_m.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::arith::{kronecker, prime_divisors, qi, Q};
use crate::error::{Error, Result};

/// Coefficients of Φ_m, lowest degree first.
pub fn cyclotomic_poly(m: u32) -> Vec<i64> {
    // Φ_m = Π_{d|m} (x^d − 1)^{μ(m/d)}.
    let mut num = vec![1i64];
    let mut den = vec![1i64];
    for d in 1..=m {
        if !m.is_multiple_of(d) {
            continue;
        }
        let mu = moebius(m / d);
        if mu == 0 {
            continue;
        }
        let mut f = vec![0i64; d as usize + 1];
        f[0] = -1;
        f[d as usize] = 1;
        if mu == 1 {
            num = poly_mul(&num, &f);
        } else {
            den = poly_mul(&den, &f);
        }
    }
    poly_div_exact(&num, &den)
}

fn moebius(n: u32) -> i32 {
    let ps = prime_divisors(n as i64);
    for &p in &ps {
        if (n as u64).is_multiple_of(p * p) {
            return 0;
        }
    }
    if ps.len().is_multiple_of(2) {
        1
    } else {
        -1
    }
}

fn poly_mul(a: &[i64], b: &[i64]) -> Vec<i64> {
    let mut out = vec![0i64; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn poly_div_exact(a: &[i64], b: &[i64]) -> Vec<i64> {
    let mut r = a.to_vec();
    let db = b.len() - 1;
    let lead = b[db];
    let mut qt = vec![0i64; a.len() - db];
    for i in (0..qt.len()).rev() {
        let c = r[i + db] / lead;
        qt[i] = c;
        for (j, y) in b.iter().enumerate() {
            r[i + j] -= c * y;
        }
    }
    debug_assert!(r.iter().all(|&x| x == 0));
    qt
}

pub fn euler_phi(m: u32) -> u32 {
    prime_divisors(m as i64)
        .into_iter()
        .fold(m, |acc, p| acc / p as u32 * (p as u32 - 1))
}

/// Σ c_k ζ_m^k.
#[derive(Clone, Debug)]
pub struct Cyclo {
    pub m: u32,
    pub terms: BTreeMap<u32, Q>,
}

impl Cyclo {
    pub fn zero(m: u32) -> Self {
        Cyclo {
            m,
            terms: BTreeMap::new(),
        }
    }

    pub fn from_q(m: u32, x: Q) -> Self {
        let mut c = Cyclo::zero(m);
        c.add_term(0, x);
        c
    }

    pub fn one(m: u32) -> Self {
        Cyclo::from_q(m, Q::one())
    }

    /// ζ_m^k.
    pub fn root(m: u32, k: i64) -> Self {
        let mut c = Cyclo::zero(m);
        c.add_term(k.rem_euclid(m as i64) as u32, Q::one());
        c
    }

    /// e(x) = exp(2πi x) for rational x with denominator dividing m.
    pub fn e(m: u32, x: &Q) -> Result<Self> {
        let k = x * qi(m as i64);
        if !k.is_integer() {
            return Err(Error::Internal(format!("e({x}) is not in Q(ζ_{m})")));
        }
        Ok(Cyclo::root(
            m,
            (k.to_integer() % BigInt::from(m)).to_i64().unwrap(),
        ))
    }

    pub fn add_term(&mut self, k: u32, c: Q) {
        if c.is_zero() {
            return;
        }
        let k = k % self.m;
        let e = self.terms.entry(k).or_insert_with(Q::zero);
        *e += c;
        if e.is_zero() {
            self.terms.remove(&k);
        }
    }

    pub fn scale(&self, s: &Q) -> Self {
        if s.is_zero() {
            return Cyclo::zero(self.m);
        }
        Cyclo {
            m: self.m,
            terms: self.terms.iter().map(|(k, c)| (*k, c * s)).collect(),
        }
    }

    /// Multiplication by ζ_m^k.
    pub fn rotate(&self, k: i64) -> Self {
        let m = self.m as i64;
        Cyclo {
            m: self.m,
            terms: self
                .terms
                .iter()
                .map(|(e, c)| (((*e as i64 + k).rem_euclid(m)) as u32, c.clone()))
                .collect(),
        }
    }

    /// Complex conjugate.
    pub fn conj(&self) -> Self {
        let m = self.m;
        Cyclo {
            m,
            terms: self
                .terms
                .iter()
                .map(|(e, c)| ((m - e) % m, c.clone()))
                .collect(),
        }
    }

    pub fn pow(&self, mut e: u32) -> Self {
        let mut out = Cyclo::one(self.m);
        let mut b = self.clone();
        while e > 0 {
            if e & 1 == 1 {
                out = &out * &b;
            }
            b = &b * &b;
            e >>= 1;
        }
        out
    }

    /// Embeds into Q(ζ_m2) for m | m2.
    pub fn lift(&self, m2: u32) -> Self {
        assert!(m2.is_multiple_of(self.m), "{} does not divide {m2}", self.m);
        let f = m2 / self.m;
        Cyclo {
            m: m2,
            terms: self.terms.iter().map(|(e, c)| (e * f, c.clone())).collect(),
        }
    }

    /// Canonical coordinates in the power basis 1, ζ, …, ζ^{φ(m)−1}.
    pub fn canonical(&self) -> Vec<Q> {
        let m = self.m as usize;
        let phi = euler_phi(self.m) as usize;
        let den = self
            .terms
            .values()
            .fold(BigInt::one(), |acc, c| acc.lcm(c.denom()));
        let mut v = vec![BigInt::zero(); m];
        for (e, c) in &self.terms {
            v[*e as usize] += c.numer() * (&den / c.denom());
        }
        let poly = cyclotomic_poly(self.m);
        for e in (phi..m).rev() {
            if v[e].is_zero() {
                continue;
            }
            let t = std::mem::take(&mut v[e]);
            for (i, p) in poly.iter().enumerate().take(phi) {
                if *p != 0 {
                    v[e - phi + i] -= &t * p;
                }
            }
        }
        let den = Q::from_integer(den);
        v.truncate(phi);
        v.into_iter().map(|x| Q::from_integer(x) / &den).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty() || self.canonical().iter().all(|c| c.is_zero())
    }

    /// The rational value, if the element lies in Q.
    pub fn to_rational(&self) -> Option<Q> {
        let c = self.canonical();
        if c.iter().skip(1).all(|x| x.is_zero()) {
            Some(c.into_iter().next().unwrap_or_else(Q::zero))
        } else {
            None
        }
    }

    pub fn to_complex(&self) -> Complex64 {
        let m = self.m as f64;
        self.terms
            .iter()
            .map(|(e, c)| {
                let a = 2.0 * std::f64::consts::PI * *e as f64 / m;
                Complex64::new(a.cos(), a.sin()) * c.to_f64().unwrap_or(f64::NAN)
            })
            .sum()
    }

    /// √x for positive rational x whose squarefree part has all primes
    /// dividing m (and 8 | m if 2 is among them).
    pub fn sqrt_rational(m: u32, x: &Q) -> Result<Self> {
        if !x.is_positive() {
            return Err(Error::Argument(format!("√{x} is not real")));
        }
        // x = s² · n with n squarefree.
        let mut s = Q::one();
        let mut n: u64 = 1;
        for (part, sign) in [(x.numer().clone(), 1i32), (x.denom().clone(), -1)] {
            let v = part
                .to_u128()
                .ok_or_else(|| Error::Argument("radicand too large".into()))?;
            for (p, e) in crate::arith::factor(v) {
                let p = p as u64;
                let half = Q::from_integer(BigInt::from(p)).pow((e / 2) as i32);
                if sign > 0 {
                    s *= half;
                } else {
                    s /= half;
                }
                if e % 2 == 1 {
                    n *= p;
                    if sign < 0 {
                        s /= qi(p as i64);
                    }
                }
            }
        }
        let mut out = Cyclo::from_q(m, s);
        for p in prime_divisors(n as i64) {
            out = &out * &Cyclo::sqrt_prime(m, p)?;
        }
        Ok(out)
    }

    /// √p as an element of Q(ζ_m).
    pub fn sqrt_prime(m: u32, p: u64) -> Result<Self> {
        if p == 2 {
            if !m.is_multiple_of(8) {
                return Err(Error::Internal(format!("√2 ∉ Q(ζ_{m})")));
            }
            return Ok(&Cyclo::root(m, (m / 8) as i64) + &Cyclo::root(m, -((m / 8) as i64)));
        }
        if !(m as u64).is_multiple_of(p) || (p % 4 == 3 && !m.is_multiple_of(4)) {
            return Err(Error::Internal(format!("√{p} ∉ Q(ζ_{m})")));
        }
        let step = (m as u64 / p) as i64;
        let mut g = Cyclo::zero(m);
        for a in 1..p as i64 {
            g.add_term((step * a) as u32, qi(kronecker(a, p as i64) as i64));
        }
        if p % 4 == 1 {
            Ok(g)
        } else {
            // g = i√p.
            Ok(&Cyclo::root(m, -((m / 4) as i64)) * &g)
        }
    }
}

impl PartialEq for Cyclo {
    fn eq(&self, other: &Self) -> bool {
        if self.m != other.m {
            let l = self.m.lcm(&other.m);
            return self.lift(l) == other.lift(l);
        }
        (self - other).is_zero()
    }
}

impl<'a> Add<&'a Cyclo> for &'a Cyclo {
    type Output = Cyclo;
    fn add(self, o: &Cyclo) -> Cyclo {
        assert_eq!(self.m, o.m);
        let mut r = self.clone();
        for (k, c) in &o.terms {
            r.add_term(*k, c.clone());
        }
        r
    }
}

impl<'a> Sub<&'a Cyclo> for &'a Cyclo {
    type Output = Cyclo;
    fn sub(self, o: &Cyclo) -> Cyclo {
        assert_eq!(self.m, o.m);
        let mut r = self.clone();
        for (k, c) in &o.terms {
            r.add_term(*k, -c.clone());
        }
        r
    }
}

impl Neg for &Cyclo {
    type Output = Cyclo;
    fn neg(self) -> Cyclo {
        self.scale(&-Q::one())
    }
}

impl<'a> Mul<&'a Cyclo> for &'a Cyclo {
    type Output = Cyclo;
    fn mul(self, o: &Cyclo) -> Cyclo {
        assert_eq!(self.m, o.m);
        let mut r = Cyclo::zero(self.m);
        for (a, x) in &self.terms {
            for (b, y) in &o.terms {
                r.add_term((a + b) % self.m, x * y);
            }
        }
        r
    }
}

impl fmt::Display for Cyclo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(x) = self.to_rational() {
            return write!(f, "{x}");
        }
        let parts: Vec<String> = self
            .canonical()
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(k, c)| format!("({c})ζ{}^{k}", self.m))
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

/// Dense element of the group ring Z[C_m]; the image in Q(ζ_m) is Σ c_k ζ^k.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ZCyc {
    pub c: Vec<i128>,
}

impl ZCyc {
    pub fn zero(m: u32) -> Self {
        ZCyc {
            c: vec![0; m as usize],
        }
    }

    pub fn root(m: u32, k: i64) -> Self {
        let mut z = ZCyc::zero(m);
        z.c[k.rem_euclid(m as i64) as usize] = 1;
        z
    }

    pub fn m(&self) -> u32 {
        self.c.len() as u32
    }

    /// self += ζ^k · o.
    pub fn add_rotated(&mut self, o: &ZCyc, k: i64) {
        let m = self.c.len() as i64;
        let k = k.rem_euclid(m) as usize;
        let n = self.c.len();
        for (i, x) in o.c.iter().enumerate() {
            if *x != 0 {
                self.c[(i + k) % n] += x;
            }
        }
    }

    pub fn rotated(&self, k: i64) -> ZCyc {
        let mut z = ZCyc::zero(self.m());
        z.add_rotated(self, k);
        z
    }

    /// Rewrites the element in the power basis 1, ζ, …, ζ^{φ(m)−1}; the image
    /// in Q(ζ_m) is unchanged and entries stay small.
    pub fn reduce(&mut self) {
        let m = self.c.len();
        let phi = euler_phi(m as u32) as usize;
        if phi == m {
            return;
        }
        let poly = cyclotomic_poly(m as u32);
        for e in (phi..m).rev() {
            let t = std::mem::take(&mut self.c[e]);
            if t == 0 {
                continue;
            }
            for (i, p) in poly.iter().enumerate().take(phi) {
                if *p != 0 {
                    self.c[e - phi + i] -= t * *p as i128;
                }
            }
        }
    }

    pub fn mul(&self, o: &ZCyc) -> ZCyc {
        let n = self.c.len();
        let mut z = ZCyc::zero(n as u32);
        for (i, x) in self.c.iter().enumerate() {
            if *x == 0 {
                continue;
            }
            for (j, y) in o.c.iter().enumerate() {
                z.c[(i + j) % n] += x * y;
            }
        }
        z
    }

    pub fn scale(&self, s: i128) -> ZCyc {
        ZCyc {
            c: self.c.iter().map(|x| x * s).collect(),
        }
    }

    /// self += s·x^k·o, or None on i128 overflow.
    pub fn checked_add_scaled_rotated(&mut self, o: &ZCyc, s: i128, k: i64) -> Option<()> {
        let n = self.c.len();
        let k = k.rem_euclid(n as i64) as usize;
        for (i, x) in o.c.iter().enumerate() {
            if *x != 0 {
                let slot = &mut self.c[(i + k) % n];
                *slot = slot.checked_add(x.checked_mul(s)?)?;
            }
        }
        Some(())
    }

    pub fn conj(&self) -> ZCyc {
        let n = self.c.len();
        let mut z = ZCyc::zero(n as u32);
        for (i, x) in self.c.iter().enumerate() {
            z.c[(n - i) % n] = *x;
        }
        z
    }

    pub fn is_zero_in_field(&self) -> bool {
        self.to_cyclo().is_zero()
    }

    pub fn to_cyclo(&self) -> Cyclo {
        let m = self.m();
        let mut c = Cyclo::zero(m);
        for (i, x) in self.c.iter().enumerate() {
            if *x != 0 {
                c.add_term(i as u32, Q::from_integer(BigInt::from(*x)));
            }
        }
        c
    }
}
