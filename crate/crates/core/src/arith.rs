//! Integer and rational utilities: Kronecker symbols, factorization, binary
//! quadratic forms and class groups, CM orbit counts, and the factored
//! representations used for reporting norms.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Exact rationals used throughout the crate.
pub type Q = BigRational;

/// Shorthand for the rational n/d.
pub fn q(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

/// The integer n as a rational.
pub fn qi(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

/// Converts an integral rational to i64.
pub fn q_to_i64(x: &Q) -> Option<i64> {
    if x.is_integer() {
        x.to_integer().to_i64()
    } else {
        None
    }
}

/// Nearest f64 to a rational.
pub fn q_to_f64(x: &Q) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// p-adic valuation of a nonzero rational.
pub fn ord_p(x: &Q, p: u64) -> i64 {
    assert!(!x.is_zero(), "valuation of zero");
    let bp = BigInt::from(p);
    let mut v = 0i64;
    let mut n = x.numer().abs();
    while (&n % &bp).is_zero() {
        n /= &bp;
        v += 1;
    }
    let mut d = x.denom().abs();
    while (&d % &bp).is_zero() {
        d /= &bp;
        v -= 1;
    }
    v
}

/// p-adic valuation of a nonzero integer.
pub fn ord_p_int(mut n: i128, p: u64) -> u32 {
    assert!(n != 0, "valuation of zero");
    let p = p as i128;
    let mut v = 0;
    while n % p == 0 {
        n /= p;
        v += 1;
    }
    v
}

/// Kronecker symbol (a/n), the completely multiplicative extension of the
/// Legendre symbol in n. For a discriminant a this is the quadratic character
/// of Q(√a).
pub fn kronecker(a: i64, n: i64) -> i32 {
    let mut a = a as i128;
    let mut n = n as i128;
    if n == 0 {
        return if a == 1 || a == -1 { 1 } else { 0 };
    }
    let mut result = 1i32;
    if n < 0 {
        n = -n;
        if a < 0 {
            result = -result;
        }
    }
    let mut v = 0;
    while n % 2 == 0 {
        n /= 2;
        v += 1;
    }
    if v > 0 {
        if a % 2 == 0 {
            return 0;
        }
        if v % 2 == 1 {
            let r = a.rem_euclid(8);
            if r == 3 || r == 5 {
                result = -result;
            }
        }
    }
    // Jacobi symbol (a/n) for odd positive n.
    a = a.rem_euclid(n);
    while a != 0 {
        while a % 2 == 0 {
            a /= 2;
            let r = n % 8;
            if r == 3 || r == 5 {
                result = -result;
            }
        }
        std::mem::swap(&mut a, &mut n);
        if a % 4 == 3 && n % 4 == 3 {
            result = -result;
        }
        a %= n;
    }
    if n == 1 {
        result
    } else {
        0
    }
}

fn mul_mod(a: u128, b: u128, m: u128) -> u128 {
    if m <= u64::MAX as u128 {
        return (a % m) * (b % m) % m;
    }
    let r = (BigUint::from(a) * BigUint::from(b)) % BigUint::from(m);
    r.to_u128().unwrap_or(0)
}

fn pow_mod(mut b: u128, mut e: u128, m: u128) -> u128 {
    let mut r = 1u128 % m;
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

const MR_BASES: [u128; 13] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41];

/// Miller–Rabin with the first 13 prime bases, deterministic below 3.3·10^24.
pub fn is_prime(n: u128) -> bool {
    if n < 2 {
        return false;
    }
    for &p in &MR_BASES {
        if n == p {
            return true;
        }
        if n.is_multiple_of(p) {
            return false;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d.is_multiple_of(2) {
        d /= 2;
        s += 1;
    }
    'outer: for &a in &MR_BASES {
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

fn pollard_brent(n: u128) -> u128 {
    let mut c = 1u128;
    loop {
        let f = |x: u128| (mul_mod(x, x, n) + c) % n;
        let (mut x, mut y, mut g) = (2u128, 2u128, 1u128);
        while g == 1 {
            x = f(x);
            y = f(f(y));
            let diff = x.abs_diff(y);
            g = diff.gcd(&n);
        }
        if g != n {
            return g;
        }
        c += 1;
    }
}

/// Prime factorization of n > 0 by trial division, with Miller–Rabin and
/// Pollard–Brent for large cofactors.
pub fn factor(mut n: u128) -> Vec<(u128, u32)> {
    let mut out: BTreeMap<u128, u32> = BTreeMap::new();
    if n <= 1 {
        return vec![];
    }
    let mut p = 2u128;
    while p < 10_000 && p * p <= n {
        while n.is_multiple_of(p) {
            *out.entry(p).or_insert(0) += 1;
            n /= p;
        }
        p += if p == 2 { 1 } else { 2 };
    }
    let mut stack = vec![n];
    while let Some(m) = stack.pop() {
        if m == 1 {
            continue;
        }
        if is_prime(m) {
            *out.entry(m).or_insert(0) += 1;
        } else {
            let d = pollard_brent(m);
            stack.push(d);
            stack.push(m / d);
        }
    }
    out.into_iter().collect()
}

/// Distinct prime divisors of |n|.
pub fn prime_divisors(n: i64) -> Vec<u64> {
    factor(n.unsigned_abs() as u128)
        .into_iter()
        .map(|(p, _)| p as u64)
        .collect()
}

/// Positive divisors of n, sorted.
pub fn divisors(n: u64) -> Vec<u64> {
    let mut ds = vec![1u64];
    for (p, e) in factor(n as u128) {
        let p = p as u64;
        let cur = ds.clone();
        let mut pk = 1u64;
        for _ in 0..e {
            pk *= p;
            ds.extend(cur.iter().map(|d| d * pk));
        }
    }
    ds.sort_unstable();
    ds
}

/// Squarefree test.
pub fn is_squarefree(n: u64) -> bool {
    factor(n as u128).iter().all(|&(_, e)| e == 1)
}

/// Is `d` a fundamental discriminant?
pub fn is_fundamental(d: i64) -> bool {
    if d.rem_euclid(4) == 1 {
        d != 1 && is_squarefree(d.unsigned_abs())
    } else if d.rem_euclid(4) == 0 {
        let m = d / 4;
        let r = m.rem_euclid(4);
        (r == 2 || r == 3) && is_squarefree(m.unsigned_abs())
    } else {
        false
    }
}

/// Writes a negative discriminant as n²·Δ with Δ fundamental.
pub fn fundamental_part(disc: i64) -> Result<(i64, u64)> {
    if disc >= 0 || !(disc.rem_euclid(4) == 0 || disc.rem_euclid(4) == 1) {
        return Err(Error::Argument(format!(
            "{disc} is not a negative discriminant"
        )));
    }
    let mut core: u64 = 1;
    for (p, e) in factor(disc.unsigned_abs() as u128) {
        let p = p as u64;
        if e % 2 == 1 {
            core *= p;
        }
    }
    let core = -(core as i64);
    let fund = if core.rem_euclid(4) == 1 {
        core
    } else {
        4 * core
    };
    let n2 = disc / fund;
    let n = (n2 as f64).sqrt().round() as u64;
    if (n * n) as i64 != n2 {
        return Err(Error::Internal(format!("bad conductor for {disc}")));
    }
    Ok((fund, n))
}

/// A primitive positive-definite binary quadratic form ax² + bxy + cy².
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Form {
    pub a: i64,
    pub b: i64,
    pub c: i64,
}

impl Form {
    pub fn disc(&self) -> i64 {
        self.b * self.b - 4 * self.a * self.c
    }

    pub fn is_reduced(&self) -> bool {
        let (a, b, c) = (self.a, self.b, self.c);
        b.abs() <= a && a <= c && !((b.abs() == a || a == c) && b < 0)
    }

    /// Gauss reduction to the unique reduced representative of the class.
    pub fn reduce(self) -> Form {
        let d = self.disc() as i128;
        let (mut a, mut b, mut c) = (self.a as i128, self.b as i128, self.c as i128);
        loop {
            if !(-a < b && b <= a) {
                let r = Integer::div_floor(&(a - b), &(2 * a));
                b += 2 * a * r;
                c = (b * b - d) / (4 * a);
            }
            if a > c {
                std::mem::swap(&mut a, &mut c);
                b = -b;
                continue;
            }
            if a == c && b < 0 {
                b = -b;
            }
            break;
        }
        Form {
            a: a as i64,
            b: b as i64,
            c: c as i64,
        }
    }

    pub fn identity(disc: i64) -> Form {
        let b = disc.rem_euclid(2);
        Form {
            a: 1,
            b,
            c: (b * b - disc) / 4,
        }
    }

    pub fn inverse(&self) -> Form {
        Form {
            a: self.a,
            b: -self.b,
            c: self.c,
        }
        .reduce()
    }

    /// Dirichlet composition (Shanks' formulation), followed by reduction.
    pub fn compose(&self, other: &Form) -> Form {
        let (mut f1, mut f2) = (*self, *other);
        if f1.a > f2.a {
            std::mem::swap(&mut f1, &mut f2);
        }
        let (a1, b1, _c1) = (f1.a as i128, f1.b as i128, f1.c as i128);
        let (a2, b2, c2) = (f2.a as i128, f2.b as i128, f2.c as i128);
        let s = (b1 + b2) / 2;
        let n = b2 - s;
        let (y1, d) = if a2 % a1 == 0 {
            (0i128, a1)
        } else {
            let e = a2.extended_gcd(&a1);
            (e.x, e.gcd)
        };
        let (x2, y2, d1) = if s % d == 0 {
            (0i128, -1i128, d)
        } else {
            let e = s.extended_gcd(&d);
            (e.x, -e.y, e.gcd)
        };
        let v1 = a1 / d1;
        let v2 = a2 / d1;
        let r = (y1 * y2 * n - x2 * c2).rem_euclid(v1);
        let b3 = b2 + 2 * v2 * r;
        let a3 = v1 * v2;
        let c3 = (c2 * d1 + r * (b2 + v2 * r)) / v1;
        Form {
            a: a3 as i64,
            b: b3 as i64,
            c: c3 as i64,
        }
        .reduce()
    }

    /// Reduced form of the invertible ideal class of norm p (p must be
    /// nonsplit-or-split with (disc/p) ≠ -1 and p not dividing the conductor).
    pub fn prime_form(disc: i64, p: u64) -> Option<Form> {
        let p = p as i64;
        for b in 0..(2 * p) {
            if (b - disc).rem_euclid(2) != 0 {
                continue;
            }
            if (b * b - disc).rem_euclid(4 * p) == 0 {
                let c = (b * b - disc) / (4 * p);
                let f = Form { a: p, b, c };
                if f.a.gcd(&f.b).gcd(&f.c) == 1 {
                    return Some(f.reduce());
                }
            }
        }
        None
    }
}

fn check_disc(disc: i64) -> Result<()> {
    if disc >= 0 || !(disc.rem_euclid(4) == 0 || disc.rem_euclid(4) == 1) {
        return Err(Error::Argument(format!(
            "{disc} is not a negative discriminant (≡ 0, 1 mod 4)"
        )));
    }
    Ok(())
}

/// All primitive reduced forms of discriminant `disc`.
pub fn reduced_forms(disc: i64) -> Result<Vec<Form>> {
    check_disc(disc)?;
    let mut out = Vec::new();
    let mut a = 1i64;
    while 3 * a * a <= -disc {
        for b in -a + 1..=a {
            if (b * b - disc) % (4 * a) != 0 {
                continue;
            }
            let c = (b * b - disc) / (4 * a);
            let f = Form { a, b, c };
            if f.is_reduced() && a.gcd(&b).gcd(&c) == 1 {
                out.push(f);
            }
        }
        a += 1;
    }
    Ok(out)
}

/// Class number h(disc) of the order of discriminant `disc`, counted as the
/// number of primitive reduced forms.
pub fn class_number(disc: i64) -> Result<u64> {
    Ok(reduced_forms(disc)?.len() as u64)
}

/// The subgroup of the form class group generated by `gens`.
pub fn generated_subgroup(disc: i64, gens: &[Form]) -> BTreeSet<Form> {
    let id = Form::identity(disc);
    let mut group: BTreeSet<Form> = BTreeSet::from([id]);
    let mut frontier = vec![id];
    while let Some(x) = frontier.pop() {
        for g in gens {
            let y = x.compose(g);
            if group.insert(y) {
                frontier.push(y);
            }
        }
    }
    group
}

/// Class number computed as the size of the group generated by the prime
/// forms of norm up to max(√(|disc|/3), 6 log²|disc|), closed under
/// composition. Independent of the reduced-form count. The square-root bound
/// alone does not suffice for non-maximal orders (for −9·163 every prime below
/// it is inert); the logarithmic term is Bach's bound, which is conditional on
/// GRH.
pub fn class_number_by_composition(disc: i64) -> Result<u64> {
    check_disc(disc)?;
    let abs = (-disc) as f64;
    let bound = (abs / 3.0).sqrt().max(6.0 * abs.ln().powi(2)) as u64 + 1;
    let mut gens = Vec::new();
    for p in 2..=bound {
        if !is_prime(p as u128) {
            continue;
        }
        if let Some(f) = Form::prime_form(disc, p) {
            gens.push(f);
        }
    }
    Ok(generated_subgroup(disc, &gens).len() as u64)
}

/// Number of units of the order: 6 for −3, 4 for −4, otherwise 2.
pub fn unit_count(disc: i64) -> u64 {
    match disc {
        -3 => 6,
        -4 => 4,
        _ => 2,
    }
}

/// The decomposition −4t = n²Δ with Δ fundamental.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DiscSplit {
    #[serde(serialize_with = "ser_q")]
    pub t: Q,
    pub disc: i64,
    pub n: u64,
}

pub fn ser_q<S: serde::Serializer>(x: &Q, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&x.to_string())
}

/// Splits −4t as n²Δ.
pub fn disc_split(t: &Q) -> Result<DiscSplit> {
    if !t.is_positive() {
        return Err(Error::Argument(format!("t = {t} must be positive")));
    }
    let four_t = t * qi(4);
    let m = q_to_i64(&four_t)
        .ok_or_else(|| Error::Argument(format!("4t = {four_t} is not integral")))?;
    let (disc, n) = fundamental_part(-m)?;
    Ok(DiscSplit {
        t: t.clone(),
        disc,
        n,
    })
}

/// δ(Δ0, D): the number of primes dividing gcd(Δ0, D), less one when Δ0 | D.
pub fn delta_ram(delta0: u64, d: u64) -> u32 {
    if delta0 <= 1 {
        return 0;
    }
    let g = delta0.gcd(&d);
    let count = prime_divisors(g as i64).len() as u32;
    if d.is_multiple_of(delta0) {
        count.saturating_sub(1)
    } else {
        count
    }
}

/// Product of the primes ramified in Q(√Δ).
pub fn ramified_product(disc: i64) -> u64 {
    prime_divisors(disc).into_iter().product()
}

fn check_nonsplit(disc: i64, d: u64) -> Result<()> {
    for p in prime_divisors(d as i64) {
        if kronecker(disc, p as i64) == 1 {
            return Err(Error::Domain(format!(
                "{p} splits in Q(√{disc}): no embedding into the order of discriminant {d}"
            )));
        }
    }
    Ok(())
}

/// Number of Γ*-orbits of vectors of norm t in L. Conductors sharing a prime
/// with D do not occur, since the local maximal order at a ramified prime
/// contains every integral element of the local field.
pub fn orbit_count(t: &Q, d: u64) -> Result<Q> {
    let split = disc_split(t)?;
    check_nonsplit(split.disc, d)?;
    let mut sum = 0u64;
    for c in divisors(split.n) {
        if c.gcd(&d) != 1 {
            continue;
        }
        sum += class_number(split.disc * (c * c) as i64)?;
    }
    let delta = delta_ram(ramified_product(split.disc), d);
    Ok(Q::new(BigInt::from(sum), BigInt::from(1u64 << delta)))
}

/// Degree 2·Σ_{c|n} h(c²Δ)/w(c²Δ)·Π_{p|D}(1 − χ_Δ(p)) of the CM 0-cycle of the
/// order of discriminant `disc` = n²Δ.
pub fn cycle_degree(disc: i64, d: u64) -> Result<Q> {
    let (fund, n) = fundamental_part(disc)?;
    check_nonsplit(fund, d)?;
    let mut s = Q::zero();
    for c in divisors(n) {
        let dc = fund * (c * c) as i64;
        s += q(class_number(dc)? as i64, unit_count(dc) as i64);
    }
    let mut prod = 1i64;
    for p in prime_divisors(d as i64) {
        prod *= 1 - kronecker(fund, p as i64) as i64;
    }
    Ok(s * qi(2 * prod))
}

/// Size of the Galois orbit of a CM point of discriminant `disc` on X*_D: the
/// class group of the order modulo the classes of the primes of D that ramify.
pub fn cm_orbit_size(disc: i64, d: u64) -> Result<u64> {
    let (fund, n) = fundamental_part(disc)?;
    check_nonsplit(fund, d)?;
    if n.gcd(&d) != 1 {
        return Err(Error::Domain(format!(
            "conductor {n} of {disc} shares a prime with {d}"
        )));
    }
    let h = class_number(disc)?;
    let gens: Vec<Form> = prime_divisors(d as i64)
        .into_iter()
        .filter(|&p| kronecker(fund, p as i64) == 0)
        .filter_map(|p| Form::prime_form(disc, p))
        .collect();
    let sub = generated_subgroup(disc, &gens).len() as u64;
    Ok(h / sub)
}

/// A signed integer as a map prime → exponent.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct FactoredInteger {
    pub sign: i8,
    pub factors: BTreeMap<u64, u32>,
}

impl FactoredInteger {
    pub fn one() -> Self {
        FactoredInteger {
            sign: 1,
            factors: BTreeMap::new(),
        }
    }

    pub fn from_i128(n: i128) -> Self {
        if n == 0 {
            return FactoredInteger {
                sign: 0,
                factors: BTreeMap::new(),
            };
        }
        let factors = factor(n.unsigned_abs())
            .into_iter()
            .map(|(p, e)| (p as u64, e))
            .collect();
        FactoredInteger {
            sign: if n < 0 { -1 } else { 1 },
            factors,
        }
    }

    pub fn to_bigint(&self) -> BigInt {
        let mut v = BigInt::from(self.sign);
        for (&p, &e) in &self.factors {
            v *= BigInt::from(p).pow(e);
        }
        v
    }
}

/// A signed rational as a pair of factored integers sharing no prime.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FactoredRational {
    pub numerator: FactoredInteger,
    pub denominator: FactoredInteger,
}

impl FactoredRational {
    pub fn one() -> Self {
        Self::from_exponents(1, &BTreeMap::new())
    }

    pub fn zero() -> Self {
        FactoredRational {
            numerator: FactoredInteger {
                sign: 0,
                factors: BTreeMap::new(),
            },
            denominator: FactoredInteger::one(),
        }
    }

    /// Builds sign·Π p^{e_p} from signed exponents.
    pub fn from_exponents(sign: i8, exps: &BTreeMap<u64, i64>) -> Self {
        let mut num = BTreeMap::new();
        let mut den = BTreeMap::new();
        for (&p, &e) in exps {
            if e > 0 {
                num.insert(p, e as u32);
            } else if e < 0 {
                den.insert(p, (-e) as u32);
            }
        }
        FactoredRational {
            numerator: FactoredInteger { sign, factors: num },
            denominator: FactoredInteger {
                sign: 1,
                factors: den,
            },
        }
    }

    /// Factors x; numerator and denominator must fit in i128.
    pub fn from_rational(x: &Q) -> Result<Self> {
        if x.is_zero() {
            return Ok(Self::zero());
        }
        let fits = |v: &BigInt| {
            v.to_i128()
                .ok_or_else(|| Error::Precision(format!("{v} exceeds i128; cannot factor")))
        };
        let num = FactoredInteger::from_i128(fits(x.numer())?);
        let mut den = FactoredInteger::from_i128(fits(x.denom())?);
        den.sign = 1;
        Ok(FactoredRational {
            numerator: num,
            denominator: den,
        })
    }

    pub fn sign(&self) -> i8 {
        self.numerator.sign
    }

    /// Signed exponent map.
    pub fn exponents(&self) -> BTreeMap<u64, i64> {
        let mut m: BTreeMap<u64, i64> = BTreeMap::new();
        for (&p, &e) in &self.numerator.factors {
            *m.entry(p).or_insert(0) += e as i64;
        }
        for (&p, &e) in &self.denominator.factors {
            *m.entry(p).or_insert(0) -= e as i64;
        }
        m.retain(|_, e| *e != 0);
        m
    }

    pub fn abs(&self) -> Self {
        let mut r = self.clone();
        if r.numerator.sign < 0 {
            r.numerator.sign = 1;
        }
        r
    }

    pub fn to_rational(&self) -> Q {
        Q::new(self.numerator.to_bigint(), self.denominator.to_bigint())
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut e = self.exponents();
        for (p, x) in other.exponents() {
            *e.entry(p).or_insert(0) += x;
        }
        e.retain(|_, x| *x != 0);
        Self::from_exponents(self.sign() * other.sign(), &e)
    }

    pub fn inv(&self) -> Self {
        let e = self.exponents().into_iter().map(|(p, x)| (p, -x)).collect();
        Self::from_exponents(self.sign(), &e)
    }

    /// Natural log of |x| as a combination of log p.
    pub fn log_abs(&self) -> LogCombination {
        let mut l = LogCombination::zero();
        for (p, e) in self.exponents() {
            l.add_term(p, qi(e));
        }
        l
    }
}

fn fmt_factors(f: &BTreeMap<u64, u32>) -> String {
    if f.is_empty() {
        return "1".into();
    }
    f.iter()
        .map(|(p, e)| format!("{p}^{e}"))
        .collect::<Vec<_>>()
        .join("*")
}

impl fmt::Display for FactoredRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.numerator.sign == 0 {
            return write!(f, "0");
        }
        if self.numerator.sign < 0 {
            write!(f, "-")?;
        }
        write!(f, "{}", fmt_factors(&self.numerator.factors))?;
        if !self.denominator.factors.is_empty() {
            write!(f, "/{}", fmt_factors(&self.denominator.factors))?;
        }
        Ok(())
    }
}

fn parse_factors(s: &str) -> Result<BTreeMap<u64, u32>> {
    let mut out = BTreeMap::new();
    if s == "1" {
        return Ok(out);
    }
    for part in s.split('*') {
        let (p, e) = match part.split_once('^') {
            Some((p, e)) => (p, e),
            None => (part, "1"),
        };
        let p: u64 = p
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad prime '{p}'")))?;
        let e: u32 = e
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad exponent '{e}'")))?;
        if !is_prime(p as u128) {
            return Err(Error::Parse(format!("{p} is not prime")));
        }
        if e == 0 {
            return Err(Error::Parse("zero exponent".into()));
        }
        if out.insert(p, e).is_some() {
            return Err(Error::Parse(format!("repeated prime {p}")));
        }
    }
    Ok(out)
}

impl FromStr for FactoredRational {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "0" {
            return Ok(Self::zero());
        }
        let (sign, body) = match s.strip_prefix('-') {
            Some(rest) => (-1i8, rest),
            None => (1i8, s),
        };
        let (n, d) = match body.split_once('/') {
            Some((n, d)) => (n, d),
            None => (body, "1"),
        };
        let num = parse_factors(n)?;
        let den = parse_factors(d)?;
        if num.keys().any(|p| den.contains_key(p)) {
            return Err(Error::Parse(format!("'{s}' is not in lowest terms")));
        }
        Ok(FactoredRational {
            numerator: FactoredInteger { sign, factors: num },
            denominator: FactoredInteger {
                sign: 1,
                factors: den,
            },
        })
    }
}

#[derive(Serialize, Deserialize)]
struct FactoredRationalJson {
    sign: i8,
    num: BTreeMap<u64, u32>,
    den: BTreeMap<u64, u32>,
}

impl Serialize for FactoredRational {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        FactoredRationalJson {
            sign: self.numerator.sign,
            num: self.numerator.factors.clone(),
            den: self.denominator.factors.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for FactoredRational {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let j = FactoredRationalJson::deserialize(d)?;
        if !(-1..=1).contains(&j.sign) {
            return Err(serde::de::Error::custom("sign must be -1, 0 or 1"));
        }
        Ok(FactoredRational {
            numerator: FactoredInteger {
                sign: j.sign,
                factors: j.num,
            },
            denominator: FactoredInteger {
                sign: 1,
                factors: j.den,
            },
        })
    }
}

/// Σ_p a_p·log p with exact rational a_p, plus a numeric archimedean part.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LogCombination {
    pub terms: BTreeMap<u64, Q>,
    pub residual: f64,
}

impl LogCombination {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn log_p(p: u64, coeff: Q) -> Self {
        let mut l = Self::zero();
        l.add_term(p, coeff);
        l
    }

    pub fn add_term(&mut self, p: u64, coeff: Q) {
        if coeff.is_zero() {
            return;
        }
        let e = self.terms.entry(p).or_insert_with(Q::zero);
        *e += coeff;
        if e.is_zero() {
            self.terms.remove(&p);
        }
    }

    pub fn add(&mut self, other: &LogCombination) {
        for (&p, c) in &other.terms {
            self.add_term(p, c.clone());
        }
        self.residual += other.residual;
    }

    pub fn add_scaled(&mut self, other: &LogCombination, k: &Q) {
        for (&p, c) in &other.terms {
            self.add_term(p, c * k);
        }
        self.residual += other.residual * k.to_f64().unwrap_or(f64::NAN);
    }

    pub fn scaled(&self, k: &Q) -> LogCombination {
        let mut r = LogCombination::zero();
        r.add_scaled(self, k);
        r
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty() && self.residual == 0.0
    }

    pub fn coeff(&self, p: u64) -> Q {
        self.terms.get(&p).cloned().unwrap_or_else(Q::zero)
    }

    /// Numeric value.
    pub fn value(&self) -> f64 {
        self.terms
            .iter()
            .map(|(&p, c)| c.to_f64().unwrap_or(f64::NAN) * (p as f64).ln())
            .sum::<f64>()
            + self.residual
    }

    /// exp of the combination as a factored rational; requires integral
    /// coefficients and a residual below `tol`.
    pub fn exp(&self, sign: i8, tol: f64) -> Result<FactoredRational> {
        if self.residual.abs() > tol {
            return Err(Error::Precision(format!(
                "archimedean residual {} exceeds {tol}",
                self.residual
            )));
        }
        let mut exps = BTreeMap::new();
        for (&p, c) in &self.terms {
            let e = q_to_i64(c)
                .ok_or_else(|| Error::Domain(format!("non-integral exponent {c} at prime {p}")))?;
            exps.insert(p, e);
        }
        Ok(FactoredRational::from_exponents(sign, &exps))
    }
}

impl fmt::Display for LogCombination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() && self.residual == 0.0 {
            return write!(f, "0");
        }
        let mut first = true;
        for (p, c) in &self.terms {
            let neg = c.is_negative();
            let a = c.abs();
            let sep = match (first, neg) {
                (true, true) => "-",
                (true, false) => "",
                (false, true) => " - ",
                (false, false) => " + ",
            };
            if a.is_one() {
                write!(f, "{sep}log {p}")?;
            } else {
                write!(f, "{sep}{a} log {p}")?;
            }
            first = false;
        }
        if self.residual != 0.0 {
            write!(f, " + {:e}", self.residual)?;
        }
        Ok(())
    }
}
