//! q-series with a fractional exponent offset, Dedekind eta quotients, and the
//! search that assembles the scalar input forms.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::arith::{divisors, ord_p, prime_divisors, q, qi, Q};
use crate::error::{Error, Result};
use crate::lattice::DiscGroup;
use crate::linalg::{column_echelon, solve_integer, IMat};

/// Default number of integer exponent steps kept past the constant term.
pub const DEFAULT_TRUNC: i64 = 60;

/// Σ_k c_k q^{offset + k}, known for exponents below `trunc`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FracSeries {
    /// Normalized into [0, 1).
    pub offset: Q,
    pub coeffs: BTreeMap<i64, Q>,
    /// Absolute exponent bound: coefficients are exact for offset + k < trunc.
    pub trunc: Q,
}

impl FracSeries {
    pub fn new(offset: Q, coeffs: BTreeMap<i64, Q>, trunc: Q) -> Self {
        let shift = offset
            .floor()
            .to_integer()
            .to_i64()
            .expect("offset fits i64");
        let offset = &offset - offset.floor();
        let coeffs = coeffs
            .into_iter()
            .filter(|(_, c)| !c.is_zero())
            .map(|(k, c)| (k + shift, c))
            .filter(|(k, _)| qi(*k) + &offset < trunc)
            .collect();
        FracSeries {
            offset,
            coeffs,
            trunc,
        }
    }

    pub fn zero(offset: Q, trunc: Q) -> Self {
        FracSeries::new(offset, BTreeMap::new(), trunc)
    }

    pub fn exponent(&self, k: i64) -> Q {
        qi(k) + &self.offset
    }

    /// Coefficient of q^e; errors if e lies at or beyond the truncation.
    pub fn coeff(&self, e: &Q) -> Result<Q> {
        if *e >= self.trunc {
            return Err(Error::Precision(format!(
                "q^{e} beyond truncation {}",
                self.trunc
            )));
        }
        let k = e - &self.offset;
        if !k.is_integer() {
            return Ok(Q::zero());
        }
        let k = k.to_integer().to_i64().unwrap();
        Ok(self.coeffs.get(&k).cloned().unwrap_or_else(Q::zero))
    }

    /// Lowest exponent with a nonzero coefficient.
    pub fn valuation(&self) -> Option<Q> {
        self.coeffs.keys().next().map(|&k| self.exponent(k))
    }

    /// Terms with negative exponent, as (exponent, coefficient).
    pub fn principal_part(&self) -> Vec<(Q, Q)> {
        self.coeffs
            .iter()
            .map(|(&k, c)| (self.exponent(k), c.clone()))
            .filter(|(e, _)| e.is_negative())
            .collect()
    }

    pub fn constant_term(&self) -> Q {
        self.coeff(&Q::zero()).unwrap_or_else(|_| Q::zero())
    }

    fn aligned(&self, other: &FracSeries) -> Result<()> {
        if self.offset != other.offset {
            return Err(Error::Argument(format!(
                "offsets {} and {} differ by a non-integer",
                self.offset, other.offset
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &FracSeries) -> Result<FracSeries> {
        self.aligned(other)?;
        let mut c = self.coeffs.clone();
        for (k, v) in &other.coeffs {
            *c.entry(*k).or_insert_with(Q::zero) += v;
        }
        let trunc = self.trunc.clone().min(other.trunc.clone());
        Ok(FracSeries::new(self.offset.clone(), c, trunc))
    }

    pub fn scale(&self, s: &Q) -> FracSeries {
        let c = self.coeffs.iter().map(|(k, v)| (*k, v * s)).collect();
        FracSeries::new(self.offset.clone(), c, self.trunc.clone())
    }

    pub fn mul(&self, other: &FracSeries) -> FracSeries {
        let (Some(va), Some(vb)) = (self.valuation(), other.valuation()) else {
            let trunc = (&self.trunc + other.valuation().unwrap_or_else(|| other.trunc.clone()))
                .min(&other.trunc + self.valuation().unwrap_or_else(|| self.trunc.clone()));
            return FracSeries::zero(&self.offset + &other.offset, trunc);
        };
        let trunc = (&self.trunc + &vb).min(&other.trunc + &va);
        let offset = &self.offset + &other.offset;
        let mut c: BTreeMap<i64, Q> = BTreeMap::new();
        for (i, a) in &self.coeffs {
            for (j, b) in &other.coeffs {
                let k = i + j;
                if qi(k) + &offset >= trunc {
                    break;
                }
                *c.entry(k).or_insert_with(Q::zero) += a * b;
            }
        }
        FracSeries::new(offset, c, trunc)
    }

    /// Multiplicative inverse; the leading coefficient must be known and nonzero.
    pub fn inverse(&self) -> Result<FracSeries> {
        let Some(&k0) = self.coeffs.keys().next() else {
            return Err(Error::Precision(
                "inverse of a series that is zero to its truncation".into(),
            ));
        };
        let v = self.exponent(k0);
        let rel = &self.trunc - &v;
        let n = rel.ceil().to_integer().to_i64().unwrap().max(0);
        let a0 = self.coeffs[&k0].clone();
        let a: Vec<Q> = (0..n)
            .map(|i| self.coeffs.get(&(k0 + i)).cloned().unwrap_or_else(Q::zero))
            .collect();
        let mut b: Vec<Q> = Vec::with_capacity(n as usize);
        for i in 0..n as usize {
            let mut s = if i == 0 { Q::one() } else { Q::zero() };
            for j in 1..=i {
                s -= &a[j] * &b[i - j];
            }
            b.push(s / &a0);
        }
        let offset = -v.clone();
        let base = offset.floor().to_integer().to_i64().unwrap();
        let frac = &offset - offset.floor();
        let c = b
            .into_iter()
            .enumerate()
            .map(|(i, x)| (base + i as i64, x))
            .collect();
        Ok(FracSeries::new(frac, c, &rel - &v))
    }

    pub fn div(&self, other: &FracSeries) -> Result<FracSeries> {
        Ok(self.mul(&other.inverse()?))
    }
}

impl fmt::Display for FracSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (k, c) in self.coeffs.iter().take(8) {
            let e = self.exponent(*k);
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "({c})q^({e})")?;
        }
        write!(f, " + O(q^{})", self.trunc)
    }
}

fn euler_product(step: usize, len: usize) -> Vec<BigInt> {
    // Π_{n≥1}(1 − q^{step·n}) through the pentagonal number theorem.
    let mut v = vec![BigInt::zero(); len];
    v[0] = BigInt::one();
    for k in 1i64.. {
        let sign = BigInt::from(if k % 2 == 0 { 1 } else { -1 });
        let e1 = (k * (3 * k - 1) / 2) as usize * step;
        let e2 = (k * (3 * k + 1) / 2) as usize * step;
        if e1 >= len {
            break;
        }
        v[e1] += &sign;
        if e2 < len {
            v[e2] += &sign;
        }
    }
    v
}

fn mul_trunc(a: &[BigInt], b: &[BigInt]) -> Vec<BigInt> {
    let n = a.len();
    let mut out = vec![BigInt::zero(); n];
    for (i, x) in a.iter().enumerate() {
        if x.is_zero() {
            continue;
        }
        for (j, y) in b.iter().enumerate().take(n - i) {
            out[i + j] += x * y;
        }
    }
    out
}

fn inv_unit(a: &[BigInt]) -> Vec<BigInt> {
    let n = a.len();
    let mut b = vec![BigInt::zero(); n];
    b[0] = BigInt::one();
    for i in 1..n {
        let mut s = BigInt::zero();
        for j in 1..=i {
            s -= &a[j] * &b[i - j];
        }
        b[i] = s;
    }
    b
}

fn pow_trunc(a: &[BigInt], e: u64) -> Vec<BigInt> {
    let mut out = vec![BigInt::zero(); a.len()];
    out[0] = BigInt::one();
    let mut base = a.to_vec();
    let mut e = e;
    while e > 0 {
        if e & 1 == 1 {
            out = mul_trunc(&out, &base);
        }
        base = mul_trunc(&base, &base);
        e >>= 1;
    }
    out
}

/// Coefficients of Π_{n≥1}(1 − q^n)^r below q^len.
pub(crate) fn eta_power_coeffs(r: i64, len: usize) -> Vec<BigInt> {
    let e = euler_product(1, len.max(1));
    let p = pow_trunc(&e, r.unsigned_abs());
    if r >= 0 {
        p
    } else {
        inv_unit(&p)
    }
}

/// η(mτ) = q^{m/24} Π_{k≥1}(1 − q^{mk}), with exponents below `trunc`.
pub fn eta_series(m: u64, trunc: i64) -> FracSeries {
    let mut eq = EtaQuotient::new(m, BTreeMap::new());
    eq.exponents.insert(m, 1);
    quotient_series(&eq, trunc).expect("η is a unit series")
}

/// Π η(δτ)^{r_δ}; coefficients are exact for exponents below `trunc`.
pub fn quotient_series(eq: &EtaQuotient, trunc: i64) -> Result<FracSeries> {
    let offset = eq.order_at_infinity();
    let len = (qi(trunc) - &offset).ceil().to_integer();
    let len = len.to_i64().unwrap_or(0).max(0) as usize;
    let mut num = vec![BigInt::zero(); len.max(1)];
    num[0] = BigInt::one();
    let mut den = num.clone();
    for (&d, &r) in &eq.exponents {
        let e = euler_product(d as usize, len.max(1));
        if r > 0 {
            num = mul_trunc(&num, &pow_trunc(&e, r as u64));
        } else if r < 0 {
            den = mul_trunc(&den, &pow_trunc(&e, (-r) as u64));
        }
    }
    let prod = mul_trunc(&num, &inv_unit(&den));
    let base = offset.floor().to_integer().to_i64().unwrap();
    let frac = &offset - offset.floor();
    let coeffs = prod
        .into_iter()
        .take(len)
        .enumerate()
        .map(|(i, c)| (base + i as i64, Q::from_integer(c)))
        .collect();
    Ok(FracSeries::new(frac, coeffs, qi(trunc)))
}

/// Π_{δ|N} η(δτ)^{r_δ}.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct EtaQuotient {
    pub level: u64,
    /// Nonzero exponents only.
    pub exponents: BTreeMap<u64, i64>,
}

impl EtaQuotient {
    pub fn new(level: u64, exponents: BTreeMap<u64, i64>) -> Self {
        let exponents = exponents.into_iter().filter(|(_, r)| *r != 0).collect();
        EtaQuotient { level, exponents }
    }

    pub fn from_pairs(level: u64, pairs: &[(u64, i64)]) -> Self {
        EtaQuotient::new(level, pairs.iter().copied().collect())
    }

    pub fn r(&self, d: u64) -> i64 {
        self.exponents.get(&d).copied().unwrap_or(0)
    }

    pub fn weight(&self) -> Q {
        q(self.exponents.values().sum(), 2)
    }

    /// Σ r_δ δ / 24: the exponent of the leading term at ∞.
    pub fn order_at_infinity(&self) -> Q {
        q(self.exponents.iter().map(|(&d, &r)| d as i64 * r).sum(), 24)
    }

    /// Order at the cusp 1/c in the uniformizer q^{1/N}-normalized by Γ_0(N)
    /// (Ligozat's formula).
    pub fn ligozat_order(&self, c: u64) -> Q {
        let n = self.level;
        let g = c.gcd(&(n / c));
        let mut s = Q::zero();
        for (&d, &r) in &self.exponents {
            let h = c.gcd(&d);
            s += q((h * h) as i64 * r, (g * c * d) as i64);
        }
        s * q(n as i64, 24)
    }
}

impl fmt::Display for EtaQuotient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let part = |pos: bool| -> String {
            self.exponents
                .iter()
                .filter(|(_, &r)| (r > 0) == pos)
                .map(|(d, r)| {
                    let r = r.abs();
                    if r == 1 {
                        format!("η{d}")
                    } else {
                        format!("η{d}^{r}")
                    }
                })
                .collect::<Vec<_>>()
                .join(" ")
        };
        let (n, d) = (part(true), part(false));
        let n = if n.is_empty() { "1".to_string() } else { n };
        if d.is_empty() {
            write!(f, "{n}")
        } else {
            write!(f, "{n}/({d})")
        }
    }
}

/// Width of the cusp a/c on Γ_0(N).
pub fn cusp_width(n: u64, c: u64) -> u64 {
    n / (c * c).gcd(&n)
}

/// Order of vanishing at the cusp a/c measured in the local parameter at
/// that cusp scaled by its width, matching the usual cusp tables.
pub fn cusp_order(eq: &EtaQuotient, a: i64, c: u64) -> Result<Q> {
    if !eq.level.is_multiple_of(c) {
        return Err(Error::Argument(format!("{c} does not divide {}", eq.level)));
    }
    if a.gcd(&(c as i64)) != 1 {
        return Err(Error::Argument(format!("{a}/{c} is not reduced")));
    }
    Ok(eq.ligozat_order(c) / qi(cusp_width(eq.level, c) as i64))
}

fn euler_phi(n: u64) -> u64 {
    prime_divisors(n as i64)
        .into_iter()
        .fold(n, |acc, p| acc / p * (p - 1))
}

/// [SL2(Z) : Γ_0(N)].
pub fn gamma0_index(n: u64) -> u64 {
    prime_divisors(n as i64)
        .into_iter()
        .fold(n, |acc, p| acc / p * (p + 1))
}

/// Σ_{c|N} φ(gcd(c, N/c))·(Ligozat order at 1/c) = weight·index/12.
pub fn check_valence(eq: &EtaQuotient) -> bool {
    let n = eq.level;
    let lhs: Q = divisors(n)
        .into_iter()
        .map(|c| eq.ligozat_order(c) * qi(euler_phi(c.gcd(&(n / c))) as i64))
        .sum();
    lhs == eq.weight() * q(gamma0_index(n) as i64, 12)
}

/// Character attached by the eta-product theorem.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct EtaCharacter {
    /// Power of χ_θ (0 when 4 ∤ N).
    pub theta_power: i64,
    /// n in χ_n(γ) = (d/n).
    pub kronecker: i64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct EtaCheck {
    pub weight: Q,
    pub character: EtaCharacter,
}

fn is_rational_square(x: &Q) -> bool {
    if x.is_negative() {
        return false;
    }
    let n = x.numer().sqrt();
    let d = x.denom().sqrt();
    &n * &n == *x.numer() && &d * &d == *x.denom()
}

fn odd_part(mut n: u64) -> u64 {
    while n.is_multiple_of(2) && n > 0 {
        n /= 2;
    }
    n
}

/// Conditions (1) level match, (2) |Λ|/Π δ^{r_δ} a rational square,
/// (3) Σ r_δ δ / 24 ∈ Z, (4) (N/24) Σ r_δ / δ ∈ Z.
pub fn check_etaprod_conditions(eq: &EtaQuotient, group: &DiscGroup) -> Result<EtaCheck> {
    check_conditions(eq, group.level as u64, group.len() as u64)
}

pub fn check_conditions(eq: &EtaQuotient, level: u64, group_order: u64) -> Result<EtaCheck> {
    let fail = |condition: u8, reason: String| Err(Error::EtaCondition { condition, reason });
    if eq.level != level || eq.exponents.keys().any(|d| !level.is_multiple_of(*d)) {
        return fail(
            1,
            format!("quotient level {} vs group level {level}", eq.level),
        );
    }
    let mut prod = Q::one();
    for (&d, &r) in &eq.exponents {
        prod *= Q::from_integer(BigInt::from(d)).pow(r as i32);
    }
    if !is_rational_square(&(qi(group_order as i64) / &prod)) {
        return fail(
            2,
            format!(
                "{group_order}/Π δ^r = {} is not a square",
                qi(group_order as i64) / prod
            ),
        );
    }
    if !eq.order_at_infinity().is_integer() {
        return fail(3, format!("Σ r δ/24 = {}", eq.order_at_infinity()));
    }
    let s: Q = eq
        .exponents
        .iter()
        .map(|(&d, &r)| q(r, d as i64))
        .sum::<Q>()
        * q(level as i64, 24);
    if !s.is_integer() {
        return fail(4, format!("(N/24) Σ r/δ = {s}"));
    }
    let weight = eq.weight();
    let two_k = (&weight * qi(2)).to_integer().to_i64().unwrap();
    let character = if level.is_multiple_of(4) {
        let sym = crate::arith::kronecker(-1, odd_part(group_order) as i64) as i64;
        EtaCharacter {
            theta_power: (two_k + sym - 1).rem_euclid(4),
            kronecker: (1i64 << two_k.rem_euclid(64)) * group_order as i64,
        }
    } else {
        EtaCharacter {
            theta_power: 0,
            kronecker: group_order as i64,
        }
    };
    Ok(EtaCheck { weight, character })
}

/// Eta quotients of level N and the given weight whose order at ∞ is exactly
/// −`pole` and which satisfy conditions (2)–(4) for a group of the given
/// order. With `holomorphic_finite` the finite cusps carry no poles; without
/// it the system is unbounded and the search refuses.
pub fn search_eta_quotients(
    level: u64,
    weight: &Q,
    pole: i64,
    holomorphic_finite: bool,
    group_order: u64,
) -> Result<Vec<EtaQuotient>> {
    if !holomorphic_finite {
        return Err(Error::Infeasible(
            "without holomorphy at the finite cusps the exponent system is unbounded".into(),
        ));
    }
    let two_k = weight * qi(2);
    if !two_k.is_integer() {
        return Err(Error::Argument(format!("weight {weight} is not in (1/2)Z")));
    }
    let two_k = two_k.to_integer().to_i128().unwrap();
    let divs = divisors(level);
    let n = divs.len();
    let mut primes: Vec<u64> = prime_divisors(level as i64);
    for p in prime_divisors(group_order as i64) {
        if !primes.contains(&p) {
            primes.push(p);
        }
    }
    // Rows: Σ r = 2k; Σ r δ = −24·pole; Σ r N/δ ≡ 0 (24); Σ r ord_p δ ≡ ord_p |Λ| (2).
    let cols = n + 1 + primes.len();
    let mut a: IMat = Vec::new();
    let mut b: Vec<i128> = Vec::new();
    let mut row = vec![0i128; cols];
    row[..n].iter_mut().for_each(|x| *x = 1);
    a.push(row);
    b.push(two_k);
    let mut row = vec![0i128; cols];
    for (i, &d) in divs.iter().enumerate() {
        row[i] = d as i128;
    }
    a.push(row);
    b.push(-24 * pole as i128);
    let mut row = vec![0i128; cols];
    for (i, &d) in divs.iter().enumerate() {
        row[i] = (level / d) as i128;
    }
    row[n] = 24;
    a.push(row);
    b.push(0);
    for (j, &p) in primes.iter().enumerate() {
        let mut row = vec![0i128; cols];
        for (i, &d) in divs.iter().enumerate() {
            row[i] = ord_p(&qi(d as i64), p) as i128;
        }
        row[n + 1 + j] = 2;
        a.push(row);
        b.push(ord_p(&qi(group_order as i64), p) as i128);
    }
    let Some((x0, kernel)) = solve_integer(&a, &b) else {
        return Ok(Vec::new());
    };
    let r0: Vec<i128> = x0[..n].to_vec();
    let basis: Vec<Vec<i128>> = kernel.iter().map(|v| v[..n].to_vec()).collect();

    // Ligozat orders as integers after scaling by G.
    let ci = divs.iter().position(|&d| d == level).unwrap();
    let lig = |c: u64, r: &[i128]| -> Q {
        let eq = EtaQuotient::new(
            level,
            divs.iter().zip(r).map(|(&d, &x)| (d, x as i64)).collect(),
        );
        eq.ligozat_order(c)
    };
    let finite: Vec<u64> = divs.iter().copied().filter(|&d| d != level).collect();
    let mut g = BigInt::one();
    for &c in &finite {
        for (i, _) in divs.iter().enumerate() {
            let mut e = vec![0i128; n];
            e[i] = 1;
            g = g.lcm(lig(c, &e).denom());
        }
    }
    let g = Q::from_integer(g);
    let scaled = |c: u64, r: &[i128]| -> i128 { (lig(c, r) * &g).to_integer().to_i128().unwrap() };
    let total = weight * q(gamma0_index(level) as i64, 12) + qi(pole);
    let bounds: Vec<i128> = finite
        .iter()
        .map(|&c| {
            let phi = euler_phi(c.gcd(&(level / c)));
            (&total * &g / qi(phi as i64))
                .floor()
                .to_integer()
                .to_i128()
                .unwrap()
        })
        .collect();
    let _ = ci;
    // Choose |basis| finite cusps whose order map is injective on the kernel.
    let dim = basis.len();
    let mut chosen: Option<Vec<usize>> = None;
    for skip in 0..finite.len() {
        let rows: Vec<usize> = (0..finite.len()).filter(|&i| i != skip).take(dim).collect();
        if rows.len() < dim {
            continue;
        }
        let w: IMat = rows
            .iter()
            .map(|&i| basis.iter().map(|v| scaled(finite[i], v)).collect())
            .collect();
        let (_, _, piv) = column_echelon(&w);
        if piv.len() == dim {
            chosen = Some(rows);
            break;
        }
    }
    let rows = chosen.ok_or_else(|| Error::Internal("cusp-order map is not injective".into()))?;
    let w: IMat = rows
        .iter()
        .map(|&i| basis.iter().map(|v| scaled(finite[i], v)).collect())
        .collect();
    let (h, v, _) = column_echelon(&w);
    // New basis B·V: coordinate j of the cusp orders depends on y_0..y_j only.
    let nb: Vec<Vec<i128>> = (0..dim)
        .map(|j| {
            (0..n)
                .map(|t| (0..dim).map(|i| basis[i][t] * v[i][j]).sum())
                .collect()
        })
        .collect();
    let v0: Vec<i128> = rows.iter().map(|&i| scaled(finite[i], &r0)).collect();
    let mut out = Vec::new();
    let mut y = vec![0i128; dim];
    enumerate(0, &mut y, &h, &v0, &rows, &bounds, &mut |y| {
        let r: Vec<i128> = (0..n)
            .map(|t| r0[t] + (0..dim).map(|j| y[j] * nb[j][t]).sum::<i128>())
            .collect();
        if finite.iter().enumerate().all(|(i, &c)| {
            let o = scaled(c, &r);
            o >= 0 && o <= bounds[i]
        }) {
            out.push(EtaQuotient::new(
                level,
                divs.iter().zip(&r).map(|(&d, &x)| (d, x as i64)).collect(),
            ));
        }
    });
    out.sort();
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn enumerate(
    j: usize,
    y: &mut Vec<i128>,
    h: &IMat,
    v0: &[i128],
    rows: &[usize],
    bounds: &[i128],
    f: &mut dyn FnMut(&[i128]),
) {
    if j == y.len() {
        f(y);
        return;
    }
    let partial: i128 = v0[j] + (0..j).map(|i| h[j][i] * y[i]).sum::<i128>();
    let hj = h[j][j];
    let hi = bounds[rows[j]];
    // 0 ≤ partial + hj·y_j ≤ hi.
    let lo = Integer::div_ceil(&(-partial), &hj);
    let up = Integer::div_floor(&(hi - partial), &hj);
    for t in lo..=up {
        y[j] = t;
        enumerate(j + 1, y, h, v0, rows, bounds, f);
    }
}

/// A scalar input form: Σ c_i·(eta quotient)_i with its expansion.
#[derive(Clone, Debug, Serialize)]
pub struct InputForm {
    pub level: u64,
    pub group_order: u64,
    pub terms: Vec<(Q, EtaQuotient)>,
    pub series: FracSeries,
}

impl InputForm {
    /// Coefficients of q^{−m} for m > 0, keyed by m.
    pub fn principal_part(&self) -> BTreeMap<i64, Q> {
        self.series
            .principal_part()
            .into_iter()
            .map(|(e, c)| ((-e).to_integer().to_i64().unwrap(), c))
            .collect()
    }
}

/// (level, |Λ|) of the discriminant form for D ∈ {6, 10}.
pub fn level_data(d: u64) -> Result<(u64, u64)> {
    match d {
        6 => Ok((12, 72)),
        10 => Ok((20, 200)),
        _ => Err(Error::Argument(format!("D = {d} is not supported"))),
    }
}

/// Principal part (m ↦ c(−m)) of the form whose lift has the divisor of t_D.
pub fn target_principal_part(d: u64) -> Result<BTreeMap<i64, Q>> {
    match d {
        6 => Ok([(3, qi(-6)), (1, qi(4))].into_iter().collect()),
        10 => Ok([(3, qi(3)), (2, qi(-2))].into_iter().collect()),
        _ => Err(Error::Argument(format!("D = {d} is not supported"))),
    }
}

/// Principal part for the companion t_D − offset.
pub fn companion_principal_part(d: u64) -> Result<BTreeMap<i64, Q>> {
    match d {
        6 => Ok([(6, qi(2)), (3, qi(-6))].into_iter().collect()),
        10 => Ok([(5, qi(2)), (2, qi(-2))].into_iter().collect()),
        _ => Err(Error::Argument(format!("D = {d} is not supported"))),
    }
}

pub fn build_input_form(d: u64) -> Result<InputForm> {
    let (level, order) = level_data(d)?;
    solve_input_form(level, order, &target_principal_part(d)?, DEFAULT_TRUNC)
}

pub fn build_companion_form(d: u64) -> Result<InputForm> {
    let (level, order) = level_data(d)?;
    solve_input_form(level, order, &companion_principal_part(d)?, DEFAULT_TRUNC)
}

/// Solves for a combination of holomorphic-at-finite-cusps weight-1/2 eta
/// quotients with the given principal part and zero constant term. Candidates
/// are ordered by pole order, then by exponent vector; pivots are taken in
/// that order and free coefficients are set to zero.
pub fn solve_input_form(
    level: u64,
    group_order: u64,
    target: &BTreeMap<i64, Q>,
    trunc: i64,
) -> Result<InputForm> {
    solve_input_form_with(level, group_order, target, trunc, &|_| Ok(Vec::new()))
}

/// As [`solve_input_form`], with further linear conditions: `extra(f)` lists
/// quantities linear in f that must vanish for the solution.
pub fn solve_input_form_with(
    level: u64,
    group_order: u64,
    target: &BTreeMap<i64, Q>,
    trunc: i64,
    extra: &dyn Fn(&EtaQuotient) -> Result<Vec<Q>>,
) -> Result<InputForm> {
    let kmax = target.keys().copied().max().unwrap_or(0);
    let half = q(1, 2);
    let mut cands: Vec<(EtaQuotient, FracSeries)> = Vec::new();
    for pole in 0..=kmax {
        for eq in search_eta_quotients(level, &half, pole, true, group_order)? {
            let s = quotient_series(&eq, trunc)?;
            cands.push((eq, s));
        }
    }
    let extras: Vec<Vec<Q>> = cands
        .iter()
        .map(|(eq, _)| extra(eq))
        .collect::<Result<_>>()?;
    let nextra = extras.first().map(|v| v.len()).unwrap_or(0);
    // Rows: exponents −kmax..0, then the extra conditions.
    let nseries = (kmax + 1) as usize;
    let nrows = nseries + nextra;
    let ncols = cands.len();
    let mut m: Vec<Vec<Q>> = (0..nrows)
        .map(|i| {
            if i < nseries {
                let e = qi(i as i64 - kmax);
                cands.iter().map(|(_, s)| s.coeff(&e).unwrap()).collect()
            } else {
                extras.iter().map(|v| v[i - nseries].clone()).collect()
            }
        })
        .collect();
    let mut rhs: Vec<Q> = (0..nrows)
        .map(|i| {
            if i < nseries {
                target
                    .get(&(kmax - i as i64))
                    .cloned()
                    .unwrap_or_else(Q::zero)
            } else {
                Q::zero()
            }
        })
        .collect();
    // Gaussian elimination with the first usable column as pivot.
    let mut pivots: Vec<(usize, usize)> = Vec::new();
    let mut r = 0;
    for c in 0..ncols {
        if r == nrows {
            break;
        }
        let Some(p) = (r..nrows).find(|&i| !m[i][c].is_zero()) else {
            continue;
        };
        m.swap(r, p);
        rhs.swap(r, p);
        let inv = m[r][c].recip();
        for j in 0..ncols {
            m[r][j] = &m[r][j] * &inv;
        }
        rhs[r] = &rhs[r] * &inv;
        for i in 0..nrows {
            if i != r && !m[i][c].is_zero() {
                let f = m[i][c].clone();
                for j in 0..ncols {
                    let t = &m[r][j] * &f;
                    m[i][j] -= t;
                }
                let t = &rhs[r] * &f;
                rhs[i] -= t;
            }
        }
        pivots.push((r, c));
        r += 1;
    }
    if (r..nrows).any(|i| !rhs[i].is_zero()) {
        return Err(Error::Infeasible(format!(
            "no combination of {ncols} eta quotients has the requested principal part and zero constant term"
        )));
    }
    let mut terms = Vec::new();
    let mut series: Option<FracSeries> = None;
    for (row, col) in pivots {
        let c = rhs[row].clone();
        if c.is_zero() {
            continue;
        }
        let s = cands[col].1.scale(&c);
        series = Some(match series {
            None => s,
            Some(acc) => acc.add(&s)?,
        });
        terms.push((c, cands[col].0.clone()));
    }
    let series = series.unwrap_or_else(|| FracSeries::zero(Q::zero(), qi(trunc)));
    if !series.constant_term().is_zero() {
        return Err(Error::Infeasible("constant term does not vanish".into()));
    }
    Ok(InputForm {
        level,
        group_order,
        terms,
        series,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eq12(p: &[(u64, i64)]) -> EtaQuotient {
        EtaQuotient::from_pairs(12, p)
    }

    fn ints(s: &FracSeries, from: i64, n: usize) -> Vec<i64> {
        (0..n as i64)
            .map(|i| {
                s.coeff(&qi(from + i))
                    .unwrap()
                    .to_integer()
                    .to_i64()
                    .unwrap()
            })
            .collect()
    }

    #[test]
    fn eta_is_pentagonal() {
        let s = eta_series(1, 40);
        assert_eq!(s.offset, q(1, 24));
        let pent: Vec<i64> = (-6i64..=6).map(|k| k * (3 * k - 1) / 2).collect();
        for k in 0..39 {
            let c = s.coeff(&(qi(k) + q(1, 24))).unwrap();
            if let Some(j) = (-6i64..=6).find(|&j| j * (3 * j - 1) / 2 == k) {
                assert_eq!(c, qi(if j % 2 == 0 { 1 } else { -1 }));
            } else {
                assert!(c.is_zero(), "k={k}");
                assert!(!pent.contains(&k));
            }
        }
        assert_eq!(eta_series(2, 10).offset, q(1, 12));
    }

    #[test]
    fn printed_expansions() {
        let theta = quotient_series(&eq12(&[(2, 5), (1, -2), (4, -2)]), 50).unwrap();
        for n in 0..50i64 {
            let r = (-8i64..=8).filter(|m| m * m == n).count() as i64;
            assert_eq!(theta.coeff(&qi(n)).unwrap(), qi(r), "n={n}");
        }
        let psi1 = quotient_series(
            &eq12(&[(2, 12), (3, 1), (1, -5), (4, -4), (6, -1), (12, -2)]),
            2,
        )
        .unwrap();
        assert_eq!(ints(&psi1, -1, 2), vec![1, 5]);
        let psi3 = quotient_series(&eq12(&[(2, 1), (3, 2), (4, 4), (6, 4), (12, -10)]), 1).unwrap();
        assert_eq!(ints(&psi3, -3, 4), vec![1, 0, -1, -2]);
    }

    #[test]
    fn series_arithmetic() {
        let a = eta_series(1, 30);
        let inv = a.inverse().unwrap();
        let one = a.mul(&inv);
        assert_eq!(one.coeff(&qi(0)).unwrap(), qi(1));
        for k in 1..25 {
            assert!(one.coeff(&qi(k)).unwrap().is_zero());
        }
        assert!(one.coeff(&qi(40)).is_err());
    }

    #[test]
    fn conditions() {
        let theta = eq12(&[(2, 5), (1, -2), (4, -2)]);
        let c = check_conditions(&theta, 12, 72).unwrap();
        assert_eq!(c.weight, q(1, 2));
        assert_eq!(
            c.character,
            EtaCharacter {
                theta_power: 1,
                kronecker: 144
            }
        );
        match check_conditions(&eq12(&[(1, 1)]), 12, 72) {
            Err(Error::EtaCondition { condition, .. }) => assert_eq!(condition, 2),
            other => panic!("{other:?}"),
        }
    }

    fn family(a: [i64; 5]) -> EtaQuotient {
        let [a1, a2, a3, a4, a5] = a;
        eq12(&[
            (1, a5),
            (2, 16 - 12 * a1 + 36 * a2 - 9 * a3 - 14 * a4 - 6 * a5),
            (3, -30 + 24 * a1 - 48 * a2 + 16 * a3 + 24 * a4 + 5 * a5),
            (4, -17 + 12 * a1 - 36 * a2 + 9 * a3 + 16 * a4 + 5 * a5),
            (6, 43 - 36 * a1 + 60 * a2 - 21 * a3 - 34 * a4 - 6 * a5),
            (12, -11 + 12 * a1 - 12 * a2 + 5 * a3 + 8 * a4 + a5),
        ])
    }

    #[test]
    fn cusp_table() {
        for a in [[0, 0, 1, 1, -2], [-1, 2, 0, 3, 1], [2, -1, 3, 0, 4]] {
            let [a1, a2, a3, a4, a5] = a;
            let e = family(a);
            assert_eq!(cusp_order(&e, 1, 1).unwrap(), q(a2, 12));
            assert_eq!(
                cusp_order(&e, 1, 2).unwrap(),
                q(15 - 12 * a1 + 28 * a2 - 8 * a3 - 12 * a4 - 4 * a5, 12)
            );
            assert_eq!(
                cusp_order(&e, 1, 3).unwrap(),
                q(-5 + 4 * a1 - 9 * a2 + 3 * a3 + 4 * a4 + a5, 4)
            );
            assert_eq!(
                cusp_order(&e, 1, 4).unwrap(),
                q(-4 + 3 * a1 - 8 * a2 + 2 * a3 + 4 * a4 + a5, 3)
            );
            assert_eq!(
                cusp_order(&e, 1, 6).unwrap(),
                q(25 - 20 * a1 + 36 * a2 - 12 * a3 - 20 * a4 - 4 * a5, 4)
            );
            assert_eq!(cusp_order(&e, 1, 12).unwrap(), qi(a1));
            assert!(check_valence(&e));
        }
    }

    #[test]
    fn search_level_12() {
        let half = q(1, 2);
        let s0 = search_eta_quotients(12, &half, 0, true, 72).unwrap();
        assert_eq!(s0, vec![eq12(&[(2, 5), (1, -2), (4, -2)])]);
        assert_eq!(
            search_eta_quotients(12, &half, 1, true, 72).unwrap().len(),
            5
        );
        assert_eq!(
            search_eta_quotients(12, &half, 3, true, 72).unwrap().len(),
            35
        );
        assert!(search_eta_quotients(12, &half, 1, false, 72).is_err());
    }

    #[test]
    fn level_20_recovers_published_quotients() {
        let half = q(1, 2);
        let e = |p: &[(u64, i64)]| EtaQuotient::from_pairs(20, p);
        let published = [
            (3, 3, e(&[(4, 6), (10, 8), (2, -3), (5, -2), (20, -8)])),
            (-2, 2, e(&[(2, 3), (4, 2), (10, 2), (1, -2), (20, -4)])),
            (-5, 1, e(&[(4, 2), (10, 6), (2, -1), (5, -2), (20, -4)])),
            (4, 0, e(&[(2, 5), (1, -2), (4, -2)])),
        ];
        let mut total: Option<FracSeries> = None;
        for (c, pole, eq) in &published {
            let found = search_eta_quotients(20, &half, *pole, true, 200).unwrap();
            assert!(found.contains(eq), "{eq} missing at pole {pole}");
            assert!(check_valence(eq));
            let s = quotient_series(eq, 5).unwrap().scale(&qi(*c));
            total = Some(match total {
                None => s,
                Some(t) => t.add(&s).unwrap(),
            });
        }
        let f = total.unwrap();
        let pp: Vec<(Q, Q)> = f.principal_part();
        assert_eq!(pp, vec![(qi(-3), qi(3)), (qi(-2), qi(-2))]);
        assert!(f.constant_term().is_zero());
    }

    #[test]
    fn input_forms() {
        let f6 = build_input_form(6).unwrap();
        assert_eq!(f6.principal_part(), target_principal_part(6).unwrap());
        assert!(f6.series.constant_term().is_zero());
        let f10 = build_input_form(10).unwrap();
        assert_eq!(f10.principal_part(), target_principal_part(10).unwrap());
    }
}
