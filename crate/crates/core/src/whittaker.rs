//! Coefficients κ of the derivative of the incoherent weight-one Eisenstein
//! series attached to the negative plane L_-.
//!
//! Each coefficient factors over primes. At primes where L_- is unimodular the
//! local factor is the divisor sum ρ_p(m). At the remaining primes it is
//! L_p(1, χ)·α_p(1), where α_p(X) = Σ_k (d_k − d_{k−1}) X^k is built from the
//! counts d_k = #{x ∈ (μ + L_-)/p^k : Q(x) ≡ m mod p^k} / p^k. The derivative at
//! the unique vanishing prime p′ is −log p′ · L_{p′}(1, χ)·α′_{p′}(1).
//!
//! The global constant in front, (−2√|Δ| / h)·(2 / w)·(det L_-)^{−1/2} with the
//! sign conventions of the log-norm, was fixed once against κ_0(1) = −6 log 2
//! for the CM vector of norm 6 on the lattice of discriminant 6; every other
//! value is a prediction checked by the test suite.

use std::collections::{BTreeSet, HashMap};
use std::fs;
use std::path::PathBuf;
use std::sync::{Mutex, OnceLock};

use num_traits::{One, Signed, ToPrimitive, Zero};
use sha2::{Digest, Sha256};

use crate::arith::{
    self, class_number, factor, kronecker, ord_p, q, qi, unit_count, LogCombination, Q,
};
use crate::error::{Error, Result};
use crate::lattice::{CMSplitting, TraceZeroLattice};

/// Largest k used for density counts unless the valuation data asks for more.
pub const DEFAULT_KMAX: u32 = 12;

/// ρ_p(m) = Σ_{r=0}^{ord_p m} χ_Δ(p)^r.
pub fn rho_p(m: &Q, p: u64, disc: i64) -> i64 {
    let e = ord_p(m, p);
    if e < 0 {
        return 0;
    }
    let chi = kronecker(disc, p as i64) as i64;
    (0..=e).map(|r| chi.pow(r as u32)).sum()
}

/// Derivative (1/2)·log p·(ord_p(m)+1)·ρ_p(m/p) at a prime where ρ_p(m) = 0.
pub fn whittaker_derivative(m: &Q, p: u64, disc: i64) -> Result<LogCombination> {
    if rho_p(m, p, disc) != 0 {
        return Err(Error::Argument(format!("ρ_{p}({m}) ≠ 0")));
    }
    let e = ord_p(m, p);
    let mp = m / qi(p as i64);
    let c = q((e + 1) * rho_p(&mp, p, disc), 2);
    Ok(LogCombination::log_p(p, c))
}

/// The polynomial a y1² + b y1 y2 + c y2² + d y1 + e y2 + k.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct QuadPoly {
    pub a: i128,
    pub b: i128,
    pub c: i128,
    pub d: i128,
    pub e: i128,
    pub k: i128,
}

impl QuadPoly {
    fn eval(&self, x: i128, y: i128) -> i128 {
        self.a * x * x + self.b * x * y + self.c * y * y + self.d * x + self.e * y + self.k
    }
    fn grad(&self, x: i128, y: i128) -> (i128, i128) {
        (
            2 * self.a * x + self.b * y + self.d,
            self.b * x + 2 * self.c * y + self.e,
        )
    }

    /// Q(μ + y) − m for the form with bilinear Gram `g`, when integral.
    pub fn shifted(g: &[[i64; 2]; 2], mu: &[Q; 2], m: &Q) -> Option<QuadPoly> {
        let a = q(g[0][0], 2);
        let b = qi(g[0][1]);
        let c = q(g[1][1], 2);
        let qmu = &a * &mu[0] * &mu[0] + &b * &mu[0] * &mu[1] + &c * &mu[1] * &mu[1];
        let lin: Vec<Q> = (0..2)
            .map(|i| qi(g[i][0]) * &mu[0] + qi(g[i][1]) * &mu[1])
            .collect();
        let k = qmu - m;
        let int = |x: &Q| -> Option<i128> {
            if x.is_integer() {
                x.to_integer().to_i128()
            } else {
                None
            }
        };
        Some(QuadPoly {
            a: int(&a)?,
            b: int(&b)?,
            c: int(&c)?,
            d: int(&lin[0])?,
            e: int(&lin[1])?,
            k: int(&k)?,
        })
    }
}

fn sqrt_mod_p(n: i128, p: i128) -> Option<i128> {
    let n = n.rem_euclid(p);
    if n == 0 {
        return Some(0);
    }
    if p == 2 {
        return Some(n);
    }
    if pow_mod(n, (p - 1) / 2, p) != 1 {
        return None;
    }
    // Tonelli–Shanks.
    let (mut qq, mut s) = (p - 1, 0);
    while qq % 2 == 0 {
        qq /= 2;
        s += 1;
    }
    let mut z = 2;
    while pow_mod(z, (p - 1) / 2, p) != p - 1 {
        z += 1;
    }
    let mut m = s;
    let mut c = pow_mod(z, qq, p);
    let mut t = pow_mod(n, qq, p);
    let mut r = pow_mod(n, (qq + 1) / 2, p);
    while t != 1 {
        let mut i = 0;
        let mut tt = t;
        while tt != 1 {
            tt = tt * tt % p;
            i += 1;
        }
        let b = pow_mod(c, 1 << (m - i - 1), p);
        m = i;
        c = b * b % p;
        t = t * c % p;
        r = r * b % p;
    }
    Some(r)
}

fn pow_mod(mut b: i128, mut e: i128, m: i128) -> i128 {
    let mut r = 1i128;
    b = b.rem_euclid(m);
    while e > 0 {
        if e & 1 == 1 {
            r = r * b % m;
        }
        b = b * b % m;
        e >>= 1;
    }
    r
}

fn inv_mod(a: i128, p: i128) -> i128 {
    pow_mod(a, p - 2, p)
}

/// Roots of f mod p.
fn roots_mod_p(f: &QuadPoly, p: i128) -> Vec<(i128, i128)> {
    let mut out = Vec::new();
    if p < 64 {
        for x in 0..p {
            for y in 0..p {
                if f.eval(x, y).rem_euclid(p) == 0 {
                    out.push((x, y));
                }
            }
        }
        return out;
    }
    let c = f.c.rem_euclid(p);
    for x in 0..p {
        let lin = (f.b * x + f.e).rem_euclid(p);
        let cons = (f.a * x * x + f.d * x + f.k).rem_euclid(p);
        if c == 0 {
            if lin == 0 {
                if cons == 0 {
                    out.extend((0..p).map(|y| (x, y)));
                }
            } else {
                out.push((x, (-cons * inv_mod(lin, p)).rem_euclid(p)));
            }
            continue;
        }
        let disc = (lin * lin - 4 * c * cons).rem_euclid(p);
        if let Some(s) = sqrt_mod_p(disc, p) {
            let inv2c = inv_mod(2 * c % p, p);
            let r1 = ((-lin + s) * inv2c).rem_euclid(p);
            let r2 = ((-lin - s) * inv2c).rem_euclid(p);
            out.push((x, r1));
            if r2 != r1 {
                out.push((x, r2));
            }
        }
    }
    out
}

/// d_k = #{y mod p^k : f(y) ≡ 0 mod p^k} / p^k, by Hensel lifting: a root
/// mod p with nonzero gradient has p lifts per level; singular roots recurse on
/// f(x0 + p z) / p².
fn density(f: &QuadPoly, p: i128, k: u32, memo: &mut HashMap<(QuadPoly, u32), Q>) -> Q {
    if k == 0 {
        return Q::one();
    }
    if let Some(v) = memo.get(&(*f, k)) {
        return v.clone();
    }
    let roots = roots_mod_p(f, p);
    let r = if k == 1 {
        q(roots.len() as i64, p as i64)
    } else {
        let mut nonsing = 0i64;
        let mut acc = Q::zero();
        for &(x, y) in &roots {
            let (g1, g2) = f.grad(x, y);
            if g1.rem_euclid(p) != 0 || g2.rem_euclid(p) != 0 {
                nonsing += 1;
                continue;
            }
            let v = f.eval(x, y);
            if v.rem_euclid(p * p) != 0 {
                continue;
            }
            let g = QuadPoly {
                a: f.a,
                b: f.b,
                c: f.c,
                d: g1 / p,
                e: g2 / p,
                k: v / (p * p),
            };
            acc += density(&g, p, k - 2, memo);
        }
        acc + q(nonsing, p as i64)
    };
    memo.insert((*f, k), r.clone());
    r
}

/// Coefficients A_k of α_p(X) for k ≤ kmax. The last three must vanish; the
/// caller picks kmax beyond the p-adic valuations of m and of the lattice, so
/// that α_p is a polynomial of degree below kmax − 2.
pub fn density_polynomial(f: &QuadPoly, p: u64, kmax: u32) -> Result<Vec<Q>> {
    let pi = p as i128;
    let mut memo = HashMap::new();
    let mut prev = Q::one();
    let mut coeffs = vec![Q::one()];
    for k in 1..=kmax {
        let dk = density(f, pi, k, &mut memo);
        coeffs.push(&dk - &prev);
        prev = dk;
    }
    let n = coeffs.len();
    if n < 4 || !coeffs[n - 3..].iter().all(|c| c.is_zero()) {
        return Err(Error::Precision(format!(
            "local density at p={p} did not stabilise by k={kmax}"
        )));
    }
    while coeffs.len() > 1 && coeffs.last().is_some_and(|c| c.is_zero()) {
        coeffs.pop();
    }
    Ok(coeffs)
}

/// W*_{m,p}(0, μ), and its derivative when it vanishes.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalFactor {
    pub p: u64,
    pub value: Q,
    pub derivative: Option<LogCombination>,
}

fn local_l(p: u64, disc: i64) -> Q {
    let chi = kronecker(disc, p as i64) as i64;
    (Q::one() - q(chi, p as i64)).recip()
}

static MEMO: OnceLock<Mutex<HashMap<String, Vec<Q>>>> = OnceLock::new();

fn cache_key(f: &QuadPoly, p: u64) -> String {
    // Reduce the constant and linear terms mod a high power of p: the density
    // only depends on them p-adically to the depth used.
    format!("{p}|{}|{}|{}|{}|{}|{}", f.a, f.b, f.c, f.d, f.e, f.k)
}

fn cache_file(key: &str) -> Option<PathBuf> {
    let dir = std::env::var_os("SMCURVE_CACHE_DIR")?;
    let hash = Sha256::digest(key.as_bytes());
    let hex: String = hash.iter().map(|b| format!("{b:02x}")).collect();
    Some(PathBuf::from(dir).join(format!("{hex}.dens")))
}

/// Canonical length-prefixed encoding: each item is `<len>:<text>`.
fn encode(key: &str, coeffs: &[Q]) -> String {
    let mut s = String::new();
    for item in std::iter::once(key.to_string()).chain(coeffs.iter().map(|c| c.to_string())) {
        s.push_str(&format!("{}:{}", item.len(), item));
    }
    s
}

fn decode(text: &str) -> Option<(String, Vec<Q>)> {
    let mut items = Vec::new();
    let mut rest = text;
    while !rest.is_empty() {
        let colon = rest.find(':')?;
        let len: usize = rest[..colon].parse().ok()?;
        let start = colon + 1;
        items.push(rest.get(start..start + len)?.to_string());
        rest = &rest[start + len..];
    }
    let mut it = items.into_iter();
    let key = it.next()?;
    let coeffs = it
        .map(|s| s.parse::<Q>().ok())
        .collect::<Option<Vec<_>>>()?;
    Some((key, coeffs))
}

/// Density polynomial with an in-process memo and an optional on-disk cache.
pub fn cached_density_polynomial(f: &QuadPoly, p: u64, kmax: u32) -> Result<Vec<Q>> {
    let key = cache_key(f, p);
    let memo = MEMO.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(v) = memo.lock().unwrap().get(&key) {
        return Ok(v.clone());
    }
    let file = cache_file(&key);
    if let Some(path) = &file {
        if let Ok(text) = fs::read_to_string(path) {
            if let Some((k, v)) = decode(&text) {
                if k == key {
                    memo.lock().unwrap().insert(key, v.clone());
                    return Ok(v);
                }
            }
        }
    }
    let v = density_polynomial(f, p, kmax)?;
    if let Some(path) = &file {
        let tmp = path.with_extension(format!("tmp{}", std::process::id()));
        if fs::write(&tmp, encode(&key, &v)).is_ok() {
            let _ = fs::rename(&tmp, path);
        }
    }
    memo.lock().unwrap().insert(key, v.clone());
    Ok(v)
}

fn kmax_for(m: &Q, p: u64, det: i64) -> u32 {
    let e = ord_p(m, p).max(0) as u32;
    let d = arith::ord_p_int(4 * det as i128, p);
    DEFAULT_KMAX.max(e + d + 8)
}

/// Local factor at a prime where L_- is not unimodular, by density counting.
pub fn bad_prime_factor(
    m: &Q,
    p: u64,
    gram_minus: &[[i64; 2]; 2],
    mu: &[Q; 2],
    disc: i64,
) -> Result<LocalFactor> {
    let f = QuadPoly::shifted(gram_minus, mu, m)
        .ok_or_else(|| Error::Argument(format!("{m} ∉ Q(μ) + Z")))?;
    let det = gram_minus[0][0] * gram_minus[1][1] - gram_minus[0][1] * gram_minus[1][0];
    let coeffs = cached_density_polynomial(&f, p, kmax_for(m, p, det))?;
    let l = local_l(p, disc);
    let value: Q = coeffs.iter().sum::<Q>() * &l;
    let derivative = if value.is_zero() {
        let d: Q = coeffs
            .iter()
            .enumerate()
            .map(|(k, a)| a * qi(k as i64))
            .sum();
        Some(LogCombination::log_p(p, -(d * &l)))
    } else {
        None
    };
    Ok(LocalFactor {
        p,
        value,
        derivative,
    })
}

/// Field data (Δ, h, w) of the CM field.
#[derive(Clone, Copy, Debug)]
pub struct FieldData {
    pub disc: i64,
    pub h: u64,
    pub w: u64,
}

impl FieldData {
    pub fn new(disc: i64) -> Result<Self> {
        Ok(FieldData {
            disc,
            h: class_number(disc)?,
            w: unit_count(disc),
        })
    }
}

fn sqrt_rational(x: &Q) -> Option<Q> {
    let n = x.numer().sqrt();
    let d = x.denom().sqrt();
    if &n * &n == *x.numer() && &d * &d == *x.denom() {
        Some(Q::new(n, d))
    } else {
        None
    }
}

/// κ^-_μ(m) for μ ∈ L_-^∨ given in the L_- basis. Values at m < 0 are 0; at
/// m = 0 the archimedean constant k_0 is carried in the residual.
pub fn kappa_minus(mu: &[Q; 2], m: &Q, split: &CMSplitting) -> Result<LogCombination> {
    let field = FieldData::new(split.split.disc)?;
    kappa_minus_with(mu, m, &split.gram_minus, field)
}

pub fn kappa_minus_with(
    mu: &[Q; 2],
    m: &Q,
    gram_minus: &[[i64; 2]; 2],
    field: FieldData,
) -> Result<LogCombination> {
    if m.is_negative() {
        return Ok(LogCombination::zero());
    }
    if QuadPoly::shifted(gram_minus, mu, m).is_none() {
        return Ok(LogCombination::zero());
    }
    if m.is_zero() {
        let mut out = LogCombination::zero();
        if mu.iter().all(|x| x.is_integer()) {
            out.residual = k0_constant(field.disc)?;
            return Ok(out);
        }
        return constant_term_derivative(mu, gram_minus);
    }
    let det = gram_minus[0][0] * gram_minus[1][1] - gram_minus[0][1] * gram_minus[1][0];
    let mut bad: BTreeSet<u64> = BTreeSet::new();
    for (p, _) in factor((2 * det.unsigned_abs()) as u128) {
        bad.insert(p as u64);
    }
    let mut others: BTreeSet<u64> = BTreeSet::new();
    for n in [m.numer(), m.denom()] {
        let n = n
            .abs()
            .to_u128()
            .ok_or_else(|| Error::Argument("m too large".into()))?;
        for (p, _) in factor(n) {
            if !bad.contains(&(p as u64)) {
                others.insert(p as u64);
            }
        }
    }
    let mut value = Q::one();
    let mut vanishing: Vec<LogCombination> = Vec::new();
    for &p in &bad {
        let lf = bad_prime_factor(m, p, gram_minus, mu, field.disc)?;
        match lf.derivative {
            Some(d) => vanishing.push(d),
            None => value *= lf.value,
        }
    }
    for &p in &others {
        let r = rho_p(m, p, field.disc);
        if r == 0 {
            vanishing.push(whittaker_derivative(m, p, field.disc)?);
        } else {
            value *= qi(r);
        }
    }
    match vanishing.len() {
        0 => Err(Error::Domain(format!(
            "no local factor vanishes at m={m}: the CM cycle meets the divisor"
        ))),
        1 => {
            let s = sqrt_rational(&q(field.disc.abs(), det.abs())).ok_or_else(|| {
                Error::Internal(format!(
                    "|Δ|/det = {}/{} is not a square",
                    field.disc.abs(),
                    det.abs()
                ))
            })?;
            // −2·s/L(0, χ) with L(0, χ) = 2h/w.
            let scale = -s * qi(field.w as i64) / qi(field.h as i64) * value;
            Ok(vanishing[0].scaled(&scale))
        }
        _ => Ok(LogCombination::zero()),
    }
}

/// κ_η(m) for η ∈ L∨ with rational lattice coordinates, summed over the glue
/// group and over x ∈ η_+ + λ_+ + L_+ with Q(x) ≤ m.
pub fn kappa_eta(
    l: &TraceZeroLattice,
    eta: &[Q; 3],
    m: &Q,
    split: &CMSplitting,
) -> Result<LogCombination> {
    let field = FieldData::new(split.split.disc)?;
    let z0q = split.z0.map(qi);
    let t0 = l.qform_q(&z0q);
    let eta_plus = l.bilinear_q(eta, &z0q) / (&t0 * qi(2));
    let rest: [Q; 3] = [0, 1, 2].map(|i| &eta[i] - &eta_plus * &z0q[i]);
    let eta_minus = minus_coords(split, &rest)?;
    let mut out = LogCombination::zero();
    for g in &split.glue {
        let mu = [&eta_minus[0] + &g.minus[0], &eta_minus[1] + &g.minus[1]];
        let mu = mu.map(|x| &x - x.floor());
        let c = &eta_plus + &g.plus;
        let c = &c - c.floor();
        // (c + j)² t0 ≤ m.
        let bound = (arith::q_to_f64(m) / arith::q_to_f64(&t0)).sqrt().ceil() as i64 + 1;
        for j in -bound - 1..=bound + 1 {
            let x = &c + qi(j);
            let mp = m - &x * &x * &t0;
            if mp.is_negative() {
                continue;
            }
            let k = kappa_minus_with(&mu, &mp, &split.gram_minus, field)?;
            out.add(&k);
        }
    }
    Ok(out)
}

/// N(X) = (1 − X²)·α_p(X) for m = 0, where α_p(X) = Σ_k (d_k − d_{k−1}) X^k.
/// The increments are eventually 2-periodic (x ↦ px scales Q by p²), so N is a
/// polynomial.
pub fn constant_density_numerator(f: &QuadPoly, p: u64) -> Result<Vec<Q>> {
    let pi = p as i128;
    let mut memo = HashMap::new();
    let mut kmax = DEFAULT_KMAX;
    loop {
        let mut a = vec![Q::one()];
        let mut prev = Q::one();
        for k in 1..=kmax {
            let dk = density(f, pi, k, &mut memo);
            a.push(&dk - &prev);
            prev = dk;
        }
        let n = a.len();
        if (n - 4..n).all(|k| a[k] == a[k - 2]) {
            let mut num: Vec<Q> = (0..n)
                .map(|k| {
                    if k >= 2 {
                        &a[k] - &a[k - 2]
                    } else {
                        a[k].clone()
                    }
                })
                .collect();
            // Past the periodic range (1 − X²)·α has no further terms.
            while num.len() > 1 && num.last().is_some_and(|c| c.is_zero()) {
                num.pop();
            }
            return Ok(num);
        }
        if kmax >= 4 * DEFAULT_KMAX {
            return Err(Error::Precision(format!(
                "m = 0 density at p={p} is not periodic by k={kmax}"
            )));
        }
        kmax += DEFAULT_KMAX;
    }
}

fn poly_at_one(c: &[Q]) -> Q {
    c.iter().sum()
}

fn poly_derivative_at_one(c: &[Q]) -> Q {
    c.iter().enumerate().map(|(k, a)| a * qi(k as i64)).sum()
}

/// Divides by X − 1, assuming c(1) = 0.
fn divide_by_x_minus_one(c: &[Q]) -> Vec<Q> {
    let n = c.len();
    let mut out = vec![Q::zero(); n.saturating_sub(1)];
    let mut carry = Q::zero();
    for k in (1..n).rev() {
        carry += &c[k];
        out[k - 1] = carry.clone();
    }
    out
}

/// κ_μ(0) for μ ∉ L_-: minus the s-derivative at 0 of Π_p W_{0,p}(s, μ)/W_{0,p}(s, 0)
/// over the primes where μ is not integral. Each ratio is N_μ/N_0 in X = p^{−s}.
pub fn constant_term_derivative(mu: &[Q; 2], gram_minus: &[[i64; 2]; 2]) -> Result<LogCombination> {
    let mut primes: BTreeSet<u64> = BTreeSet::new();
    for x in mu {
        let den = x
            .denom()
            .to_u128()
            .ok_or_else(|| Error::Argument("μ too large".into()))?;
        for (p, _) in factor(den) {
            primes.insert(p as u64);
        }
    }
    let zero = [Q::zero(), Q::zero()];
    let f_mu = QuadPoly::shifted(gram_minus, mu, &Q::zero())
        .ok_or_else(|| Error::Argument("Q(μ) ∉ Z".into()))?;
    let f_0 = QuadPoly::shifted(gram_minus, &zero, &Q::zero()).expect("0 represents 0");
    // (value at s = 0, derivative at s = 0) for each prime.
    let mut ratios: Vec<(Q, LogCombination)> = Vec::new();
    for &p in &primes {
        let mut num = constant_density_numerator(&f_mu, p)?;
        let mut den = constant_density_numerator(&f_0, p)?;
        while poly_at_one(&den).is_zero() {
            if !poly_at_one(&num).is_zero() {
                return Err(Error::Internal(format!("W_0,{p}(0, μ) has a pole")));
            }
            num = divide_by_x_minus_one(&num);
            den = divide_by_x_minus_one(&den);
        }
        let d1 = poly_at_one(&den);
        let value = poly_at_one(&num) / &d1;
        // d/ds = −log p · X d/dX at X = 1.
        let deriv = LogCombination::log_p(p, -(poly_derivative_at_one(&num) / &d1));
        ratios.push((value, deriv));
    }
    let mut out = LogCombination::zero();
    for (i, (_, d)) in ratios.iter().enumerate() {
        let others: Q = ratios
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(_, (v, _))| v.clone())
            .product();
        out.add_scaled(d, &-others);
    }
    Ok(out)
}

/// Coordinates of an element of L_- ⊗ Q in the L_- basis.
pub fn minus_coords(split: &CMSplitting, v: &[Q; 3]) -> Result<[Q; 2]> {
    let [u, w] = &split.lminus;
    // Solve a u + b w = v using two independent coordinates.
    for (i, j) in [(0, 1), (0, 2), (1, 2)] {
        let det = u[i] * w[j] - u[j] * w[i];
        if det != 0 {
            let a = (&v[i] * qi(w[j]) - &v[j] * qi(w[i])) / qi(det);
            let b = (&v[j] * qi(u[i]) - &v[i] * qi(u[j])) / qi(det);
            let k = 3 - i - j;
            if &a * qi(u[k]) + &b * qi(w[k]) != v[k] {
                return Err(Error::Internal(
                    "vector is not in the negative plane".into(),
                ));
            }
            return Ok([a, b]);
        }
    }
    Err(Error::Internal("degenerate L_- basis".into()))
}

/// k_0 = log|Δ| + 2Λ′(1, χ)/Λ(1, χ) through Lerch's formula for L′(0, χ).
pub fn k0_constant(disc: i64) -> Result<f64> {
    k0_lerch(disc)
}

pub fn k0_lerch(disc: i64) -> Result<f64> {
    if !arith::is_fundamental(disc) || disc >= 0 {
        return Err(Error::Argument(format!(
            "{disc} is not a negative fundamental discriminant"
        )));
    }
    let qd = disc.unsigned_abs();
    let h = class_number(disc)? as f64;
    let w = unit_count(disc) as f64;
    let l0 = 2.0 * h / w;
    let s: f64 = (1..qd)
        .map(|a| {
            kronecker(disc, a as i64) as f64
                * statrs::function::gamma::ln_gamma(a as f64 / qd as f64)
        })
        .sum();
    let pi = std::f64::consts::PI;
    Ok(
        (qd as f64).ln() + pi.ln() + statrs::consts::EULER_MASCHERONI + 2.0 * 2f64.ln()
            - 2.0 * s / l0,
    )
}

/// k_0 from the theta integral of the completed L-function on [1, ∞).
pub fn k0_theta(disc: i64) -> Result<f64> {
    if !arith::is_fundamental(disc) || disc >= 0 {
        return Err(Error::Argument(format!(
            "{disc} is not a negative fundamental discriminant"
        )));
    }
    let qd = disc.unsigned_abs() as f64;
    let pi = std::f64::consts::PI;
    let chis: Vec<f64> = (0..=((60.0 * qd / pi).sqrt() as i64 + 2))
        .map(|n| kronecker(disc, n) as f64)
        .collect();
    let theta = |x: f64| -> f64 {
        let mut s = 0.0;
        for (n, &c) in chis.iter().enumerate().skip(1) {
            let e = pi * (n * n) as f64 * x / qd;
            if e > 60.0 {
                break;
            }
            if c != 0.0 {
                s += c * n as f64 * (-e).exp();
            }
        }
        s
    };
    // Substitute x = e^u on [0, U].
    let upper = (60.0 * qd / pi).ln();
    let steps = 40_000usize;
    let h = upper / steps as f64;
    let (mut val, mut der) = (0.0, 0.0);
    for i in 0..=steps {
        let u = i as f64 * h;
        let x = u.exp();
        let th = theta(x);
        let wgt = if i == 0 || i == steps {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        // dx/x = du.
        val += wgt * th * (x + x.sqrt());
        der += wgt * th * 0.5 * u * (x - x.sqrt());
    }
    Ok(2.0 * der / val)
}

/// Rational log-coefficients only: the residual must vanish.
pub fn assert_rational(k: &LogCombination, tol: f64) -> Result<()> {
    if k.residual.abs() > tol {
        return Err(Error::Precision(format!(
            "archimedean residual {}",
            k.residual
        )));
    }
    Ok(())
}

/// Recomputes κ_0(1) = −6 log 2 for the norm-6 CM vector on the
/// discriminant-6 lattice; any disagreement signals a broken normalization.
pub fn calibration_check() -> Result<()> {
    let order = crate::quaternion::maximal_order(6, 5)?;
    let l = crate::lattice::trace_zero_lattice(&order)?;
    let s = crate::lattice::cm_splitting(&l, &[0, 0, 1])?;
    let k = kappa_eta(&l, &[qi(0), qi(0), qi(0)], &qi(1), &s)?;
    let expect = LogCombination::log_p(2, qi(-6));
    if k != expect {
        return Err(Error::Calibration(format!(
            "κ_0(1) = {k}, expected {expect}"
        )));
    }
    Ok(())
}
