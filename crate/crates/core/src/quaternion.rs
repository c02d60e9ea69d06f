//! Rational quaternion algebras B = (a, b / Q), the standard maximal order and
//! the real matrix embedding.

use std::collections::BTreeSet;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::arith::{self, is_prime, kronecker, prime_divisors, qi, Q};
use crate::error::{Error, Result};

/// The algebra with α² = a, β² = b, αβ = −βα.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct QuatAlgebra {
    pub a: i64,
    pub b: i64,
    pub disc: u64,
}

impl QuatAlgebra {
    /// Builds (a, b / Q) and records the product of its finite ramified primes.
    pub fn new(a: i64, b: i64) -> Result<Self> {
        if a == 0 || b == 0 {
            return Err(Error::Argument("a and b must be nonzero".into()));
        }
        let disc = ramified_primes(a, b).iter().product();
        Ok(QuatAlgebra { a, b, disc })
    }

    /// The algebra (q, D / Q) with q = find_q(D).
    pub fn for_discriminant(d: u64) -> Result<Self> {
        let q = find_q(d)?;
        let alg = QuatAlgebra::new(q as i64, d as i64)?;
        if alg.disc != d {
            return Err(Error::Internal(format!(
                "(q={q}, D={d}) has discriminant {}",
                alg.disc
            )));
        }
        Ok(alg)
    }

    pub fn one(&self) -> QuatElem {
        QuatElem::new(*self, [qi(1), qi(0), qi(0), qi(0)])
    }
    pub fn alpha(&self) -> QuatElem {
        QuatElem::new(*self, [qi(0), qi(1), qi(0), qi(0)])
    }
    pub fn beta(&self) -> QuatElem {
        QuatElem::new(*self, [qi(0), qi(0), qi(1), qi(0)])
    }
    pub fn alpha_beta(&self) -> QuatElem {
        QuatElem::new(*self, [qi(0), qi(0), qi(0), qi(1)])
    }
    pub fn elem(&self, c: [Q; 4]) -> QuatElem {
        QuatElem::new(*self, c)
    }
}

/// x0 + x1 α + x2 β + x3 αβ.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct QuatElem {
    pub alg: QuatAlgebra,
    pub c: [Q; 4],
}

impl QuatElem {
    pub fn new(alg: QuatAlgebra, c: [Q; 4]) -> Self {
        QuatElem { alg, c }
    }

    pub fn from_ints(alg: QuatAlgebra, c: [i64; 4]) -> Self {
        QuatElem::new(alg, c.map(qi))
    }

    pub fn conj(&self) -> QuatElem {
        let [x0, x1, x2, x3] = &self.c;
        QuatElem::new(self.alg, [x0.clone(), -x1, -x2, -x3])
    }

    pub fn trace(&self) -> Q {
        &self.c[0] * qi(2)
    }

    pub fn norm(&self) -> Q {
        let a = qi(self.alg.a);
        let b = qi(self.alg.b);
        let [x0, x1, x2, x3] = &self.c;
        x0 * x0 - &a * x1 * x1 - &b * x2 * x2 + &a * &b * x3 * x3
    }

    pub fn scale(&self, k: &Q) -> QuatElem {
        QuatElem::new(self.alg, self.c.clone().map(|x| x * k))
    }

    /// Product in the algebra; errors on mixed algebras.
    pub fn mul(&self, other: &QuatElem) -> Result<QuatElem> {
        if self.alg != other.alg {
            return Err(Error::Argument("elements of different algebras".into()));
        }
        let a = qi(self.alg.a);
        let b = qi(self.alg.b);
        let [x0, x1, x2, x3] = &self.c;
        let [y0, y1, y2, y3] = &other.c;
        let ab = &a * &b;
        Ok(QuatElem::new(
            self.alg,
            [
                x0 * y0 + &a * x1 * y1 + &b * x2 * y2 - &ab * x3 * y3,
                x0 * y1 + x1 * y0 - &b * x2 * y3 + &b * x3 * y2,
                x0 * y2 + x2 * y0 + &a * x1 * y3 - &a * x3 * y1,
                x0 * y3 + x3 * y0 + x1 * y2 - x2 * y1,
            ],
        ))
    }

    pub fn is_integral_coords(&self) -> bool {
        self.c.iter().all(|x| x.is_integer())
    }

    /// Image under the embedding B → M_2(Q(√b)).
    pub fn embed(&self) -> SqrtMatrix {
        let a = qi(self.alg.a);
        let [x0, x1, x2, x3] = &self.c;
        SqrtMatrix {
            b: self.alg.b,
            m: [
                [
                    QSqrt::new(x0.clone(), x2.clone()),
                    QSqrt::new(&a * x1, -(&a * x3)),
                ],
                [
                    QSqrt::new(x1.clone(), x3.clone()),
                    QSqrt::new(x0.clone(), -x2),
                ],
            ],
        }
    }
}

impl fmt::Display for QuatElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names = ["", "a", "b", "ab"];
        let mut first = true;
        for (x, n) in self.c.iter().zip(names) {
            if x.is_zero() {
                continue;
            }
            if !first {
                write!(f, " {} ", if x.is_negative() { '-' } else { '+' })?;
            } else if x.is_negative() {
                write!(f, "-")?;
            }
            first = false;
            let ax = x.abs();
            if n.is_empty() {
                write!(f, "{ax}")?;
            } else if ax.is_one() {
                write!(f, "{n}")?;
            } else {
                write!(f, "{ax}*{n}")?;
            }
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}

/// An element p + r√b of Q(√b), with b not a perfect square in practice.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct QSqrt {
    pub rat: Q,
    pub irr: Q,
}

impl QSqrt {
    pub fn new(rat: Q, irr: Q) -> Self {
        QSqrt { rat, irr }
    }
    pub fn rational(x: Q) -> Self {
        QSqrt::new(x, Q::zero())
    }
    pub fn mul(&self, o: &QSqrt, b: i64) -> QSqrt {
        QSqrt::new(
            &self.rat * &o.rat + qi(b) * &self.irr * &o.irr,
            &self.rat * &o.irr + &self.irr * &o.rat,
        )
    }
    pub fn to_f64(&self, b: i64) -> f64 {
        arith::q_to_f64(&self.rat) + arith::q_to_f64(&self.irr) * (b as f64).sqrt()
    }
}

impl Add for &QSqrt {
    type Output = QSqrt;
    fn add(self, o: &QSqrt) -> QSqrt {
        QSqrt::new(&self.rat + &o.rat, &self.irr + &o.irr)
    }
}

impl Sub for &QSqrt {
    type Output = QSqrt;
    fn sub(self, o: &QSqrt) -> QSqrt {
        QSqrt::new(&self.rat - &o.rat, &self.irr - &o.irr)
    }
}

impl Neg for &QSqrt {
    type Output = QSqrt;
    fn neg(self) -> QSqrt {
        QSqrt::new(-&self.rat, -&self.irr)
    }
}

/// 2×2 matrix over Q(√b).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SqrtMatrix {
    pub b: i64,
    pub m: [[QSqrt; 2]; 2],
}

impl SqrtMatrix {
    pub fn det(&self) -> QSqrt {
        let b = self.b;
        &self.m[0][0].mul(&self.m[1][1], b) - &self.m[0][1].mul(&self.m[1][0], b)
    }
    pub fn trace(&self) -> QSqrt {
        &self.m[0][0] + &self.m[1][1]
    }
}

impl Mul for &SqrtMatrix {
    type Output = SqrtMatrix;
    fn mul(self, o: &SqrtMatrix) -> SqrtMatrix {
        let b = self.b;
        let e = |i: usize, j: usize| {
            &self.m[i][0].mul(&o.m[0][j], b) + &self.m[i][1].mul(&o.m[1][j], b)
        };
        SqrtMatrix {
            b,
            m: [[e(0, 0), e(0, 1)], [e(1, 0), e(1, 1)]],
        }
    }
}

/// Least prime q ≡ 5 mod 8 with (q/p) = −1 for every odd p | D.
pub fn find_q(d: u64) -> Result<u64> {
    if d == 0 || !arith::is_squarefree(d) {
        return Err(Error::Argument(format!("D={d} must be squarefree")));
    }
    let odd: Vec<u64> = prime_divisors(d as i64)
        .into_iter()
        .filter(|&p| p != 2)
        .collect();
    let mut q = 5u64;
    while q < 1_000_000 {
        if is_prime(q as u128) && odd.iter().all(|&p| kronecker(q as i64, p as i64) == -1) {
            return Ok(q);
        }
        q += 8;
    }
    Err(Error::Domain(format!(
        "no admissible q below 10^6 for D={d}"
    )))
}

/// A Z-order given by four basis elements.
#[derive(Clone, Debug)]
pub struct QuatOrder {
    pub alg: QuatAlgebra,
    pub basis: [QuatElem; 4],
    /// The square root m of D mod q used in the construction.
    pub m: u64,
}

impl QuatOrder {
    /// Coordinates of x with respect to the order basis (rational in general).
    pub fn coords(&self, x: &QuatElem) -> Vec<Q> {
        let cols: Vec<Vec<Q>> = self.basis.iter().map(|e| e.c.to_vec()).collect();
        let mat: Vec<Vec<Q>> = (0..4)
            .map(|i| (0..4).map(|j| cols[j][i].clone()).collect())
            .collect();
        solve_q(&mat, &x.c).expect("order basis is a Q-basis")
    }

    pub fn contains(&self, x: &QuatElem) -> bool {
        self.coords(x).iter().all(|c| c.is_integer())
    }

    /// Integral trace and norm on the basis, closure under multiplication and 1 ∈ O.
    pub fn check_order(&self) -> Result<()> {
        if !self.contains(&self.alg.one()) {
            return Err(Error::Internal("1 is not in the order".into()));
        }
        for e in &self.basis {
            if !e.trace().is_integer() || !e.norm().is_integer() {
                return Err(Error::Internal(format!("{e} is not integral")));
            }
        }
        for x in &self.basis {
            for y in &self.basis {
                let p = x.mul(y)?;
                if !self.contains(&p) {
                    return Err(Error::Internal(format!("({x})({y}) leaves the order")));
                }
            }
        }
        Ok(())
    }

    /// sqrt(|det(tr(e_i e_j))|), the reduced discriminant.
    pub fn reduced_discriminant(&self) -> Result<u64> {
        let mut m = vec![vec![Q::zero(); 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                m[i][j] = self.basis[i].mul(&self.basis[j])?.trace();
            }
        }
        let det = det_q(&m).abs();
        if !det.is_integer() {
            return Err(Error::Internal("non-integral discriminant".into()));
        }
        let d = det.to_integer();
        let r = d.sqrt();
        if &r * &r != d {
            return Err(Error::Internal(format!("discriminant {d} is not a square")));
        }
        u64::try_from(&r).map_err(|_| Error::Internal("discriminant overflow".into()))
    }
}

/// The maximal order Z + Z(1+α)/2 + Z(mα+αβ)/q + Z·e1e2 with m the least
/// positive square root of D mod q.
pub fn maximal_order(d: u64, q: u64) -> Result<QuatOrder> {
    let alg = QuatAlgebra::new(q as i64, d as i64)?;
    let m = (1..q)
        .find(|m| (m * m) % q == d % q)
        .ok_or_else(|| Error::Internal(format!("{d} is not a square mod {q}")))?;
    let one = alg.one();
    let e1 = alg.elem([arith::q(1, 2), arith::q(1, 2), qi(0), qi(0)]);
    let qq = q as i64;
    let e2 = alg.elem([qi(0), arith::q(m as i64, qq), qi(0), arith::q(1, qq)]);
    let e3 = e1.mul(&e2)?;
    let ord = QuatOrder {
        alg,
        basis: [one, e1, e2, e3],
        m,
    };
    ord.check_order()?;
    Ok(ord)
}

/// Hilbert symbol (a, b)_p for a prime p.
pub fn hilbert_symbol(a: i64, b: i64, p: u64) -> i32 {
    let p_i = p as i64;
    let (alpha, u) = split_p(a, p_i);
    let (beta, v) = split_p(b, p_i);
    if p == 2 {
        let eps = |x: i64| -> i64 { ((x.rem_euclid(8) - 1) / 2) % 2 };
        let omega = |x: i64| -> i64 { ((x.rem_euclid(8) * x.rem_euclid(8) - 1) / 8) % 2 };
        let e = eps(u) * eps(v) + alpha * omega(v) + beta * omega(u);
        if e.rem_euclid(2) == 0 {
            1
        } else {
            -1
        }
    } else {
        let mut s = if (alpha * beta).rem_euclid(2) == 1 && (p % 4 == 3) {
            -1
        } else {
            1
        };
        if beta % 2 == 1 {
            s *= kronecker(u, p_i);
        }
        if alpha % 2 == 1 {
            s *= kronecker(v, p_i);
        }
        s
    }
}

fn split_p(mut x: i64, p: i64) -> (i64, i64) {
    let mut e = 0;
    while x % p == 0 {
        x /= p;
        e += 1;
    }
    (e, x)
}

/// Finite primes at which (a, b / Q) ramifies.
pub fn ramified_primes(a: i64, b: i64) -> BTreeSet<u64> {
    let mut cand: BTreeSet<u64> = BTreeSet::new();
    cand.insert(2);
    cand.extend(prime_divisors(a));
    cand.extend(prime_divisors(b));
    cand.into_iter()
        .filter(|&p| hilbert_symbol(a, b, p) == -1)
        .collect()
}

fn det_q(m: &[Vec<Q>]) -> Q {
    let n = m.len();
    let mut a: Vec<Vec<Q>> = m.to_vec();
    let mut det = Q::one();
    for col in 0..n {
        let Some(piv) = (col..n).find(|&r| !a[r][col].is_zero()) else {
            return Q::zero();
        };
        if piv != col {
            a.swap(piv, col);
            det = -det;
        }
        det *= &a[col][col];
        for r in col + 1..n {
            let f = &a[r][col] / &a[col][col];
            for c in col..n {
                let t = &f * &a[col][c];
                a[r][c] -= t;
            }
        }
    }
    det
}

/// Solves mat · x = rhs over Q; None when singular.
pub(crate) fn solve_q(mat: &[Vec<Q>], rhs: &[Q]) -> Option<Vec<Q>> {
    let n = mat.len();
    let mut a: Vec<Vec<Q>> = mat
        .iter()
        .zip(rhs)
        .map(|(row, r)| {
            let mut v = row.clone();
            v.push(r.clone());
            v
        })
        .collect();
    for col in 0..n {
        let piv = (col..n).find(|&r| !a[r][col].is_zero())?;
        a.swap(piv, col);
        let inv = a[col][col].recip();
        for c in col..=n {
            a[col][c] = &a[col][c] * &inv;
        }
        for r in 0..n {
            if r != col && !a[r][col].is_zero() {
                let f = a[r][col].clone();
                for c in col..=n {
                    let t = &f * &a[col][c];
                    a[r][c] -= t;
                }
            }
        }
    }
    Some(a.into_iter().map(|row| row[n].clone()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_hilbert(a: i64, b: i64, p: u64) -> i32 {
        // ax² + by² = z² has a primitive solution mod p^k for k large enough.
        let k = if p == 2 { 5 } else { 3 };
        let pk = (p as i64).pow(k);
        for x in 0..pk {
            for y in 0..pk {
                for z in 0..pk {
                    let prim = x % p as i64 != 0 || y % p as i64 != 0 || z % p as i64 != 0;
                    if prim && (a * x * x + b * y * y - z * z).rem_euclid(pk) == 0 {
                        return 1;
                    }
                }
            }
        }
        -1
    }

    #[test]
    fn basis_products() {
        let b = QuatAlgebra::new(5, 6).unwrap();
        assert_eq!(b.alpha().mul(&b.beta()).unwrap(), b.alpha_beta());
        assert_eq!(
            b.beta().mul(&b.alpha()).unwrap(),
            b.alpha_beta().scale(&qi(-1))
        );
        let x = b.elem([qi(1), qi(1), qi(1), qi(0)]);
        assert_eq!(x.mul(&x.conj()).unwrap(), b.one().scale(&x.norm()));
    }

    #[test]
    fn q_choice() {
        assert_eq!(find_q(6).unwrap(), 5);
        assert_eq!(find_q(10).unwrap(), 13);
        assert_eq!(find_q(2).unwrap(), 5);
    }

    #[test]
    fn orders() {
        let o = maximal_order(6, 5).unwrap();
        assert_eq!(o.m, 1);
        let alg = o.alg;
        assert_eq!(
            o.basis[2],
            alg.elem([qi(0), arith::q(1, 5), qi(0), arith::q(1, 5)])
        );
        assert_eq!(
            o.basis[3],
            alg.elem([
                arith::q(1, 2),
                arith::q(1, 10),
                arith::q(1, 2),
                arith::q(1, 10)
            ])
        );
        assert_eq!(o.reduced_discriminant().unwrap(), 6);
        let o = maximal_order(10, 13).unwrap();
        assert_eq!(o.m, 6);
        let alg = o.alg;
        assert_eq!(
            o.basis[3],
            alg.elem([
                arith::q(3, 1),
                arith::q(3, 13),
                arith::q(1, 2),
                arith::q(1, 26)
            ])
        );
        assert_eq!(o.reduced_discriminant().unwrap(), 10);
    }

    #[test]
    fn embedding() {
        let alg = QuatAlgebra::new(5, 6).unwrap();
        let a = alg.alpha().embed();
        assert_eq!(a.m[0][1], QSqrt::rational(qi(5)));
        assert_eq!(a.m[1][0], QSqrt::rational(qi(1)));
        let b = alg.beta().embed();
        assert_eq!(b.m[0][0], QSqrt::new(qi(0), qi(1)));
        assert_eq!(b.m[1][1], QSqrt::new(qi(0), qi(-1)));
        let x = alg.elem([qi(1), qi(1), qi(0), qi(0)]);
        assert_eq!(x.embed().det(), QSqrt::rational(qi(1 - 5)));
    }

    #[test]
    fn ramification() {
        assert_eq!(ramified_primes(5, 6), BTreeSet::from([2, 3]));
        assert_eq!(ramified_primes(13, 10), BTreeSet::from([2, 5]));
        assert!(ramified_primes(1, 1).is_empty());
        for &(a, b) in &[(5, 6), (13, 10), (-1, -1), (2, 5), (3, -7), (-6, 10)] {
            for p in [2u64, 3, 5, 7] {
                assert_eq!(
                    hilbert_symbol(a, b, p),
                    brute_hilbert(a, b, p),
                    "({a},{b})_{p}"
                );
            }
        }
    }
}
