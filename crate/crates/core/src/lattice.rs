//! The trace-zero lattice L = O ∩ V with Q(x) = n(x), its discriminant form,
//! CM vectors and the splitting L_+ ⊕ L_- with its glue group.

use std::collections::HashMap;

use num_integer::Integer;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::arith::{self, disc_split, q, qi, DiscSplit, Q};
use crate::error::{Error, Result};
use crate::linalg::{self, det3, lcm, mat_mul, row_reduce, smith, IMat};
use crate::quaternion::{solve_q, QSqrt, QuatElem, QuatOrder};

/// Rank-3 lattice of trace-zero elements with Gram matrix (x, y) = tr(x ȳ).
#[derive(Clone, Debug)]
pub struct TraceZeroLattice {
    pub order: QuatOrder,
    pub basis: [QuatElem; 3],
    pub gram: [[i64; 3]; 3],
    /// True when the basis is α, e2, (β+αβ)/2.
    pub standard_basis: bool,
}

impl TraceZeroLattice {
    pub fn d(&self) -> u64 {
        self.order.alg.disc
    }

    pub fn det(&self) -> i64 {
        det3(&self.gram_i128()) as i64
    }

    pub(crate) fn gram_i128(&self) -> IMat {
        self.gram
            .iter()
            .map(|r| r.iter().map(|&x| x as i128).collect())
            .collect()
    }

    /// Q(v) for integer coordinates v.
    pub fn qform(&self, v: &[i64; 3]) -> i128 {
        let mut s = 0i128;
        for i in 0..3 {
            for j in 0..3 {
                s += self.gram[i][j] as i128 * v[i] as i128 * v[j] as i128;
            }
        }
        s / 2
    }

    pub fn bilinear(&self, v: &[i64; 3], w: &[i64; 3]) -> i128 {
        let mut s = 0i128;
        for i in 0..3 {
            for j in 0..3 {
                s += self.gram[i][j] as i128 * v[i] as i128 * w[j] as i128;
            }
        }
        s
    }

    /// Q on rational coordinates.
    pub fn qform_q(&self, v: &[Q; 3]) -> Q {
        self.bilinear_q(v, v) / qi(2)
    }

    pub fn bilinear_q(&self, v: &[Q; 3], w: &[Q; 3]) -> Q {
        let mut s = Q::zero();
        for i in 0..3 {
            for j in 0..3 {
                s += qi(self.gram[i][j]) * &v[i] * &w[j];
            }
        }
        s
    }

    pub fn element(&self, v: &[Q; 3]) -> QuatElem {
        let alg = self.order.alg;
        let mut c = [qi(0), qi(0), qi(0), qi(0)];
        for (k, b) in v.iter().zip(&self.basis) {
            for i in 0..4 {
                c[i] += k * &b.c[i];
            }
        }
        alg.elem(c)
    }

    pub fn element_int(&self, v: &[i64; 3]) -> QuatElem {
        self.element(&v.map(qi))
    }

    /// Coordinates of a trace-zero element in the lattice basis.
    pub fn coords(&self, x: &QuatElem) -> Result<[Q; 3]> {
        if !x.c[0].is_zero() {
            return Err(Error::Argument(format!("{x} has nonzero trace")));
        }
        let mat: Vec<Vec<Q>> = (1..4)
            .map(|i| (0..3).map(|j| self.basis[j].c[i].clone()).collect())
            .collect();
        let sol = solve_q(&mat, &[x.c[1].clone(), x.c[2].clone(), x.c[3].clone()])
            .ok_or_else(|| Error::Internal("degenerate lattice basis".into()))?;
        Ok([sol[0].clone(), sol[1].clone(), sol[2].clone()])
    }

    pub fn coords_int(&self, x: &QuatElem) -> Result<[i64; 3]> {
        let c = self.coords(x)?;
        let mut out = [0i64; 3];
        for i in 0..3 {
            out[i] =
                arith::q_to_i64(&c[i]).ok_or_else(|| Error::Domain(format!("{x} is not in L")))?;
        }
        Ok(out)
    }
}

fn gram_of(basis: &[QuatElem; 3]) -> Result<[[i64; 3]; 3]> {
    let mut g = [[0i64; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            let v = basis[i].mul(&basis[j].conj())?.trace();
            g[i][j] = arith::q_to_i64(&v)
                .ok_or_else(|| Error::Internal("non-integral Gram entry".into()))?;
        }
    }
    Ok(g)
}

/// L = O ∩ V. The basis α, (mα+αβ)/q, (β+αβ)/2 is used when it spans L;
/// otherwise a reduced kernel basis of the trace functional.
pub fn trace_zero_lattice(order: &QuatOrder) -> Result<TraceZeroLattice> {
    let alg = order.alg;
    // Kernel of the trace on the order basis.
    let traces: Vec<i128> = order
        .basis
        .iter()
        .map(|e| arith::q_to_i64(&e.trace()).map(|t| t as i128))
        .collect::<Option<_>>()
        .ok_or_else(|| Error::Internal("non-integral trace".into()))?;
    let (_, v) = row_reduce(&traces);
    let mut ker: Vec<QuatElem> = Vec::new();
    for j in 1..4 {
        let mut c = [qi(0), qi(0), qi(0), qi(0)];
        for i in 0..4 {
            for k in 0..4 {
                c[k] += qi(v[i][j] as i64) * &order.basis[i].c[k];
            }
        }
        ker.push(alg.elem(c));
    }
    let hnf_basis = [ker[0].clone(), ker[1].clone(), ker[2].clone()];
    let hnf_gram = gram_of(&hnf_basis)?;
    let hnf_det = det3(&to_i128(&hnf_gram)).abs();

    let e2 = order.basis[2].clone();
    let std = [alg.alpha(), e2, alg.elem([qi(0), qi(0), q(1, 2), q(1, 2)])];
    let std_ok = std.iter().all(|x| order.contains(x)) && {
        let g = gram_of(&std)?;
        det3(&to_i128(&g)).abs() == hnf_det
    };
    let (basis, standard) = if std_ok {
        (std, true)
    } else {
        (hnf_basis, false)
    };
    let gram = gram_of(&basis)?;
    Ok(TraceZeroLattice {
        order: order.clone(),
        basis,
        gram,
        standard_basis: standard,
    })
}

fn to_i128(g: &[[i64; 3]; 3]) -> IMat {
    g.iter()
        .map(|r| r.iter().map(|&x| x as i128).collect())
        .collect()
}

/// The finite quadratic module L∨/L. Elements are stored as numerator vectors
/// n with η = n/den in lattice coordinates, reduced into [0, den).
#[derive(Clone, Debug, Serialize)]
pub struct DiscGroup {
    pub den: i64,
    pub level: i64,
    pub orders: Vec<i64>,
    pub generators: Vec<[i64; 3]>,
    pub elems: Vec<[i64; 3]>,
    /// N·Q(η) mod N.
    pub qnum: Vec<i64>,
    #[serde(skip)]
    pub index: HashMap<[i64; 3], usize>,
    #[serde(skip)]
    gram: [[i64; 3]; 3],
}

impl DiscGroup {
    pub fn len(&self) -> usize {
        self.elems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elems.is_empty()
    }

    pub fn zero(&self) -> usize {
        0
    }

    pub fn normalize(&self, n: [i64; 3]) -> [i64; 3] {
        n.map(|x| x.rem_euclid(self.den))
    }

    pub fn index_of(&self, n: [i64; 3]) -> Option<usize> {
        self.index.get(&self.normalize(n)).copied()
    }

    /// Index of the element with rational lattice coordinates v.
    pub fn index_of_q(&self, v: &[Q; 3]) -> Option<usize> {
        let mut n = [0i64; 3];
        for i in 0..3 {
            let x = &v[i] * qi(self.den);
            n[i] = arith::q_to_i64(&x)?;
        }
        self.index_of(n)
    }

    pub fn add(&self, i: usize, j: usize) -> usize {
        let a = self.elems[i];
        let b = self.elems[j];
        self.index[&self.normalize([a[0] + b[0], a[1] + b[1], a[2] + b[2]])]
    }

    pub fn neg(&self, i: usize) -> usize {
        let a = self.elems[i];
        self.index[&self.normalize([-a[0], -a[1], -a[2]])]
    }

    pub fn scale(&self, i: usize, k: i64) -> usize {
        let a = self.elems[i];
        self.index[&self.normalize([k * a[0], k * a[1], k * a[2]])]
    }

    /// Q(η) as a rational in [0, 1).
    pub fn qval(&self, i: usize) -> Q {
        q(self.qnum[i], self.level)
    }

    /// N·(η, δ) mod N.
    pub fn bil_num(&self, i: usize, j: usize) -> i64 {
        let a = self.elems[i];
        let b = self.elems[j];
        let mut s = 0i128;
        for r in 0..3 {
            for c in 0..3 {
                s += self.gram[r][c] as i128 * a[r] as i128 * b[c] as i128;
            }
        }
        let d2 = (self.den as i128) * (self.den as i128);
        // s / den² is a multiple of 1/level.
        let num = s * self.level as i128;
        debug_assert_eq!(num % d2, 0);
        (num / d2).rem_euclid(self.level as i128) as i64
    }

    /// Order of the element η.
    pub fn order_of(&self, i: usize) -> i64 {
        let a = self.elems[i];
        let g = a.iter().fold(self.den, |g, &x| g.gcd(&x));
        self.den / g
    }

    /// Rational lattice coordinates of η.
    pub fn coords(&self, i: usize) -> [Q; 3] {
        self.elems[i].map(|x| q(x, self.den))
    }
}

/// Discriminant group of L via the Smith form of its Gram matrix.
pub fn disc_group(l: &TraceZeroLattice) -> DiscGroup {
    let g = l.gram_i128();
    let (_u, d, v) = smith(&g);
    let den = *d.last().unwrap();
    // Dual generators: columns of V divided by d_i.
    let mut gens: Vec<([i64; 3], i64)> = Vec::new();
    for i in 0..3 {
        if d[i] > 1 {
            let s = den / d[i];
            gens.push((
                [
                    (v[0][i] * s) as i64,
                    (v[1][i] * s) as i64,
                    (v[2][i] * s) as i64,
                ],
                d[i] as i64,
            ));
        }
    }
    let den = den as i64;
    let norm = |n: [i64; 3]| n.map(|x| x.rem_euclid(den));
    let mut elems: Vec<[i64; 3]> = vec![[0, 0, 0]];
    for (gv, ord) in &gens {
        let mut next = Vec::with_capacity(elems.len() * *ord as usize);
        for k in 0..*ord {
            for e in &elems {
                next.push(norm([e[0] + k * gv[0], e[1] + k * gv[1], e[2] + k * gv[2]]));
            }
        }
        elems = next;
    }
    let index: HashMap<[i64; 3], usize> = elems.iter().enumerate().map(|(i, e)| (*e, i)).collect();
    let gram = l.gram;
    let qraw: Vec<Q> = elems
        .iter()
        .map(|e| {
            let v = e.map(|x| q(x, den));
            let val = l.qform_q(&v);
            let fl = val.floor();
            val - fl
        })
        .collect();
    let level = qraw
        .iter()
        .fold(1i128, |acc, x| lcm(acc, x.denom().to_i128().unwrap())) as i64;
    let qnum = qraw
        .iter()
        .map(|x| (x * qi(level)).to_integer().to_i64().unwrap())
        .collect();
    DiscGroup {
        den,
        level,
        orders: d.iter().filter(|&&x| x > 1).map(|&x| x as i64).collect(),
        generators: gens.iter().map(|g| g.0).collect(),
        elems,
        qnum,
        index,
        gram,
    }
}

/// Published CM vectors for the standard lattices.
fn pinned_cm_vector(d: u64, t: &Q) -> Option<[i64; 3]> {
    let t = arith::q_to_i64(t)?;
    match (d, t) {
        (6, 6) => Some([0, 0, 1]),
        (6, 163) => Some([1, 14, 0]),
        (10, 5) => Some([1, -3, 0]),
        (10, 17) => Some([7, -13, 1]),
        _ => None,
    }
}

/// Integer roots x of A x² + B x + C = 0.
fn int_roots(a: i128, b: i128, c: i128) -> Vec<i128> {
    if a == 0 {
        if b != 0 && c % b == 0 {
            return vec![-c / b];
        }
        return vec![];
    }
    let disc = b * b - 4 * a * c;
    if disc < 0 {
        return vec![];
    }
    let s = isqrt(disc);
    if s * s != disc {
        return vec![];
    }
    let mut out = Vec::new();
    for num in [-b - s, -b + s] {
        if num % (2 * a) == 0 {
            let x = num / (2 * a);
            if !out.contains(&x) {
                out.push(x);
            }
        }
    }
    out
}

pub(crate) fn isqrt(n: i128) -> i128 {
    if n < 0 {
        return -1;
    }
    let mut x = (n as f64).sqrt() as i128;
    while x * x > n {
        x -= 1;
    }
    while (x + 1) * (x + 1) <= n {
        x += 1;
    }
    x
}

/// Vectors z with Q(z) = t and max |z_i| = r, sorted lexicographically.
fn shell(l: &TraceZeroLattice, t: i128, r: i64) -> Vec<[i64; 3]> {
    let g = &l.gram;
    let mut out = Vec::new();
    for c1 in -r..=r {
        for c2 in -r..=r {
            // Q = g22/2 c3² + (g02 c1 + g12 c2) c3 + Q(c1, c2, 0).
            let a = g[2][2] as i128;
            let b = 2 * (g[0][2] as i128 * c1 as i128 + g[1][2] as i128 * c2 as i128);
            let q0 = l.qform(&[c1, c2, 0]);
            // a/2 x² + b/2 x + q0 − t = 0 → a x² + b x + 2(q0 − t) = 0
            for c3 in int_roots(a, b, 2 * (q0 - t)) {
                if c3.abs() <= r as i128 {
                    let v = [c1, c2, c3 as i64];
                    if v.iter().map(|x| x.abs()).max() == Some(r) {
                        out.push(v);
                    }
                }
            }
        }
    }
    out.sort();
    out
}

/// A vector z ∈ L with Q(z) = t: the published vector when one exists,
/// otherwise the lexicographically least among those of minimal max-norm.
pub fn find_cm_vector(l: &TraceZeroLattice, t: &Q) -> Result<[i64; 3]> {
    if l.standard_basis {
        if let Some(z) = pinned_cm_vector(l.d(), t) {
            return Ok(z);
        }
    }
    find_cm_vector_with(l, t, |_| true)
}

/// As [`find_cm_vector`] without the pinned table, restricted by a predicate.
pub fn find_cm_vector_with(
    l: &TraceZeroLattice,
    t: &Q,
    accept: impl Fn(&[i64; 3]) -> bool,
) -> Result<[i64; 3]> {
    let ti = arith::q_to_i64(t)
        .filter(|&x| x > 0)
        .ok_or_else(|| Error::Domain(format!("Q takes integral values on L; t={t}")))?;
    let bound = 64 + 8 * (ti as f64).sqrt() as i64;
    for r in 1..=bound {
        if let Some(z) = shell(l, ti as i128, r).into_iter().find(|z| accept(z)) {
            return Ok(z);
        }
    }
    Err(Error::Domain(format!(
        "no vector of norm {t} within radius {bound}"
    )))
}

/// A glue representative λ ∈ L and its components.
#[derive(Clone, Debug, Serialize)]
pub struct GlueRep {
    pub lambda: [i64; 3],
    /// λ_+ = plus·z0, reduced into [0, 1).
    pub plus: Q,
    /// λ_- in the L_- basis, reduced into [0, 1)².
    pub minus: [Q; 2],
}

/// The splitting attached to a CM vector.
#[derive(Clone, Debug, Serialize)]
pub struct CMSplitting {
    pub z: [i64; 3],
    /// Primitive generator of L_+.
    pub z0: [i64; 3],
    pub lminus: [[i64; 3]; 2],
    /// Bilinear Gram of L_- in the basis `lminus`.
    pub gram_minus: [[i64; 2]; 2],
    pub glue: Vec<GlueRep>,
    pub glue_orders: Vec<i64>,
    pub split: DiscSplit,
    /// u1 ∈ L_- ∩ (Zℓ2 + Zℓ3) and u2 = u1·z0, with Q(Xu1+Yu2) = c(X² + t Y²).
    pub u1: [i64; 3],
    pub u2: [i64; 3],
    pub shape_c: i64,
    pub shape_t: i64,
}

impl CMSplitting {
    pub fn t(&self) -> &Q {
        &self.split.t
    }

    pub fn det_minus(&self) -> i64 {
        let g = &self.gram_minus;
        g[0][0] * g[1][1] - g[0][1] * g[1][0]
    }

    /// Lattice coordinates of a + b·u_1^- + c·u_2^- style combination of L_-.
    pub fn minus_to_lattice(&self, m: &[Q; 2]) -> [Q; 3] {
        let mut v = [qi(0), qi(0), qi(0)];
        for (k, b) in m.iter().zip(&self.lminus) {
            for i in 0..3 {
                v[i] += k * qi(b[i]);
            }
        }
        v
    }
}

/// Gauss reduction of a negative-definite binary lattice, given as two
/// lattice vectors.
fn gauss_reduce(l: &TraceZeroLattice, mut u: [i64; 3], mut v: [i64; 3]) -> ([i64; 3], [i64; 3]) {
    loop {
        let nu = -l.qform(&u);
        let nv = -l.qform(&v);
        if nv < nu {
            std::mem::swap(&mut u, &mut v);
            continue;
        }
        let b = l.bilinear(&u, &v);
        // minimise −Q(v − k u): k = round(b / (2 Q(u))).
        let k = round_div(b, 2 * l.qform(&u));
        if k == 0 {
            // Prefer a non-negative cross term for a canonical shape.
            if b > 0 {
                v = v.map(|x| -x);
            }
            return (u, v);
        }
        for i in 0..3 {
            v[i] -= (k as i64) * u[i];
        }
    }
}

fn round_div(a: i128, b: i128) -> i128 {
    let (a, b) = if b < 0 { (-a, -b) } else { (a, b) };
    (2 * a + b).div_euclid(2 * b)
}

fn frac(x: &Q) -> Q {
    x - x.floor()
}

/// Decomposes L relative to the CM vector z.
pub fn cm_splitting(l: &TraceZeroLattice, z: &[i64; 3]) -> Result<CMSplitting> {
    let t = l.qform(z);
    if t <= 0 {
        return Err(Error::Argument(format!("Q(z) = {t} is not positive")));
    }
    let g = z.iter().fold(0i64, |g, &x| g.gcd(&x));
    let z0 = z.map(|x| x / g);
    let gram = l.gram_i128();
    let r: Vec<i128> = (0..3)
        .map(|i| (0..3).map(|j| gram[i][j] * z0[j] as i128).sum())
        .collect();
    let (_, v) = row_reduce(&r);
    let k1 = [v[0][1] as i64, v[1][1] as i64, v[2][1] as i64];
    let k2 = [v[0][2] as i64, v[1][2] as i64, v[2][2] as i64];
    let (u, w) = gauss_reduce(l, k1, k2);
    let gm = [
        [l.bilinear(&u, &u) as i64, l.bilinear(&u, &w) as i64],
        [l.bilinear(&w, &u) as i64, l.bilinear(&w, &w) as i64],
    ];
    // Sublattice L_- + L_+ with basis matrix columns (u, w, z0).
    let m: IMat = (0..3)
        .map(|i| vec![u[i] as i128, w[i] as i128, z0[i] as i128])
        .collect();
    let idx = det3(&m).abs();
    let mq: Vec<Vec<Q>> = m
        .iter()
        .map(|row| row.iter().map(|&x| qi(x as i64)).collect())
        .collect();
    let decompose = |lam: &[i64; 3]| -> GlueRep {
        let sol = solve_q(&mq, &lam.map(qi)).expect("nonsingular");
        GlueRep {
            lambda: *lam,
            plus: frac(&sol[2]),
            minus: [frac(&sol[0]), frac(&sol[1])],
        }
    };
    let order_of = |lam: &[i64; 3]| -> i64 {
        let rep = decompose(lam);
        let mut o = 1i128;
        for x in rep.minus.iter().chain(std::iter::once(&rep.plus)) {
            o = lcm(o, x.denom().to_i128().unwrap());
        }
        o as i64
    };
    let (_, sd, _) = smith(&m);
    let orders: Vec<i64> = sd.iter().filter(|&&x| x > 1).map(|&x| x as i64).collect();
    let mut glue = Vec::new();
    if orders.len() <= 1 {
        let gen = [[0, 0, 1], [0, 1, 0], [1, 0, 0]]
            .into_iter()
            .find(|e| order_of(e) as i128 == idx)
            .or_else(|| {
                // Fall back to any small generator.
                (-3i64..=3)
                    .flat_map(|a| {
                        (-3i64..=3).flat_map(move |b| (-3i64..=3).map(move |c| [a, b, c]))
                    })
                    .find(|e| order_of(e) as i128 == idx)
            })
            .ok_or_else(|| Error::Internal("no glue generator found".into()))?;
        for k in 0..idx as i64 {
            glue.push(decompose(&gen.map(|x| k * x)));
        }
    } else {
        // λ ∈ L/(MZ³): with U M V = diag(d), L/MZ³ ≅ ⊕ Z/d_i via U; generators U⁻¹ e_i.
        let (su, sdiag, _) = smith(&m);
        let uinv = inverse_unimodular(&su);
        let gens: Vec<([i64; 3], i64)> = (0..3)
            .filter(|&i| sdiag[i] > 1)
            .map(|i| {
                (
                    [uinv[0][i] as i64, uinv[1][i] as i64, uinv[2][i] as i64],
                    sdiag[i] as i64,
                )
            })
            .collect();
        let mut reps: Vec<[i64; 3]> = vec![[0, 0, 0]];
        for (gv, o) in gens {
            let mut next = Vec::new();
            for k in 0..o {
                for e in &reps {
                    next.push([e[0] + k * gv[0], e[1] + k * gv[1], e[2] + k * gv[2]]);
                }
            }
            reps = next;
        }
        glue = reps.iter().map(decompose).collect();
    }
    // Normalized negative-plane basis.
    let (u1, u2, shape_c, shape_t) = normalized_plane(l, &u, &w, &z0)?;
    Ok(CMSplitting {
        z: *z,
        z0,
        lminus: [u, w],
        gram_minus: gm,
        glue,
        glue_orders: orders,
        split: disc_split(&qi(t as i64))?,
        u1,
        u2,
        shape_c,
        shape_t,
    })
}

fn inverse_unimodular(u: &IMat) -> IMat {
    // 3×3 adjugate; det = ±1.
    let d = det3(u);
    let mut inv = vec![vec![0i128; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            let (r0, r1) = match j {
                0 => (1, 2),
                1 => (0, 2),
                _ => (0, 1),
            };
            let (c0, c1) = match i {
                0 => (1, 2),
                1 => (0, 2),
                _ => (0, 1),
            };
            let minor = u[r0][c0] * u[r1][c1] - u[r0][c1] * u[r1][c0];
            let sign = if (i + j) % 2 == 0 { 1 } else { -1 };
            inv[i][j] = sign * minor * d;
        }
    }
    debug_assert_eq!(mat_mul(u, &inv), linalg::identity(3));
    inv
}

fn normalized_plane(
    l: &TraceZeroLattice,
    u: &[i64; 3],
    w: &[i64; 3],
    z0: &[i64; 3],
) -> Result<([i64; 3], [i64; 3], i64, i64)> {
    // a u + b w has zero ℓ1 coordinate: a u0 + b w0 = 0.
    let (a, b) = if u[0] == 0 && w[0] == 0 {
        (1, 0)
    } else {
        let g = u[0].gcd(&w[0]);
        (w[0] / g, -u[0] / g)
    };
    let mut u1 = [0i64; 3];
    for i in 0..3 {
        u1[i] = a * u[i] + b * w[i];
    }
    if u1[1] < 0 || (u1[1] == 0 && u1[2] < 0) {
        u1 = u1.map(|x| -x);
    }
    let prod = l.element_int(&u1).mul(&l.element_int(z0))?;
    let u2 = l.coords_int(&prod)?;
    let c = l.qform(&u1) as i64;
    let t = (l.qform(&u2) / l.qform(&u1)) as i64;
    Ok((u1, u2, c, t))
}

/// The two fixed points (x2√b ± √(−Q(x)))/(x1 + x3√b) of a trace-zero x,
/// kept symbolically: centre x2√b, radicand −Q(x) and denominator x1 + x3√b.
/// For Q(x) > 0 the points are complex conjugates; for Q(x) < 0 they are real.
#[derive(Clone, Debug, PartialEq)]
pub struct FixedPoints {
    pub b: i64,
    pub center: QSqrt,
    pub radicand: Q,
    pub denom: QSqrt,
}

impl FixedPoints {
    /// Numerical values (re, im) of the two points, upper half-plane first.
    pub fn to_complex(&self) -> [(f64, f64); 2] {
        let c = self.center.to_f64(self.b);
        let d = self.denom.to_f64(self.b);
        let r = arith::q_to_f64(&self.radicand);
        if r < 0.0 {
            let s = (-r).sqrt() / d;
            let p = [(c / d, s), (c / d, -s)];
            if s >= 0.0 {
                p
            } else {
                [p[1], p[0]]
            }
        } else {
            let s = r.sqrt() / d;
            [(c / d + s, 0.0), (c / d - s, 0.0)]
        }
    }
}

/// Fixed points of the Möbius action of a trace-zero element. Elements whose
/// leading coefficient x1 + x3√b vanishes (fixing 0 and ∞) and isotropic
/// elements are rejected.
pub fn fixed_point(x: &QuatElem) -> Result<FixedPoints> {
    if !x.c[0].is_zero() {
        return Err(Error::Argument("x must have trace zero".into()));
    }
    let qx = x.norm();
    if qx.is_zero() {
        return Err(Error::Argument("x is isotropic".into()));
    }
    let denom = QSqrt::new(x.c[1].clone(), x.c[3].clone());
    if denom.rat.is_zero() && denom.irr.is_zero() {
        return Err(Error::Domain(
            "degenerate leading coefficient: fixed points 0 and ∞".into(),
        ));
    }
    Ok(FixedPoints {
        b: x.alg.b,
        center: QSqrt::new(Q::zero(), x.c[2].clone()),
        radicand: -qx,
        denom,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quaternion::maximal_order;

    fn lat(d: u64, q: u64) -> TraceZeroLattice {
        trace_zero_lattice(&maximal_order(d, q).unwrap()).unwrap()
    }

    #[test]
    fn standard_bases() {
        let l = lat(6, 5);
        assert!(l.standard_basis);
        assert_eq!(l.det().abs(), 72);
        assert_eq!(l.gram, [[-10, -2, 0], [-2, 2, 6], [0, 6, 12]]);
        let l = lat(10, 13);
        assert!(l.standard_basis);
        assert_eq!(l.det().abs(), 200);
    }

    #[test]
    fn disc_groups() {
        let g = disc_group(&lat(6, 5));
        assert_eq!((g.len(), g.level), (72, 12));
        let g = disc_group(&lat(10, 13));
        assert_eq!((g.len(), g.level), (200, 20));
    }

    #[test]
    fn quarter_values_on_two_part() {
        let g = disc_group(&lat(6, 5));
        // Elements killed by 4 carry Q-values in (1/4)Z/Z, and all of them occur.
        let mut seen = std::collections::BTreeSet::new();
        for i in 0..g.len() {
            if g.order_of(i) <= 2 || g.order_of(i) == 4 {
                seen.insert(g.qval(i));
            }
        }
        for k in 0..4 {
            assert!(seen.contains(&q(k, 4)));
        }
    }

    #[test]
    fn pinned_vectors() {
        let l = lat(6, 5);
        assert_eq!(find_cm_vector(&l, &qi(163)).unwrap(), [1, 14, 0]);
        assert_eq!(l.qform(&[1, 14, 0]), 163);
        let l = lat(10, 13);
        assert_eq!(find_cm_vector(&l, &qi(5)).unwrap(), [1, -3, 0]);
        assert_eq!(find_cm_vector(&l, &qi(17)).unwrap(), [7, -13, 1]);
        assert_eq!(l.qform(&[7, -13, 1]), 17);
    }

    #[test]
    fn search_vectors() {
        let l = lat(6, 5);
        for t in [1i64, 3, 10, 13, 19] {
            let z = find_cm_vector_with(&l, &qi(t), |_| true).unwrap();
            assert_eq!(l.qform(&z), t as i128);
        }
    }

    /// Checks the glue decomposition and the published data of one splitting.
    fn check_split(
        l: &TraceZeroLattice,
        z: [i64; 3],
        shape: (i64, i64),
        glue: usize,
        published_minus: [[i64; 3]; 2],
    ) -> CMSplitting {
        let s = cm_splitting(l, &z).unwrap();
        assert_eq!((s.shape_c, s.shape_t), shape);
        assert_eq!(s.glue.len(), glue);
        for u in &s.lminus {
            assert_eq!(l.bilinear(u, &s.z0), 0);
            assert!(l.qform(u) < 0);
        }
        assert_eq!(l.bilinear(&s.u1, &s.u2), 0);
        // The published L_- basis spans the same lattice.
        for p in &published_minus {
            assert_eq!(l.bilinear(p, &s.z0), 0);
        }
        let m: Vec<Vec<Q>> = (0..3)
            .map(|i| vec![qi(s.lminus[0][i]), qi(s.lminus[1][i]), qi(s.z0[i])])
            .collect();
        let mut change = [[0i64; 2]; 2];
        for (k, p) in published_minus.iter().enumerate() {
            let c = solve_q(&m, &p.map(qi)).unwrap();
            assert!(c[2].is_zero());
            change[k] = [
                arith::q_to_i64(&c[0]).unwrap(),
                arith::q_to_i64(&c[1]).unwrap(),
            ];
        }
        assert_eq!(
            (change[0][0] * change[1][1] - change[0][1] * change[1][0]).abs(),
            1
        );
        for g in &s.glue {
            let lam = g.lambda.map(qi);
            let plus: [Q; 3] = s.z0.map(|x| qi(x) * &g.plus);
            let minus = s.minus_to_lattice(&g.minus);
            let rest: [Q; 3] = [0, 1, 2].map(|i| &lam[i] - &plus[i] - &minus[i]);
            let c = solve_q(&m, &rest).unwrap();
            assert!(c.iter().all(|x| x.is_integer()));
            let diff = l.qform_q(&lam) - l.qform_q(&[0, 1, 2].map(|i| &plus[i] + &minus[i]));
            assert!(diff.is_integer());
        }
        s
    }

    fn minus_in(s: &CMSplitting, a: &[Q; 3], b: &[Q; 3]) -> bool {
        let m: Vec<Vec<Q>> = (0..3)
            .map(|i| vec![qi(s.lminus[0][i]), qi(s.lminus[1][i]), qi(s.z0[i])])
            .collect();
        let d: [Q; 3] = [0, 1, 2].map(|i| &a[i] - &b[i]);
        let c = solve_q(&m, &d).unwrap();
        c.iter().all(|x| x.is_integer())
    }

    #[test]
    fn published_splittings() {
        let l = lat(6, 5);
        let s = check_split(&l, [0, 0, 1], (-2, 6), 2, [[0, 2, -1], [1, 0, 0]]);
        assert_eq!(s.u1, [0, 2, -1]);
        let g = &s.glue[1];
        assert_eq!(g.plus, q(1, 2));
        let pm = [q(0, 1), qi(1), q(-1, 2)];
        assert!(minus_in(&s, &s.minus_to_lattice(&g.minus), &pm));

        let s = check_split(&l, [1, 14, 0], (-498, 163), 163, [[0, 42, -13], [1, -5, 2]]);
        assert_eq!(s.glue_orders, vec![163]);
        assert_eq!(s.glue[1].lambda, [0, 0, 1]);
        assert_eq!(s.glue[1].plus, q(42, 163));
        let pm: [Q; 3] = [0, 1, 2].map(|i| q(-19 * [0, 42, -13][i] - 42 * [1, -5, 2][i], 163));
        assert!(minus_in(&s, &s.minus_to_lattice(&s.glue[1].minus), &pm));

        let l = lat(10, 13);
        let s = check_split(&l, [1, -3, 0], (-2, 5), 1, [[0, -1, 0], [3, 0, 1]]);
        assert!(s.glue_orders.is_empty());
        let s = check_split(&l, [7, -13, 1], (-2670, 17), 17, [[0, -35, 11], [1, 2, -1]]);
        assert_eq!(s.glue[1].lambda, [0, 0, 1]);
        assert_eq!(s.glue[1].plus, q(-35 + 51, 17));
        let pm: [Q; 3] = [0, 1, 2].map(|i| q(27 * [0, -35, 11][i] + 245 * [1, 2, -1][i], 17));
        assert!(minus_in(&s, &s.minus_to_lattice(&s.glue[1].minus), &pm));
    }

    #[test]
    fn fixed_points() {
        let l = lat(6, 5);
        let alg = l.order.alg;
        let s4 = alg.elem([qi(1), q(-1, 5), q(1, 2), q(3, 10)]);
        let x = alg.elem([qi(0), q(-1, 5), q(1, 2), q(3, 10)]);
        let fp = fixed_point(&x).unwrap();
        let (re, im) = fp.to_complex()[0];
        let m = s4.embed();
        let e = |i: usize, j: usize| m.m[i][j].to_f64(alg.b);
        // (a z + b)/(c z + d) with complex arithmetic.
        let (nr, ni) = (e(0, 0) * re + e(0, 1), e(0, 0) * im);
        let (dr, di) = (e(1, 0) * re + e(1, 1), e(1, 0) * im);
        let den = dr * dr + di * di;
        let (zr, zi) = ((nr * dr + ni * di) / den, (ni * dr - nr * di) / den);
        assert!((zr - re).abs() < 1e-9 && (zi - im).abs() < 1e-9);
        assert!(fixed_point(&alg.beta()).is_err());
        // α fixes ±√5.
        let fa = fixed_point(&alg.alpha()).unwrap();
        let [(r1, _), (r2, _)] = fa.to_complex();
        assert!((r1 - 5f64.sqrt()).abs() < 1e-12 && (r2 + 5f64.sqrt()).abs() < 1e-12);
    }
}
