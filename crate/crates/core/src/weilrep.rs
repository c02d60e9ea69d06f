//! The Weil representation of Mp2(Z) on C[L∨/L] and the coset-sum lift of
//! scalar eta quotients to vector-valued forms.
//!
//! Conventions: ρ(T)e_η = e(−Q(η))e_η and ρ(S)e_η = C_L Σ_δ e((η,δ))e_δ,
//! with S = ((0,−1),(1,0), √τ) and T = ((1,1),(0,1), 1). Metaplectic
//! elements carry the sign of their square-root branch relative to the
//! principal branch of √(cτ+d).

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::arith::{kronecker, q, qi, Q};
use crate::cyclo::{Cyclo, ZCyc};
use crate::error::{Error, Result};
use crate::etaforms::{
    check_etaprod_conditions, eta_power_coeffs, solve_input_form_with, EtaQuotient, InputForm,
    DEFAULT_TRUNC,
};
use crate::lattice::DiscGroup;

pub type Mat2 = [[i64; 2]; 2];

/// Reference point for deciding square-root branches numerically.
const TAU0: Complex64 = Complex64::new(0.137, 0.921);

fn det2(m: &Mat2) -> i64 {
    m[0][0] * m[1][1] - m[0][1] * m[1][0]
}

fn mat_mul2(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut c = [[0i64; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    c
}

fn mat_inv2(m: &Mat2) -> Mat2 {
    [[m[1][1], -m[0][1]], [-m[1][0], m[0][0]]]
}

fn sign_of(ratio: Complex64) -> i8 {
    debug_assert!(
        (ratio.norm() - 1.0).abs() < 1e-6 && ratio.im.abs() < 1e-6,
        "{ratio}"
    );
    if ratio.re > 0.0 {
        1
    } else {
        -1
    }
}

/// (γ, φ) with φ(τ) = branch·√(cτ+d).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct MetaElement {
    pub matrix: Mat2,
    pub branch: i8,
}

impl MetaElement {
    pub fn new(matrix: Mat2, branch: i8) -> Result<Self> {
        if det2(&matrix) != 1 {
            return Err(Error::Argument(format!(
                "{matrix:?} does not have determinant 1"
            )));
        }
        if branch != 1 && branch != -1 {
            return Err(Error::Argument(format!("branch must be ±1, got {branch}")));
        }
        Ok(MetaElement { matrix, branch })
    }

    /// The lift with the principal square root.
    pub fn principal(matrix: Mat2) -> Result<Self> {
        MetaElement::new(matrix, 1)
    }

    pub fn identity() -> Self {
        MetaElement {
            matrix: [[1, 0], [0, 1]],
            branch: 1,
        }
    }

    pub fn s() -> Self {
        MetaElement {
            matrix: [[0, -1], [1, 0]],
            branch: 1,
        }
    }

    pub fn t(k: i64) -> Self {
        MetaElement {
            matrix: [[1, k], [0, 1]],
            branch: 1,
        }
    }

    /// Z = S² = (−I, i).
    pub fn z() -> Self {
        MetaElement {
            matrix: [[-1, 0], [0, -1]],
            branch: 1,
        }
    }

    pub fn phi(&self, tau: Complex64) -> Complex64 {
        let [_, [c, d]] = self.matrix;
        (tau * c as f64 + d as f64).sqrt() * self.branch as f64
    }

    pub fn act(&self, tau: Complex64) -> Complex64 {
        let [[a, b], [c, d]] = self.matrix;
        (tau * a as f64 + b as f64) / (tau * c as f64 + d as f64)
    }

    /// (G1, φ1)(G2, φ2) = (G1G2, φ1(G2·)φ2(·)).
    pub fn mul(&self, o: &MetaElement) -> MetaElement {
        let matrix = mat_mul2(&self.matrix, &o.matrix);
        let val = self.phi(o.act(TAU0)) * o.phi(TAU0);
        let principal = MetaElement { matrix, branch: 1 }.phi(TAU0);
        MetaElement {
            matrix,
            branch: sign_of(val / principal),
        }
    }

    pub fn inverse(&self) -> MetaElement {
        let matrix = mat_inv2(&self.matrix);
        let inv = MetaElement { matrix, branch: 1 };
        let val = Complex64::one() / self.phi(inv.act(TAU0));
        MetaElement {
            matrix,
            branch: sign_of(val / inv.phi(TAU0)),
        }
    }

    pub fn negate_branch(&self) -> MetaElement {
        MetaElement {
            matrix: self.matrix,
            branch: -self.branch,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Gen {
    S,
    T(i64),
}

/// A word in S and T whose matrix product is m.
pub fn word(m: &Mat2) -> Vec<Gen> {
    let mut out = Vec::new();
    let mut g = *m;
    loop {
        let [[a, b], [c, d]] = g;
        if c == 0 {
            if a == 1 {
                if b != 0 {
                    out.push(Gen::T(b));
                }
            } else {
                out.push(Gen::S);
                out.push(Gen::S);
                if b != 0 {
                    out.push(Gen::T(-b));
                }
            }
            return out;
        }
        let k = Integer::div_floor(&a, &c);
        if k != 0 {
            out.push(Gen::T(k));
        }
        out.push(Gen::S);
        let a2 = a - k * c;
        let b2 = b - k * d;
        g = [[c, d], [-a2, -b2]];
    }
}

/// Metaplectic product of a word.
pub fn word_element(w: &[Gen]) -> MetaElement {
    w.iter().fold(MetaElement::identity(), |acc, g| {
        acc.mul(&match g {
            Gen::S => MetaElement::s(),
            Gen::T(k) => MetaElement::t(*k),
        })
    })
}

/// C^s·comps with C = C_L; components live in Z[ζ_{N′}].
#[derive(Clone, Debug, PartialEq)]
pub struct WeilVec {
    pub s: u32,
    pub comps: Vec<ZCyc>,
}

/// scale·entries, with column η the image of e_η.
#[derive(Clone, Debug)]
pub struct WeilMatrix {
    pub scale: Cyclo,
    pub columns: Vec<Vec<ZCyc>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Generator {
    S,
    T,
    Z,
}

pub struct WeilAction {
    pub group: DiscGroup,
    /// N′ = lcm(8, N).
    pub order: u32,
    /// Σ_δ e(Q(δ)).
    pub gauss: Cyclo,
    pub c_l: Cyclo,
    bil: Vec<Vec<i64>>,
}

impl WeilAction {
    pub fn new(group: DiscGroup) -> Self {
        let n = group.level;
        let order = n.lcm(&8) as u32;
        let f = order as i64 / n;
        let len = group.len();
        let bil: Vec<Vec<i64>> = (0..len)
            .map(|i| (0..len).map(|j| group.bil_num(i, j) * f).collect())
            .collect();
        let mut g = ZCyc::zero(order);
        for i in 0..len {
            g.c[((group.qnum[i] * f).rem_euclid(order as i64)) as usize] += 1;
        }
        let gauss = g.to_cyclo();
        let c_l = gauss.scale(&q(1, len as i64));
        WeilAction {
            group,
            order,
            gauss,
            c_l,
            bil,
        }
    }

    fn factor(&self) -> i64 {
        self.order as i64 / self.group.level
    }

    pub fn basis(&self, i: usize) -> WeilVec {
        let mut comps = vec![ZCyc::zero(self.order); self.group.len()];
        comps[i] = ZCyc::root(self.order, 0);
        WeilVec { s: 0, comps }
    }

    pub fn apply_t(&self, v: &WeilVec, k: i64) -> WeilVec {
        let f = self.factor();
        WeilVec {
            s: v.s,
            comps: v
                .comps
                .iter()
                .enumerate()
                .map(|(i, c)| c.rotated(-k * self.group.qnum[i] * f))
                .collect(),
        }
    }

    /// ρ(S) = C_L·S̃; only S̃ is applied and the power of C_L is recorded.
    /// With e(−(η,δ)) in place of e((η,δ)) the braid relation would only
    /// hold on vectors symmetric under η ↦ −η.
    pub fn apply_s(&self, v: &WeilVec) -> WeilVec {
        let len = self.group.len();
        let mut out = vec![ZCyc::zero(self.order); len];
        for (eta, c) in v.comps.iter().enumerate() {
            if c.c.iter().all(|x| *x == 0) {
                continue;
            }
            for (delta, o) in out.iter_mut().enumerate() {
                o.add_rotated(c, self.bil[eta][delta]);
            }
        }
        for o in &mut out {
            o.reduce();
        }
        WeilVec {
            s: v.s + 1,
            comps: out,
        }
    }

    pub fn apply_word(&self, w: &[Gen], v: &WeilVec) -> WeilVec {
        let mut v = v.clone();
        for g in w.iter().rev() {
            v = match g {
                Gen::S => self.apply_s(&v),
                Gen::T(k) => self.apply_t(&v, *k),
            };
        }
        v
    }

    /// ρ(g)v for an arbitrary metaplectic element.
    pub fn apply(&self, g: &MetaElement, v: &WeilVec) -> WeilVec {
        let w = word(&g.matrix);
        let mut out = self.apply_word(&w, v);
        if word_element(&w).branch != g.branch {
            // ρ(Z²) = −1 for odd signature.
            for c in &mut out.comps {
                *c = c.scale(-1);
            }
        }
        out
    }

    pub fn to_cyclo(&self, v: &WeilVec) -> Vec<Cyclo> {
        let scale = self.c_l.pow(v.s);
        v.comps.iter().map(|c| &scale * &c.to_cyclo()).collect()
    }

    pub fn rho_generator(&self, g: Generator) -> WeilMatrix {
        let len = self.group.len();
        let mut columns = Vec::with_capacity(len);
        let mut s = 0;
        for i in 0..len {
            let e = self.basis(i);
            let v = match g {
                Generator::T => self.apply_t(&e, 1),
                Generator::S => self.apply_s(&e),
                Generator::Z => self.apply_s(&self.apply_s(&e)),
            };
            s = v.s;
            columns.push(v.comps);
        }
        WeilMatrix {
            scale: self.c_l.pow(s),
            columns,
        }
    }

    /// χ_L(γ) for γ in the metaplectic preimage of Γ0(N), N divisible by 4.
    pub fn character_chi_l(&self, g: &MetaElement) -> Result<Cyclo> {
        let n = self.group.level;
        let [[_, _], [c, d]] = g.matrix;
        if c % n != 0 {
            return Err(Error::Argument(format!("{:?} is not in Γ0({n})", g.matrix)));
        }
        if n % 4 != 0 {
            return Err(Error::Argument(format!("level {n} is not divisible by 4")));
        }
        let m = self.order;
        let i = Cyclo::root(m, (m / 4) as i64);
        let sign = Cyclo::from_q(m, qi(g.branch as i64));
        if d < 0 {
            // (γ, √(cτ+d)) = Z·(−γ, √(−cτ−d)) and ρ(Z)e_0 = −i e_0.
            let neg = MetaElement::principal([[-g.matrix[0][0], -g.matrix[0][1]], [-c, -d]])?;
            let v = self.character_chi_l(&neg)?;
            return Ok(&(&(-&i) * &v) * &sign);
        }
        let sym = kronecker(c, d) as i64;
        let theta = if d % 4 == 1 {
            Cyclo::from_q(m, qi(sym))
        } else {
            (-&i).scale(&qi(sym))
        };
        let kro = kronecker(d, 2 * self.group.len() as i64) as i64;
        Ok(&theta.scale(&qi(kro)) * &sign)
    }

    /// Λ^{n*}: empty when 2‖n, otherwise {δ : N·Q(δ) ≡ 0 mod gcd(n, N)}.
    pub fn lambda_n_star(&self, n: i64) -> Vec<usize> {
        if n.rem_euclid(4) == 2 {
            return Vec::new();
        }
        let g = n.gcd(&self.group.level);
        (0..self.group.len())
            .filter(|&i| self.group.qnum[i] % g == 0)
            .collect()
    }

    /// S_n(δ) = Σ_η e(−(η,δ) − nQ(η)).
    pub fn gauss_sum_sn(&self, n: i64, delta: usize) -> ZCyc {
        let f = self.factor();
        let mut z = ZCyc::zero(self.order);
        for eta in 0..self.group.len() {
            let e = -self.bil[eta][delta] - n * self.group.qnum[eta] * f;
            z.c[e.rem_euclid(self.order as i64) as usize] += 1;
        }
        z
    }

    /// |{η : nη = 0}|.
    pub fn torsion_count(&self, n: i64) -> usize {
        (0..self.group.len())
            .filter(|&i| self.group.scale(i, n) == 0)
            .count()
    }
}

/// Right coset representatives of Γ0(N) in SL2(Z), one per point of P¹(Z/N),
/// lifted with the principal branch. The identity represents ∞.
pub fn coset_reps(n: i64) -> Vec<MetaElement> {
    let mut seen: Vec<(i64, i64)> = Vec::new();
    let mut out = vec![MetaElement::identity()];
    seen.push((0, 1));
    let units: Vec<i64> = (1..=n).filter(|u| u.gcd(&n) == 1).collect();
    let canon = |c: i64, d: i64| -> (i64, i64) {
        units
            .iter()
            .map(|u| ((u * c).rem_euclid(n), (u * d).rem_euclid(n)))
            .min()
            .unwrap()
    };
    seen[0] = canon(0, 1);
    for c in 1..=n {
        for d in 0..n {
            if c.gcd(&d).gcd(&n) != 1 {
                continue;
            }
            let key = canon(c % n, d);
            if seen.contains(&key) {
                continue;
            }
            seen.push(key);
            // Lift (c, d) to a coprime pair and complete to SL2(Z).
            let mut d2 = d;
            while c.gcd(&d2) != 1 {
                d2 += n;
            }
            let e = c.extended_gcd(&d2);
            // a·d2 − b·c = 1 with a = e.y, b = −e.x.
            let m = [[e.y, -e.x], [c, d2]];
            debug_assert_eq!(det2(&m), 1);
            out.push(MetaElement {
                matrix: m,
                branch: 1,
            });
        }
    }
    out
}

/// Position of the bottom row of m in P¹(Z/N), as a canonical pair.
pub fn p1_class(m: &Mat2, n: i64) -> (i64, i64) {
    let (c, d) = (m[1][0], m[1][1]);
    (1..=n)
        .filter(|u| u.gcd(&n) == 1)
        .map(|u| ((u * c).rem_euclid(n), (u * d).rem_euclid(n)))
        .min()
        .unwrap()
}

fn sawtooth(x: &Q) -> Q {
    if x.is_integer() {
        Q::zero()
    } else {
        x - x.floor() - q(1, 2)
    }
}

/// Dedekind sum s(h, k) for k > 0.
pub fn dedekind_sum(h: i64, k: i64) -> Q {
    (1..k)
        .map(|r| sawtooth(&q(r, k)) * sawtooth(&q(h * r, k)))
        .sum()
}

/// x ∈ [0, 1) with η(γτ) = e(x)·√(cτ+d)·η(τ) (principal branch).
pub fn eta_multiplier(m: &Mat2) -> Q {
    let [[a, b], [c, d]] = *m;
    let x = if c > 0 {
        q(a + d, 24 * c) - dedekind_sum(d, c) / qi(2) - q(1, 8)
    } else if c == 0 {
        if d == 1 {
            q(b, 24)
        } else {
            // √(−1) = i.
            q(-b, 24) - q(1, 4)
        }
    } else {
        eta_multiplier(&[[-a, -b], [-c, -d]]) + q(1, 4)
    };
    &x - x.floor()
}

/// Expansion of f|γ̃ for an eta quotient f of weight 1/2:
/// √radicand · Σ_e series[e]·q^{e/(24N)}, coefficients in Z[ζ_{24N}].
#[derive(Clone, Debug)]
pub struct SlashExpansion {
    pub unit: i64,
    pub radicand: Q,
    pub series: BTreeMap<i64, ZCyc>,
}

impl SlashExpansion {
    pub fn to_cyclo(&self) -> BTreeMap<Q, Cyclo> {
        let m = self.unit as u32;
        let root = Cyclo::sqrt_rational(m, &self.radicand).expect("radicand is supported");
        self.series
            .iter()
            .map(|(e, c)| (q(*e, self.unit), &root * &c.to_cyclo()))
            .collect()
    }
}

struct Factor {
    r: i64,
    a: i64,
    b: i64,
    d: i64,
    lead: i64,
}

/// f|γ̃ with exponents up to `max_units`/(24N), N the level of f.
pub fn slash_eta_quotient(
    eq: &EtaQuotient,
    g: &MetaElement,
    max_units: i64,
) -> Result<SlashExpansion> {
    let n = eq.level as i64;
    let unit = 24 * n;
    let m = unit as u32;
    let total_r: i64 = eq.exponents.values().sum();
    if total_r != 1 {
        return Err(Error::Argument(format!(
            "{eq} has weight {} rather than 1/2",
            eq.weight()
        )));
    }
    let [[a, b], [c, d]] = g.matrix;
    let mut factors = Vec::new();
    let mut radicand = Q::one();
    let mut mult = Q::zero();
    for (&delta, &r) in &eq.exponents {
        let delta = delta as i64;
        let (da, db) = (delta * a, delta * b);
        let aa = da.gcd(&c);
        let alpha = da / aa;
        let gam = c / aa;
        let e = alpha.extended_gcd(&gam);
        let (dd0, beta0) = (e.x, -e.y);
        // γ0^{-1}·M_δ = (aa, b0; 0, dd).
        let b0 = dd0 * db - beta0 * d;
        let dd = delta / aa;
        debug_assert_eq!(-gam * db + alpha * d, dd);
        let t = Integer::div_floor(&b0, &dd);
        let bb = b0 - t * dd;
        let gamma_delta = [[alpha, alpha * t + beta0], [gam, gam * t + dd0]];
        debug_assert_eq!(det2(&gamma_delta), 1);
        mult += eta_multiplier(&gamma_delta) * qi(r);
        radicand *= Q::from_integer(BigInt::from(dd)).pow(-r as i32);
        factors.push(Factor {
            r,
            a: aa,
            b: bb,
            d: dd,
            lead: aa * r * n / dd,
        });
    }
    let lead_total: i64 = factors.iter().map(|f| f.lead).sum();
    let mut series: BTreeMap<i64, ZCyc> = BTreeMap::new();
    if lead_total <= max_units {
        series.insert(0, ZCyc::root(m, 0));
        for f in &factors {
            let room = max_units - (lead_total - f.lead);
            // A(r+24k)N/D ≤ room.
            let kmax =
                Integer::div_floor(&(Integer::div_floor(&(room * f.d), &(f.a * n)) - f.r), &24);
            if kmax < 0 {
                series.clear();
                break;
            }
            let coeffs = eta_power_coeffs(f.r, kmax as usize + 1);
            let mut next: BTreeMap<i64, ZCyc> = BTreeMap::new();
            for (k, ck) in coeffs.iter().enumerate() {
                if ck.is_zero() {
                    continue;
                }
                let ck = ck
                    .to_i128()
                    .ok_or_else(|| Error::Internal("η-power coefficient overflow".into()))?;
                let num = f.r + 24 * k as i64;
                let exp = f.a * num * n / f.d;
                let rot = f.b * num * n / f.d;
                for (e0, z) in &series {
                    let slot = next.entry(e0 + exp).or_insert_with(|| ZCyc::zero(m));
                    slot.checked_add_scaled_rotated(z, ck, rot).ok_or_else(|| {
                        Error::Precision(format!(
                            "slash expansion of {eq} exceeds i128 at q^{}",
                            e0 + exp
                        ))
                    })?;
                }
            }
            series = next;
        }
    }
    let rot = (&mult * qi(unit)).to_integer().to_i64().unwrap();
    let sign = g.branch as i128;
    let series = series
        .into_iter()
        .filter(|(e, z)| *e <= max_units && z.c.iter().any(|x| *x != 0))
        .map(|(e, z)| (e, z.rotated(rot).scale(sign)))
        .collect();
    Ok(SlashExpansion {
        unit,
        radicand,
        series,
    })
}

/// Σ_η Σ_m c_η(m) q^m e_η, with every coefficient for m ≤ trunc present
/// (zero coefficients omitted).
#[derive(Clone, Debug, Serialize)]
pub struct VectorForm {
    pub level: i64,
    pub trunc: Q,
    #[serde(skip)]
    pub coeffs: BTreeMap<(usize, Q), Cyclo>,
}

impl VectorForm {
    pub fn coeff(&self, eta: usize, m: &Q) -> Result<Cyclo> {
        if *m > self.trunc {
            return Err(Error::Precision(format!(
                "c_η({m}) beyond truncation {}",
                self.trunc
            )));
        }
        let order = self
            .coeffs
            .values()
            .next()
            .map(|c| c.m)
            .unwrap_or(24 * self.level as u32);
        Ok(self
            .coeffs
            .get(&(eta, m.clone()))
            .cloned()
            .unwrap_or_else(|| Cyclo::zero(order)))
    }

    pub fn rational_coeff(&self, eta: usize, m: &Q) -> Result<Q> {
        let c = self.coeff(eta, m)?;
        c.to_rational()
            .ok_or_else(|| Error::Internal(format!("c_{eta}({m}) = {c} is not rational")))
    }

    /// (m, c_η(m)) with m < 0.
    pub fn principal_part(&self, eta: usize) -> Vec<(Q, Cyclo)> {
        self.coeffs
            .iter()
            .filter(|((e, m), _)| *e == eta && m.is_negative())
            .map(|((_, m), c)| (m.clone(), c.clone()))
            .collect()
    }

    pub fn add(&self, o: &VectorForm) -> VectorForm {
        let mut out = self.clone();
        out.trunc = self.trunc.clone().min(o.trunc.clone());
        for (k, c) in &o.coeffs {
            let sum = match out.coeffs.get(k) {
                Some(x) => x + c,
                None => c.clone(),
            };
            if sum.is_zero() {
                out.coeffs.remove(k);
            } else {
                out.coeffs.insert(k.clone(), sum);
            }
        }
        let t = out.trunc.clone();
        out.coeffs.retain(|(_, m), _| *m <= t);
        out
    }

    pub fn scale(&self, s: &Q) -> VectorForm {
        let mut out = self.clone();
        if s.is_zero() {
            out.coeffs.clear();
        } else {
            for c in out.coeffs.values_mut() {
                *c = c.scale(s);
            }
        }
        out
    }

    /// Exponents m with m + Q(η) ∉ Z carrying a nonzero coefficient.
    pub fn support_violations(&self, group: &DiscGroup) -> Vec<(usize, Q)> {
        self.coeffs
            .keys()
            .filter(|(eta, m)| !(m + group.qval(*eta)).is_integer())
            .cloned()
            .collect()
    }

    /// Nonzero c_η(m) with m < 0 and η ≠ 0.
    pub fn finite_poles(&self) -> Vec<(usize, Q)> {
        self.coeffs
            .keys()
            .filter(|(eta, m)| *eta != 0 && m.is_negative())
            .cloned()
            .collect()
    }

    /// Rational coefficients of the form, keyed by (η, m).
    pub fn rational_table(&self) -> Result<BTreeMap<(usize, Q), Q>> {
        self.coeffs
            .iter()
            .map(|((e, m), c)| {
                c.to_rational()
                    .map(|x| ((*e, m.clone()), x))
                    .ok_or_else(|| Error::Internal(format!("c_{e}({m}) is not rational")))
            })
            .collect()
    }
}

/// Coset-sum lift with the images ρ(γ̃⁻¹)e_0 of the representatives cached.
pub struct Vectorizer<'a> {
    pub action: &'a WeilAction,
    pub reps: Vec<MetaElement>,
    images: Vec<WeilVec>,
}

impl<'a> Vectorizer<'a> {
    pub fn new(action: &'a WeilAction) -> Self {
        Vectorizer::with_reps(action, coset_reps(action.group.level))
    }

    pub fn with_reps(action: &'a WeilAction, reps: Vec<MetaElement>) -> Self {
        let e0 = action.basis(0);
        let images = reps
            .iter()
            .map(|g| action.apply(&g.inverse(), &e0))
            .collect();
        Vectorizer {
            action,
            reps,
            images,
        }
    }

    /// F_f = Σ_{γ ∈ Γ̃0(N)\Mp2(Z)} f|γ̃ · ρ(γ̃⁻¹)e_0, truncated at q^{max_exp}.
    pub fn quotient(&self, eq: &EtaQuotient, max_exp: &Q) -> Result<VectorForm> {
        let action = self.action;
        if eq.weight() != q(1, 2) {
            return Err(Error::Argument(format!(
                "{eq} has weight {}, expected 1/2",
                eq.weight()
            )));
        }
        check_etaprod_conditions(eq, &action.group)?;
        let n = action.group.level;
        let unit = 24 * n;
        let m = unit as u32;
        let lift = (m / action.order) as usize;
        let max_units = (max_exp * qi(unit)).floor().to_integer().to_i64().unwrap();
        // (power of C_L, radicand) ↦ η ↦ exponent ↦ coefficient.
        type Acc = BTreeMap<(u32, Q), Vec<BTreeMap<i64, ZCyc>>>;
        let mut acc: Acc = BTreeMap::new();
        for (g, v) in self.reps.iter().zip(&self.images) {
            let slash = slash_eta_quotient(eq, g, max_units)?;
            if slash.series.is_empty() {
                continue;
            }
            let slot = acc
                .entry((v.s, slash.radicand.clone()))
                .or_insert_with(|| vec![BTreeMap::new(); action.group.len()]);
            for (eta, comp) in v.comps.iter().enumerate() {
                if comp.c.iter().all(|x| *x == 0) {
                    continue;
                }
                let mut lifted = ZCyc::zero(m);
                for (k, x) in comp.c.iter().enumerate() {
                    lifted.c[k * lift] = *x;
                }
                for (e, z) in &slash.series {
                    let t = lifted.mul(z);
                    slot[eta]
                        .entry(*e)
                        .and_modify(|s| s.add_rotated(&t, 0))
                        .or_insert(t);
                }
            }
        }
        let mut coeffs: BTreeMap<(usize, Q), Cyclo> = BTreeMap::new();
        for ((s, rad), comps) in acc {
            let scale = &action.c_l.pow(s).lift(m) * &Cyclo::sqrt_rational(m, &rad)?;
            for (eta, series) in comps.into_iter().enumerate() {
                for (e, mut z) in series {
                    z.reduce();
                    let term = &scale * &z.to_cyclo();
                    let key = (eta, q(e, unit));
                    let sum = match coeffs.remove(&key) {
                        Some(x) => &x + &term,
                        None => term,
                    };
                    coeffs.insert(key, sum);
                }
            }
        }
        coeffs.retain(|_, c| !c.is_zero());
        Ok(VectorForm {
            level: n,
            trunc: max_exp.clone(),
            coeffs,
        })
    }

    /// Linear extension to an input form.
    pub fn form(&self, form: &InputForm, max_exp: &Q) -> Result<VectorForm> {
        let group = &self.action.group;
        if form.level as i64 != group.level || form.group_order as usize != group.len() {
            return Err(Error::Argument(format!(
                "input form of level {} for |Λ| = {} does not match the discriminant form",
                form.level, form.group_order
            )));
        }
        let mut out = VectorForm {
            level: group.level,
            trunc: max_exp.clone(),
            coeffs: BTreeMap::new(),
        };
        for (c, eq) in &form.terms {
            out = out.add(&self.quotient(eq, max_exp)?.scale(c));
        }
        Ok(out)
    }

    /// c_η(0) of F_f for the η with Q(η) = 0, in group order.
    pub fn constant_terms(&self, eq: &EtaQuotient) -> Result<Vec<Q>> {
        let f = self.quotient(eq, &Q::zero())?;
        let group = &self.action.group;
        (0..group.len())
            .filter(|&i| group.qnum[i] == 0)
            .map(|i| f.rational_coeff(i, &Q::zero()))
            .collect()
    }
}

/// F_f for a single eta quotient, truncated at q^{max_exp}.
pub fn vectorize_quotient(
    eq: &EtaQuotient,
    action: &WeilAction,
    max_exp: &Q,
) -> Result<VectorForm> {
    Vectorizer::new(action).quotient(eq, max_exp)
}

pub fn vectorize(form: &InputForm, action: &WeilAction, max_exp: &Q) -> Result<VectorForm> {
    Vectorizer::new(action).form(form, max_exp)
}

/// An input form whose lift has the given principal part in the e_0
/// component and vanishing constant terms in every component.
pub fn solve_vector_input_form(
    action: &WeilAction,
    target: &BTreeMap<i64, Q>,
) -> Result<InputForm> {
    let vz = Vectorizer::new(action);
    solve_input_form_with(
        action.group.level as u64,
        action.group.len() as u64,
        target,
        DEFAULT_TRUNC,
        &|eq| vz.constant_terms(eq),
    )
}
