//! End-to-end evaluation of |t_D| and |offset − t_D| on CM 0-cycles.

use std::sync::OnceLock;

use num_integer::Integer;
use num_traits::{Signed, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::arith::{
    cm_orbit_size, fundamental_part, is_fundamental, is_squarefree, kronecker, prime_divisors, q,
    qi, unit_count, FactoredRational, LogCombination, Q,
};
use crate::error::{Error, Result};
use crate::etaforms::{companion_principal_part, target_principal_part, InputForm};
use crate::lattice::{
    cm_splitting, disc_group, find_cm_vector, find_cm_vector_with, trace_zero_lattice, DiscGroup,
    TraceZeroLattice,
};
use crate::quaternion::{maximal_order, QuatOrder};
use crate::weilrep::{solve_vector_input_form, Vectorizer, WeilAction};
use crate::whittaker::kappa_eta;

/// Tolerance on the archimedean residual of an emitted value.
pub const RESIDUAL_TOL: f64 = 1e-9;

/// Largest |d| accepted by [`table`].
pub const MAX_TABLE_D: i64 = 2000;

#[derive(Clone, Debug, Serialize)]
pub struct CurveConfig {
    pub d: u64,
    /// The parameter q of the maximal order.
    pub q: u64,
    /// c_D with |t_D| = c_D·‖Ψ(F)²‖.
    pub normalization: FactoredRational,
    /// t_D at the base point.
    pub base_disc: i64,
    pub base_value: i64,
    /// A CM point where t_D vanishes.
    pub zero_disc: i64,
    /// The companion is offset − t_D.
    pub offset: i64,
}

impl CurveConfig {
    pub fn new(d: u64) -> Result<Self> {
        match d {
            6 => Ok(CurveConfig {
                d,
                q: 5,
                normalization: FactoredRational::from_rational(&qi(6i64.pow(6)))?,
                base_disc: -24,
                base_value: 1,
                zero_disc: -4,
                offset: 1,
            }),
            10 => Ok(CurveConfig {
                d,
                q: 13,
                normalization: FactoredRational::from_rational(&q(1, 4))?,
                base_disc: -20,
                base_value: 2,
                zero_disc: -3,
                offset: 2,
            }),
            _ => Err(Error::Argument(format!("D = {d} is not supported"))),
        }
    }

    /// d(B): the number of primes dividing D.
    pub fn ramified_count(&self) -> u32 {
        prime_divisors(self.d as i64).len() as u32
    }
}

/// Nonpositive-exponent data of a vector-valued input form: (η, m, c_η(m)).
pub type Coefficients = Vec<(usize, Q, Q)>;

/// Everything that depends only on D.
pub struct Curve {
    pub config: CurveConfig,
    pub order: QuatOrder,
    pub lattice: TraceZeroLattice,
    pub group: DiscGroup,
    pub value_form: InputForm,
    pub companion_form: InputForm,
    pub value_coeffs: Coefficients,
    pub companion_coeffs: Coefficients,
    companion_constant: OnceLock<std::result::Result<LogCombination, String>>,
}

fn nonpositive_coeffs(vz: &Vectorizer, form: &InputForm) -> Result<Coefficients> {
    let f = vz.form(form, &Q::zero())?;
    Ok(f.rational_table()?
        .into_iter()
        .map(|((eta, m), c)| (eta, m, c))
        .collect())
}

impl Curve {
    pub fn build(d: u64) -> Result<Curve> {
        let config = CurveConfig::new(d)?;
        let order = maximal_order(d, config.q)?;
        let lattice = trace_zero_lattice(&order)?;
        let group = disc_group(&lattice);
        let action = WeilAction::new(group.clone());
        let value_form = solve_vector_input_form(&action, &target_principal_part(d)?)?;
        let companion_form = solve_vector_input_form(&action, &companion_principal_part(d)?)?;
        let vz = Vectorizer::new(&action);
        let value_coeffs = nonpositive_coeffs(&vz, &value_form)?;
        let companion_coeffs = nonpositive_coeffs(&vz, &companion_form)?;
        Ok(Curve {
            config,
            order,
            lattice,
            group,
            value_form,
            companion_form,
            value_coeffs,
            companion_coeffs,
            companion_constant: OnceLock::new(),
        })
    }

    /// Heegner indices m with c_η(−m) ≠ 0, with the sign of the coefficient.
    fn divisor(&self, companion: bool) -> Vec<(Q, Q)> {
        let coeffs = if companion {
            &self.companion_coeffs
        } else {
            &self.value_coeffs
        };
        coeffs
            .iter()
            .filter(|(_, m, _)| m.is_negative())
            .map(|(_, m, c)| (-m, c.clone()))
            .collect()
    }

    /// Some(sign of the divisor multiplicity) when P_Δ lies on the divisor.
    pub fn collision(&self, disc: i64, companion: bool) -> Option<i8> {
        for (m, c) in self.divisor(companion) {
            // P_Δ ∈ Z(m) iff 4m = f²|Δ| for an integer f.
            let r = &m * qi(4) / qi(disc.abs());
            if r.is_integer() {
                let v = r.to_integer();
                let s = v.sqrt();
                if &s * &s == v {
                    return Some(if c.is_positive() { 1 } else { -1 });
                }
            }
        }
        None
    }

    /// log c′ with |offset − t_D| = c′·‖Ψ‖, fixed by consistency over the
    /// first rational CM points off both divisors: each point allows the two
    /// values |offset ± |t_D||, and exactly one c′ must fit all of them.
    pub fn companion_constant(&self) -> Result<LogCombination> {
        self.companion_constant
            .get_or_init(|| self.solve_companion_constant().map_err(|e| e.to_string()))
            .clone()
            .map_err(Error::Calibration)
    }

    fn solve_companion_constant(&self) -> Result<LogCombination> {
        let offset = qi(self.config.offset);
        let mut common: Option<Vec<LogCombination>> = None;
        let points: Vec<i64> = rational_cm_list(self.config.d)?
            .into_iter()
            .filter(|&z| is_fundamental(z) && unit_count(z) == 2)
            .filter(|&z| self.collision(z, false).is_none() && self.collision(z, true).is_none())
            .take(CALIBRATION_POINTS)
            .collect();
        if points.len() < 2 {
            return Err(Error::Calibration("too few rational CM points".into()));
        }
        for z in points {
            let a = point_log(self, z, false)?
                .exp(1, RESIDUAL_TOL)?
                .to_rational();
            let vc = schofer_sum(self, &self.companion_coeffs, z)?;
            let cands: Vec<LogCombination> = [a.clone(), -a]
                .iter()
                .filter_map(|t| {
                    let b = (&offset - t).abs();
                    if b.is_zero() {
                        return None;
                    }
                    let mut c = FactoredRational::from_rational(&b).ok()?.log_abs();
                    c.add_scaled(&vc, &qi(-1));
                    (c.residual.abs() < RESIDUAL_TOL).then_some(LogCombination { residual: 0.0, ..c })
                })
                .collect();
            common = Some(match common {
                None => cands,
                Some(prev) => prev
                    .into_iter()
                    .filter(|c| cands.iter().any(|d| d.terms == c.terms))
                    .collect(),
            });
        }
        match common.unwrap_or_default().as_slice() {
            [c] => Ok(c.clone()),
            [] => Err(Error::Calibration(
                "no companion constant fits every rational point".into(),
            )),
            _ => Err(Error::Calibration(
                "companion constant is not determined".into(),
            )),
        }
    }
}

/// Number of rational CM points used to fix the companion constant.
pub const CALIBRATION_POINTS: usize = 3;

static CURVE6: OnceLock<std::result::Result<Curve, String>> = OnceLock::new();
static CURVE10: OnceLock<std::result::Result<Curve, String>> = OnceLock::new();

/// The cached data for D ∈ {6, 10}.
pub fn curve(d: u64) -> Result<&'static Curve> {
    let cell = match d {
        6 => &CURVE6,
        10 => &CURVE10,
        _ => return Err(Error::Argument(format!("D = {d} is not supported"))),
    };
    cell.get_or_init(|| Curve::build(d).map_err(|e| e.to_string()))
        .as_ref()
        .map_err(|e| Error::Internal(format!("building the data for D = {d}: {e}")))
}

/// Checks that Δ is a discriminant whose CM points live on X*_D.
pub fn check_disc(disc: i64, d: u64) -> Result<(i64, u64)> {
    if disc >= 0 || !matches!(disc.rem_euclid(4), 0 | 1) {
        return Err(Error::Argument(format!(
            "{disc} is not a negative discriminant"
        )));
    }
    let (fund, n) = fundamental_part(disc)?;
    for p in prime_divisors(d as i64) {
        if kronecker(fund, p as i64) == 1 {
            return Err(Error::Domain(format!(
                "{p} splits in Q(√{disc}): not a CM point on X*_{d}"
            )));
        }
    }
    if n.gcd(&d) != 1 {
        return Err(Error::Domain(format!(
            "conductor {n} of {disc} shares a prime with {d}"
        )));
    }
    Ok((fund, n))
}

/// Discriminant of the order Q(z) ∩ O for z ∈ L: −4Q(z)/f² for the largest f
/// with (a + z)/f ∈ O for some integer a.
pub fn optimal_disc(curve: &Curve, z: &[i64; 3]) -> i64 {
    let t = curve.lattice.qform(z) as i64;
    let x = curve.lattice.element_int(z);
    let mut best = 1i64;
    for f in 2..=((4 * t) as f64).sqrt() as i64 + 1 {
        if (4 * t) % (f * f) != 0 {
            continue;
        }
        let hit = (0..f).any(|a| {
            let mut y = x.clone();
            y.c[0] += qi(a);
            curve.order.contains(&y.scale(&q(1, f)))
        });
        if hit {
            best = f;
        }
    }
    -4 * t / (best * best)
}

/// A z ∈ L with Q(z) = |Δ|/4 or |Δ| whose optimal order has discriminant Δ.
pub fn cm_vector(curve: &Curve, disc: i64) -> Result<[i64; 3]> {
    let odd = disc.rem_euclid(4) == 1;
    let t = if odd { qi(-disc) } else { q(-disc, 4) };
    let l = &curve.lattice;
    let accept = |z: &[i64; 3]| optimal_disc(curve, z) == disc;
    let pinned = find_cm_vector(l, &t)?;
    if accept(&pinned) {
        return Ok(pinned);
    }
    find_cm_vector_with(l, &t, accept)
}

/// log|f(P_Δ)| up to the normalizing constant: −(1/2^{d(B)})·Σ c_η(m)·κ_η(−m)
/// over η and m ≤ 0.
pub fn schofer_sum(curve: &Curve, coeffs: &Coefficients, disc: i64) -> Result<LogCombination> {
    let z = cm_vector(curve, disc)?;
    let split = cm_splitting(&curve.lattice, &z)?;
    let mut total = LogCombination::zero();
    for (eta, m, c) in coeffs {
        let k =
            kappa_eta(&curve.lattice, &curve.group.coords(*eta), &-m, &split).map_err(
                |e| match e {
                    Error::Domain(msg) => Error::Collision(msg),
                    other => other,
                },
            )?;
        total.add_scaled(&k, c);
    }
    Ok(total.scaled(&q(-1, 1 << curve.config.ramified_count())))
}

#[derive(Clone, Debug, Serialize)]
pub struct NormResult {
    pub d: u64,
    pub disc: i64,
    /// |t_D| multiplied over the Galois orbit (signed when the companion fixes it).
    pub value: FactoredRational,
    /// |offset − t_D| over the same orbit.
    pub companion_value: FactoredRational,
    pub arch_residual: f64,
    /// Number of CM points in the orbit.
    #[serde(serialize_with = "crate::arith::ser_q")]
    pub degree_info: Q,
    /// Whether the sign of `value` is determined.
    pub signed: bool,
}

fn point_log(curve: &Curve, disc: i64, companion: bool) -> Result<LogCombination> {
    if curve.collision(disc, companion).is_some() {
        return Err(Error::Collision(format!(
            "P_{disc} lies on the divisor of {}",
            if companion { "the companion" } else { "t_D" }
        )));
    }
    let coeffs = if companion {
        &curve.companion_coeffs
    } else {
        &curve.value_coeffs
    };
    let mut v = schofer_sum(curve, coeffs, disc)?;
    if companion {
        v.add(&curve.companion_constant()?);
    } else {
        v.add(&curve.config.normalization.log_abs());
    }
    Ok(v)
}

fn orbit_norm(curve: &Curve, disc: i64, companion: bool) -> Result<(FactoredRational, f64, u64)> {
    check_disc(disc, curve.config.d)?;
    let deg = cm_orbit_size(disc, curve.config.d)?;
    let v = point_log(curve, disc, companion)?.scaled(&qi(deg as i64));
    let value = v.exp(1, RESIDUAL_TOL)?;
    let residual = (v.value() - value.log_abs().value())
        .abs()
        .max(v.residual.abs());
    Ok((value, residual, deg))
}

/// |offset − t_D| multiplied over the Galois orbit of P_Δ.
pub fn companion_norm(d: u64, disc: i64) -> Result<FactoredRational> {
    let c = curve(d)?;
    Ok(orbit_norm(c, disc, true)?.0)
}

/// Norm of t_D over the Galois orbit of P_Δ, with the companion norm.
pub fn cm_norm(d: u64, disc: i64) -> Result<NormResult> {
    let c = curve(d)?;
    check_disc(disc, d)?;
    let (value, r1, deg) = orbit_norm(c, disc, false)?;
    let (companion_value, r2) = match c.collision(disc, true) {
        Some(_) => (FactoredRational::zero(), 0.0),
        None => {
            let (v, r, _) = orbit_norm(c, disc, true)?;
            (v, r)
        }
    };
    let mut out = NormResult {
        d,
        disc,
        value,
        companion_value,
        arch_residual: r1.max(r2),
        degree_info: qi(deg as i64),
        signed: false,
    };
    if deg == 1 {
        if let Some(s) = resolve_sign(
            &out.value.to_rational(),
            &out.companion_value.to_rational(),
            c.config.offset,
        ) {
            if s < 0 {
                out.value = out.value.mul(&FactoredRational::from_rational(&qi(-1))?);
            }
            out.signed = true;
        }
    }
    Ok(out)
}

/// The sign s with |offset − s·a| = b, when exactly one sign fits.
pub fn resolve_sign(a: &Q, b: &Q, offset: i64) -> Option<i8> {
    let fits = |s: i64| (qi(offset) - a * qi(s)).abs() == *b;
    match (fits(1), fits(-1)) {
        (true, false) => Some(1),
        (false, true) => Some(-1),
        _ => None,
    }
}

/// Solves for |c_D| at the base point and compares with the stored constant.
pub fn calibrate(d: u64) -> Result<FactoredRational> {
    let c = curve(d)?;
    let cfg = &c.config;
    let v = schofer_sum(c, &c.value_coeffs, cfg.base_disc)?;
    let mut lc = FactoredRational::from_rational(&qi(cfg.base_value))?.log_abs();
    lc.add_scaled(&v, &qi(-1));
    let found = lc.exp(1, RESIDUAL_TOL)?;
    if found != cfg.normalization {
        return Err(Error::Calibration(format!(
            "base point Δ = {} gives c_{d} = {found}, stored {}",
            cfg.base_disc, cfg.normalization
        )));
    }
    Ok(found)
}

/// Value of t_D at a rational CM point.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum PointValue {
    Zero,
    Infinity,
    Finite(FactoredRational),
}

/// t_D(P_Δ) for a CM point of degree 1, with its sign when determined.
pub fn rational_value(d: u64, disc: i64) -> Result<(PointValue, bool)> {
    let c = curve(d)?;
    check_disc(disc, d)?;
    if cm_orbit_size(disc, d)? != 1 {
        return Err(Error::Argument(format!(
            "P_{disc} is not a rational point of X*_{d}"
        )));
    }
    match c.collision(disc, false) {
        Some(s) if s > 0 => return Ok((PointValue::Zero, true)),
        Some(_) => return Ok((PointValue::Infinity, true)),
        None => {}
    }
    if c.collision(disc, true).is_some() {
        return Ok((
            PointValue::Finite(FactoredRational::from_rational(&qi(c.config.offset))?),
            true,
        ));
    }
    let r = cm_norm(d, disc)?;
    Ok((PointValue::Finite(r.value), r.signed))
}

/// Discriminants Δ (fundamental or not) of CM points on X*_D that are
/// rational: the class group of the order is generated by the classes of
/// the primes of D that ramify in Q(√Δ).
pub fn rational_cm_list(d: u64) -> Result<Vec<i64>> {
    CurveConfig::new(d)?;
    let mut out = Vec::new();
    // Class numbers grow past any fixed 2-group well before this bound.
    for n in 3..=5000i64 {
        let disc = -n;
        if !matches!(disc.rem_euclid(4), 0 | 1) || check_disc(disc, d).is_err() {
            continue;
        }
        if cm_orbit_size(disc, d)? == 1 {
            out.push(disc);
        }
    }
    Ok(out)
}

/// Δ = d or 4d for squarefree d with 0 < −d ≤ max_abs_d, in order of |Δ|.
pub fn table_discriminants(d: u64, max_abs_d: i64) -> Result<Vec<i64>> {
    let c = curve(d)?;
    let mut out = Vec::new();
    for n in 1..=max_abs_d {
        if !is_squarefree(n as u64) {
            continue;
        }
        let dd = -n;
        let disc = if dd.rem_euclid(4) == 1 { dd } else { 4 * dd };
        if check_disc(disc, d).is_err() {
            continue;
        }
        if c.collision(disc, false).is_some() || c.collision(disc, true).is_some() {
            continue;
        }
        out.push(disc);
    }
    out.sort_by_key(|x| x.abs());
    Ok(out)
}

/// One table row; `error` is set when the row could not be computed.
#[derive(Clone, Debug, Serialize)]
pub struct TableRow {
    pub result: Option<NormResult>,
    pub disc: i64,
    pub flags: Vec<String>,
}

/// Norms for every admissible Δ with |d| ≤ max_abs_d, computed in parallel
/// and returned in order of |Δ|. Rows that fail are flagged, not dropped.
pub fn table(d: u64, max_abs_d: i64) -> Result<Vec<TableRow>> {
    if max_abs_d > MAX_TABLE_D {
        return Err(Error::Argument(format!(
            "|d| ≤ {MAX_TABLE_D} required, got {max_abs_d}"
        )));
    }
    calibrate(d)?;
    let discs = table_discriminants(d, max_abs_d)?;
    let mut rows: Vec<TableRow> = discs
        .par_iter()
        .map(|&disc| match cm_norm(d, disc) {
            Ok(r) => {
                let mut flags = Vec::new();
                if r.arch_residual >= RESIDUAL_TOL {
                    flags.push("residual".to_string());
                }
                if !r.signed {
                    flags.push("sign-unknown".to_string());
                }
                TableRow {
                    result: Some(r),
                    disc,
                    flags,
                }
            }
            Err(e) => TableRow {
                result: None,
                disc,
                flags: vec![format!("error: {e}")],
            },
        })
        .collect();
    rows.sort_by_key(|r| r.disc.abs());
    Ok(rows)
}

/// Parses a golden table: `disc<TAB>value<TAB>...`, `#` comments.
pub fn parse_table(text: &str) -> Result<Vec<(i64, Vec<String>)>> {
    let mut out = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split('\t');
        let disc: i64 = parts
            .next()
            .and_then(|x| x.trim().parse().ok())
            .ok_or_else(|| Error::Parse(format!("bad row '{line}'")))?;
        out.push((disc, parts.map(|s| s.trim().to_string()).collect()));
    }
    Ok(out)
}

/// One named golden check.
#[derive(Clone, Debug, Serialize)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// Published reference norms: (D, Δ, companion, |value|).
pub const GOLDEN_NORMS: &[(u64, i64, bool, &str)] = &[
    (6, -163, false, "3^11*7^4*19^4*23^4/2^10*5^6*11^6*17^6"),
    (6, -147, false, "11^4*23^4/2^10*3^3*5^6*7"),
    (6, -996, false, "2^16*7^12*71^4*83^2/17^6*29^6*41^6"),
    (6, -996, true, "3^14*13^6*47^2*157^2/17^2*29^6*41^6"),
    (10, -68, false, "2^2*5"),
];

fn golden_norm(d: u64, disc: i64, companion: bool, expect: &str) -> Result<String> {
    let expect: FactoredRational = expect.parse()?;
    let r = cm_norm(d, disc)?;
    let got = if companion {
        r.companion_value.abs()
    } else {
        r.value.abs()
    };
    if got != expect {
        return Err(Error::Calibration(format!("got {got}, expected {expect}")));
    }
    if r.arch_residual >= RESIDUAL_TOL {
        return Err(Error::Precision(format!(
            "archimedean residual {}",
            r.arch_residual
        )));
    }
    Ok(got.to_string())
}

/// Runs the κ calibration, both normalization constants and the reference norms.
pub fn selfcheck() -> Vec<CheckOutcome> {
    let mut out = Vec::new();
    let mut record = |name: String, r: Result<String>| {
        let (passed, detail) = match r {
            Ok(s) => (true, s),
            Err(e) => (false, e.to_string()),
        };
        out.push(CheckOutcome {
            name,
            passed,
            detail,
        });
    };
    record(
        "kappa calibration".into(),
        crate::whittaker::calibration_check().map(|_| "ok".into()),
    );
    for d in [6, 10] {
        record(
            format!("calibrate D={d}"),
            calibrate(d).map(|c| c.to_string()),
        );
    }
    for &(d, disc, companion, expect) in GOLDEN_NORMS {
        let tag = if companion { " companion" } else { "" };
        record(
            format!("norm D={d} disc={disc}{tag}"),
            golden_norm(d, disc, companion, expect),
        );
    }
    out
}
