//! Independent oracles and golden-data loaders shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::PathBuf;

use num_integer::Integer;
use num_traits::Zero;
use smcurve::arith::{q, qi, FactoredRational, Q};
use smcurve::lattice::{CMSplitting, TraceZeroLattice};
use smcurve::pipeline::parse_table;

pub fn data_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/data")
        .join(name)
}

/// Golden value of t_D at a rational CM point.
#[derive(Clone, Debug, PartialEq)]
pub enum GoldenPoint {
    Zero,
    Infinity,
    Finite(FactoredRational),
}

pub fn rational_golden(d: u64) -> Vec<(i64, GoldenPoint)> {
    let text = std::fs::read_to_string(data_path(&format!("rational_d{d}.tsv"))).unwrap();
    parse_table(&text)
        .unwrap()
        .into_iter()
        .map(|(disc, cols)| {
            let v = match cols[0].as_str() {
                "inf" => GoldenPoint::Infinity,
                "0" => GoldenPoint::Zero,
                s => GoldenPoint::Finite(s.parse().unwrap()),
            };
            (disc, v)
        })
        .collect()
}

/// (Δ, |value|, |companion|) rows of a golden norm table.
pub fn norms_golden(d: u64) -> Vec<(i64, FactoredRational, FactoredRational)> {
    let text = std::fs::read_to_string(data_path(&format!("norms_d{d}.tsv"))).unwrap();
    parse_table(&text)
        .unwrap()
        .into_iter()
        .map(|(disc, cols)| {
            let v: FactoredRational = cols[0].parse().unwrap();
            let c: FactoredRational = cols[1].parse().unwrap();
            (disc, v.abs(), c.abs())
        })
        .collect()
}

/// Π_δ Π_{n≥1} (1 − q^{δn})^{r_δ} up to q^{len−1}, by repeated multiplication
/// and geometric-series division.
pub fn naive_eta_product(exps: &[(u64, i64)], len: usize) -> Vec<i128> {
    let mut c = vec![0i128; len];
    c[0] = 1;
    for &(delta, r) in exps {
        for n in 1.. {
            let k = (delta as usize) * n;
            if k >= len {
                break;
            }
            for _ in 0..r.abs() {
                if r > 0 {
                    for i in (k..len).rev() {
                        c[i] -= c[i - k];
                    }
                } else {
                    for i in k..len {
                        c[i] += c[i - k];
                    }
                }
            }
        }
    }
    c
}

/// Order at ∞ of Π η(δτ)^{r_δ}: Σ δ r_δ / 24.
pub fn eta_leading(exps: &[(u64, i64)]) -> Q {
    q(exps.iter().map(|&(d, r)| d as i64 * r).sum(), 24)
}

/// Reduced primitive forms of discriminant disc < 0, counted directly.
pub fn brute_class_number(disc: i64) -> u64 {
    let mut h = 0;
    let mut a = 1i64;
    while 3 * a * a <= -disc {
        for b in -a + 1..=a {
            let num = b * b - disc;
            if num % (4 * a) != 0 {
                continue;
            }
            let c = num / (4 * a);
            if c < a || (c == a && b < 0) {
                continue;
            }
            if a.gcd(&b).gcd(&c) == 1 {
                h += 1;
            }
        }
        a += 1;
    }
    h
}

/// Kronecker symbol (a/n) for n ≥ 1.
pub fn kronecker_oracle(a: i64, n: i64) -> i64 {
    let mut result = 1i64;
    let mut n = n;
    let mut a = a;
    while n % 2 == 0 {
        n /= 2;
        result *= match a.rem_euclid(8) {
            1 | 7 => 1,
            3 | 5 => -1,
            _ => 0,
        };
    }
    // Jacobi symbol for odd n.
    a = a.rem_euclid(n);
    while a != 0 {
        while a % 2 == 0 {
            a /= 2;
            if matches!(n % 8, 3 | 5) {
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

/// Class number of a fundamental discriminant from the finite Dirichlet sum
/// h = −(w / 2|Δ|)·Σ_{n<|Δ|} (Δ/n)·n.
pub fn dirichlet_class_number(disc: i64) -> i64 {
    let w = match disc {
        -3 => 6,
        -4 => 4,
        _ => 2,
    };
    let s: i64 = (1..-disc).map(|n| kronecker_oracle(disc, n) * n).sum();
    -w * s / (2 * -disc)
}

/// Σ over the cusps of Γ0(N) of the order of vanishing, from Ligozat's formula,
/// compared against weight·index/12.
pub fn ligozat_valence(level: u64, exps: &BTreeMap<u64, i64>) -> (Q, Q) {
    let n = level as i64;
    let mut total = Q::zero();
    for c in (1..=n).filter(|c| n % c == 0) {
        let g = c.gcd(&(n / c));
        let cusps = (1..=g).filter(|x| x.gcd(&g) == 1).count() as i64;
        let mut s = Q::zero();
        for (&delta, &r) in exps {
            let delta = delta as i64;
            let gg = c.gcd(&delta);
            s += q(gg * gg * r, delta);
        }
        total += s * q(n, 24 * g * c) * qi(cusps);
    }
    let weight = q(exps.values().sum(), 2);
    let mut index = qi(n);
    let mut m = n;
    let mut p = 2;
    while m > 1 {
        if m % p == 0 {
            index *= q(p + 1, p);
            while m % p == 0 {
                m /= p;
            }
        }
        p += 1;
    }
    (total, weight * index / qi(12))
}

/// Solves a·x = b for a 3×3 rational system by Cramer's rule.
fn solve3(cols: [[Q; 3]; 3], b: &[Q; 3]) -> [Q; 3] {
    let det = |m: &[[Q; 3]; 3]| {
        &m[0][0] * (&m[1][1] * &m[2][2] - &m[1][2] * &m[2][1])
            - &m[0][1] * (&m[1][0] * &m[2][2] - &m[1][2] * &m[2][0])
            + &m[0][2] * (&m[1][0] * &m[2][1] - &m[1][1] * &m[2][0])
    };
    // Rows of the matrix whose columns are `cols`.
    let rows =
        |c: &[[Q; 3]; 3]| -> [[Q; 3]; 3] { [0, 1, 2].map(|i| [0, 1, 2].map(|j| c[j][i].clone())) };
    let d = det(&rows(&cols));
    assert!(!d.is_zero());
    [0, 1, 2].map(|k| {
        let mut c = cols.clone();
        c[k] = b.clone();
        det(&rows(&c)) / &d
    })
}

/// Checks that the glue representatives of a splitting form an exact system of
/// coset representatives of L / (L_+ ⊕ L_-): every lattice vector in `probe`
/// falls in exactly one class, each representative is consistent, and the
/// class count matches the determinant identity. Returns an error message on
/// failure.
pub fn glue_exactness(
    l: &TraceZeroLattice,
    s: &CMSplitting,
    probe: &[[i64; 3]],
) -> Result<(), String> {
    let basis = [s.lminus[0].map(qi), s.lminus[1].map(qi), s.z0.map(qi)];
    // [L : L_+ ⊕ L_-]² = det(L_+)·det(L_-)/det(L).
    let det_plus = l.bilinear(&s.z0, &s.z0) as i64;
    let g = &s.gram_minus;
    let det_minus = g[0][0] * g[1][1] - g[0][1] * g[1][0];
    let ratio = q(det_plus * det_minus, l.det());
    let index = qi(s.glue.len() as i64);
    if &index * &index != ratio {
        return Err(format!(
            "|glue|² = {} but determinant ratio is {ratio}",
            &index * &index
        ));
    }
    let frac = |x: &Q| x - x.floor();
    let classes: Vec<(Q, Q, Q)> = s
        .glue
        .iter()
        .map(|gl| {
            let c = solve3(basis.clone(), &gl.lambda.map(qi));
            (frac(&c[0]), frac(&c[1]), frac(&c[2]))
        })
        .collect();
    for (i, gl) in s.glue.iter().enumerate() {
        // The recorded λ_+ and λ_- reproduce λ modulo L_+ ⊕ L_-.
        if frac(&gl.plus) != classes[i].2
            || frac(&gl.minus[0]) != classes[i].0
            || frac(&gl.minus[1]) != classes[i].1
        {
            return Err(format!(
                "glue {i}: recorded components differ from the projection of λ"
            ));
        }
        for j in 0..i {
            if classes[i] == classes[j] {
                return Err(format!("glue {i} and {j} represent the same class"));
            }
        }
    }
    for v in probe {
        let c = solve3(basis.clone(), &v.map(qi));
        let key = (frac(&c[0]), frac(&c[1]), frac(&c[2]));
        let hits = classes.iter().filter(|k| **k == key).count();
        if hits != 1 {
            return Err(format!("{v:?} lies in {hits} glue classes"));
        }
    }
    Ok(())
}
