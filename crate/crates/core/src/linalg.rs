//! Small dense integer matrices: Smith form with transforms and kernels.

pub(crate) type IMat = Vec<Vec<i128>>;

pub(crate) fn identity(n: usize) -> IMat {
    (0..n)
        .map(|i| (0..n).map(|j| i128::from(i == j)).collect())
        .collect()
}

pub(crate) fn mat_mul(a: &IMat, b: &IMat) -> IMat {
    let (n, k, m) = (a.len(), b.len(), b[0].len());
    (0..n)
        .map(|i| {
            (0..m)
                .map(|j| (0..k).map(|t| a[i][t] * b[t][j]).sum())
                .collect()
        })
        .collect()
}

pub(crate) fn det3(m: &IMat) -> i128 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

/// Smith normal form of a square nonsingular matrix: returns (U, D, V) with
/// U·A·V = diag(D), U and V unimodular, D[i] | D[i+1], D[i] > 0.
pub(crate) fn smith(a: &IMat) -> (IMat, Vec<i128>, IMat) {
    let n = a.len();
    let mut m = a.clone();
    let mut u = identity(n);
    let mut v = identity(n);
    for t in 0..n {
        loop {
            // Move the smallest nonzero entry of the trailing block to (t, t).
            let mut best: Option<(usize, usize)> = None;
            for i in t..n {
                for j in t..n {
                    if m[i][j] != 0 && best.is_none_or(|(bi, bj)| m[i][j].abs() < m[bi][bj].abs()) {
                        best = Some((i, j));
                    }
                }
            }
            let Some((bi, bj)) = best else { break };
            m.swap(t, bi);
            u.swap(t, bi);
            for row in m.iter_mut() {
                row.swap(t, bj);
            }
            for row in v.iter_mut() {
                row.swap(t, bj);
            }
            let p = m[t][t];
            let mut clean = true;
            for i in t + 1..n {
                let f = m[i][t] / p;
                if f != 0 {
                    for j in 0..n {
                        m[i][j] -= f * m[t][j];
                        u[i][j] -= f * u[t][j];
                    }
                }
                if m[i][t] != 0 {
                    clean = false;
                }
            }
            for j in t + 1..n {
                let f = m[t][j] / p;
                if f != 0 {
                    for i in 0..n {
                        m[i][j] -= f * m[i][t];
                        v[i][j] -= f * v[i][t];
                    }
                }
                if m[t][j] != 0 {
                    clean = false;
                }
            }
            if !clean {
                continue;
            }
            // Divisibility: fold a non-divisible row into row t.
            let mut bad = None;
            'outer: for i in t + 1..n {
                for j in t + 1..n {
                    if m[i][j] % p != 0 {
                        bad = Some(i);
                        break 'outer;
                    }
                }
            }
            match bad {
                Some(i) => {
                    for j in 0..n {
                        m[t][j] += m[i][j];
                        u[t][j] += u[i][j];
                    }
                }
                None => break,
            }
        }
        if m[t][t] < 0 {
            for j in 0..n {
                m[t][j] = -m[t][j];
                u[t][j] = -u[t][j];
            }
        }
    }
    let d = (0..n).map(|i| m[i][i]).collect();
    (u, d, v)
}

/// Unimodular V with r·V = (g, 0, ..., 0); the last n−1 columns span ker r.
pub(crate) fn row_reduce(r: &[i128]) -> (i128, IMat) {
    let n = r.len();
    let mut vals = r.to_vec();
    let mut v = identity(n);
    loop {
        let nz: Vec<usize> = (0..n).filter(|&i| vals[i] != 0).collect();
        if nz.len() <= 1 {
            break;
        }
        let i = *nz.iter().min_by_key(|&&i| vals[i].abs()).unwrap();
        for &j in &nz {
            if j != i {
                let f = vals[j].div_euclid(vals[i]);
                vals[j] -= f * vals[i];
                for row in v.iter_mut() {
                    row[j] -= f * row[i];
                }
            }
        }
    }
    let lead = (0..n).find(|&i| vals[i] != 0).unwrap_or(0);
    if lead != 0 {
        vals.swap(0, lead);
        for row in v.iter_mut() {
            row.swap(0, lead);
        }
    }
    if vals[0] < 0 {
        vals[0] = -vals[0];
        for row in v.iter_mut() {
            row[0] = -row[0];
        }
    }
    (vals[0], v)
}

pub(crate) fn gcd(a: i128, b: i128) -> i128 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

pub(crate) fn lcm(a: i128, b: i128) -> i128 {
    if a == 0 || b == 0 {
        return 0;
    }
    (a / gcd(a, b) * b).abs()
}

/// Column echelon form: returns (H, V, pivots) with A·V = H, V unimodular and
/// H lower echelon; `pivots[i]` is the row of the pivot in column i, for the
/// first `pivots.len()` columns. Pivots are positive.
pub(crate) fn column_echelon(a: &IMat) -> (IMat, IMat, Vec<usize>) {
    let m = a.len();
    let n = if m == 0 { 0 } else { a[0].len() };
    let mut h = a.clone();
    let mut v = identity(n);
    let mut pivots = Vec::new();
    let mut col = 0;
    for row in 0..m {
        if col >= n {
            break;
        }
        loop {
            let nz: Vec<usize> = (col..n).filter(|&j| h[row][j] != 0).collect();
            if nz.len() <= 1 {
                break;
            }
            let i = *nz.iter().min_by_key(|&&j| h[row][j].abs()).unwrap();
            for &j in &nz {
                if j != i {
                    let f = h[row][j].div_euclid(h[row][i]);
                    for r in h.iter_mut() {
                        r[j] -= f * r[i];
                    }
                    for r in v.iter_mut() {
                        r[j] -= f * r[i];
                    }
                }
            }
        }
        let Some(j) = (col..n).find(|&j| h[row][j] != 0) else {
            continue;
        };
        for r in h.iter_mut() {
            r.swap(col, j);
        }
        for r in v.iter_mut() {
            r.swap(col, j);
        }
        if h[row][col] < 0 {
            for r in h.iter_mut() {
                r[col] = -r[col];
            }
            for r in v.iter_mut() {
                r[col] = -r[col];
            }
        }
        // Reduce entries left of the pivot into [0, pivot).
        for k in 0..col {
            let f = h[row][k].div_euclid(h[row][col]);
            if f != 0 {
                for r in h.iter_mut() {
                    r[k] -= f * r[col];
                }
                for r in v.iter_mut() {
                    r[k] -= f * r[col];
                }
            }
        }
        pivots.push(row);
        col += 1;
    }
    (h, v, pivots)
}

/// All integer solutions of A·x = b: a particular solution and a kernel basis.
pub(crate) fn solve_integer(a: &IMat, b: &[i128]) -> Option<(Vec<i128>, Vec<Vec<i128>>)> {
    let n = a[0].len();
    let (h, v, pivots) = column_echelon(a);
    let rank = pivots.len();
    let mut y = vec![0i128; n];
    for (c, &row) in pivots.iter().enumerate() {
        let s: i128 = (0..c).map(|j| h[row][j] * y[j]).sum();
        let r = b[row] - s;
        if r % h[row][c] != 0 {
            return None;
        }
        y[c] = r / h[row][c];
    }
    for (row, bv) in b.iter().enumerate() {
        let s: i128 = (0..rank).map(|j| h[row][j] * y[j]).sum();
        if s != *bv {
            return None;
        }
    }
    let x = (0..n)
        .map(|i| (0..n).map(|j| v[i][j] * y[j]).sum())
        .collect();
    let kernel = (rank..n)
        .map(|j| (0..n).map(|i| v[i][j]).collect())
        .collect();
    Some((x, kernel))
}
