//! Exact max-weight one-to-one assignment on small integer matrices.
//!
//! The classic O(n²m) potentials algorithm over a rectangular weight matrix
//! padded with zero columns; padding keeps rows unmatched at zero gain. All
//! arithmetic is i64, so optimal totals are exact and reproducible.

const INF: i64 = i64::MAX / 4;

/// Maximum total weight of a one-to-one row/column assignment, plus each
/// row's matched column. Zero-weight matches are reported as unmatched.
pub fn max_weight_assignment(weights: &[Vec<i64>]) -> (i64, Vec<Option<usize>>) {
    let n_rows = weights.len();
    let n_cols = weights.first().map(|r| r.len()).unwrap_or(0);
    if n_rows == 0 || n_cols == 0 {
        return (0, vec![None; n_rows]);
    }
    // Pad columns so every row can be assigned (possibly to a zero column).
    let m = n_cols.max(n_rows);
    let cost = |i: usize, j: usize| -> i64 {
        if j < n_cols {
            -weights[i][j]
        } else {
            0
        }
    };

    // 1-indexed potentials formulation; p[j] is the row assigned to column j.
    let mut u = vec![0i64; n_rows + 1];
    let mut v = vec![0i64; m + 1];
    let mut p = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];

    for i in 1..=n_rows {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![INF; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = INF;
            let mut j1 = 0usize;
            for j in 1..=m {
                if used[j] {
                    continue;
                }
                let cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut matched = vec![None; n_rows];
    let mut total = 0i64;
    for j in 1..=m {
        let row = p[j];
        if row == 0 || j > n_cols {
            continue;
        }
        let w = weights[row - 1][j - 1];
        if w > 0 {
            matched[row - 1] = Some(j - 1);
            total += w;
        }
    }
    (total, matched)
}

/// Optimal total over a sub-problem restricted to the given rows/columns.
pub fn max_weight_total(weights: &[Vec<i64>], rows: &[usize], cols: &[usize]) -> i64 {
    if rows.is_empty() || cols.is_empty() {
        return 0;
    }
    let sub: Vec<Vec<i64>> = rows
        .iter()
        .map(|&i| cols.iter().map(|&j| weights[i][j]).collect())
        .collect();
    max_weight_assignment(&sub).0
}
