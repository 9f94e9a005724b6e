//! Maximum-weight perfect matching on the finite entries of a signature
//! matrix, via shortest augmenting paths with dual potentials.

use super::{SigmaError, SignatureMatrix, Transversal};

/// Optimal assignment and its dual potentials for a min-cost problem.
/// `u[i] + v[j] <= cost[i][j]` everywhere, with equality on the assignment.
struct Solved {
    col_of_row: Vec<usize>,
    u: Vec<i64>,
    v: Vec<i64>,
}

fn hungarian(cost: &[Vec<i64>]) -> Solved {
    let n = cost.len();
    let inf = i64::MAX / 4;
    let mut u = vec![0i64; n + 1];
    let mut v = vec![0i64; n + 1];
    // p[j]: row (1-based) matched to column j; column 0 is a virtual root.
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
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
    let mut col_of_row = vec![0; n];
    for j in 1..=n {
        col_of_row[p[j] - 1] = j - 1;
    }
    Solved {
        col_of_row,
        u: u[1..].to_vec(),
        v: v[1..].to_vec(),
    }
}

/// Highest-value transversal. Among all optimal transversals the
/// lexicographically smallest assignment vector is returned.
pub fn highest_value_transversal(sm: &SignatureMatrix) -> Result<Transversal, SigmaError> {
    let n = sm.n();
    if n == 0 {
        return Ok(Transversal {
            assignment: Vec::new(),
            value: 0,
        });
    }
    let top = sm.max_finite();
    // Any finite perfect matching costs at most n * top, so a forbidden entry
    // priced above that is used only when no finite matching exists.
    let forbidden = (n as i64) * (top + 1) + 1;
    let cost: Vec<Vec<i64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| sm.get(i, j).finite().map_or(forbidden, |s| top - s))
                .collect()
        })
        .collect();
    let solved = hungarian(&cost);
    if (0..n).any(|i| !sm.get(i, solved.col_of_row[i]).is_finite()) {
        return Err(SigmaError::StructurallyIllPosed);
    }

    // Every optimal assignment uses only tight edges of an optimal dual, and
    // every perfect matching of tight edges is optimal.
    let tight: Vec<Vec<usize>> = (0..n)
        .map(|i| {
            (0..n)
                .filter(|&j| sm.get(i, j).is_finite() && cost[i][j] == solved.u[i] + solved.v[j])
                .collect()
        })
        .collect();
    let assignment = lexicographic_matching(&tight, solved.col_of_row);
    let value = assignment
        .iter()
        .enumerate()
        .map(|(i, &j)| sm.get(i, j).finite().unwrap())
        .sum();
    Ok(Transversal { assignment, value })
}

/// Smallest perfect matching in row-major lexicographic order, starting
/// from any perfect matching `col_of_row` of the graph `adj`.
fn lexicographic_matching(adj: &[Vec<usize>], mut col_of_row: Vec<usize>) -> Vec<usize> {
    let n = adj.len();
    let mut row_of_col = vec![None; n];
    for (i, &j) in col_of_row.iter().enumerate() {
        row_of_col[j] = Some(i);
    }
    for i in 0..n {
        for &j in &adj[i] {
            if col_of_row[i] == j {
                break;
            }
            let displaced = row_of_col[j].expect("perfect matching");
            if displaced < i {
                continue;
            }
            let mut cr = col_of_row.clone();
            let mut rc = row_of_col.clone();
            let freed = cr[i];
            rc[freed] = None;
            cr[i] = j;
            rc[j] = Some(i);
            let mut visited = vec![false; n];
            if augment(adj, displaced, i, &mut cr, &mut rc, &mut visited) {
                col_of_row = cr;
                row_of_col = rc;
                break;
            }
        }
    }
    col_of_row
}

/// Kuhn-style augmenting search from `r` that may only rematch rows after
/// `locked_upto`.
fn augment(
    adj: &[Vec<usize>],
    r: usize,
    locked_upto: usize,
    col_of_row: &mut [usize],
    row_of_col: &mut [Option<usize>],
    visited: &mut [bool],
) -> bool {
    for &c in &adj[r] {
        if visited[c] {
            continue;
        }
        visited[c] = true;
        let ok = match row_of_col[c] {
            None => true,
            Some(owner) if owner > locked_upto => {
                augment(adj, owner, locked_upto, col_of_row, row_of_col, visited)
            }
            Some(_) => false,
        };
        if ok {
            col_of_row[r] = c;
            row_of_col[c] = Some(r);
            return true;
        }
    }
    false
}
