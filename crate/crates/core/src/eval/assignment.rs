//! Exact bipartite assignment via the O(n^3) Hungarian algorithm with row
//! and column potentials. The tracking metrics need optimal (not greedy)
//! matchings; matrices stay small (people per frame, identities per scene),
//! so cubic cost is irrelevant.

/// Minimum-cost perfect assignment on a square cost matrix.
/// Returns `assignment[row] = col`. Costs must be finite.
fn solve_min_cost(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    if n == 0 {
        return Vec::new();
    }
    // 1-indexed arrays; p[j] holds the row matched to column j, 0 = free.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
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
        // Augment along the found path.
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0usize; n];
    for j in 1..=n {
        assignment[p[j] - 1] = j - 1;
    }
    assignment
}

/// Maximum-total-weight bipartite matching on a rectangular weight matrix.
/// Entries must be finite and nonnegative; a zero weight marks a forbidden
/// pair. Returns `pairing[row] = Some(col)` for matched rows; the pairing
/// maximizes the sum of the chosen weights.
pub fn max_weight_matching(weights: &[Vec<f64>]) -> Vec<Option<usize>> {
    let rows = weights.len();
    let cols = weights.first().map_or(0, |r| r.len());
    if rows == 0 || cols == 0 {
        return vec![None; rows];
    }
    debug_assert!(weights.iter().all(|r| r.len() == cols), "ragged weight matrix");
    let n = rows.max(cols);
    // Pad to square; negate so the min-cost solver maximizes weight. Dummy
    // rows/columns and forbidden pairs cost 0, i.e. "leave unmatched".
    let mut cost = vec![vec![0.0; n]; n];
    for (i, row) in weights.iter().enumerate() {
        for (j, &w) in row.iter().enumerate() {
            debug_assert!(w.is_finite() && w >= 0.0, "weight {w} out of range");
            if w > 0.0 {
                cost[i][j] = -w;
            }
        }
    }
    let assignment = solve_min_cost(&cost);
    (0..rows)
        .map(|i| {
            let j = assignment[i];
            if j < cols && weights[i][j] > 0.0 {
                Some(j)
            } else {
                None
            }
        })
        .collect()
}
