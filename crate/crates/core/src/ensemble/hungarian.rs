//! Maximum-weight assignment on a square matrix, solved as min-cost via the
//! potentials (Jonker–Volgenant style) Hungarian algorithm in O(n³).

use alloc::vec;
use alloc::vec::Vec;

use crate::math::Matrix;

/// Returns `perm` with `perm[row] = col` maximizing the summed weights of a
/// perfect matching. Deterministic: rows are placed in descending index
/// order and shortest-path ties resolve toward lower column indices, which
/// fixes one matching whenever several share the maximum weight.
pub fn max_weight_assignment(weights: &Matrix) -> Vec<usize> {
    let n = weights.rows();
    assert_eq!(n, weights.cols(), "assignment needs a square matrix");
    if n == 0 {
        return Vec::new();
    }
    // Minimize cost = -weight. One-based arrays with a virtual column 0.
    let cost = |i: usize, j: usize| -> f64 { -weights.get(i, j) };

    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; n + 1];
    let mut way = vec![0usize; n + 1];
    // p[j] = row matched to column j (1-based); p[0] is the row being placed.
    let mut p = vec![0usize; n + 1];

    for i in (1..=n).rev() {
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

    let mut perm = vec![0usize; n];
    for j in 1..=n {
        if p[j] > 0 {
            perm[p[j] - 1] = j - 1;
        }
    }
    perm
}

/// Total weight of an assignment.
pub fn assignment_weight(weights: &Matrix, perm: &[usize]) -> f64 {
    perm.iter()
        .enumerate()
        .map(|(r, &c)| weights.get(r, c))
        .sum()
}
