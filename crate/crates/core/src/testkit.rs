//! Independent oracles and seeded data generators for tests.
//!
//! Everything here exists to cross-check the main implementations through a
//! second, deliberately unoptimized route: dense boundary-matrix reduction,
//! union-find single linkage, exhaustive partition/permutation enumeration,
//! a ridge-only alternating factorization, hand-rolled Gaussian elimination,
//! and a from-scratch Theta reference. Compiled only with the `testkit`
//! feature; not part of the public API proper.

use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::math::{standard_normal, Matrix};
use crate::series::SeriesMatrix;
use crate::tda::{PersistencePair, PointCloud};

// ---------------------------------------------------------------------------
// Persistence oracles

/// Full boundary-matrix reduction with dense Z/2 columns and no shortcuts:
/// every simplex enumerated, every column reduced by scanning all earlier
/// columns for a matching low. Quadratic-ish and proud of it.
pub fn naive_rips_diagram(
    cloud: &PointCloud,
    max_scale: f64,
    max_dim: usize,
) -> Vec<PersistencePair> {
    let n = cloud.len();
    let dist = |a: usize, b: usize| -> f64 {
        crate::math::squared_distance(cloud.point(a), cloud.point(b)).sqrt()
    };

    #[derive(Clone)]
    struct Simp {
        filt: f64,
        verts: Vec<usize>,
    }
    let mut simplices: Vec<Simp> = Vec::new();
    for v in 0..n {
        simplices.push(Simp {
            filt: 0.0,
            verts: vec![v],
        });
    }
    for a in 0..n {
        for b in (a + 1)..n {
            let d = dist(a, b);
            if d <= max_scale {
                simplices.push(Simp {
                    filt: d,
                    verts: vec![a, b],
                });
            }
        }
    }
    if max_dim >= 1 {
        for a in 0..n {
            for b in (a + 1)..n {
                for c in (b + 1)..n {
                    let f = dist(a, b).max(dist(a, c)).max(dist(b, c));
                    if f <= max_scale {
                        simplices.push(Simp {
                            filt: f,
                            verts: vec![a, b, c],
                        });
                    }
                }
            }
        }
    }
    simplices.sort_by(|x, y| {
        x.filt
            .total_cmp(&y.filt)
            .then(x.verts.len().cmp(&y.verts.len()))
            .then(x.verts.cmp(&y.verts))
    });

    let m = simplices.len();
    let index_of = |verts: &[usize]| -> usize {
        simplices
            .iter()
            .position(|s| s.verts == verts)
            .expect("face present")
    };
    // Dense Z/2 boundary matrix.
    let mut cols: Vec<Vec<bool>> = Vec::with_capacity(m);
    for s in &simplices {
        let mut col = vec![false; m];
        if s.verts.len() > 1 {
            for skip in 0..s.verts.len() {
                let face: Vec<usize> = s
                    .verts
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| *i != skip)
                    .map(|(_, &v)| v)
                    .collect();
                col[index_of(&face)] = true;
            }
        }
        cols.push(col);
    }

    let low = |col: &[bool]| col.iter().rposition(|&b| b);
    let mut pairs: Vec<PersistencePair> = Vec::new();
    let mut killed = vec![false; m];
    for j in 0..m {
        loop {
            let Some(l) = low(&cols[j]) else { break };
            // Scan every earlier column for the same low, no memoization.
            let mut reduced = false;
            for i in 0..j {
                if low(&cols[i]) == Some(l) {
                    let (a, b) = cols.split_at_mut(j);
                    for (x, y) in b[0].iter_mut().zip(&a[i]) {
                        *x ^= *y;
                    }
                    reduced = true;
                    break;
                }
            }
            if !reduced {
                break;
            }
        }
        if let Some(l) = low(&cols[j]) {
            killed[l] = true;
            let dim = simplices[l].verts.len() - 1;
            if dim <= max_dim {
                pairs.push(PersistencePair {
                    dim: dim as u8,
                    birth: simplices[l].filt,
                    death: simplices[j].filt,
                });
            }
        }
    }
    for j in 0..m {
        let empty = cols[j].iter().all(|&b| !b);
        let dim = simplices[j].verts.len() - 1;
        if empty && !killed[j] && dim <= max_dim {
            pairs.push(PersistencePair {
                dim: dim as u8,
                birth: simplices[j].filt,
                death: f64::INFINITY,
            });
        }
    }
    pairs
}

/// Dimension-0 persistence via union-find single linkage: each merge along
/// an increasing edge sweep kills one component at the edge length.
pub fn single_linkage_h0(cloud: &PointCloud, max_scale: f64) -> Vec<PersistencePair> {
    let n = cloud.len();
    let mut edges: Vec<(f64, usize, usize)> = Vec::new();
    for a in 0..n {
        for b in (a + 1)..n {
            let d = crate::math::squared_distance(cloud.point(a), cloud.point(b)).sqrt();
            if d <= max_scale {
                edges.push((d, a, b));
            }
        }
    }
    edges.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));

    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut Vec<usize>, mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let mut pairs = Vec::new();
    for (d, a, b) in edges {
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra != rb {
            parent[ra] = rb;
            pairs.push(PersistencePair {
                dim: 0,
                birth: 0.0,
                death: d,
            });
        }
    }
    let mut roots: Vec<usize> = (0..n).map(|x| find(&mut parent, x)).collect();
    roots.sort_unstable();
    roots.dedup();
    for _ in roots {
        pairs.push(PersistencePair {
            dim: 0,
            birth: 0.0,
            death: f64::INFINITY,
        });
    }
    pairs
}

/// Sorts (dim, birth, death) triples for multiset comparison.
pub fn canonical_pairs(pairs: &[PersistencePair]) -> Vec<(u8, f64, f64)> {
    let mut v: Vec<(u8, f64, f64)> = pairs.iter().map(|p| (p.dim, p.birth, p.death)).collect();
    v.sort_by(|a, b| {
        a.0.cmp(&b.0)
            .then(a.1.total_cmp(&b.1))
            .then(a.2.total_cmp(&b.2))
    });
    v
}

/// Uniform random point cloud in [-1, 1]^dim.
pub fn random_cloud(seed: u64, n: usize, dim: usize) -> PointCloud {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coords: Vec<f64> = (0..n * dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
    PointCloud::new(dim, coords).expect("valid cloud")
}

// ---------------------------------------------------------------------------
// Clustering oracles

/// Exact minimum within-cluster sum of squares over every assignment of n
/// points to k labels. Exponential; keep n small.
pub fn best_inertia_by_enumeration(data: &Matrix, k: usize) -> f64 {
    let n = data.rows();
    let m = data.cols();
    let mut assignment = vec![0usize; n];
    let mut best = f64::INFINITY;
    loop {
        let mut sums = vec![vec![0.0f64; m]; k];
        let mut counts = vec![0usize; k];
        for (i, &l) in assignment.iter().enumerate() {
            counts[l] += 1;
            for (j, v) in data.row(i).iter().enumerate() {
                sums[l][j] += v;
            }
        }
        let mut inertia = 0.0;
        for (i, &l) in assignment.iter().enumerate() {
            if counts[l] == 0 {
                continue;
            }
            for (j, v) in data.row(i).iter().enumerate() {
                let c = sums[l][j] / counts[l] as f64;
                inertia += (v - c) * (v - c);
            }
        }
        best = best.min(inertia);

        // Next assignment in base-k counting order.
        let mut pos = 0;
        loop {
            if pos == n {
                return best;
            }
            assignment[pos] += 1;
            if assignment[pos] < k {
                break;
            }
            assignment[pos] = 0;
            pos += 1;
        }
    }
}

/// Maximum assignment weight over all permutations (Heap's algorithm).
pub fn brute_force_matching_weight(weights: &Matrix) -> f64 {
    let n = weights.rows();
    assert_eq!(n, weights.cols());
    let mut perm: Vec<usize> = (0..n).collect();
    let mut best = f64::NEG_INFINITY;
    let mut c = vec![0usize; n];
    let score = |perm: &[usize]| -> f64 {
        perm.iter()
            .enumerate()
            .map(|(r, &col)| weights.get(r, col))
            .sum()
    };
    best = best.max(score(&perm));
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            best = best.max(score(&perm));
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    best
}

// ---------------------------------------------------------------------------
// Factorization oracles

/// Gaussian elimination with partial pivoting; independent of the Cholesky
/// path used by the implementation.
pub fn gaussian_solve(a: &Matrix, b: &[f64]) -> Vec<f64> {
    let n = a.rows();
    let mut aug = Matrix::zeros(n, n + 1);
    for i in 0..n {
        for j in 0..n {
            aug.set(i, j, a.get(i, j));
        }
        aug.set(i, n, b[i]);
    }
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&x, &y| aug.get(x, col).abs().total_cmp(&aug.get(y, col).abs()))
            .unwrap();
        if pivot != col {
            for j in 0..=n {
                let tmp = aug.get(col, j);
                aug.set(col, j, aug.get(pivot, j));
                aug.set(pivot, j, tmp);
            }
        }
        let pv = aug.get(col, col);
        for row in (col + 1)..n {
            let factor = aug.get(row, col) / pv;
            for j in col..=n {
                aug.set(row, j, aug.get(row, j) - factor * aug.get(col, j));
            }
        }
    }
    let mut x = vec![0.0f64; n];
    for row in (0..n).rev() {
        let mut v = aug.get(row, n);
        for j in (row + 1)..n {
            v -= aug.get(row, j) * x[j];
        }
        x[row] = v / aug.get(row, row);
    }
    x
}

/// Ridge-only alternating factorization sharing the seeded initialization
/// contract (ChaCha8, Z then F in row-major order, sigma 0.1) but none of
/// the AR machinery. Returns the objective after exactly `sweeps` sweeps,
/// evaluated with the stated normalization constants and eta_z = 0.
pub fn ridge_only_mf_objective(
    y: &SeriesMatrix,
    d: usize,
    lambda_f: f64,
    lambda_z: f64,
    seed: u64,
    sweeps: usize,
) -> f64 {
    let (periods, n) = (y.periods(), y.n_series());
    let n_obs = y.observed_count() as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut z = Matrix::zeros(periods, d);
    for t in 0..periods {
        for j in 0..d {
            z.set(t, j, 0.1 * standard_normal(&mut rng));
        }
    }
    let mut f = Matrix::zeros(d, n);
    for j in 0..d {
        for i in 0..n {
            f.set(j, i, 0.1 * standard_normal(&mut rng));
        }
    }
    let f_ridge = lambda_f / (d as f64 * n as f64);
    let z_ridge = lambda_z / (periods as f64 * d as f64);

    // Mirrors the shared sweep contract: factor rows first, loadings last.
    for _ in 0..sweeps {
        // Z rows.
        for t in 0..periods {
            let mut a = Matrix::zeros(d, d);
            let mut b = vec![0.0f64; d];
            for i in 0..n {
                if !y.is_observed(t, i) {
                    continue;
                }
                for r in 0..d {
                    b[r] += f.get(r, i) * y.value(t, i) / n_obs;
                    for c in 0..d {
                        a.set(r, c, a.get(r, c) + f.get(r, i) * f.get(c, i) / n_obs);
                    }
                }
            }
            for r in 0..d {
                a.set(r, r, a.get(r, r) + z_ridge);
            }
            let sol = gaussian_solve(&a, &b);
            z.row_mut(t).copy_from_slice(&sol);
        }
        // F columns.
        for i in 0..n {
            let mut a = Matrix::zeros(d, d);
            let mut b = vec![0.0f64; d];
            for t in 0..periods {
                if !y.is_observed(t, i) {
                    continue;
                }
                for r in 0..d {
                    b[r] += z.get(t, r) * y.value(t, i) / n_obs;
                    for c in 0..d {
                        a.set(r, c, a.get(r, c) + z.get(t, r) * z.get(t, c) / n_obs);
                    }
                }
            }
            for r in 0..d {
                a.set(r, r, a.get(r, r) + f_ridge);
            }
            let sol = gaussian_solve(&a, &b);
            for r in 0..d {
                f.set(r, i, sol[r]);
            }
        }
    }

    let mut recon = 0.0;
    for i in 0..n {
        for t in 0..periods {
            if y.is_observed(t, i) {
                let mut pred = 0.0;
                for j in 0..d {
                    pred += z.get(t, j) * f.get(j, i);
                }
                let e = y.value(t, i) - pred;
                recon += e * e;
            }
        }
    }
    let fsq: f64 = f.data().iter().map(|v| v * v).sum();
    let zsq: f64 = z.data().iter().map(|v| v * v).sum();
    0.5 * recon / n_obs + 0.5 * f_ridge * fsq + 0.5 * z_ridge * zsq
}

/// Step-by-step AR recursion, straight off the definition.
pub fn manual_ar_forecast(phi: &[f64], history: &[f64], horizon: usize) -> Vec<f64> {
    let p = phi.len();
    let mut all = history.to_vec();
    let mut out = Vec::with_capacity(horizon);
    for _ in 0..horizon {
        let mut v = 0.0;
        for i in 1..=p {
            v += phi[i - 1] * all[all.len() - i];
        }
        all.push(v);
        out.push(v);
    }
    out
}

// ---------------------------------------------------------------------------
// Theta reference

/// A second Theta(0,2) implementation written from the definition, for
/// cross-checking. Trend coefficients come from explicit normal-equation
/// sums rather than the centered form.
pub fn theta_reference(series: &[f64], horizon: usize) -> Vec<f64> {
    let t_len = series.len() as f64;
    let sum_t: f64 = (0..series.len()).map(|t| t as f64).sum();
    let sum_t2: f64 = (0..series.len()).map(|t| (t as f64) * (t as f64)).sum();
    let sum_y: f64 = series.iter().sum();
    let sum_ty: f64 = series.iter().enumerate().map(|(t, &y)| t as f64 * y).sum();
    let denom = t_len * sum_t2 - sum_t * sum_t;
    let slope = (t_len * sum_ty - sum_t * sum_y) / denom;
    let intercept = (sum_y - slope * sum_t) / t_len;

    let theta2: Vec<f64> = series
        .iter()
        .enumerate()
        .map(|(t, &y)| 2.0 * y - intercept - slope * t as f64)
        .collect();

    let mut best = (f64::INFINITY, 0.01, theta2[0]);
    for k in 1..=99 {
        let alpha = k as f64 * 0.01;
        let mut level = theta2[0];
        let mut sse = 0.0;
        for &x in theta2.iter().skip(1) {
            sse += (x - level) * (x - level);
            level = alpha * x + (1.0 - alpha) * level;
        }
        if sse < best.0 {
            best = (sse, alpha, level);
        }
    }
    let level = best.2;
    (1..=horizon)
        .map(|h| 0.5 * (intercept + slope * (series.len() - 1 + h) as f64 + level))
        .collect()
}

// ---------------------------------------------------------------------------
// Generators

/// Exactly rank-1 data: z_t = decay^t, loadings uniform in [0.5, 1.5].
pub fn rank1_matrix(seed: u64, periods: usize, n: usize, decay: f64) -> SeriesMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let z: Vec<f64> = (0..periods).map(|t| decay.powi(t as i32)).collect();
    let cols: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            let f: f64 = rng.gen_range(0.5..1.5);
            z.iter().map(|&v| v * f).collect()
        })
        .collect();
    SeriesMatrix::from_columns(periods, &cols).expect("valid matrix")
}

/// Two groups of series driven by distinct AR(1) factors (phi 0.9 and -0.8)
/// plus light observation noise. Returns the matrix and ground-truth labels.
pub fn two_regime_matrix(
    seed: u64,
    periods: usize,
    n_per_regime: usize,
    noise: f64,
) -> (SeriesMatrix, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let factor = |phi: f64, rng: &mut ChaCha8Rng| -> Vec<f64> {
        let mut z = vec![0.0f64; periods];
        z[0] = 1.0;
        for t in 1..periods {
            z[t] = phi * z[t - 1] + 0.3 * standard_normal(rng);
        }
        z
    };
    let za = factor(0.9, &mut rng);
    let zb = factor(-0.8, &mut rng);
    let mut cols = Vec::with_capacity(2 * n_per_regime);
    let mut labels = Vec::with_capacity(2 * n_per_regime);
    for (label, z) in [(0usize, &za), (1usize, &zb)] {
        for _ in 0..n_per_regime {
            let f: f64 = rng.gen_range(0.5..1.5);
            let col: Vec<f64> = z
                .iter()
                .map(|&v| v * f + noise * standard_normal(&mut rng))
                .collect();
            cols.push(col);
            labels.push(label);
        }
    }
    (
        SeriesMatrix::from_columns(periods, &cols).expect("valid matrix"),
        labels,
    )
}

/// The five-object, two-clustering ensemble worked through in the appendix
/// of the consensus method: pi_1 = (C1,C1,C2,C2,C3), pi_2 = (C1,C2,C1,C2,C2).
pub fn appendix_ensemble() -> crate::ensemble::EnsembleInput {
    crate::ensemble::EnsembleInput::new(vec![
        vec![0, 0, 1, 1, 2],
        vec![0, 1, 0, 1, 1],
    ])
    .expect("valid ensemble")
}

/// Expected consensus for [`appendix_ensemble`]: objects {0, 1} together,
/// objects {2, 3, 4} together.
pub fn appendix_expected_partition() -> Vec<usize> {
    vec![0, 0, 1, 1, 1]
}
