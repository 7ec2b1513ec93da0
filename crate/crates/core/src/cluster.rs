//! Lloyd's k-means over feature vectors, with k-means++ seeding, restarts,
//! and elbow-method selection of the cluster count.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::math::{squared_distance, Matrix};
use crate::{Error, Result};

/// A hard partition of N objects into k clusters.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Clustering {
    pub labels: Vec<usize>,
    pub k: usize,
    /// Within-cluster sum of squared distances to centroids.
    pub inertia: f64,
}

impl Clustering {
    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0usize; self.k];
        for &l in &self.labels {
            sizes[l] += 1;
        }
        sizes
    }
}

/// Standardizes columns to zero mean and unit variance; constant columns
/// become all-zero.
pub fn standardize(data: &Matrix) -> Matrix {
    let (n, m) = (data.rows(), data.cols());
    let mut out = Matrix::zeros(n, m);
    for j in 0..m {
        let col: Vec<f64> = (0..n).map(|i| data.get(i, j)).collect();
        let mean = crate::math::mean(&col);
        let sd = crate::math::variance(&col).sqrt();
        for i in 0..n {
            let v = if sd > 1e-12 { (col[i] - mean) / sd } else { 0.0 };
            out.set(i, j, v);
        }
    }
    out
}

fn kmeans_pp_centers(data: &Matrix, k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let n = data.rows();
    let mut centers: Vec<Vec<f64>> = Vec::with_capacity(k);
    centers.push(data.row(rng.gen_range(0..n)).to_vec());
    let mut d2: Vec<f64> = (0..n)
        .map(|i| squared_distance(data.row(i), &centers[0]))
        .collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let mut target = rng.gen::<f64>() * total;
            let mut chosen = n - 1;
            for (i, &w) in d2.iter().enumerate() {
                target -= w;
                if target <= 0.0 {
                    chosen = i;
                    break;
                }
            }
            chosen
        } else {
            // All remaining mass sits on existing centers; any point does.
            rng.gen_range(0..n)
        };
        centers.push(data.row(next).to_vec());
        for i in 0..n {
            d2[i] = d2[i].min(squared_distance(data.row(i), centers.last().unwrap()));
        }
    }
    centers
}

fn assign(data: &Matrix, centers: &[Vec<f64>]) -> (Vec<usize>, f64) {
    let mut labels = Vec::with_capacity(data.rows());
    let mut inertia = 0.0;
    for i in 0..data.rows() {
        let mut best = 0usize;
        let mut best_d = f64::INFINITY;
        for (c, center) in centers.iter().enumerate() {
            let d = squared_distance(data.row(i), center);
            if d < best_d {
                best_d = d;
                best = c;
            }
        }
        labels.push(best);
        inertia += best_d;
    }
    (labels, inertia)
}

/// Lloyd's algorithm from a seeded k-means++ initialization.
///
/// Iterates until the largest centroid shift drops below `tol` or `max_iter`
/// passes. A cluster that empties out is re-seeded from the point currently
/// farthest from its own centroid, keeping k fixed.
pub fn kmeans(data: &Matrix, k: usize, seed: u64, max_iter: usize, tol: f64) -> Result<Clustering> {
    let n = data.rows();
    if k == 0 || k > n {
        return Err(Error::Cardinality(format!("k = {k} outside 1..={n}")));
    }
    if !data.is_finite() {
        return Err(Error::Data("non-finite feature values".into()));
    }
    let m = data.cols();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centers = kmeans_pp_centers(data, k, &mut rng);
    for _ in 0..max_iter {
        let (labels, _) = assign(data, &centers);
        let mut sums = vec![vec![0.0f64; m]; k];
        let mut counts = vec![0usize; k];
        for (i, &l) in labels.iter().enumerate() {
            counts[l] += 1;
            for (j, v) in data.row(i).iter().enumerate() {
                sums[l][j] += v;
            }
        }
        for c in 0..k {
            if counts[c] == 0 {
                let far = (0..n)
                    .max_by(|&a, &b| {
                        squared_distance(data.row(a), &centers[labels[a]])
                            .total_cmp(&squared_distance(data.row(b), &centers[labels[b]]))
                    })
                    .expect("non-empty data");
                sums[c] = data.row(far).to_vec();
                counts[c] = 1;
            }
        }
        let mut shift = 0.0f64;
        for c in 0..k {
            let inv = 1.0 / counts[c] as f64;
            let new_center: Vec<f64> = sums[c].iter().map(|s| s * inv).collect();
            shift = shift.max(squared_distance(&new_center, &centers[c]).sqrt());
            centers[c] = new_center;
        }
        if shift < tol {
            break;
        }
    }
    let (labels, inertia) = assign(data, &centers);
    Ok(Clustering { labels, k, inertia })
}

/// Best of `restarts` seeded k-means fits, by inertia (first winner on ties).
pub fn kmeans_best(
    data: &Matrix,
    k: usize,
    seed: u64,
    restarts: usize,
    max_iter: usize,
    tol: f64,
) -> Result<Clustering> {
    let mut best: Option<Clustering> = None;
    for r in 0..restarts.max(1) {
        let fit = kmeans(data, k, seed.wrapping_add(r as u64), max_iter, tol)?;
        if best.as_ref().map_or(true, |b| fit.inertia < b.inertia) {
            best = Some(fit);
        }
    }
    Ok(best.expect("at least one restart"))
}

/// Elbow-method selection: the k in `k_min..=k_max` maximizing the second
/// difference of the best-of-restarts inertia curve.
///
/// Falls back to `k_min` when the range has no interior point or when the
/// curve is flat (relative inertia drop across the whole range below 1e-6),
/// which is what degenerate inputs such as identical objects produce.
pub fn elbow_select(
    data: &Matrix,
    k_min: usize,
    k_max: usize,
    seed: u64,
    restarts: usize,
) -> Result<usize> {
    if k_min == 0 || k_min > k_max {
        return Err(Error::Cardinality(format!("bad k range {k_min}..={k_max}")));
    }
    let k_max = k_max.min(data.rows());
    let k_min = k_min.min(k_max);
    if k_max - k_min < 2 {
        return Ok(k_min);
    }
    let inertias: Vec<f64> = (k_min..=k_max)
        .map(|k| kmeans_best(data, k, seed, restarts, 100, 1e-9).map(|c| c.inertia))
        .collect::<Result<_>>()?;
    let first = inertias[0];
    let last = *inertias.last().unwrap();
    if first - last <= 1e-6 * first.max(1e-300) {
        return Ok(k_min);
    }
    let mut best_k = k_min;
    let mut best_curv = f64::NEG_INFINITY;
    for i in 1..inertias.len() - 1 {
        let curv = inertias[i - 1] - 2.0 * inertias[i] + inertias[i + 1];
        if curv > best_curv {
            best_curv = curv;
            best_k = k_min + i;
        }
    }
    Ok(best_k)
}

/// Adjusted Rand index between two partitions of the same objects.
pub fn adjusted_rand_index(a: &[usize], b: &[usize]) -> f64 {
    assert_eq!(a.len(), b.len(), "partitions must cover the same objects");
    let n = a.len();
    if n == 0 {
        return 1.0;
    }
    let ka = a.iter().max().map_or(0, |&m| m + 1);
    let kb = b.iter().max().map_or(0, |&m| m + 1);
    let mut table = vec![0u64; ka * kb];
    let mut row = vec![0u64; ka];
    let mut col = vec![0u64; kb];
    for (&x, &y) in a.iter().zip(b) {
        table[x * kb + y] += 1;
        row[x] += 1;
        col[y] += 1;
    }
    let choose2 = |x: u64| (x * x.saturating_sub(1)) as f64 / 2.0;
    let sum_ij: f64 = table.iter().map(|&c| choose2(c)).sum();
    let sum_a: f64 = row.iter().map(|&c| choose2(c)).sum();
    let sum_b: f64 = col.iter().map(|&c| choose2(c)).sum();
    let total = choose2(n as u64);
    let expected = sum_a * sum_b / total;
    let max_index = 0.5 * (sum_a + sum_b);
    if (max_index - expected).abs() < 1e-12 {
        return 1.0;
    }
    (sum_ij - expected) / (max_index - expected)
}
