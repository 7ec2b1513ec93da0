//! Multivariate Gaussian mixture fitting by expectation-maximization, used
//! as the consensus stage over relabel-voting or co-association features.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::math::{
    cholesky, cholesky_log_det, cholesky_solve, log_sum_exp, Matrix,
};
use crate::{Error, Result};

const LN_2PI: f64 = 1.837_877_066_409_345_6;

/// Covariance parameterization. Full is the default for the low-dimensional
/// voting features; diagonal keeps co-association rows tractable when the
/// feature dimension grows with the object count.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum CovarianceKind {
    Full,
    Diagonal,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Covariances {
    Full(Vec<Matrix>),
    Diagonal(Vec<Vec<f64>>),
}

/// A fitted mixture of `k_max` Gaussians.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GmmModel {
    /// Mixture weights, summing to 1.
    pub weights: Vec<f64>,
    /// k_max × m component means.
    pub means: Matrix,
    pub covariances: Covariances,
    /// Total log-likelihood after each EM iteration; non-decreasing.
    pub log_likelihood: Vec<f64>,
}

struct Component {
    log_weight: f64,
    mean: Vec<f64>,
    // Full: Cholesky factor and log-determinant. Diagonal: variances.
    chol: Option<(Matrix, f64)>,
    diag: Option<Vec<f64>>,
}

impl Component {
    fn log_density(&self, x: &[f64]) -> f64 {
        let m = self.mean.len() as f64;
        let centered: Vec<f64> = x.iter().zip(&self.mean).map(|(a, b)| a - b).collect();
        match (&self.chol, &self.diag) {
            (Some((l, log_det)), _) => {
                let solved = cholesky_solve(l, &centered);
                let maha: f64 = centered.iter().zip(&solved).map(|(a, b)| a * b).sum();
                -0.5 * (m * LN_2PI + log_det + maha)
            }
            (None, Some(vars)) => {
                let mut log_det = 0.0;
                let mut maha = 0.0;
                for (c, &v) in centered.iter().zip(vars) {
                    log_det += v.ln();
                    maha += c * c / v;
                }
                -0.5 * (m * LN_2PI + log_det + maha)
            }
            _ => unreachable!("component has exactly one covariance form"),
        }
    }
}

impl GmmModel {
    fn components(&self) -> Vec<Component> {
        let k = self.weights.len();
        (0..k)
            .map(|c| {
                let (chol, diag) = match &self.covariances {
                    Covariances::Full(mats) => {
                        let mut l = mats[c].clone();
                        let mut jitter = 0.0;
                        let scale = (0..l.rows())
                            .map(|i| l.get(i, i).abs())
                            .fold(1e-300, f64::max);
                        loop {
                            let mut attempt = mats[c].clone();
                            if jitter > 0.0 {
                                for i in 0..attempt.rows() {
                                    attempt.set(i, i, attempt.get(i, i) + jitter);
                                }
                            }
                            if cholesky(&mut attempt).is_ok() {
                                l = attempt;
                                break;
                            }
                            jitter = if jitter == 0.0 { 1e-10 * scale } else { jitter * 100.0 };
                        }
                        let log_det = cholesky_log_det(&l);
                        (Some((l, log_det)), None)
                    }
                    Covariances::Diagonal(vars) => (None, Some(vars[c].clone())),
                };
                Component {
                    log_weight: self.weights[c].max(1e-300).ln(),
                    mean: self.means.row(c).to_vec(),
                    chol,
                    diag,
                }
            })
            .collect()
    }

    /// Posterior membership probabilities for one observation.
    pub fn responsibilities(&self, x: &[f64]) -> Vec<f64> {
        let comps = self.components();
        let logs: Vec<f64> = comps
            .iter()
            .map(|c| c.log_weight + c.log_density(x))
            .collect();
        let norm = log_sum_exp(&logs);
        logs.iter().map(|l| (l - norm).exp()).collect()
    }

    /// Hard assignments and their posterior mass, row by row.
    pub fn predict(&self, data: &Matrix) -> (Vec<usize>, Vec<f64>) {
        let comps = self.components();
        let mut labels = Vec::with_capacity(data.rows());
        let mut posteriors = Vec::with_capacity(data.rows());
        for i in 0..data.rows() {
            let x = data.row(i);
            let logs: Vec<f64> = comps
                .iter()
                .map(|c| c.log_weight + c.log_density(x))
                .collect();
            let norm = log_sum_exp(&logs);
            let (best, best_log) = logs
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.total_cmp(b.1))
                .map(|(i, &l)| (i, l))
                .expect("at least one component");
            labels.push(best);
            posteriors.push((best_log - norm).exp());
        }
        (labels, posteriors)
    }
}

fn kmeans_pp_rows(data: &Matrix, k: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let n = data.rows();
    let mut chosen = vec![rng.gen_range(0..n)];
    let mut d2: Vec<f64> = (0..n)
        .map(|i| crate::math::squared_distance(data.row(i), data.row(chosen[0])))
        .collect();
    while chosen.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let mut target = rng.gen::<f64>() * total;
            let mut pick = n - 1;
            for (i, &w) in d2.iter().enumerate() {
                target -= w;
                if target <= 0.0 {
                    pick = i;
                    break;
                }
            }
            pick
        } else {
            rng.gen_range(0..n)
        };
        chosen.push(next);
        for i in 0..n {
            d2[i] = d2[i].min(crate::math::squared_distance(data.row(i), data.row(next)));
        }
    }
    chosen
}

/// Covariance floor: a fixed fraction of the mean feature variance, so
/// degenerate (integer-valued, duplicated) feature rows cannot produce
/// singular components.
fn covariance_floor(data: &Matrix) -> f64 {
    let m = data.cols();
    let n = data.rows();
    let mut total = 0.0;
    for j in 0..m {
        let col: Vec<f64> = (0..n).map(|i| data.get(i, j)).collect();
        total += crate::math::variance(&col);
    }
    let mean_var = total / m.max(1) as f64;
    if mean_var > 0.0 {
        1e-6 * mean_var
    } else {
        1e-12
    }
}

/// Fits a mixture of `k_max` Gaussians by EM from k-means++-seeded means.
///
/// Stops when the log-likelihood improvement drops below `tol` or after
/// `max_iter` iterations; the likelihood trace is recorded per iteration.
/// A covariance floor is added to every diagonal at each M-step.
pub fn gmm_fit(
    data: &Matrix,
    k_max: usize,
    seed: u64,
    max_iter: usize,
    tol: f64,
    covariance: CovarianceKind,
) -> Result<GmmModel> {
    let n = data.rows();
    if k_max == 0 || k_max > n {
        return Err(Error::Cardinality(format!("k_max = {k_max} outside 1..={n}")));
    }
    if !data.is_finite() {
        return Err(Error::Data("non-finite feature values".into()));
    }
    let floor = covariance_floor(data);

    // EM is run from a handful of k-means++-seeded starts derived from the
    // seed; the run with the best final likelihood wins. A single start is
    // too easily trapped by the heavily tied, integer-valued vote rows.
    let mut best: Option<GmmModel> = None;
    for restart in 0..EM_RESTARTS {
        let mut rng = ChaCha8Rng::seed_from_u64(
            seed.wrapping_add((restart as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)),
        );
        let model = em_single_start(data, k_max, max_iter, tol, covariance, floor, &mut rng);
        let score = model.log_likelihood.last().copied().unwrap_or(f64::NEG_INFINITY);
        if best
            .as_ref()
            .and_then(|b| b.log_likelihood.last().copied())
            .map_or(true, |prev| score > prev)
        {
            best = Some(model);
        }
    }
    Ok(best.expect("at least one restart"))
}

const EM_RESTARTS: usize = 8;

fn em_single_start(
    data: &Matrix,
    k_max: usize,
    max_iter: usize,
    tol: f64,
    covariance: CovarianceKind,
    floor: f64,
    rng: &mut ChaCha8Rng,
) -> GmmModel {
    let n = data.rows();
    let m = data.cols();
    let seeds = kmeans_pp_rows(data, k_max, rng);
    let mut means = Matrix::zeros(k_max, m);
    for (c, &row) in seeds.iter().enumerate() {
        means.row_mut(c).copy_from_slice(data.row(row));
    }
    let mut weights = vec![1.0 / k_max as f64; k_max];

    // Every component starts at the global covariance.
    let global_mean: Vec<f64> = (0..m)
        .map(|j| crate::math::mean(&(0..n).map(|i| data.get(i, j)).collect::<Vec<_>>()))
        .collect();
    let mut covariances = match covariance {
        CovarianceKind::Full => {
            let mut cov = Matrix::zeros(m, m);
            for i in 0..n {
                let x = data.row(i);
                for a in 0..m {
                    let da = x[a] - global_mean[a];
                    for b in a..m {
                        let db = x[b] - global_mean[b];
                        cov.set(a, b, cov.get(a, b) + da * db);
                    }
                }
            }
            for a in 0..m {
                for b in a..m {
                    let v = cov.get(a, b) / n as f64;
                    cov.set(a, b, v);
                    cov.set(b, a, v);
                }
                cov.set(a, a, cov.get(a, a) + floor);
            }
            Covariances::Full(vec![cov; k_max])
        }
        CovarianceKind::Diagonal => {
            let vars: Vec<f64> = (0..m)
                .map(|j| {
                    let col: Vec<f64> = (0..n).map(|i| data.get(i, j)).collect();
                    crate::math::variance(&col) + floor
                })
                .collect();
            Covariances::Diagonal(vec![vars; k_max])
        }
    };

    let mut trace: Vec<f64> = Vec::new();
    let mut resp = Matrix::zeros(n, k_max);
    for _ in 0..max_iter.max(1) {
        // E-step.
        let model = GmmModel {
            weights: weights.clone(),
            means: means.clone(),
            covariances: covariances.clone(),
            log_likelihood: Vec::new(),
        };
        let comps = model.components();
        let mut loglik = 0.0;
        for i in 0..n {
            let logs: Vec<f64> = comps
                .iter()
                .map(|c| c.log_weight + c.log_density(data.row(i)))
                .collect();
            let norm = log_sum_exp(&logs);
            loglik += norm;
            for c in 0..k_max {
                resp.set(i, c, (logs[c] - norm).exp());
            }
        }
        let converged = trace
            .last()
            .is_some_and(|&prev| loglik - prev < tol && loglik.is_finite());
        trace.push(loglik);
        if converged {
            break;
        }

        // M-step.
        for c in 0..k_max {
            let nk: f64 = (0..n).map(|i| resp.get(i, c)).sum();
            let nk_safe = nk.max(1e-300);
            weights[c] = nk / n as f64;
            for j in 0..m {
                let s: f64 = (0..n).map(|i| resp.get(i, c) * data.get(i, j)).sum();
                means.set(c, j, s / nk_safe);
            }
            match &mut covariances {
                Covariances::Full(mats) => {
                    let cov = &mut mats[c];
                    for a in 0..m {
                        for b in a..m {
                            let mut s = 0.0;
                            for i in 0..n {
                                let da = data.get(i, a) - means.get(c, a);
                                let db = data.get(i, b) - means.get(c, b);
                                s += resp.get(i, c) * da * db;
                            }
                            let v = s / nk_safe;
                            cov.set(a, b, v);
                            cov.set(b, a, v);
                        }
                        cov.set(a, a, cov.get(a, a) + floor);
                    }
                }
                Covariances::Diagonal(all) => {
                    let vars = &mut all[c];
                    for (j, var) in vars.iter_mut().enumerate() {
                        let mut s = 0.0;
                        for i in 0..n {
                            let d = data.get(i, j) - means.get(c, j);
                            s += resp.get(i, c) * d * d;
                        }
                        *var = s / nk_safe + floor;
                    }
                }
            }
        }
    }

    GmmModel {
        weights,
        means,
        covariances,
        log_likelihood: trace,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::standard_normal;

    #[test]
    fn single_component_is_the_sample_moments() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let rows: Vec<Vec<f64>> = (0..50)
            .map(|_| vec![3.0 + standard_normal(&mut rng), -1.0 + 0.5 * standard_normal(&mut rng)])
            .collect();
        let data = Matrix::from_rows(&rows).unwrap();
        let model = gmm_fit(&data, 1, 0, 50, 1e-9, CovarianceKind::Full).unwrap();
        assert!((model.weights[0] - 1.0).abs() < 1e-12);
        let mean0: Vec<f64> = (0..2)
            .map(|j| crate::math::mean(&(0..50).map(|i| data.get(i, j)).collect::<Vec<_>>()))
            .collect();
        assert!((model.means.get(0, 0) - mean0[0]).abs() < 1e-9);
        assert!((model.means.get(0, 1) - mean0[1]).abs() < 1e-9);
        // Covariance = sample covariance + floor on the diagonal.
        let Covariances::Full(mats) = &model.covariances else { panic!() };
        let mut manual = 0.0;
        for i in 0..50 {
            let d = data.get(i, 0) - mean0[0];
            manual += d * d;
        }
        manual /= 50.0;
        assert!((mats[0].get(0, 0) - manual).abs() < 1e-6 * manual.max(1.0));
    }

    #[test]
    fn far_separated_clusters_get_one_hot_responsibilities() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut rows = Vec::new();
        for _ in 0..30 {
            rows.push(vec![standard_normal(&mut rng), standard_normal(&mut rng)]);
        }
        for _ in 0..30 {
            rows.push(vec![
                100.0 + standard_normal(&mut rng),
                100.0 + standard_normal(&mut rng),
            ]);
        }
        let data = Matrix::from_rows(&rows).unwrap();
        let model = gmm_fit(&data, 2, 1, 100, 1e-9, CovarianceKind::Full).unwrap();
        for i in 0..60 {
            let r = model.responsibilities(data.row(i));
            let max = r.iter().cloned().fold(0.0, f64::max);
            assert!(max > 1.0 - 1e-6, "row {i} responsibilities {r:?}");
        }
    }

    #[test]
    fn likelihood_trace_is_monotone() {
        for seed in 0..20 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed + 1000);
            let rows: Vec<Vec<f64>> = (0..40)
                .map(|_| vec![standard_normal(&mut rng), standard_normal(&mut rng)])
                .collect();
            let data = Matrix::from_rows(&rows).unwrap();
            let model = gmm_fit(&data, 3, seed, 60, 0.0, CovarianceKind::Full).unwrap();
            for w in model.log_likelihood.windows(2) {
                assert!(w[1] >= w[0] - 1e-9, "seed {seed}: {:?}", model.log_likelihood);
            }
        }
    }

    #[test]
    fn oversized_k_is_rejected() {
        let data = Matrix::from_rows(&[vec![0.0], vec![1.0]]).unwrap();
        assert_eq!(
            gmm_fit(&data, 3, 0, 10, 1e-6, CovarianceKind::Full)
                .unwrap_err()
                .category(),
            "CardinalityError"
        );
    }

    #[test]
    fn diagonal_covariance_fits_and_predicts() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut rows = Vec::new();
        for _ in 0..20 {
            rows.push(vec![standard_normal(&mut rng), 0.0, standard_normal(&mut rng)]);
        }
        for _ in 0..20 {
            rows.push(vec![
                10.0 + standard_normal(&mut rng),
                5.0,
                standard_normal(&mut rng),
            ]);
        }
        let data = Matrix::from_rows(&rows).unwrap();
        let model = gmm_fit(&data, 2, 3, 100, 1e-9, CovarianceKind::Diagonal).unwrap();
        let (labels, posteriors) = model.predict(&data);
        assert_eq!(labels[0..20].iter().collect::<alloc::collections::BTreeSet<_>>().len(), 1);
        assert_eq!(labels[20..].iter().collect::<alloc::collections::BTreeSet<_>>().len(), 1);
        assert_ne!(labels[0], labels[20]);
        assert!(posteriors.iter().all(|&p| p > 0.99));
    }
}
