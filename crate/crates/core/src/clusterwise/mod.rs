//! Clusterwise regression: alternate fitting one forecasting model per
//! cluster with error-driven relabeling, then route unseen series to
//! clusters with a boosted-tree classifier.
//!
//! Relabeling scores a series under a foreign cluster by freezing that
//! cluster's factors and AR dynamics and ridge-fitting a fresh loading
//! column; the Theta backend's per-series error does not depend on the
//! cluster, so its relabeling step is inert by construction and the loop
//! settles immediately.

mod features;
mod gbdt;

pub use features::{FeatureRecipe, FEATURE_LEN};
pub use gbdt::{train_label_classifier, GbdtParams, LabelClassifier};

use alloc::format;
use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use crate::forecast::{
    masked_rmse, theta_fit, theta_in_sample_rmse, trmf_fit, trmf_fit_loadings,
    trmf_forecast_factors, TrmfHyper, TrmfModel,
};
use crate::math::Matrix;
use crate::series::SeriesMatrix;
use crate::{Error, Result};

/// Which forecasting model backs each cluster.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum BackendSpec {
    Trmf(TrmfHyper),
    Theta,
}

impl BackendSpec {
    /// Smallest cluster the backend can support.
    pub fn min_cluster_size(&self) -> usize {
        match self {
            BackendSpec::Trmf(hyper) => hyper.d.max(2),
            BackendSpec::Theta => 1,
        }
    }
}

/// One cluster's fitted model. Theta refits per series on demand, so the
/// cluster itself carries no shared state.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum ClusterModel {
    Trmf(TrmfModel),
    Theta,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum StopReason {
    /// No series wanted to move (or every move was vetoed).
    NoMoves,
    /// Total error improvement fell below tolerance.
    Converged,
    /// A round of moves failed to improve the total error and was reverted.
    NoImprovement,
    /// Round budget exhausted.
    MaxRounds,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ClusterwiseModel {
    pub labels: Vec<usize>,
    pub k: usize,
    pub backend: BackendSpec,
    pub cluster_models: Vec<ClusterModel>,
    /// Total training error after the initial fit and each accepted round.
    pub objective_trace: Vec<f64>,
    pub per_series_error: Vec<f64>,
    pub stop_reason: StopReason,
    pub rounds_run: usize,
    pub vetoed_moves: usize,
    pub seed: u64,
}

fn members_of(labels: &[usize], k: usize) -> Vec<Vec<usize>> {
    let mut members = vec![Vec::new(); k];
    for (i, &l) in labels.iter().enumerate() {
        members[l].push(i);
    }
    members
}

fn fit_cluster(
    y: &SeriesMatrix,
    members: &[usize],
    backend: &BackendSpec,
    seed: u64,
    cluster: usize,
) -> Result<(ClusterModel, Vec<f64>)> {
    match backend {
        BackendSpec::Trmf(hyper) => {
            let sub = y.select_columns(members)?;
            let model = trmf_fit(&sub, hyper, seed.wrapping_add(cluster as u64)).map_err(|e| {
                Error::Fit {
                    cluster,
                    message: e.to_string(),
                }
            })?;
            let mut errors = Vec::with_capacity(members.len());
            for (local, &global) in members.iter().enumerate() {
                let recon = model.reconstruct_col(local);
                errors.push(masked_rmse(y.col(global), &recon, y.col_mask(global))?);
            }
            Ok((ClusterModel::Trmf(model), errors))
        }
        BackendSpec::Theta => {
            let mut errors = Vec::with_capacity(members.len());
            for &global in members {
                let series = observed_values(y.col(global), y.col_mask(global));
                let err = theta_in_sample_rmse(&series).map_err(|e| Error::Fit {
                    cluster,
                    message: e.to_string(),
                })?;
                errors.push(err);
            }
            Ok((ClusterModel::Theta, errors))
        }
    }
}

fn observed_values(series: &[f64], mask: &[bool]) -> Vec<f64> {
    series
        .iter()
        .zip(mask)
        .filter(|(_, &m)| m)
        .map(|(&v, _)| v)
        .collect()
}

struct FitState {
    models: Vec<ClusterModel>,
    per_series_error: Vec<f64>,
    total: f64,
}

fn fit_all(
    y: &SeriesMatrix,
    labels: &[usize],
    k: usize,
    backend: &BackendSpec,
    seed: u64,
) -> Result<FitState> {
    let members = members_of(labels, k);
    let mut models = Vec::with_capacity(k);
    let mut per_series_error = vec![0.0f64; y.n_series()];
    for (c, m) in members.iter().enumerate() {
        let (model, errors) = fit_cluster(y, m, backend, seed, c)?;
        for (&global, &e) in m.iter().zip(&errors) {
            per_series_error[global] = e;
        }
        models.push(model);
    }
    Ok(FitState {
        models,
        total: per_series_error.iter().sum(),
        per_series_error,
    })
}

/// Training error of `series` under one cluster's frozen model: for the
/// factorization backend a fresh ridge loading fit against the cluster's
/// factors, for Theta the series' own in-sample error.
pub fn score_series_under_model(
    model: &ClusterModel,
    series: &[f64],
    mask: &[bool],
) -> Result<f64> {
    match model {
        ClusterModel::Trmf(m) => {
            let loading = trmf_fit_loadings(m, series, mask)?;
            let d = m.hyper.d;
            let recon: Vec<f64> = (0..m.periods())
                .map(|t| (0..d).map(|j| m.factors.get(t, j) * loading[j]).sum())
                .collect();
            masked_rmse(series, &recon, mask)
        }
        ClusterModel::Theta => theta_in_sample_rmse(&observed_values(series, mask)),
    }
}

/// [`score_series_under_model`] addressed by cluster index.
pub fn score_series_under_cluster(
    model: &ClusterwiseModel,
    cluster: usize,
    series: &[f64],
    mask: &[bool],
) -> Result<f64> {
    let m = model
        .cluster_models
        .get(cluster)
        .ok_or_else(|| Error::Cardinality(format!("cluster {cluster} out of {}", model.k)))?;
    score_series_under_model(m, series, mask)
}

/// Alternates per-cluster fits with batch error-driven relabeling.
///
/// Each round: fit every cluster; series whose error exceeds their cluster's
/// mean are scored under every cluster and moved (simultaneously) to the
/// best one, ties keeping the incumbent; moves that would shrink a cluster
/// below the backend's minimum are vetoed. A round that fails to lower the
/// total error is reverted, keeping the objective trace non-increasing.
pub fn clusterwise_fit(
    y: &SeriesMatrix,
    init_labels: &[usize],
    backend: &BackendSpec,
    seed: u64,
    max_rounds: usize,
    tol: f64,
) -> Result<ClusterwiseModel> {
    let n = y.n_series();
    if init_labels.len() != n {
        return Err(Error::Shape(format!(
            "{} labels for {n} series",
            init_labels.len()
        )));
    }
    let k = init_labels.iter().max().map_or(0, |&m| m + 1);
    if k == 0 {
        return Err(Error::Cardinality("no clusters in init labels".into()));
    }
    let min_size = backend.min_cluster_size();
    {
        let sizes = members_of(init_labels, k);
        for (c, m) in sizes.iter().enumerate() {
            if m.len() < min_size {
                return Err(Error::Cardinality(format!(
                    "cluster {c} starts with {} series, backend needs >= {min_size}",
                    m.len()
                )));
            }
        }
    }

    let mut labels = init_labels.to_vec();
    let mut state = fit_all(y, &labels, k, backend, seed)?;
    let mut trace = vec![state.total];
    let mut vetoed = 0usize;
    let mut rounds = 0usize;
    let stop_reason;

    loop {
        if rounds >= max_rounds {
            stop_reason = StopReason::MaxRounds;
            break;
        }

        // Mean error per cluster under the current fit.
        let members = members_of(&labels, k);
        let mean_err: Vec<f64> = members
            .iter()
            .map(|m| {
                if m.is_empty() {
                    0.0
                } else {
                    m.iter().map(|&i| state.per_series_error[i]).sum::<f64>() / m.len() as f64
                }
            })
            .collect();

        // Score offenders under every cluster; collect intended moves.
        let mut moves: Vec<(usize, usize)> = Vec::new();
        for i in 0..n {
            let home = labels[i];
            if state.per_series_error[i] <= mean_err[home] {
                continue;
            }
            let mut best = home;
            let mut best_score = score_series_under_model(
                &state.models[home],
                y.col(i),
                y.col_mask(i),
            )?;
            for (c, model) in state.models.iter().enumerate() {
                if c == home {
                    continue;
                }
                let score = score_series_under_model(model, y.col(i), y.col_mask(i))?;
                if score < best_score {
                    best_score = score;
                    best = c;
                }
            }
            if best != home {
                moves.push((i, best));
            }
        }
        if moves.is_empty() {
            stop_reason = StopReason::NoMoves;
            break;
        }

        // Apply in series order, vetoing donor-depleting moves.
        let prev_labels = labels.clone();
        let mut sizes: Vec<usize> = members.iter().map(Vec::len).collect();
        let (applied, vetoed_now) = apply_moves(&mut labels, &moves, &mut sizes, min_size);
        vetoed += vetoed_now;
        if applied == 0 {
            stop_reason = StopReason::NoMoves;
            break;
        }

        rounds += 1;
        let next = fit_all(y, &labels, k, backend, seed)?;
        if next.total > state.total {
            labels = prev_labels;
            stop_reason = StopReason::NoImprovement;
            break;
        }
        let gap = state.total - next.total;
        state = next;
        trace.push(state.total);
        if gap < tol * state.total.abs().max(1e-12) {
            stop_reason = StopReason::Converged;
            break;
        }
    }

    Ok(ClusterwiseModel {
        labels,
        k,
        backend: backend.clone(),
        cluster_models: state.models,
        objective_trace: trace,
        per_series_error: state.per_series_error,
        stop_reason,
        rounds_run: rounds,
        vetoed_moves: vetoed,
        seed,
    })
}

/// Applies batch moves in order, vetoing any that would drop the donor
/// cluster below `min_size`. Returns (applied, vetoed).
fn apply_moves(
    labels: &mut [usize],
    moves: &[(usize, usize)],
    sizes: &mut [usize],
    min_size: usize,
) -> (usize, usize) {
    let mut applied = 0usize;
    let mut vetoed = 0usize;
    for &(i, target) in moves {
        if sizes[labels[i]] <= min_size {
            vetoed += 1;
            continue;
        }
        sizes[labels[i]] -= 1;
        sizes[target] += 1;
        labels[i] = target;
        applied += 1;
    }
    (applied, vetoed)
}

/// Routes new series to clusters with the classifier, then forecasts each
/// one with its assigned cluster's model: the factorization backend fits a
/// loading column against frozen factors and rolls the shared AR recursion
/// forward; Theta refits per series. Returns (labels, horizon×n forecasts).
pub fn assign_and_forecast(
    model: &ClusterwiseModel,
    classifier: &LabelClassifier,
    recipe: &FeatureRecipe,
    new_series: &SeriesMatrix,
    horizon: usize,
) -> Result<(Vec<usize>, Matrix)> {
    let expected_periods = match model.cluster_models.first() {
        Some(ClusterModel::Trmf(m)) => Some(m.periods()),
        _ => None,
    };
    if let Some(p) = expected_periods {
        if new_series.periods() != p {
            return Err(Error::Shape(format!(
                "new series have {} periods, model was fit on {p}",
                new_series.periods()
            )));
        }
    }
    let n = new_series.n_series();
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let f = recipe.extract(new_series.col(i), new_series.col_mask(i))?;
        labels.push(classifier.predict(&f));
    }

    let mut forecasts = Matrix::zeros(horizon, n);
    if horizon == 0 {
        return Ok((labels, forecasts));
    }

    // Factor futures are shared within a cluster; compute them once.
    let mut futures: Vec<Option<Matrix>> = vec![None; model.cluster_models.len()];
    for (i, &label) in labels.iter().enumerate() {
        match &model.cluster_models[label] {
            ClusterModel::Trmf(m) => {
                if futures[label].is_none() {
                    futures[label] = Some(trmf_forecast_factors(m, horizon));
                }
                let future = futures[label].as_ref().expect("computed above");
                let loading =
                    trmf_fit_loadings(m, new_series.col(i), new_series.col_mask(i))?;
                for h in 0..horizon {
                    let v: f64 = (0..m.hyper.d).map(|j| future.get(h, j) * loading[j]).sum();
                    forecasts.set(h, i, v);
                }
            }
            ClusterModel::Theta => {
                let series = observed_values(new_series.col(i), new_series.col_mask(i));
                let fc = theta_fit(&series)?.forecast(horizon);
                for h in 0..horizon {
                    forecasts.set(h, i, fc[h]);
                }
            }
        }
    }
    Ok((labels, forecasts))
}
