//! Theta-method baseline, standard (0, 2) variant: the series is decomposed
//! into a least-squares trend line (theta = 0) and a curvature-amplified
//! line (theta = 2); the latter is extrapolated flat by simple exponential
//! smoothing and the forecast is the equal-weight average of both.

use alloc::format;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use crate::math::fit_line;
use crate::{Error, Result};

/// Fitted Theta(0,2) model.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ThetaModel {
    pub intercept: f64,
    pub slope: f64,
    /// SES smoothing constant, picked from the grid 0.01..=0.99.
    pub alpha: f64,
    /// Final SES level of the theta = 2 line.
    pub level: f64,
    pub fitted_len: usize,
}

impl ThetaModel {
    /// h-step-ahead forecasts: average of the extrapolated trend line and
    /// the flat SES level.
    pub fn forecast(&self, horizon: usize) -> Vec<f64> {
        (1..=horizon)
            .map(|j| {
                let t = (self.fitted_len - 1 + j) as f64;
                0.5 * (self.intercept + self.slope * t + self.level)
            })
            .collect()
    }
}

fn ses_sse(xs: &[f64], alpha: f64) -> (f64, f64) {
    let mut level = xs[0];
    let mut sse = 0.0;
    for &x in &xs[1..] {
        let e = x - level;
        sse += e * e;
        level = alpha * x + (1.0 - alpha) * level;
    }
    (sse, level)
}

/// Fits Theta(0,2); the SES constant minimizes in-sample one-step SSE over
/// the grid {0.01, 0.02, ..., 0.99}.
pub fn theta_fit(series: &[f64]) -> Result<ThetaModel> {
    if series.len() < 3 {
        return Err(Error::InsufficientHistory(format!(
            "theta needs at least 3 observations, got {}",
            series.len()
        )));
    }
    if series.iter().any(|v| !v.is_finite()) {
        return Err(Error::Data("non-finite series value".into()));
    }
    let (intercept, slope) = fit_line(series);
    let theta2: Vec<f64> = series
        .iter()
        .enumerate()
        .map(|(t, &y)| 2.0 * y - (intercept + slope * t as f64))
        .collect();
    let mut best_alpha = 0.01;
    let mut best_sse = f64::INFINITY;
    let mut best_level = theta2[0];
    for step in 1..=99 {
        let alpha = step as f64 / 100.0;
        let (sse, level) = ses_sse(&theta2, alpha);
        if sse < best_sse {
            best_sse = sse;
            best_alpha = alpha;
            best_level = level;
        }
    }
    Ok(ThetaModel {
        intercept,
        slope,
        alpha: best_alpha,
        level: best_level,
        fitted_len: series.len(),
    })
}

/// Convenience: fit on `series`, forecast `horizon` steps.
pub fn theta_forecast(series: &[f64], horizon: usize) -> Result<Vec<f64>> {
    Ok(theta_fit(series)?.forecast(horizon))
}

/// In-sample one-step RMSE of the combined fit: at each t >= 1 the model
/// predicts the average of the trend line at t and the SES level carried
/// from t-1.
pub fn theta_in_sample_rmse(series: &[f64]) -> Result<f64> {
    let model = theta_fit(series)?;
    let theta2: Vec<f64> = series
        .iter()
        .enumerate()
        .map(|(t, &y)| 2.0 * y - (model.intercept + model.slope * t as f64))
        .collect();
    let mut level = theta2[0];
    let mut ss = 0.0;
    for (t, &y) in series.iter().enumerate().skip(1) {
        let line = model.intercept + model.slope * t as f64;
        let pred = 0.5 * (line + level);
        let e = y - pred;
        ss += e * e;
        level = model.alpha * theta2[t] + (1.0 - model.alpha) * level;
    }
    Ok((ss / (series.len() - 1) as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn constant_series_forecasts_the_constant() {
        let series = vec![5.0; 12];
        let fc = theta_forecast(&series, 4).unwrap();
        for v in fc {
            assert!((v - 5.0).abs() < 1e-9);
        }
    }

    #[test]
    fn linear_series_increments_approach_half_slope() {
        use crate::math::standard_normal;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let b = 0.7;
        let series: Vec<f64> = (0..60)
            .map(|t| 2.0 + b * t as f64 + 1e-4 * standard_normal(&mut rng))
            .collect();
        let fc = theta_forecast(&series, 30).unwrap();
        let late_increment = fc[29] - fc[28];
        assert!(
            (late_increment - b / 2.0).abs() < 1e-3,
            "increment {late_increment} vs {}",
            b / 2.0
        );
    }

    #[test]
    fn short_series_is_rejected() {
        assert_eq!(
            theta_forecast(&[1.0, 2.0], 1).unwrap_err().category(),
            "InsufficientHistory"
        );
    }

    #[test]
    fn in_sample_rmse_is_zero_on_constant() {
        assert!(theta_in_sample_rmse(&vec![3.0; 10]).unwrap() < 1e-9);
    }
}
