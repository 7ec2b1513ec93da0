//! Forecasting backends: temporally regularized matrix factorization, the
//! Theta-method baseline, and the RMSE metric used to compare them.

mod theta;
mod trmf;

pub use theta::{theta_fit, theta_forecast, theta_in_sample_rmse, ThetaModel};
pub use trmf::{
    trmf_fit, trmf_fit_loadings, trmf_fit_with_graph, trmf_forecast, trmf_forecast_factors,
    trmf_objective, TrmfHyper, TrmfModel,
};

use alloc::format;
#[allow(unused_imports)]
use num_traits::Float;

use crate::{Error, Result};

/// Root mean squared error between two equal-length series.
pub fn rmse(x1: &[f64], x2: &[f64]) -> Result<f64> {
    if x1.len() != x2.len() || x1.is_empty() {
        return Err(Error::Shape(format!(
            "rmse over lengths {} and {}",
            x1.len(),
            x2.len()
        )));
    }
    let ss: f64 = x1
        .iter()
        .zip(x2)
        .map(|(a, b)| {
            let d = a - b;
            d * d
        })
        .sum();
    Ok((ss / x1.len() as f64).sqrt())
}

/// RMSE restricted to masked-in positions; errors when nothing is observed.
pub fn masked_rmse(x1: &[f64], x2: &[f64], mask: &[bool]) -> Result<f64> {
    if x1.len() != x2.len() || x1.len() != mask.len() {
        return Err(Error::Shape("masked rmse length mismatch".into()));
    }
    let mut ss = 0.0;
    let mut count = 0usize;
    for ((a, b), &keep) in x1.iter().zip(x2).zip(mask) {
        if keep {
            let d = a - b;
            ss += d * d;
            count += 1;
        }
    }
    if count == 0 {
        return Err(Error::Shape("no observed entries for rmse".into()));
    }
    Ok((ss / count as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn identical_series_have_zero_error() {
        assert_eq!(rmse(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap(), 0.0);
    }

    #[test]
    fn unit_offset_has_unit_error() {
        assert_eq!(rmse(&[0.0, 0.0], &[1.0, 1.0]).unwrap(), 1.0);
    }

    #[test]
    fn small_example_matches_formula() {
        let v = rmse(&[1.0, 2.0, 3.0], &[2.0, 4.0, 3.0]).unwrap();
        assert!((v - (5.0f64 / 3.0).sqrt()).abs() < 1e-9);
        assert!((v - 1.290_994).abs() < 1e-6);
    }

    #[test]
    fn rmse_is_symmetric() {
        let a = [0.5, -1.0, 2.0];
        let b = [1.5, 0.0, -2.0];
        assert_eq!(rmse(&a, &b).unwrap(), rmse(&b, &a).unwrap());
    }

    #[test]
    fn mismatched_lengths_are_rejected() {
        assert_eq!(
            rmse(&[1.0], &[1.0, 2.0]).unwrap_err().category(),
            "ShapeError"
        );
        assert_eq!(rmse(&[], &[]).unwrap_err().category(), "ShapeError");
    }

    #[test]
    fn masked_rmse_ignores_masked_out_cells() {
        let v = masked_rmse(&[1.0, 9.0], &[1.0, 0.0], &[true, false]).unwrap();
        assert_eq!(v, 0.0);
        assert!(masked_rmse(&[1.0], &[2.0], &[false]).is_err());
        let full = masked_rmse(&[0.0, 0.0], &[1.0, 1.0], &vec![true; 2]).unwrap();
        assert_eq!(full, 1.0);
    }
}
