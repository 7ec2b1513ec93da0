//! Fixed-length feature vectors for routing series to clusters: topological
//! barcode summaries of the demand series, plain summary statistics, and the
//! series' RFM quintile ranks against training-cohort thresholds.

use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use crate::series::SeriesMatrix;
use crate::tda::{barcode, barcode_features, delay_embed, enclosing_radius, rips_persistence, TopoFeatures};
use crate::Result;

/// The frozen recipe: embedding geometry plus the training cohort's quintile
/// cut points, so out-of-sample series are ranked on the training scale.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FeatureRecipe {
    pub window: usize,
    pub stride: usize,
    recency_cuts: [f64; 4],
    frequency_cuts: [f64; 4],
    monetary_cuts: [f64; 4],
}

/// 10 topological + 5 summary + 3 quintile features.
pub const FEATURE_LEN: usize = TopoFeatures::LEN + 5 + 3;

fn quintile_cuts(mut values: Vec<f64>) -> [f64; 4] {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    let mut cuts = [0.0; 4];
    for (q, cut) in cuts.iter_mut().enumerate() {
        let pos = ((q + 1) * n) / 5;
        *cut = values[pos.min(n - 1)];
    }
    cuts
}

fn bucket(value: f64, cuts: &[f64; 4]) -> u8 {
    cuts.iter().filter(|&&c| value > c).count() as u8
}

/// Recency/frequency/monetary read off one masked demand series: periods
/// since the last observed non-zero cell (series length when none), count of
/// observed non-zero cells, and the observed sum.
fn series_rfm(series: &[f64], mask: &[bool]) -> (f64, f64, f64) {
    let t_len = series.len();
    let mut last_active: Option<usize> = None;
    let mut frequency = 0usize;
    let mut monetary = 0.0;
    for t in 0..t_len {
        if mask[t] {
            monetary += series[t];
            if series[t] != 0.0 {
                frequency += 1;
                last_active = Some(t);
            }
        }
    }
    let recency = match last_active {
        Some(t) => (t_len - 1 - t) as f64,
        None => t_len as f64,
    };
    (recency, frequency as f64, monetary)
}

impl FeatureRecipe {
    /// Learns the quintile cut points from the training matrix.
    pub fn fit(train: &SeriesMatrix, window: usize, stride: usize) -> FeatureRecipe {
        let n = train.n_series();
        let mut recency = Vec::with_capacity(n);
        let mut frequency = Vec::with_capacity(n);
        let mut monetary = Vec::with_capacity(n);
        for i in 0..n {
            let (r, f, m) = series_rfm(train.col(i), train.col_mask(i));
            recency.push(r);
            frequency.push(f);
            monetary.push(m);
        }
        FeatureRecipe {
            window,
            stride,
            recency_cuts: quintile_cuts(recency),
            frequency_cuts: quintile_cuts(frequency),
            monetary_cuts: quintile_cuts(monetary),
        }
    }

    /// Extracts the feature vector for one series. Unobserved cells count as
    /// zero in the embedding; summary statistics use observed cells only.
    pub fn extract(&self, series: &[f64], mask: &[bool]) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(FEATURE_LEN);

        let cloud = delay_embed(series, self.window.min(series.len()), self.stride)?;
        let radius = enclosing_radius(&cloud);
        let scale = if radius > 0.0 { radius } else { 1.0 };
        let diagram = rips_persistence(&cloud, scale, 1)?;
        let topo = barcode_features(&barcode(&diagram), scale);
        out.extend_from_slice(&topo.to_array());

        let observed: Vec<f64> = series
            .iter()
            .zip(mask)
            .filter(|(_, &m)| m)
            .map(|(&v, _)| v)
            .collect();
        let mean = crate::math::mean(&observed);
        let var = crate::math::variance(&observed);
        let zero_fraction = if observed.is_empty() {
            0.0
        } else {
            observed.iter().filter(|&&v| v == 0.0).count() as f64 / observed.len() as f64
        };
        let last = observed.last().copied().unwrap_or(0.0);
        let (_, slope) = crate::math::fit_line(&observed);
        out.extend_from_slice(&[mean, var, zero_fraction, last, slope]);

        let (r, f, m) = series_rfm(series, mask);
        // Same orientation as cohort scoring: recent/high-value series rank 5.
        out.push(f64::from(5 - bucket(r, &self.recency_cuts)));
        out.push(f64::from(1 + bucket(f, &self.frequency_cuts)));
        out.push(f64::from(1 + bucket(m, &self.monetary_cuts)));
        Ok(out)
    }

    /// Feature matrix for every column of `series`.
    pub fn extract_matrix(&self, series: &SeriesMatrix) -> Result<crate::math::Matrix> {
        let rows: Vec<Vec<f64>> = (0..series.n_series())
            .map(|i| self.extract(series.col(i), series.col_mask(i)))
            .collect::<Result<_>>()?;
        crate::math::Matrix::from_rows(&rows)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn feature_vector_has_declared_length_and_is_finite() {
        let cols = vec![
            vec![0.0, 1.0, 0.0, 2.0, 0.0, 3.0, 1.0, 0.0],
            vec![5.0; 8],
            vec![0.0; 8],
        ];
        let train = SeriesMatrix::from_columns(8, &cols).unwrap();
        let recipe = FeatureRecipe::fit(&train, 4, 1);
        for i in 0..3 {
            let f = recipe.extract(train.col(i), train.col_mask(i)).unwrap();
            assert_eq!(f.len(), FEATURE_LEN);
            assert!(f.iter().all(|v| v.is_finite()));
        }
    }

    #[test]
    fn rfm_ranks_use_training_scale() {
        // Nine inactive series and one heavy spender; the spender ranks 5.
        let mut cols = vec![vec![0.0, 0.0, 0.0, 1.0]; 9];
        cols.push(vec![10.0, 20.0, 30.0, 40.0]);
        let train = SeriesMatrix::from_columns(4, &cols).unwrap();
        let recipe = FeatureRecipe::fit(&train, 2, 1);
        let heavy = recipe.extract(train.col(9), train.col_mask(9)).unwrap();
        let m_rank = heavy[FEATURE_LEN - 1];
        assert_eq!(m_rank, 5.0);
        let light = recipe.extract(train.col(0), train.col_mask(0)).unwrap();
        assert!(light[FEATURE_LEN - 1] < 5.0);
    }

    #[test]
    fn identical_series_share_identical_features() {
        let cols = vec![vec![1.0, 0.0, 2.0, 0.0, 1.5, 0.5]; 4];
        let train = SeriesMatrix::from_columns(6, &cols).unwrap();
        let recipe = FeatureRecipe::fit(&train, 3, 1);
        let a = recipe.extract(train.col(0), train.col_mask(0)).unwrap();
        let b = recipe.extract(train.col(3), train.col_mask(3)).unwrap();
        assert_eq!(a, b);
    }
}
