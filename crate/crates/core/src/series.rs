//! Observation matrices: T periods by n series, with an observation mask.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

/// A T×n matrix of time series (one series per column) plus the sparsity
/// pattern of observed entries. Losses and fits only ever read observed
/// cells; unobserved values are carried as 0 and ignored.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SeriesMatrix {
    periods: usize,
    n_series: usize,
    // Column-major so one series is one contiguous slice.
    values: Vec<f64>,
    observed: Vec<bool>,
}

impl SeriesMatrix {
    /// Builds a fully observed matrix from per-series columns of length `periods`.
    pub fn from_columns(periods: usize, columns: &[Vec<f64>]) -> Result<Self> {
        let masks: Vec<Vec<bool>> = columns.iter().map(|_| vec![true; periods]).collect();
        Self::from_masked_columns(periods, columns, &masks)
    }

    pub fn from_masked_columns(
        periods: usize,
        columns: &[Vec<f64>],
        masks: &[Vec<bool>],
    ) -> Result<Self> {
        if columns.len() != masks.len() {
            return Err(Error::Shape("columns/masks count mismatch".into()));
        }
        let mut values = Vec::with_capacity(periods * columns.len());
        let mut observed = Vec::with_capacity(periods * columns.len());
        for (i, (col, mask)) in columns.iter().zip(masks).enumerate() {
            if col.len() != periods || mask.len() != periods {
                return Err(Error::Shape(format!("column {i} length != {periods}")));
            }
            if !mask.iter().any(|&o| o) {
                return Err(Error::Data(format!("series {i} has no observed entries")));
            }
            for (t, (&v, &o)) in col.iter().zip(mask).enumerate() {
                if o && !v.is_finite() {
                    return Err(Error::Data(format!("non-finite value at ({t}, {i})")));
                }
                values.push(if o { v } else { 0.0 });
                observed.push(o);
            }
        }
        Ok(SeriesMatrix {
            periods,
            n_series: columns.len(),
            values,
            observed,
        })
    }

    pub fn periods(&self) -> usize {
        self.periods
    }

    pub fn n_series(&self) -> usize {
        self.n_series
    }

    /// One series (column) as a contiguous slice.
    pub fn col(&self, i: usize) -> &[f64] {
        &self.values[i * self.periods..(i + 1) * self.periods]
    }

    pub fn col_mask(&self, i: usize) -> &[bool] {
        &self.observed[i * self.periods..(i + 1) * self.periods]
    }

    pub fn value(&self, t: usize, i: usize) -> f64 {
        self.values[i * self.periods + t]
    }

    pub fn is_observed(&self, t: usize, i: usize) -> bool {
        self.observed[i * self.periods + t]
    }

    /// Total number of observed cells.
    pub fn observed_count(&self) -> usize {
        self.observed.iter().filter(|&&o| o).count()
    }

    pub fn observed_count_col(&self, i: usize) -> usize {
        self.col_mask(i).iter().filter(|&&o| o).count()
    }

    /// Splits rows `[0, t_split)` from rows `[t_split, T)`.
    pub fn split_rows(&self, t_split: usize) -> Result<(SeriesMatrix, SeriesMatrix)> {
        if t_split == 0 || t_split >= self.periods {
            return Err(Error::Shape(format!(
                "split point {t_split} outside (0, {})",
                self.periods
            )));
        }
        let head = self.slice_rows(0, t_split)?;
        let tail = self.slice_rows(t_split, self.periods)?;
        Ok((head, tail))
    }

    fn slice_rows(&self, from: usize, to: usize) -> Result<SeriesMatrix> {
        let cols: Vec<Vec<f64>> = (0..self.n_series)
            .map(|i| self.col(i)[from..to].to_vec())
            .collect();
        let masks: Vec<Vec<bool>> = (0..self.n_series)
            .map(|i| self.col_mask(i)[from..to].to_vec())
            .collect();
        SeriesMatrix::from_masked_columns(to - from, &cols, &masks)
    }

    /// New matrix keeping only the given columns, in the given order.
    pub fn select_columns(&self, indices: &[usize]) -> Result<SeriesMatrix> {
        let cols: Vec<Vec<f64>> = indices.iter().map(|&i| self.col(i).to_vec()).collect();
        let masks: Vec<Vec<bool>> = indices.iter().map(|&i| self.col_mask(i).to_vec()).collect();
        SeriesMatrix::from_masked_columns(self.periods, &cols, &masks)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_all_unobserved_column() {
        let err = SeriesMatrix::from_masked_columns(
            2,
            &[vec![1.0, 2.0]],
            &[vec![false, false]],
        )
        .unwrap_err();
        assert_eq!(err.category(), "DataError");
    }

    #[test]
    fn split_preserves_columns() {
        let m = SeriesMatrix::from_columns(4, &[vec![1.0, 2.0, 3.0, 4.0]]).unwrap();
        let (a, b) = m.split_rows(3).unwrap();
        assert_eq!(a.col(0), &[1.0, 2.0, 3.0]);
        assert_eq!(b.col(0), &[4.0]);
    }

    #[test]
    fn unobserved_values_are_zeroed() {
        let m = SeriesMatrix::from_masked_columns(
            2,
            &[vec![5.0, f64::NAN]],
            &[vec![true, false]],
        )
        .unwrap();
        assert_eq!(m.value(1, 0), 0.0);
        assert!(!m.is_observed(1, 0));
    }
}
