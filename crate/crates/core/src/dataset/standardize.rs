//! Column standardization fitted on a chosen row subset.
//!
//! Statistics come only from the rows passed to [`Standardizer::fit`] —
//! typically the training partition — and are then applied unchanged to any
//! matrix of the same width, so evaluation rows never leak into the scale.

use serde::{Deserialize, Serialize};

use super::DatasetError;
use crate::matrix::Matrix;

/// Guard under which a column's spread counts as zero.
const MIN_STD: f64 = 1e-12;

/// Per-column centering/scaling transform.
///
/// Scaling uses the population standard deviation (divide by `n`), so a
/// fitted column transforms to exactly zero mean and unit population
/// variance. Columns with no spread transform to all zeros and are flagged
/// rather than dividing by zero.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
    /// True where the fitted column was constant.
    pub constant: Vec<bool>,
}

impl Standardizer {
    /// Fit per-column statistics on `rows` of `data`.
    pub fn fit(data: &Matrix, rows: &[usize]) -> Result<Self, DatasetError> {
        if rows.is_empty() {
            return Err(DatasetError::EmptyIndexSet);
        }
        let p = data.n_cols();
        let n = rows.len() as f64;
        let mut means = vec![0.0; p];
        let mut stds = vec![0.0; p];
        let mut constant = vec![false; p];

        for c in 0..p {
            let mut sum = 0.0;
            for &r in rows {
                sum += data.get(r, c);
            }
            let mean = sum / n;
            let mut ss = 0.0;
            for &r in rows {
                let d = data.get(r, c) - mean;
                ss += d * d;
            }
            let std = (ss / n).sqrt();
            means[c] = mean;
            if std < MIN_STD {
                stds[c] = 1.0; // never divide by ~zero; output is forced to 0
                constant[c] = true;
            } else {
                stds[c] = std;
            }
        }
        Ok(Standardizer { means, stds, constant })
    }

    /// Apply the fitted transform to every row of `data`.
    pub fn transform(&self, data: &Matrix) -> Matrix {
        assert_eq!(
            data.n_cols(),
            self.means.len(),
            "matrix width {} does not match fitted width {}",
            data.n_cols(),
            self.means.len()
        );
        let mut out = Matrix::zeros(data.n_rows(), data.n_cols());
        for r in 0..data.n_rows() {
            for c in 0..data.n_cols() {
                let z = if self.constant[c] {
                    0.0
                } else {
                    (data.get(r, c) - self.means[c]) / self.stds[c]
                };
                out.set(r, c, z);
            }
        }
        out
    }

    /// Indices of columns that were constant on the fitted rows.
    pub fn constant_features(&self) -> Vec<usize> {
        self.constant
            .iter()
            .enumerate()
            .filter(|(_, &c)| c)
            .map(|(i, _)| i)
            .collect()
    }

    /// Map one standardized value back to the raw scale.
    pub fn invert(&self, column: usize, z: f64) -> f64 {
        if self.constant[column] {
            self.means[column]
        } else {
            z * self.stds[column] + self.means[column]
        }
    }
}
