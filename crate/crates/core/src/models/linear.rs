//! Ordinary least-squares regression via the normal equations.

use serde::{Deserialize, Serialize};

use crate::linalg::solve_psd;
use crate::matrix::Matrix;

/// Fitted linear model `y = x . coefficients + intercept`.
///
/// Collinear designs fall back to the minimum-norm least-squares solution
/// (pseudo-inverse of the Gram matrix), so fitting never fails on rank.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub coefficients: Vec<f64>,
    pub intercept: f64,
}

impl LinearModel {
    pub fn fit(x: &Matrix, y: &[f64]) -> LinearModel {
        let n = x.n_rows();
        let p = x.n_cols();
        assert_eq!(n, y.len());
        // Normal equations over the design [X | 1].
        let d = p + 1;
        let mut gram = vec![vec![0.0; d]; d];
        let mut rhs = vec![0.0; d];
        for r in 0..n {
            let row = x.row(r);
            for i in 0..p {
                for j in i..p {
                    gram[i][j] += row[i] * row[j];
                }
                gram[i][p] += row[i];
                rhs[i] += row[i] * y[r];
            }
            rhs[p] += y[r];
        }
        gram[p][p] = n as f64;
        for i in 0..d {
            for j in 0..i {
                gram[i][j] = gram[j][i];
            }
        }
        let beta = solve_psd(&gram, &rhs);
        LinearModel { coefficients: beta[..p].to_vec(), intercept: beta[p] }
    }

    pub fn predict_row(&self, row: &[f64]) -> f64 {
        self.intercept
            + row.iter().zip(&self.coefficients).map(|(x, w)| x * w).sum::<f64>()
    }

    pub fn predict(&self, x: &Matrix) -> Vec<f64> {
        (0..x.n_rows()).map(|r| self.predict_row(x.row(r))).collect()
    }
}
