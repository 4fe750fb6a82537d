//! k-nearest-neighbour regression.
//!
//! Distances are plain Euclidean, so callers are expected to hand in
//! standardized features (the pipeline always does); otherwise wide-range
//! columns dominate. Distance ties resolve to the lower training-row index,
//! making predictions order-deterministic.

use serde::{Deserialize, Serialize};

use crate::matrix::Matrix;
use crate::parallel;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KnnModel {
    pub k: usize,
    pub x_train: Matrix,
    pub y_train: Vec<f64>,
}

impl KnnModel {
    pub fn fit(k: usize, x: &Matrix, y: &[f64]) -> KnnModel {
        assert_eq!(x.n_rows(), y.len());
        assert!(k >= 1);
        KnnModel { k, x_train: x.clone(), y_train: y.to_vec() }
    }

    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let n = self.x_train.n_rows();
        let k = self.k.min(n);
        let mut dist: Vec<(f64, usize)> = (0..n)
            .map(|i| {
                let d2: f64 = self
                    .x_train
                    .row(i)
                    .iter()
                    .zip(row)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum();
                (d2, i)
            })
            .collect();
        // Full sort keeps the tie order stable and n is small enough here.
        dist.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        dist[..k].iter().map(|&(_, i)| self.y_train[i]).sum::<f64>() / k as f64
    }

    pub fn predict(&self, x: &Matrix) -> Vec<f64> {
        // Queries are independent; fan them out.
        parallel::map_indexed(x.n_rows(), |r| self.predict_row(x.row(r)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> (Matrix, Vec<f64>) {
        let x = Matrix::from_rows(vec![
            vec![0.0, 0.0],
            vec![1.0, 0.0],
            vec![0.0, 1.0],
            vec![5.0, 5.0],
            vec![6.0, 5.0],
        ]);
        let y = vec![1.0, 2.0, 3.0, 10.0, 12.0];
        (x, y)
    }

    #[test]
    fn k1_on_training_point_returns_own_label() {
        let (x, y) = toy();
        let m = KnnModel::fit(1, &x, &y);
        for r in 0..x.n_rows() {
            assert_eq!(m.predict_row(x.row(r)), y[r]);
        }
    }

    #[test]
    fn k_equals_n_returns_global_mean() {
        let (x, y) = toy();
        let m = KnnModel::fit(5, &x, &y);
        let mean = y.iter().sum::<f64>() / y.len() as f64;
        for q in [[0.0, 0.0], [100.0, -3.0]] {
            assert!((m.predict_row(&q) - mean).abs() < 1e-12);
        }
    }

    #[test]
    fn k2_averages_two_nearest() {
        let (x, y) = toy();
        let m = KnnModel::fit(2, &x, &y);
        // Query at (5.5, 5): nearest are rows 3 and 4.
        assert!((m.predict_row(&[5.5, 5.0]) - 11.0).abs() < 1e-12);
    }

    #[test]
    fn distance_ties_prefer_lower_index() {
        // Rows 1 and 2 are equidistant from the origin query; k=1 must pick
        // row 1 (label 2.0), not row 2.
        let (x, y) = toy();
        let m = KnnModel::fit(1, &x, &y);
        let pred = m.predict_row(&[0.5, 0.5]);
        // (0.5,0.5) is equidistant to rows 0..3's corners? Distances:
        // row0 0.5, row1 0.5, row2 0.5 -> tie among 0,1,2 -> row 0 wins.
        assert_eq!(pred, y[0]);
    }

    #[test]
    fn k_larger_than_n_clamps() {
        let (x, y) = toy();
        let m = KnnModel::fit(50, &x, &y);
        let mean = y.iter().sum::<f64>() / y.len() as f64;
        assert!((m.predict_row(&[1.0, 1.0]) - mean).abs() < 1e-12);
    }

    #[test]
    fn batch_matches_rowwise() {
        let (x, y) = toy();
        let m = KnnModel::fit(3, &x, &y);
        let batch = m.predict(&x);
        for r in 0..x.n_rows() {
            assert_eq!(batch[r], m.predict_row(x.row(r)));
        }
    }
}
