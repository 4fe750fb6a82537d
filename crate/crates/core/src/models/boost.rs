//! Stagewise boosted trees under squared loss.
//!
//! One engine serves two configurations. Plain gradient boosting uses no
//! leaf penalty, no split penalty and no sampling: each stage fits the
//! current residuals and leaves predict the residual mean, which makes the
//! training MSE provably non-increasing for any learning rate in (0, 1]
//! (each leaf moves its rows' residual mean `m` to `(1-lr) m`, shrinking
//! that leaf's contribution by `lr (2-lr) m^2 >= 0`). The regularized
//! variant adds the L2 leaf penalty `lambda`, the split penalty `gamma`,
//! and per-tree row/column subsampling; setting all of those neutral makes
//! it take the exact same code path as plain boosting, so the two agree
//! bit-for-bit on identical seeds.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::tree::{self, FlatTree, TreeParams};
use crate::matrix::Matrix;
use crate::parallel::derive_seed;

#[derive(Clone, Debug)]
pub struct BoostParams {
    pub n_estimators: usize,
    pub max_depth: Option<usize>,
    pub learning_rate: f64,
    pub min_samples_leaf: usize,
    /// L2 penalty on leaf values.
    pub lambda: f64,
    /// Minimum split gain.
    pub gamma: f64,
    /// Fraction of rows drawn (without replacement) per tree; 1.0 = all.
    pub subsample: f64,
    /// Fraction of features available per tree; 1.0 = all.
    pub colsample_bytree: f64,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoostModel {
    /// Base prediction: the training-target mean.
    pub init: f64,
    pub learning_rate: f64,
    pub trees: Vec<FlatTree>,
}

impl BoostModel {
    pub fn fit(params: &BoostParams, x: &Matrix, y: &[f64]) -> BoostModel {
        Self::fit_with_curve(params, x, y).0
    }

    /// Fit and record training MSE per stage.
    ///
    /// The curve has `n_estimators + 1` points: entry 0 is the constant
    /// mean predictor, entry t the model after t stages.
    pub fn fit_with_curve(params: &BoostParams, x: &Matrix, y: &[f64]) -> (BoostModel, Vec<f64>) {
        let n = x.n_rows();
        let p = x.n_cols();
        assert_eq!(n, y.len());
        assert!(n > 0);

        let init = y.iter().sum::<f64>() / n as f64;
        let mut f = vec![init; n];
        let mut curve = Vec::with_capacity(params.n_estimators + 1);
        let mse = |f: &[f64]| -> f64 {
            f.iter().zip(y).map(|(fi, yi)| (yi - fi) * (yi - fi)).sum::<f64>() / n as f64
        };
        curve.push(mse(&f));

        let tree_params = TreeParams {
            max_depth: params.max_depth,
            min_samples_leaf: params.min_samples_leaf,
            lambda: params.lambda,
            gamma: params.gamma,
            mtry: None,
        };
        let all_cols: Vec<usize> = (0..p).collect();
        let mut trees = Vec::with_capacity(params.n_estimators);

        for t in 0..params.n_estimators {
            // Squared loss: gradient = f - y, hessian = 1.
            let g: Vec<f64> = f.iter().zip(y).map(|(fi, yi)| fi - yi).collect();
            let h = vec![1.0; n];

            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(params.seed, t as u64));
            let rows: Vec<usize> = if params.subsample < 1.0 {
                let take = ((n as f64 * params.subsample).floor() as usize).max(1);
                let mut picked: Vec<usize> =
                    (0..n).collect::<Vec<_>>().choose_multiple(&mut rng, take).copied().collect();
                picked.sort_unstable();
                picked
            } else {
                (0..n).collect()
            };
            let cols: Vec<usize> = if params.colsample_bytree < 1.0 {
                let take = ((p as f64 * params.colsample_bytree).round() as usize).clamp(1, p);
                let mut picked: Vec<usize> =
                    all_cols.choose_multiple(&mut rng, take).copied().collect();
                picked.sort_unstable();
                picked
            } else {
                all_cols.clone()
            };

            let tree = tree::build(x, &g, &h, &rows, &cols, &tree_params, &mut rng);
            for (r, fi) in f.iter_mut().enumerate() {
                *fi += params.learning_rate * tree.predict_row(x.row(r));
            }
            trees.push(tree);
            curve.push(mse(&f));
        }

        (BoostModel { init, learning_rate: params.learning_rate, trees }, curve)
    }

    pub fn predict_row(&self, row: &[f64]) -> f64 {
        self.init
            + self.learning_rate
                * self.trees.iter().map(|t| t.predict_row(row)).sum::<f64>()
    }

    pub fn predict(&self, x: &Matrix) -> Vec<f64> {
        crate::parallel::map_indexed(x.n_rows(), |r| self.predict_row(x.row(r)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn data(n: usize, seed: u64) -> (Matrix, Vec<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rows: Vec<Vec<f64>> =
            (0..n).map(|_| (0..3).map(|_| rng.gen_range(-2.0..2.0)).collect()).collect();
        let x = Matrix::from_rows(rows);
        let y: Vec<f64> = (0..n)
            .map(|r| x.get(r, 0).sin() + 0.5 * x.get(r, 1) + rng.gen_range(-0.05..0.05))
            .collect();
        (x, y)
    }

    fn plain(n_estimators: usize, lr: f64) -> BoostParams {
        BoostParams {
            n_estimators,
            max_depth: Some(3),
            learning_rate: lr,
            min_samples_leaf: 1,
            lambda: 0.0,
            gamma: 0.0,
            subsample: 1.0,
            colsample_bytree: 1.0,
            seed: 9,
        }
    }

    #[test]
    fn zero_stages_is_the_mean_predictor() {
        let (x, y) = data(30, 1);
        let m = BoostModel::fit(&plain(0, 0.1), &x, &y);
        let mean = y.iter().sum::<f64>() / y.len() as f64;
        for r in 0..x.n_rows() {
            assert_eq!(m.predict_row(x.row(r)), mean);
        }
    }

    #[test]
    fn training_mse_never_increases() {
        let (x, y) = data(120, 2);
        for lr in [0.05, 0.3, 1.0] {
            let (_, curve) = BoostModel::fit_with_curve(&plain(60, lr), &x, &y);
            assert_eq!(curve.len(), 61);
            for w in curve.windows(2) {
                assert!(
                    w[1] <= w[0] + 1e-12,
                    "lr {lr}: stage MSE rose from {} to {}",
                    w[0],
                    w[1]
                );
            }
        }
    }

    #[test]
    fn full_rate_deep_tree_memorizes_in_one_stage() {
        let (x, y) = data(40, 3);
        let mut params = plain(1, 1.0);
        params.max_depth = None;
        let (m, curve) = BoostModel::fit_with_curve(&params, &x, &y);
        assert!(curve[1] < 1e-20, "curve: {curve:?}");
        for r in 0..x.n_rows() {
            assert!((m.predict_row(x.row(r)) - y[r]).abs() < 1e-9);
        }
    }

    #[test]
    fn neutral_regularization_matches_plain_path_exactly() {
        let (x, y) = data(80, 4);
        let base = plain(25, 0.1);
        let mut reg = plain(25, 0.1);
        reg.lambda = 0.0;
        reg.gamma = 0.0;
        reg.subsample = 1.0;
        reg.colsample_bytree = 1.0;
        let a = BoostModel::fit(&base, &x, &y);
        let b = BoostModel::fit(&reg, &x, &y);
        assert_eq!(a, b);
        for r in 0..x.n_rows() {
            assert!((a.predict_row(x.row(r)) - b.predict_row(x.row(r))).abs() < 1e-9);
        }
    }

    #[test]
    fn prediction_is_init_plus_scaled_tree_sum() {
        let (x, y) = data(50, 5);
        let m = BoostModel::fit(&plain(10, 0.2), &x, &y);
        for r in 0..5 {
            let row = x.row(r);
            let manual = m.init
                + m.learning_rate * m.trees.iter().map(|t| t.predict_row(row)).sum::<f64>();
            assert_eq!(m.predict_row(row), manual);
        }
    }

    #[test]
    fn subsampling_is_seed_deterministic() {
        let (x, y) = data(70, 6);
        let mut params = plain(15, 0.1);
        params.subsample = 0.7;
        params.colsample_bytree = 0.67;
        params.lambda = 1.0;
        let a = BoostModel::fit(&params, &x, &y);
        let b = BoostModel::fit(&params, &x, &y);
        assert_eq!(a, b);
        params.seed = 10;
        let c = BoostModel::fit(&params, &x, &y);
        assert_ne!(a, c);
    }

    #[test]
    fn lambda_shrinks_fitted_step() {
        // With a huge leaf penalty each tree's correction tends to zero, so
        // the model stays near the mean predictor.
        let (x, y) = data(60, 7);
        let mut params = plain(10, 0.5);
        params.lambda = 1e9;
        let m = BoostModel::fit(&params, &x, &y);
        let mean = y.iter().sum::<f64>() / y.len() as f64;
        for r in 0..x.n_rows() {
            assert!((m.predict_row(x.row(r)) - mean).abs() < 1e-3);
        }
    }
}
