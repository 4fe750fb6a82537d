//! Random forest regression: bagged deep trees with per-split feature
//! subsampling.
//!
//! Tree `t` draws its bootstrap sample and split-time feature subsets from a
//! generator seeded `base_seed + t`, so trees can grow on any number of
//! worker threads and still come out identical.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::tree::{self, FlatTree, TreeParams};
use crate::matrix::Matrix;
use crate::parallel;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub trees: Vec<FlatTree>,
}

pub struct ForestParams {
    pub n_estimators: usize,
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    /// Features considered per split; `None` = max(1, p/3).
    pub mtry: Option<usize>,
    pub bootstrap: bool,
    pub seed: u64,
}

impl ForestModel {
    pub fn fit(params: &ForestParams, x: &Matrix, y: &[f64]) -> ForestModel {
        assert_eq!(x.n_rows(), y.len());
        let n = x.n_rows();
        let p = x.n_cols();
        let mtry = params.mtry.unwrap_or_else(|| (p / 3).max(1));
        let g: Vec<f64> = y.iter().map(|&v| -v).collect();
        let h = vec![1.0; n];
        let cols: Vec<usize> = (0..p).collect();
        let tree_params = TreeParams {
            max_depth: params.max_depth,
            min_samples_leaf: params.min_samples_leaf,
            lambda: 0.0,
            gamma: 0.0,
            mtry: Some(mtry.min(p)),
        };

        let trees = parallel::map_indexed(params.n_estimators, |t| {
            let mut rng = ChaCha8Rng::seed_from_u64(params.seed.wrapping_add(t as u64));
            let rows: Vec<usize> = if params.bootstrap {
                (0..n).map(|_| rng.gen_range(0..n)).collect()
            } else {
                (0..n).collect()
            };
            tree::build(x, &g, &h, &rows, &cols, &tree_params, &mut rng)
        });
        ForestModel { trees }
    }

    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let sum: f64 = self.trees.iter().map(|t| t.predict_row(row)).sum();
        sum / self.trees.len() as f64
    }

    pub fn predict(&self, x: &Matrix) -> Vec<f64> {
        parallel::map_indexed(x.n_rows(), |r| self.predict_row(x.row(r)))
    }
}
