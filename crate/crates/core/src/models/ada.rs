//! AdaBoost.R2 (Drucker's regression AdaBoost) over CART base learners.
//!
//! Each stage fits a tree on a weighted bootstrap resample, scores it with
//! the linear loss `|error| / max |error|` averaged under the current row
//! weights, and stops as soon as that average loss reaches 0.5 (the stage is
//! then no better than chance and its log-weight would go non-positive).
//! Prediction is the classic weighted median of the stage predictions.

use rand::distributions::{Distribution, WeightedIndex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::tree::{self, FlatTree, TreeParams};
use crate::matrix::Matrix;
use crate::parallel::derive_seed;

/// Weighted loss below which a stage counts as a perfect fit.
const PERFECT_LOSS: f64 = 1e-12;

#[derive(Clone, Debug)]
pub struct AdaParams {
    pub n_estimators: usize,
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdaboostModel {
    pub stages: Vec<FlatTree>,
    /// Stage weights `ln(1/beta)`; always positive, larger = more trusted.
    pub log_weights: Vec<f64>,
}

impl AdaboostModel {
    pub fn fit(params: &AdaParams, x: &Matrix, y: &[f64]) -> AdaboostModel {
        let n = x.n_rows();
        assert_eq!(n, y.len());
        assert!(n > 0);

        let g: Vec<f64> = y.iter().map(|&v| -v).collect();
        let h = vec![1.0; n];
        let cols: Vec<usize> = (0..x.n_cols()).collect();
        let tree_params = TreeParams {
            max_depth: params.max_depth,
            min_samples_leaf: params.min_samples_leaf,
            lambda: 0.0,
            gamma: 0.0,
            mtry: None,
        };

        let mut weights = vec![1.0 / n as f64; n];
        let mut stages = Vec::new();
        let mut log_weights = Vec::new();

        for t in 0..params.n_estimators {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(params.seed, t as u64));
            let sampler = WeightedIndex::new(&weights).expect("weights stay positive");
            let rows: Vec<usize> = (0..n).map(|_| sampler.sample(&mut rng)).collect();

            let stage = tree::build(x, &g, &h, &rows, &cols, &tree_params, &mut rng);
            let errors: Vec<f64> =
                (0..n).map(|r| (stage.predict_row(x.row(r)) - y[r]).abs()).collect();
            let max_err = errors.iter().copied().fold(0.0f64, f64::max);

            if max_err <= 0.0 {
                // The stage reproduces every training target exactly.
                stages.push(stage);
                log_weights.push((1.0 / PERFECT_LOSS).ln());
                break;
            }

            let losses: Vec<f64> = errors.iter().map(|e| e / max_err).collect();
            let avg_loss: f64 = losses.iter().zip(&weights).map(|(l, w)| l * w).sum();

            if avg_loss >= 0.5 {
                if stages.is_empty() {
                    // Keep something rather than an empty model; with one
                    // stage the weighted median is that stage regardless of
                    // its weight.
                    stages.push(stage);
                    log_weights.push(PERFECT_LOSS);
                }
                break;
            }

            if avg_loss <= PERFECT_LOSS {
                stages.push(stage);
                log_weights.push((1.0 / PERFECT_LOSS).ln());
                break;
            }

            let beta = avg_loss / (1.0 - avg_loss);
            stages.push(stage);
            log_weights.push((1.0 / beta).ln());

            for (w, l) in weights.iter_mut().zip(&losses) {
                *w *= beta.powf(1.0 - l);
            }
            let total: f64 = weights.iter().sum();
            for w in &mut weights {
                *w /= total;
            }
        }

        AdaboostModel { stages, log_weights }
    }

    /// Weighted median of the stage predictions.
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let mut preds: Vec<(f64, f64)> = self
            .stages
            .iter()
            .zip(&self.log_weights)
            .map(|(s, &w)| (s.predict_row(row), w))
            .collect();
        preds.sort_by(|a, b| a.0.total_cmp(&b.0));
        let half = 0.5 * preds.iter().map(|&(_, w)| w).sum::<f64>();
        let mut acc = 0.0;
        for &(p, w) in &preds {
            acc += w;
            if acc >= half {
                return p;
            }
        }
        preds.last().expect("model holds at least one stage").0
    }

    pub fn predict(&self, x: &Matrix) -> Vec<f64> {
        crate::parallel::map_indexed(x.n_rows(), |r| self.predict_row(x.row(r)))
    }
}
