//! The eight regression learners behind one fit/predict surface.
//!
//! [`ModelConfig`] names a family plus its hyperparameters; [`fit`] returns
//! a [`TrainedModel`] that predicts through one `predict` call regardless of
//! family. Multi-label classification trains five independent one-vs-rest
//! copies (one per fault flag) and thresholds their scores.
//!
//! Trained models serialize to JSON carrying the config, the feature names,
//! and a `family`-tagged fitted state with trees flattened into parallel
//! arrays (`feature`, `threshold`, `left`, `right`, `value`; node 0 = root;
//! `feature = -1` marks a leaf), so separate process invocations can train,
//! evaluate and explain the same artifact.

mod ada;
mod boost;
mod forest;
mod knn;
mod linear;
mod svr;
pub mod tree;

pub use ada::{AdaParams, AdaboostModel};
pub use boost::{BoostModel, BoostParams};
pub use forest::{ForestModel, ForestParams};
pub use knn::KnnModel;
pub use linear::LinearModel;
pub use svr::{SvrModel, SvrParams};
pub use tree::FlatTree;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::FLAG_NAMES;
use crate::matrix::Matrix;
use crate::parallel;

#[derive(Debug, Error)]
pub enum ModelsError {
    #[error("bad hyperparameter: {0}")]
    BadHyperparameter(String),
    #[error("degenerate training data: {0}")]
    DegenerateData(String),
    #[error("non-finite input: {0}")]
    NonFiniteInput(String),
    #[error("feature width mismatch: model expects {expected}, got {got}")]
    WidthMismatch { expected: usize, got: usize },
}

/// Model families, named as in the comparison table.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Linear,
    Cart,
    Knn,
    Svr,
    AdaboostR2,
    RandomForest,
    GradientBoosting,
    RegularizedBoosting,
}

impl Family {
    pub const ALL: [Family; 8] = [
        Family::Linear,
        Family::Cart,
        Family::Knn,
        Family::Svr,
        Family::AdaboostR2,
        Family::RandomForest,
        Family::GradientBoosting,
        Family::RegularizedBoosting,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::Linear => "linear",
            Family::Cart => "cart",
            Family::Knn => "knn",
            Family::Svr => "svr",
            Family::AdaboostR2 => "adaboost_r2",
            Family::RandomForest => "random_forest",
            Family::GradientBoosting => "gradient_boosting",
            Family::RegularizedBoosting => "regularized_boosting",
        }
    }
}

impl std::str::FromStr for Family {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Family::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| format!("unknown model family `{s}`"))
    }
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Family plus hyperparameters; knobs a family does not use are ignored.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub family: Family,
    pub n_estimators: usize,
    /// `None` = unlimited.
    pub max_depth: Option<usize>,
    pub learning_rate: f64,
    pub subsample: f64,
    pub colsample_bytree: f64,
    pub min_samples_leaf: usize,
    /// Neighbour count (KNN).
    pub k: usize,
    /// SVR box constraint.
    pub c: f64,
    /// SVR tube half-width.
    pub epsilon: f64,
    /// SVR RBF width; `None` = 1 / n_features.
    pub kernel_gamma: Option<f64>,
    /// L2 leaf penalty (regularized boosting).
    pub lambda: f64,
    /// Minimum split gain (regularized boosting).
    pub gamma_split: f64,
    /// Random-forest bootstrap resampling.
    pub bootstrap: bool,
    pub seed: u64,
}

impl ModelConfig {
    /// Baseline configuration for a family — the roster the CLI trains.
    pub fn new(family: Family) -> ModelConfig {
        let mut cfg = ModelConfig {
            family,
            n_estimators: 100,
            max_depth: None,
            learning_rate: 0.1,
            subsample: 1.0,
            colsample_bytree: 1.0,
            min_samples_leaf: 1,
            k: 5,
            c: 1.0,
            epsilon: 0.1,
            kernel_gamma: None,
            lambda: 1.0,
            gamma_split: 0.0,
            bootstrap: true,
            seed: 0,
        };
        match family {
            Family::AdaboostR2 => {
                cfg.n_estimators = 50;
                cfg.max_depth = None;
            }
            Family::GradientBoosting => {
                cfg.n_estimators = 150;
                cfg.max_depth = Some(3);
            }
            Family::RegularizedBoosting => {
                cfg.n_estimators = 150;
                cfg.max_depth = Some(6);
                cfg.subsample = 0.8;
                cfg.colsample_bytree = 0.7;
            }
            _ => {}
        }
        cfg
    }

    pub fn with_seed(mut self, seed: u64) -> ModelConfig {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<(), ModelsError> {
        let bad = |msg: String| Err(ModelsError::BadHyperparameter(msg));
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return bad(format!("learning_rate {} outside (0, 1]", self.learning_rate));
        }
        if !(self.subsample > 0.0 && self.subsample <= 1.0) {
            return bad(format!("subsample {} outside (0, 1]", self.subsample));
        }
        if !(self.colsample_bytree > 0.0 && self.colsample_bytree <= 1.0) {
            return bad(format!("colsample_bytree {} outside (0, 1]", self.colsample_bytree));
        }
        if self.n_estimators < 1 {
            return bad("n_estimators must be at least 1".into());
        }
        if self.k < 1 {
            return bad("k must be at least 1".into());
        }
        if self.min_samples_leaf < 1 {
            return bad("min_samples_leaf must be at least 1".into());
        }
        if !(self.c > 0.0) {
            return bad(format!("C {} must be positive", self.c));
        }
        if !(self.epsilon >= 0.0) {
            return bad(format!("epsilon {} must be non-negative", self.epsilon));
        }
        if let Some(g) = self.kernel_gamma {
            if !(g > 0.0) {
                return bad(format!("kernel gamma {g} must be positive"));
            }
        }
        if !(self.lambda >= 0.0) {
            return bad(format!("lambda {} must be non-negative", self.lambda));
        }
        if !(self.gamma_split >= 0.0) {
            return bad(format!("gamma_split {} must be non-negative", self.gamma_split));
        }
        Ok(())
    }
}

/// Family-specific fitted state; the JSON form carries the `family` tag.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum FittedState {
    Linear(LinearModel),
    Cart(FlatTree),
    Knn(KnnModel),
    Svr(SvrModel),
    AdaboostR2(AdaboostModel),
    RandomForest(ForestModel),
    GradientBoosting(BoostModel),
    RegularizedBoosting(BoostModel),
}

/// A fitted model with its provenance: config, seed, and feature names.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub config: ModelConfig,
    pub feature_names: Vec<String>,
    pub fitted: FittedState,
}

impl TrainedModel {
    pub fn family(&self) -> Family {
        match &self.fitted {
            FittedState::Linear(_) => Family::Linear,
            FittedState::Cart(_) => Family::Cart,
            FittedState::Knn(_) => Family::Knn,
            FittedState::Svr(_) => Family::Svr,
            FittedState::AdaboostR2(_) => Family::AdaboostR2,
            FittedState::RandomForest(_) => Family::RandomForest,
            FittedState::GradientBoosting(_) => Family::GradientBoosting,
            FittedState::RegularizedBoosting(_) => Family::RegularizedBoosting,
        }
    }

    /// Width of the feature matrix the model was fitted on.
    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    /// Replace the placeholder feature names recorded at fit time.
    pub fn with_feature_names(mut self, names: &[String]) -> TrainedModel {
        assert_eq!(names.len(), self.feature_names.len());
        self.feature_names = names.to_vec();
        self
    }

    pub fn predict(&self, x: &Matrix) -> Result<Vec<f64>, ModelsError> {
        let expected = self.n_features();
        if x.n_cols() != expected {
            return Err(ModelsError::WidthMismatch { expected, got: x.n_cols() });
        }
        check_finite_matrix(x)?;
        Ok(match &self.fitted {
            FittedState::Linear(m) => m.predict(x),
            FittedState::Cart(m) => m.predict(x),
            FittedState::Knn(m) => m.predict(x),
            FittedState::Svr(m) => m.predict(x),
            FittedState::AdaboostR2(m) => m.predict(x),
            FittedState::RandomForest(m) => m.predict(x),
            FittedState::GradientBoosting(m) | FittedState::RegularizedBoosting(m) => {
                m.predict(x)
            }
        })
    }
}

fn check_finite_matrix(x: &Matrix) -> Result<(), ModelsError> {
    for r in 0..x.n_rows() {
        for (c, v) in x.row(r).iter().enumerate() {
            if !v.is_finite() {
                return Err(ModelsError::NonFiniteInput(format!(
                    "feature value {v} at row {r}, column {c}"
                )));
            }
        }
    }
    Ok(())
}

fn check_finite_targets(y: &[f64]) -> Result<(), ModelsError> {
    for (r, v) in y.iter().enumerate() {
        if !v.is_finite() {
            return Err(ModelsError::NonFiniteInput(format!("target value {v} at row {r}")));
        }
    }
    Ok(())
}

fn check_training_inputs(x: &Matrix, y: &[f64]) -> Result<(), ModelsError> {
    if x.n_rows() == 0 {
        return Err(ModelsError::DegenerateData("zero training rows".into()));
    }
    if x.n_cols() == 0 {
        return Err(ModelsError::DegenerateData("zero feature columns".into()));
    }
    if x.n_rows() != y.len() {
        return Err(ModelsError::DegenerateData(format!(
            "{} feature rows vs {} targets",
            x.n_rows(),
            y.len()
        )));
    }
    check_finite_matrix(x)?;
    check_finite_targets(y)
}

fn placeholder_names(p: usize) -> Vec<String> {
    (0..p).map(|i| format!("f{i}")).collect()
}

/// Train a model of the configured family.
pub fn fit(config: &ModelConfig, x: &Matrix, y: &[f64]) -> Result<TrainedModel, ModelsError> {
    config.validate()?;
    check_training_inputs(x, y)?;

    let fitted = match config.family {
        Family::Linear => FittedState::Linear(LinearModel::fit(x, y)),
        Family::Cart => {
            let params = tree::TreeParams {
                max_depth: config.max_depth,
                min_samples_leaf: config.min_samples_leaf,
                lambda: 0.0,
                gamma: 0.0,
                mtry: None,
            };
            let g: Vec<f64> = y.iter().map(|&v| -v).collect();
            let h = vec![1.0; y.len()];
            let rows: Vec<usize> = (0..x.n_rows()).collect();
            let cols: Vec<usize> = (0..x.n_cols()).collect();
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            FittedState::Cart(tree::build(x, &g, &h, &rows, &cols, &params, &mut rng))
        }
        Family::Knn => FittedState::Knn(KnnModel::fit(config.k, x, y)),
        Family::Svr => {
            let params = SvrParams {
                c: config.c,
                epsilon: config.epsilon,
                gamma: config.kernel_gamma,
                ..SvrParams::default()
            };
            FittedState::Svr(SvrModel::fit(&params, x, y))
        }
        Family::AdaboostR2 => {
            let params = AdaParams {
                n_estimators: config.n_estimators,
                max_depth: config.max_depth,
                min_samples_leaf: config.min_samples_leaf,
                seed: config.seed,
            };
            FittedState::AdaboostR2(AdaboostModel::fit(&params, x, y))
        }
        Family::RandomForest => {
            let params = ForestParams {
                n_estimators: config.n_estimators,
                max_depth: config.max_depth,
                min_samples_leaf: config.min_samples_leaf,
                mtry: None,
                bootstrap: config.bootstrap,
                seed: config.seed,
            };
            FittedState::RandomForest(ForestModel::fit(&params, x, y))
        }
        Family::GradientBoosting => {
            FittedState::GradientBoosting(BoostModel::fit(&boost_params(config, true), x, y))
        }
        Family::RegularizedBoosting => {
            FittedState::RegularizedBoosting(BoostModel::fit(&boost_params(config, false), x, y))
        }
    };

    Ok(TrainedModel {
        config: config.clone(),
        feature_names: placeholder_names(x.n_cols()),
        fitted,
    })
}

/// Fit either boosting family and also return its training-MSE curve:
/// `curve[0]` is the constant mean predictor, `curve[t]` the model after
/// `t` stages.
pub fn fit_boosting_with_curve(
    config: &ModelConfig,
    x: &Matrix,
    y: &[f64],
) -> Result<(TrainedModel, Vec<f64>), ModelsError> {
    assert!(
        matches!(config.family, Family::GradientBoosting | Family::RegularizedBoosting),
        "training curves only apply to boosting families"
    );
    config.validate()?;
    check_training_inputs(x, y)?;
    let plain = config.family == Family::GradientBoosting;
    let (model, curve) = BoostModel::fit_with_curve(&boost_params(config, plain), x, y);
    let fitted = if plain {
        FittedState::GradientBoosting(model)
    } else {
        FittedState::RegularizedBoosting(model)
    };
    Ok((
        TrainedModel {
            config: config.clone(),
            feature_names: placeholder_names(x.n_cols()),
            fitted,
        },
        curve,
    ))
}

fn boost_params(config: &ModelConfig, plain: bool) -> BoostParams {
    BoostParams {
        n_estimators: config.n_estimators,
        max_depth: config.max_depth,
        learning_rate: config.learning_rate,
        min_samples_leaf: config.min_samples_leaf,
        lambda: if plain { 0.0 } else { config.lambda },
        gamma: if plain { 0.0 } else { config.gamma_split },
        subsample: if plain { 1.0 } else { config.subsample },
        colsample_bytree: if plain { 1.0 } else { config.colsample_bytree },
        seed: config.seed,
    }
}

/// Five one-vs-rest models, ordered as the flag schema TWF..RNF.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MultiLabelModel {
    pub label_names: Vec<String>,
    pub models: Vec<TrainedModel>,
}

/// Train one model per flag column with a shared configuration.
pub fn fit_multilabel(
    config: &ModelConfig,
    x: &Matrix,
    flags: &Matrix,
) -> Result<MultiLabelModel, ModelsError> {
    if flags.n_cols() != FLAG_NAMES.len() {
        return Err(ModelsError::DegenerateData(format!(
            "expected {} flag columns, got {}",
            FLAG_NAMES.len(),
            flags.n_cols()
        )));
    }
    let results = parallel::map_indexed(FLAG_NAMES.len(), |label| {
        fit(config, x, &flags.column(label))
    });
    let mut models = Vec::with_capacity(FLAG_NAMES.len());
    for r in results {
        models.push(r?);
    }
    Ok(MultiLabelModel {
        label_names: FLAG_NAMES.iter().map(|s| s.to_string()).collect(),
        models,
    })
}

/// Raw per-label regression scores, one column per flag.
pub fn predict_multilabel_scores(
    m: &MultiLabelModel,
    x: &Matrix,
) -> Result<Matrix, ModelsError> {
    let mut scores = Matrix::zeros(x.n_rows(), m.models.len());
    for (c, sub) in m.models.iter().enumerate() {
        for (r, v) in sub.predict(x)?.into_iter().enumerate() {
            scores.set(r, c, v);
        }
    }
    Ok(scores)
}

/// Thresholded 0/1 flags: a flag raises when its score reaches `threshold`.
pub fn predict_multilabel(
    m: &MultiLabelModel,
    x: &Matrix,
    threshold: f64,
) -> Result<Matrix, ModelsError> {
    let scores = predict_multilabel_scores(m, x)?;
    let mut flags = Matrix::zeros(scores.n_rows(), scores.n_cols());
    for r in 0..scores.n_rows() {
        for c in 0..scores.n_cols() {
            flags.set(r, c, f64::from(u8::from(scores.get(r, c) >= threshold)));
        }
    }
    Ok(flags)
}
