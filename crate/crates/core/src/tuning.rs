//! Hyperparameter search with k-fold cross-validation, selecting by mean
//! fold RMSE.
//!
//! Scoring never leaks validation rows into preprocessing: every fold refits
//! the standardizer on that fold's training rows only, transforms both
//! sides with those statistics, and scores the held-out rows. Config x fold
//! cells are independent work units evaluated in parallel and reduced in
//! enumeration order, so results do not depend on scheduling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{FoldPlan, Standardizer};
use crate::matrix::Matrix;
use crate::models::{self, Family, ModelConfig, ModelsError};
use crate::parallel;

#[derive(Debug, Error)]
pub enum TuningError {
    #[error("search axis `{0}` has no values")]
    EmptySpace(String),
    #[error("random search budget must be at least 1")]
    BadBudget,
    #[error("fold {fold}: {source}")]
    FoldFit {
        fold: usize,
        #[source]
        source: ModelsError,
    },
    #[error("candidate config invalid: {0}")]
    BadCandidate(#[from] ModelsError),
}

/// One searchable hyperparameter and its candidate values.
///
/// Axis order in the space fixes enumeration order: the grid iterates the
/// last axis fastest, and ties on mean RMSE resolve to the earlier config.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    NEstimators(Vec<usize>),
    MaxDepth(Vec<Option<usize>>),
    LearningRate(Vec<f64>),
    Subsample(Vec<f64>),
    ColsampleBytree(Vec<f64>),
    MinSamplesLeaf(Vec<usize>),
    K(Vec<usize>),
    C(Vec<f64>),
    Epsilon(Vec<f64>),
    Lambda(Vec<f64>),
    GammaSplit(Vec<f64>),
}

impl Axis {
    fn name(&self) -> &'static str {
        match self {
            Axis::NEstimators(_) => "n_estimators",
            Axis::MaxDepth(_) => "max_depth",
            Axis::LearningRate(_) => "learning_rate",
            Axis::Subsample(_) => "subsample",
            Axis::ColsampleBytree(_) => "colsample_bytree",
            Axis::MinSamplesLeaf(_) => "min_samples_leaf",
            Axis::K(_) => "k",
            Axis::C(_) => "c",
            Axis::Epsilon(_) => "epsilon",
            Axis::Lambda(_) => "lambda",
            Axis::GammaSplit(_) => "gamma_split",
        }
    }

    fn len(&self) -> usize {
        match self {
            Axis::NEstimators(v) => v.len(),
            Axis::MaxDepth(v) => v.len(),
            Axis::LearningRate(v) => v.len(),
            Axis::Subsample(v) => v.len(),
            Axis::ColsampleBytree(v) => v.len(),
            Axis::MinSamplesLeaf(v) => v.len(),
            Axis::K(v) => v.len(),
            Axis::C(v) => v.len(),
            Axis::Epsilon(v) => v.len(),
            Axis::Lambda(v) => v.len(),
            Axis::GammaSplit(v) => v.len(),
        }
    }

    fn apply(&self, index: usize, config: &mut ModelConfig) {
        match self {
            Axis::NEstimators(v) => config.n_estimators = v[index],
            Axis::MaxDepth(v) => config.max_depth = v[index],
            Axis::LearningRate(v) => config.learning_rate = v[index],
            Axis::Subsample(v) => config.subsample = v[index],
            Axis::ColsampleBytree(v) => config.colsample_bytree = v[index],
            Axis::MinSamplesLeaf(v) => config.min_samples_leaf = v[index],
            Axis::K(v) => config.k = v[index],
            Axis::C(v) => config.c = v[index],
            Axis::Epsilon(v) => config.epsilon = v[index],
            Axis::Lambda(v) => config.lambda = v[index],
            Axis::GammaSplit(v) => config.gamma_split = v[index],
        }
    }
}

/// A family, a base config for the unsearched knobs, and the search axes.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SearchSpace {
    pub family: Family,
    pub base: ModelConfig,
    pub axes: Vec<Axis>,
}

impl SearchSpace {
    pub fn new(family: Family, axes: Vec<Axis>) -> SearchSpace {
        SearchSpace { family, base: ModelConfig::new(family), axes }
    }

    fn check(&self) -> Result<(), TuningError> {
        for axis in &self.axes {
            if axis.len() == 0 {
                return Err(TuningError::EmptySpace(axis.name().to_string()));
            }
        }
        Ok(())
    }

    fn config_at(&self, indices: &[usize]) -> ModelConfig {
        let mut config = self.base.clone();
        config.family = self.family;
        for (axis, &i) in self.axes.iter().zip(indices) {
            axis.apply(i, &mut config);
        }
        config
    }
}

/// Per-fold and aggregate RMSE of one configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CvScore {
    pub fold_rmse: Vec<f64>,
    pub mean_rmse: f64,
    /// Population standard deviation over the fold RMSEs.
    pub std_rmse: f64,
}

fn summarize(fold_rmse: Vec<f64>) -> CvScore {
    let k = fold_rmse.len() as f64;
    let mean = fold_rmse.iter().sum::<f64>() / k;
    let var = fold_rmse.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / k;
    CvScore { fold_rmse, mean_rmse: mean, std_rmse: var.sqrt() }
}

/// Fit on one fold's training rows (standardizer refit there too) and score
/// RMSE on its validation rows.
fn score_fold(
    config: &ModelConfig,
    x: &Matrix,
    y: &[f64],
    plan: &FoldPlan,
    fold: usize,
) -> Result<f64, TuningError> {
    let train_rows = plan.training_rows(fold);
    let val_rows = plan.validation_rows(fold);
    let scaler = Standardizer::fit(x, &train_rows)
        .expect("fold training sets are never empty for k <= n");
    let x_train = scaler.transform(&x.select_rows(&train_rows));
    let x_val = scaler.transform(&x.select_rows(&val_rows));
    let y_train: Vec<f64> = train_rows.iter().map(|&r| y[r]).collect();

    let wrap = |source: ModelsError| TuningError::FoldFit { fold, source };
    let model = models::fit(config, &x_train, &y_train).map_err(wrap)?;
    let preds = model.predict(&x_val).map_err(wrap)?;

    let mse: f64 = val_rows
        .iter()
        .zip(&preds)
        .map(|(&r, p)| (y[r] - p) * (y[r] - p))
        .sum::<f64>()
        / val_rows.len() as f64;
    Ok(mse.sqrt())
}

/// Score one configuration over every fold of the plan.
pub fn cross_validate(
    config: &ModelConfig,
    x: &Matrix,
    y: &[f64],
    plan: &FoldPlan,
) -> Result<CvScore, TuningError> {
    assert_eq!(x.n_rows(), y.len());
    assert_eq!(plan.assignment.len(), x.n_rows(), "plan must cover every row");
    config.validate()?;
    let results = parallel::map_indexed(plan.k, |fold| score_fold(config, x, y, plan, fold));
    let mut fold_rmse = Vec::with_capacity(plan.k);
    for r in results {
        fold_rmse.push(r?);
    }
    Ok(summarize(fold_rmse))
}

/// One evaluated candidate within a [`TuningResult`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EvaluatedConfig {
    pub config: ModelConfig,
    pub score: CvScore,
}

/// Every candidate with its scores, plus the argmin by mean RMSE.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TuningResult {
    pub family: Family,
    pub k: usize,
    pub seed: u64,
    pub evaluated: Vec<EvaluatedConfig>,
    pub best_index: usize,
}

impl TuningResult {
    pub fn best(&self) -> &EvaluatedConfig {
        &self.evaluated[self.best_index]
    }
}

/// Evaluate candidates in order; config x fold cells run in parallel.
fn evaluate_candidates(
    configs: Vec<ModelConfig>,
    x: &Matrix,
    y: &[f64],
    plan: &FoldPlan,
    seed: u64,
) -> Result<TuningResult, TuningError> {
    for c in &configs {
        c.validate()?;
    }
    let family = configs.first().map(|c| c.family).expect("at least one candidate");
    let k = plan.k;
    let cells: Vec<(usize, usize)> =
        (0..configs.len()).flat_map(|ci| (0..k).map(move |f| (ci, f))).collect();
    let results =
        parallel::map_slice(&cells, |&(ci, fold)| score_fold(&configs[ci], x, y, plan, fold));

    let mut evaluated = Vec::with_capacity(configs.len());
    let mut it = results.into_iter();
    for config in configs {
        let mut fold_rmse = Vec::with_capacity(k);
        for _ in 0..k {
            fold_rmse.push(it.next().expect("one result per cell")?);
        }
        evaluated.push(EvaluatedConfig { config, score: summarize(fold_rmse) });
    }

    // Argmin by mean RMSE; strict comparison keeps the earliest candidate
    // on ties (enumeration order for the grid, draw order for random).
    let mut best_index = 0;
    for (i, e) in evaluated.iter().enumerate() {
        if e.score.mean_rmse < evaluated[best_index].score.mean_rmse {
            best_index = i;
        }
    }
    Ok(TuningResult { family, k, seed, evaluated, best_index })
}

/// Evaluate the full Cartesian product of the space's axes.
pub fn grid_search(
    space: &SearchSpace,
    x: &Matrix,
    y: &[f64],
    plan: &FoldPlan,
) -> Result<TuningResult, TuningError> {
    space.check()?;
    let total: usize = space.axes.iter().map(Axis::len).product();
    let mut configs = Vec::with_capacity(total);
    let mut indices = vec![0usize; space.axes.len()];
    for _ in 0..total {
        configs.push(space.config_at(&indices));
        // Odometer increment, last axis fastest.
        for pos in (0..space.axes.len()).rev() {
            indices[pos] += 1;
            if indices[pos] < space.axes[pos].len() {
                break;
            }
            indices[pos] = 0;
        }
    }
    evaluate_candidates(configs, x, y, plan, plan.seed)
}

/// Draw `budget` seeded samples, one uniform pick per axis value list.
pub fn random_search(
    space: &SearchSpace,
    x: &Matrix,
    y: &[f64],
    plan: &FoldPlan,
    seed: u64,
    budget: usize,
) -> Result<TuningResult, TuningError> {
    space.check()?;
    if budget < 1 {
        return Err(TuningError::BadBudget);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let configs: Vec<ModelConfig> = (0..budget)
        .map(|_| {
            let indices: Vec<usize> =
                space.axes.iter().map(|a| rng.gen_range(0..a.len())).collect();
            space.config_at(&indices)
        })
        .collect();
    evaluate_candidates(configs, x, y, plan, seed)
}
