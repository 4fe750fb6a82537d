//! Shapley-value attribution of model predictions to features.
//!
//! All three estimators target the same interventional (marginal) quantity:
//! the value of a feature coalition S at query row x is the model's mean
//! prediction over composite rows that take the features in S from x and
//! the rest from an explicit background sample. [`shap_exact`] enumerates
//! every coalition, [`shap_tree`] computes the identical number for tree
//! ensembles by decomposing root-to-leaf paths per background row, and
//! [`shap_kernel`] solves the Shapley-kernel-weighted least squares over
//! coalitions (exhaustively for small feature counts, sampled otherwise).
//!
//! Background rows within a query are reduced in a fixed order and query
//! rows are independent, so outputs are bit-stable regardless of the worker
//! count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg;
use crate::matrix::Matrix;
use crate::models::{FittedState, ModelsError, TrainedModel};
use crate::models::{Family, FlatTree};
use crate::parallel;

/// Exact enumeration walks 2^p coalitions; beyond this it is refused.
pub const MAX_EXACT_FEATURES: usize = 15;
/// At or below this feature count the kernel method enumerates every
/// coalition and is exact.
pub const KERNEL_ENUMERATION_LIMIT: usize = 12;
/// How the coalition value is defined (recorded in every output).
pub const CONDITIONING: &str = "interventional";

#[derive(Debug, Error)]
pub enum ExplainError {
    #[error("{p} features exceed the exact-enumeration limit of {max}")]
    TooManyFeatures { p: usize, max: usize },
    #[error("{0} is not an additive tree ensemble; use the kernel method")]
    NotATreeModel(Family),
    #[error("coalition budget {budget} is below the minimum {needed} for {p} features")]
    BudgetTooSmall { budget: usize, needed: usize, p: usize },
    #[error("row has {got} features but the model expects {expected}")]
    WidthMismatch { expected: usize, got: usize },
    #[error("feature index {index} out of range for {p} features")]
    BadFeature { index: usize, p: usize },
    #[error("background sample is empty")]
    EmptyBackground,
    #[error("{0}")]
    Misaligned(String),
    #[error(transparent)]
    Model(#[from] ModelsError),
}

/// The rows that stand in for "feature withheld" in the value function.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Background {
    pub rows: Matrix,
}

impl Background {
    pub const DEFAULT_SIZE: usize = 100;

    /// Use every row of `x` as background.
    pub fn from_all(x: &Matrix) -> Result<Background, ExplainError> {
        if x.n_rows() == 0 {
            return Err(ExplainError::EmptyBackground);
        }
        Ok(Background { rows: x.clone() })
    }

    /// Sample `size` rows without replacement (all rows if `size >= n`),
    /// kept in ascending row order so reductions are order-stable.
    pub fn sample(x: &Matrix, size: usize, seed: u64) -> Result<Background, ExplainError> {
        if x.n_rows() == 0 || size == 0 {
            return Err(ExplainError::EmptyBackground);
        }
        if size >= x.n_rows() {
            return Background::from_all(x);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut idx = rand::seq::index::sample(&mut rng, x.n_rows(), size).into_vec();
        idx.sort_unstable();
        Ok(Background { rows: x.select_rows(&idx) })
    }

    pub fn len(&self) -> usize {
        self.rows.n_rows()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.n_rows() == 0
    }

    /// Base value: the model's mean prediction over the background.
    pub fn base_value(&self, m: &TrainedModel) -> Result<f64, ExplainError> {
        let preds = m.predict(&self.rows)?;
        Ok(preds.iter().sum::<f64>() / preds.len() as f64)
    }
}

/// Per-feature attributions for one query row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShapVector {
    pub phi: Vec<f64>,
    pub base_value: f64,
    pub prediction: f64,
}

impl ShapVector {
    /// Efficiency residual f(x) − (φ₀ + Σφᵢ); near zero when the estimator
    /// is exact.
    pub fn efficiency_gap(&self) -> f64 {
        self.prediction - self.base_value - self.phi.iter().sum::<f64>()
    }
}

/// Per-feature attributions for a set of query rows.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ShapMatrix {
    /// n_queries x p attribution matrix.
    pub phi: Matrix,
    pub base_value: f64,
    pub predictions: Vec<f64>,
    pub method: ShapMethod,
    /// How withheld features were replaced ("interventional").
    pub conditioning: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShapMethod {
    /// Pick `Tree` for additive tree ensembles, `Kernel` otherwise.
    Auto,
    Exact,
    Tree,
    Kernel,
}

impl std::fmt::Display for ShapMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            ShapMethod::Auto => "auto",
            ShapMethod::Exact => "exact",
            ShapMethod::Tree => "tree",
            ShapMethod::Kernel => "kernel",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for ShapMethod {
    type Err = String;

    fn from_str(s: &str) -> Result<ShapMethod, String> {
        match s {
            "auto" => Ok(ShapMethod::Auto),
            "exact" => Ok(ShapMethod::Exact),
            "tree" => Ok(ShapMethod::Tree),
            "kernel" => Ok(ShapMethod::Kernel),
            other => Err(format!("unknown SHAP method `{other}`")),
        }
    }
}

/// Sampling controls for the kernel method. The budget only matters above
/// [`KERNEL_ENUMERATION_LIMIT`] features; below that every coalition is
/// enumerated.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct KernelOptions {
    pub budget: usize,
    pub seed: u64,
}

impl Default for KernelOptions {
    fn default() -> KernelOptions {
        KernelOptions { budget: 2048, seed: 0 }
    }
}

fn check_query(m: &TrainedModel, x: &[f64], bg: &Background) -> Result<usize, ExplainError> {
    let p = m.n_features();
    if x.len() != p {
        return Err(ExplainError::WidthMismatch { expected: p, got: x.len() });
    }
    if bg.rows.n_cols() != p {
        return Err(ExplainError::WidthMismatch { expected: p, got: bg.rows.n_cols() });
    }
    if bg.is_empty() {
        return Err(ExplainError::EmptyBackground);
    }
    Ok(p)
}

fn predict_one(m: &TrainedModel, x: &[f64]) -> Result<f64, ExplainError> {
    let row = Matrix::from_rows(vec![x.to_vec()]);
    Ok(m.predict(&row)?[0])
}

/// Mean prediction over composites that take the features in `s` from `x`
/// and everything else from each background row in turn.
pub fn value_function(
    m: &TrainedModel,
    x: &[f64],
    s: &[usize],
    bg: &Background,
) -> Result<f64, ExplainError> {
    let p = check_query(m, x, bg)?;
    for &f in s {
        if f >= p {
            return Err(ExplainError::BadFeature { index: f, p });
        }
    }
    let nb = bg.len();
    let mut composite = bg.rows.clone();
    for b in 0..nb {
        for &f in s {
            composite.set(b, f, x[f]);
        }
    }
    let preds = m.predict(&composite)?;
    Ok(preds.iter().sum::<f64>() / nb as f64)
}

fn factorials(n: usize) -> Vec<f64> {
    let mut fact = vec![1.0; n + 1];
    for i in 1..=n {
        fact[i] = fact[i - 1] * i as f64;
    }
    fact
}

/// Exact Shapley values by enumerating all 2^p coalitions, memoizing the
/// value function per coalition bitmask.
pub fn shap_exact(
    m: &TrainedModel,
    x: &[f64],
    bg: &Background,
) -> Result<ShapVector, ExplainError> {
    let p = check_query(m, x, bg)?;
    if p > MAX_EXACT_FEATURES {
        return Err(ExplainError::TooManyFeatures { p, max: MAX_EXACT_FEATURES });
    }
    let nb = bg.len();
    let n_masks = 1usize << p;
    let mut v = vec![0.0; n_masks];
    let mut composite = Matrix::zeros(nb, p);
    for (mask, slot) in v.iter_mut().enumerate() {
        for b in 0..nb {
            for f in 0..p {
                let on = mask & (1usize << f) != 0;
                composite.set(b, f, if on { x[f] } else { bg.rows.get(b, f) });
            }
        }
        let preds = m.predict(&composite)?;
        *slot = preds.iter().sum::<f64>() / nb as f64;
    }

    let fact = factorials(p);
    let mut phi = vec![0.0; p];
    for (i, phi_i) in phi.iter_mut().enumerate() {
        let bit = 1usize << i;
        for mask in 0..n_masks {
            if mask & bit != 0 {
                continue;
            }
            let s = (mask as u32).count_ones() as usize;
            let w = fact[s] * fact[p - s - 1] / fact[p];
            *phi_i += w * (v[mask | bit] - v[mask]);
        }
    }
    Ok(ShapVector { phi, base_value: v[0], prediction: v[n_masks - 1] })
}

/// Binomial coefficient as f64 via the multiplicative formula.
fn binom(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    let mut c = 1.0;
    for i in 1..=k {
        c = c * (n - k + i) as f64 / i as f64;
    }
    c
}

/// Accumulates one (query, background) pair's Shapley contributions for a
/// single tree by walking every coalition-reachable root-to-leaf path.
///
/// At a node whose split feature sends the query and background rows the
/// same way, the composite follows unconditionally. Where they diverge the
/// path forks: coalitions containing the feature go the query's way ("hot"),
/// the rest go the background's way ("cold"); a feature already committed
/// hot or cold on this path forces the matching side. A leaf gathered with
/// u hot and c cold distinct features is reachable exactly when all hot
/// features are present and all cold ones absent, and the Shapley value of
/// that indicator game is closed-form: +value·(u−1)!c!/(u+c)! for each hot
/// feature and −value·u!(c−1)!/(u+c)! for each cold one.
struct PathWalker<'a> {
    tree: &'a FlatTree,
    x: &'a [f64],
    b: &'a [f64],
    hot: Vec<usize>,
    cold: Vec<usize>,
    committed: Vec<u8>, // 0 = free, 1 = hot, 2 = cold
}

impl<'a> PathWalker<'a> {
    fn run(tree: &'a FlatTree, x: &'a [f64], b: &'a [f64], scale: f64, phi: &mut [f64]) {
        let mut w = PathWalker {
            tree,
            x,
            b,
            hot: Vec::new(),
            cold: Vec::new(),
            committed: vec![0; x.len()],
        };
        w.walk(0, scale, phi);
    }

    fn walk(&mut self, node: usize, scale: f64, phi: &mut [f64]) {
        if self.tree.is_leaf(node) {
            let (u, c) = (self.hot.len(), self.cold.len());
            if u + c == 0 {
                return; // constant for every coalition: no attribution
            }
            let val = self.tree.value[node] * scale;
            if u > 0 {
                let w = val / (u as f64 * binom(u + c, c));
                for &f in &self.hot {
                    phi[f] += w;
                }
            }
            if c > 0 {
                let w = val / (c as f64 * binom(u + c, c));
                for &f in &self.cold {
                    phi[f] -= w;
                }
            }
            return;
        }
        let f = self.tree.feature[node] as usize;
        let t = self.tree.threshold[node];
        let (l, r) = (self.tree.left[node] as usize, self.tree.right[node] as usize);
        let x_left = self.x[f] <= t;
        let b_left = self.b[f] <= t;
        if x_left == b_left {
            let child = if x_left { l } else { r };
            self.walk(child, scale, phi);
            return;
        }
        let x_child = if x_left { l } else { r };
        let b_child = if b_left { l } else { r };
        match self.committed[f] {
            1 => self.walk(x_child, scale, phi),
            2 => self.walk(b_child, scale, phi),
            _ => {
                self.committed[f] = 1;
                self.hot.push(f);
                self.walk(x_child, scale, phi);
                self.hot.pop();
                self.committed[f] = 2;
                self.cold.push(f);
                self.walk(b_child, scale, phi);
                self.cold.pop();
                self.committed[f] = 0;
            }
        }
    }
}

fn tree_components(m: &TrainedModel) -> Result<Vec<(&FlatTree, f64)>, ExplainError> {
    match &m.fitted {
        FittedState::Cart(t) => Ok(vec![(t, 1.0)]),
        FittedState::RandomForest(f) => {
            let w = 1.0 / f.trees.len() as f64;
            Ok(f.trees.iter().map(|t| (t, w)).collect())
        }
        FittedState::GradientBoosting(b) | FittedState::RegularizedBoosting(b) => {
            Ok(b.trees.iter().map(|t| (t, b.learning_rate)).collect())
        }
        _ => Err(ExplainError::NotATreeModel(m.family())),
    }
}

/// Same interventional quantity as [`shap_exact`], without 2^p model
/// evaluations: per background row, each tree's paths are decomposed in one
/// recursive walk; ensemble members add by Shapley linearity.
pub fn shap_tree(
    m: &TrainedModel,
    x: &[f64],
    bg: &Background,
) -> Result<ShapVector, ExplainError> {
    let p = check_query(m, x, bg)?;
    let components = tree_components(m)?;
    let nb = bg.len();
    let mut phi = vec![0.0; p];
    for b_idx in 0..nb {
        let b = bg.rows.row(b_idx);
        for (tree, scale) in &components {
            PathWalker::run(tree, x, b, *scale, &mut phi);
        }
    }
    for v in &mut phi {
        *v /= nb as f64;
    }
    Ok(ShapVector { phi, base_value: bg.base_value(m)?, prediction: predict_one(m, x)? })
}

/// Shapley kernel weight for a coalition of size `s` out of `p` features,
/// spread over the C(p, s) coalitions of that size.
fn kernel_weight(p: usize, s: usize) -> f64 {
    (p - 1) as f64 / (binom(p, s) * (s * (p - s)) as f64)
}

/// Kernel SHAP: weighted least squares over coalitions under the efficiency
/// constraint. With p ≤ [`KERNEL_ENUMERATION_LIMIT`] every proper nonempty
/// coalition is enumerated and the solution equals the exact Shapley
/// values; above that, `options.budget` coalitions are sampled (sizes drawn
/// with probability proportional to the kernel mass, members uniformly).
pub fn shap_kernel(
    m: &TrainedModel,
    x: &[f64],
    bg: &Background,
    options: &KernelOptions,
) -> Result<ShapVector, ExplainError> {
    let p = check_query(m, x, bg)?;
    if options.budget < p + 2 {
        return Err(ExplainError::BudgetTooSmall {
            budget: options.budget,
            needed: p + 2,
            p,
        });
    }
    let base_value = bg.base_value(m)?;
    let prediction = predict_one(m, x)?;
    let delta = prediction - base_value;
    if p == 1 {
        return Ok(ShapVector { phi: vec![delta], base_value, prediction });
    }

    // Coalitions as bitmasks with a weight each.
    let coalitions: Vec<(usize, f64)> = if p <= KERNEL_ENUMERATION_LIMIT {
        (1..(1usize << p) - 1)
            .map(|mask| (mask, kernel_weight(p, (mask as u32).count_ones() as usize)))
            .collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
        let size_mass: Vec<f64> =
            (1..p).map(|s| (p - 1) as f64 / ((s * (p - s)) as f64)).collect();
        let total: f64 = size_mass.iter().sum();
        (0..options.budget)
            .map(|_| {
                let mut draw = rng.gen_range(0.0..total);
                let mut s = 1;
                for (i, mass) in size_mass.iter().enumerate() {
                    if draw < *mass {
                        s = i + 1;
                        break;
                    }
                    draw -= mass;
                }
                let members = rand::seq::index::sample(&mut rng, p, s);
                let mask = members.iter().fold(0usize, |acc, f| acc | (1 << f));
                // Size already drawn from the kernel mass, so samples get
                // equal weight.
                (mask, 1.0)
            })
            .collect()
    };

    // Efficiency eliminates the last coefficient:
    //   φ_last = Δ − Σ_{i<last} φ_i,
    // leaving a (p−1)-dimensional weighted least squares with rows
    //   a_i = z_i − z_last, target t = v(S) − φ₀ − z_last·Δ.
    let last = p - 1;
    let nb = bg.len();
    let mut composite = Matrix::zeros(nb, p);
    let mut gram = vec![vec![0.0; p - 1]; p - 1];
    let mut rhs = vec![0.0; p - 1];
    let mut a = vec![0.0; p - 1];
    for (mask, weight) in coalitions {
        for b in 0..nb {
            for f in 0..p {
                let on = mask & (1usize << f) != 0;
                composite.set(b, f, if on { x[f] } else { bg.rows.get(b, f) });
            }
        }
        let preds = m.predict(&composite)?;
        let v = preds.iter().sum::<f64>() / nb as f64;

        let z_last = if mask & (1usize << last) != 0 { 1.0 } else { 0.0 };
        for (i, slot) in a.iter_mut().enumerate() {
            let z_i = if mask & (1usize << i) != 0 { 1.0 } else { 0.0 };
            *slot = z_i - z_last;
        }
        let t = v - base_value - z_last * delta;
        for i in 0..p - 1 {
            if a[i] == 0.0 {
                continue;
            }
            for j in 0..p - 1 {
                gram[i][j] += weight * a[i] * a[j];
            }
            rhs[i] += weight * a[i] * t;
        }
    }

    let head = linalg::solve_psd(&gram, &rhs);
    let mut phi = head;
    let used: f64 = phi.iter().sum();
    phi.push(delta - used);
    Ok(ShapVector { phi, base_value, prediction })
}

fn resolve_method(m: &TrainedModel, method: ShapMethod) -> ShapMethod {
    match method {
        ShapMethod::Auto => {
            if tree_components(m).is_ok() {
                ShapMethod::Tree
            } else {
                ShapMethod::Kernel
            }
        }
        other => other,
    }
}

/// Explain every row of `x`, in parallel, with the requested method.
pub fn shap_matrix(
    m: &TrainedModel,
    x: &Matrix,
    bg: &Background,
    method: ShapMethod,
    options: &KernelOptions,
) -> Result<ShapMatrix, ExplainError> {
    if x.n_cols() != m.n_features() {
        return Err(ExplainError::WidthMismatch { expected: m.n_features(), got: x.n_cols() });
    }
    let method = resolve_method(m, method);
    let results = parallel::map_indexed(x.n_rows(), |r| {
        let row = x.row(r);
        match method {
            ShapMethod::Exact => shap_exact(m, row, bg),
            ShapMethod::Tree => shap_tree(m, row, bg),
            ShapMethod::Kernel => {
                // Per-row stream keeps sampled coalitions independent of
                // how rows are batched across workers.
                let opts = KernelOptions {
                    budget: options.budget,
                    seed: parallel::derive_seed(options.seed, r as u64),
                };
                shap_kernel(m, row, bg, &opts)
            }
            ShapMethod::Auto => unreachable!("resolved above"),
        }
    });
    let base_value = bg.base_value(m)?;
    let mut phi = Matrix::zeros(x.n_rows(), x.n_cols());
    let mut predictions = Vec::with_capacity(x.n_rows());
    for (r, res) in results.into_iter().enumerate() {
        let v = res?;
        for (f, val) in v.phi.iter().enumerate() {
            phi.set(r, f, *val);
        }
        predictions.push(v.prediction);
    }
    Ok(ShapMatrix {
        phi,
        base_value,
        predictions,
        method,
        conditioning: CONDITIONING.to_string(),
    })
}

/// One feature's rank entry in a [`SummaryTable`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FeatureSummary {
    pub feature_index: usize,
    pub feature_name: String,
    pub mean_abs_phi: f64,
    /// One (feature value, φ) pair per query row: beeswarm source data.
    pub points: Vec<(f64, f64)>,
}

/// Features ranked by mean |φ| descending (ties by feature index).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SummaryTable {
    pub features: Vec<FeatureSummary>,
}

fn check_aligned(
    matrix: &ShapMatrix,
    x: &Matrix,
    names: &[String],
) -> Result<(), ExplainError> {
    if matrix.phi.n_rows() != x.n_rows() {
        return Err(ExplainError::Misaligned(format!(
            "{} attribution rows vs {} query rows",
            matrix.phi.n_rows(),
            x.n_rows()
        )));
    }
    if matrix.phi.n_cols() != x.n_cols() || names.len() != x.n_cols() {
        return Err(ExplainError::Misaligned(format!(
            "{} attribution columns vs {} query columns vs {} names",
            matrix.phi.n_cols(),
            x.n_cols(),
            names.len()
        )));
    }
    Ok(())
}

/// Rank features by mean |φ| over the query set.
pub fn shap_summary(
    matrix: &ShapMatrix,
    x: &Matrix,
    names: &[String],
) -> Result<SummaryTable, ExplainError> {
    check_aligned(matrix, x, names)?;
    let n = x.n_rows();
    let mut features: Vec<FeatureSummary> = (0..x.n_cols())
        .map(|f| {
            let mean_abs =
                (0..n).map(|r| matrix.phi.get(r, f).abs()).sum::<f64>() / n as f64;
            FeatureSummary {
                feature_index: f,
                feature_name: names[f].clone(),
                mean_abs_phi: mean_abs,
                points: (0..n).map(|r| (x.get(r, f), matrix.phi.get(r, f))).collect(),
            }
        })
        .collect();
    features.sort_by(|a, b| {
        b.mean_abs_phi
            .total_cmp(&a.mean_abs_phi)
            .then(a.feature_index.cmp(&b.feature_index))
    });
    Ok(SummaryTable { features })
}

/// One query row's point in a [`DependenceTable`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DependencePoint {
    pub value: f64,
    pub phi: f64,
    pub interaction_value: Option<f64>,
}

/// φ against feature value, optionally colored by a second feature.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DependenceTable {
    pub feature_index: usize,
    pub feature_name: String,
    pub interaction_index: Option<usize>,
    pub interaction_name: Option<String>,
    /// One point per query row, sorted by feature value.
    pub points: Vec<DependencePoint>,
}

pub fn shap_dependence(
    matrix: &ShapMatrix,
    x: &Matrix,
    names: &[String],
    feature: usize,
    interaction: Option<usize>,
) -> Result<DependenceTable, ExplainError> {
    check_aligned(matrix, x, names)?;
    let p = x.n_cols();
    if feature >= p {
        return Err(ExplainError::BadFeature { index: feature, p });
    }
    if let Some(i) = interaction {
        if i >= p {
            return Err(ExplainError::BadFeature { index: i, p });
        }
    }
    let mut points: Vec<DependencePoint> = (0..x.n_rows())
        .map(|r| DependencePoint {
            value: x.get(r, feature),
            phi: matrix.phi.get(r, feature),
            interaction_value: interaction.map(|i| x.get(r, i)),
        })
        .collect();
    points.sort_by(|a, b| a.value.total_cmp(&b.value).then(a.phi.total_cmp(&b.phi)));
    Ok(DependenceTable {
        feature_index: feature,
        feature_name: names[feature].clone(),
        interaction_index: interaction,
        interaction_name: interaction.map(|i| names[i].clone()),
        points,
    })
}

/// One signed contribution in a local (single-row) explanation.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LocalContribution {
    pub feature_index: usize,
    pub feature_name: String,
    pub feature_value: f64,
    pub phi: f64,
}

/// Force-plot source data: contributions sorted by |φ| descending with sign
/// retained (ties by feature index).
pub fn local_explanation(
    v: &ShapVector,
    x_row: &[f64],
    names: &[String],
) -> Result<Vec<LocalContribution>, ExplainError> {
    if v.phi.len() != names.len() || v.phi.len() != x_row.len() {
        return Err(ExplainError::Misaligned(format!(
            "{} attributions vs {} values vs {} names",
            v.phi.len(),
            x_row.len(),
            names.len()
        )));
    }
    let mut out: Vec<LocalContribution> = v
        .phi
        .iter()
        .enumerate()
        .map(|(f, &phi)| LocalContribution {
            feature_index: f,
            feature_name: names[f].clone(),
            feature_value: x_row[f],
            phi,
        })
        .collect();
    out.sort_by(|a, b| {
        b.phi
            .abs()
            .total_cmp(&a.phi.abs())
            .then(a.feature_index.cmp(&b.feature_index))
    });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::LinearModel;
    use crate::models::{self, ModelConfig};
    use rand::Rng;

    // ------------------------------------------------------------------
    // Brute-force oracle, written against the Shapley definition alone:
    // recursive subset lists, factorial weights, composite rows built and
    // predicted one at a time. No code shared with the implementations.
    // ------------------------------------------------------------------

    fn oracle_factorial(n: usize) -> f64 {
        (1..=n).map(|i| i as f64).product()
    }

    fn oracle_value(m: &TrainedModel, x: &[f64], s: &[usize], bg: &Matrix) -> f64 {
        let mut total = 0.0;
        for b in 0..bg.n_rows() {
            let mut row = bg.row(b).to_vec();
            for &f in s {
                row[f] = x[f];
            }
            let pred = m.predict(&Matrix::from_rows(vec![row])).unwrap()[0];
            total += pred;
        }
        total / bg.n_rows() as f64
    }

    fn oracle_shap(m: &TrainedModel, x: &[f64], bg: &Matrix) -> Vec<f64> {
        let p = x.len();
        let mut subsets: Vec<Vec<usize>> = vec![vec![]];
        for f in 0..p {
            let with_f: Vec<Vec<usize>> = subsets
                .iter()
                .map(|s| {
                    let mut t = s.clone();
                    t.push(f);
                    t
                })
                .collect();
            subsets.extend(with_f);
        }
        let mut phi = vec![0.0; p];
        for (i, phi_i) in phi.iter_mut().enumerate() {
            for s in subsets.iter().filter(|s| !s.contains(&i)) {
                let mut with = s.clone();
                with.push(i);
                let w = oracle_factorial(s.len()) * oracle_factorial(p - s.len() - 1)
                    / oracle_factorial(p);
                *phi_i += w * (oracle_value(m, x, &with, bg) - oracle_value(m, x, s, bg));
            }
        }
        phi
    }

    // ------------------------------------------------------------------
    // Helpers for hand-built models.
    // ------------------------------------------------------------------

    fn wrap(fitted: FittedState, family: Family, p: usize) -> TrainedModel {
        TrainedModel {
            config: ModelConfig::new(family),
            feature_names: (0..p).map(|i| format!("f{i}")).collect(),
            fitted,
        }
    }

    fn linear_model(coefficients: Vec<f64>, intercept: f64) -> TrainedModel {
        let p = coefficients.len();
        wrap(
            FittedState::Linear(LinearModel { coefficients, intercept }),
            Family::Linear,
            p,
        )
    }

    /// Stump: x[feature] <= threshold ? left_val : right_val.
    fn stump(feature: usize, threshold: f64, left_val: f64, right_val: f64) -> FlatTree {
        FlatTree {
            feature: vec![feature as i32, -1, -1],
            threshold: vec![threshold, 0.0, 0.0],
            left: vec![1, -1, -1],
            right: vec![2, -1, -1],
            value: vec![0.0, left_val, right_val],
        }
    }

    /// Depth-2 tree: root on f0, children on f1 and f2.
    fn depth2_tree() -> FlatTree {
        FlatTree {
            feature: vec![0, 1, 2, -1, -1, -1, -1],
            threshold: vec![0.5, -0.2, 0.8, 0.0, 0.0, 0.0, 0.0],
            left: vec![1, 3, 5, -1, -1, -1, -1],
            right: vec![2, 4, 6, -1, -1, -1, -1],
            value: vec![0.0, 0.0, 0.0, 1.0, -2.0, 3.5, 0.25],
        }
    }

    fn random_tree(rng: &mut ChaCha8Rng, p: usize, depth: usize) -> FlatTree {
        fn grow(
            rng: &mut ChaCha8Rng,
            tree: &mut FlatTree,
            depth: usize,
            p: usize,
        ) -> i32 {
            let id = tree.feature.len() as i32;
            if depth == 0 || rng.gen_bool(0.25) {
                tree.feature.push(-1);
                tree.threshold.push(0.0);
                tree.left.push(-1);
                tree.right.push(-1);
                tree.value.push(rng.gen_range(-3.0..3.0));
                return id;
            }
            tree.feature.push(rng.gen_range(0..p) as i32);
            tree.threshold.push(rng.gen_range(-1.0..1.0));
            tree.left.push(-1);
            tree.right.push(-1);
            tree.value.push(0.0);
            let l = grow(rng, tree, depth - 1, p);
            let r = grow(rng, tree, depth - 1, p);
            tree.left[id as usize] = l;
            tree.right[id as usize] = r;
            id
        }
        let mut tree = FlatTree {
            feature: vec![],
            threshold: vec![],
            left: vec![],
            right: vec![],
            value: vec![],
        };
        grow(rng, &mut tree, depth, p);
        tree
    }

    fn random_matrix(rng: &mut ChaCha8Rng, n: usize, p: usize) -> Matrix {
        Matrix::from_rows(
            (0..n).map(|_| (0..p).map(|_| rng.gen_range(-1.5..1.5)).collect()).collect(),
        )
    }

    fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    }

    // ------------------------------------------------------------------
    // value_function contract.
    // ------------------------------------------------------------------

    #[test]
    fn value_function_endpoints() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let m = wrap(FittedState::Cart(depth2_tree()), Family::Cart, 3);
        let bg = Background::from_all(&random_matrix(&mut rng, 6, 3)).unwrap();
        let x = [0.9, -0.5, 0.3];
        let all = value_function(&m, &x, &[0, 1, 2], &bg).unwrap();
        let fx = predict_one(&m, &x).unwrap();
        assert_eq!(all, fx);
        let empty = value_function(&m, &x, &[], &bg).unwrap();
        assert!((empty - bg.base_value(&m).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn value_function_single_feature_model() {
        let m = linear_model(vec![0.0, 1.0, 0.0], 0.0);
        let bg =
            Background::from_all(&Matrix::from_rows(vec![vec![5.0, 7.0, 9.0]])).unwrap();
        let x = [1.0, 2.5, 3.0];
        let v = value_function(&m, &x, &[1], &bg).unwrap();
        assert!((v - 2.5).abs() < 1e-12);
    }

    #[test]
    fn value_function_rejects_bad_inputs() {
        let m = linear_model(vec![1.0, 1.0], 0.0);
        let bg = Background::from_all(&Matrix::from_rows(vec![vec![0.0, 0.0]])).unwrap();
        assert!(matches!(
            value_function(&m, &[1.0], &[], &bg),
            Err(ExplainError::WidthMismatch { expected: 2, got: 1 })
        ));
        assert!(matches!(
            value_function(&m, &[1.0, 2.0], &[5], &bg),
            Err(ExplainError::BadFeature { index: 5, p: 2 })
        ));
    }

    // ------------------------------------------------------------------
    // shap_exact against the oracle and closed forms.
    // ------------------------------------------------------------------

    #[test]
    fn exact_matches_oracle_on_depth2_tree() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let m = wrap(FittedState::Cart(depth2_tree()), Family::Cart, 3);
        let bg_rows = random_matrix(&mut rng, 4, 3);
        let bg = Background::from_all(&bg_rows).unwrap();
        for _ in 0..8 {
            let x: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.5..1.5)).collect();
            let got = shap_exact(&m, &x, &bg).unwrap();
            let want = oracle_shap(&m, &x, &bg_rows);
            assert!(max_abs_diff(&got.phi, &want) < 1e-12);
            assert!(got.efficiency_gap().abs() < 1e-9);
        }
    }

    #[test]
    fn exact_additive_model_closed_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = linear_model(vec![1.0, 1.0, 0.0], 0.5);
        let bg_rows = random_matrix(&mut rng, 10, 3);
        let bg = Background::from_all(&bg_rows).unwrap();
        let x = [0.7, -0.9, 0.4];
        let got = shap_exact(&m, &x, &bg).unwrap();
        for i in 0..2 {
            let mean_i = (0..10).map(|r| bg_rows.get(r, i)).sum::<f64>() / 10.0;
            assert!((got.phi[i] - (x[i] - mean_i)).abs() < 1e-12);
        }
        assert!(got.phi[2].abs() < 1e-12, "zero-coefficient feature gets zero");
    }

    #[test]
    fn exact_rejects_too_many_features() {
        let p = MAX_EXACT_FEATURES + 1;
        let m = linear_model(vec![0.0; p], 0.0);
        let bg = Background::from_all(&Matrix::zeros(1, p).clone()).unwrap();
        assert!(matches!(
            shap_exact(&m, &vec![0.0; p], &bg),
            Err(ExplainError::TooManyFeatures { p: 16, max: 15 })
        ));
    }

    // ------------------------------------------------------------------
    // shap_tree: oracle equivalence, linearity, dummy, ensembles.
    // ------------------------------------------------------------------

    #[test]
    fn tree_matches_oracle_on_depth2_tree() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let m = wrap(FittedState::Cart(depth2_tree()), Family::Cart, 3);
        let bg_rows = random_matrix(&mut rng, 4, 3);
        let bg = Background::from_all(&bg_rows).unwrap();
        for _ in 0..8 {
            let x: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.5..1.5)).collect();
            let got = shap_tree(&m, &x, &bg).unwrap();
            let want = oracle_shap(&m, &x, &bg_rows);
            assert!(max_abs_diff(&got.phi, &want) < 1e-12);
            assert!(got.efficiency_gap().abs() < 1e-9);
        }
    }

    #[test]
    fn tree_matches_exact_on_random_trees() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for case in 0..25 {
            let p = rng.gen_range(2..=6);
            let depth = rng.gen_range(1..=4);
            let tree = random_tree(&mut rng, p, depth);
            let m = wrap(FittedState::Cart(tree), Family::Cart, p);
            let bg = Background::from_all(&random_matrix(&mut rng, 8, p)).unwrap();
            let x: Vec<f64> = (0..p).map(|_| rng.gen_range(-1.5..1.5)).collect();
            let a = shap_tree(&m, &x, &bg).unwrap();
            let b = shap_exact(&m, &x, &bg).unwrap();
            assert!(
                max_abs_diff(&a.phi, &b.phi) < 1e-9,
                "case {case}: tree vs exact diverged by {}",
                max_abs_diff(&a.phi, &b.phi)
            );
        }
    }

    #[test]
    fn tree_stump_dummy_axiom() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let m = wrap(FittedState::Cart(stump(3, 0.1, -1.0, 2.0)), Family::Cart, 5);
        let bg = Background::from_all(&random_matrix(&mut rng, 6, 5)).unwrap();
        let x = [0.5, -0.5, 0.9, 0.4, -0.2];
        let v = shap_tree(&m, &x, &bg).unwrap();
        for (i, phi) in v.phi.iter().enumerate() {
            if i != 3 {
                assert_eq!(*phi, 0.0, "feature {i} is never split on");
            }
        }
        assert!(v.efficiency_gap().abs() < 1e-12);
    }

    #[test]
    fn tree_ensemble_linearity() {
        use crate::models::BoostModel;
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let t1 = random_tree(&mut rng, 4, 3);
        let t2 = random_tree(&mut rng, 4, 3);
        let bg = Background::from_all(&random_matrix(&mut rng, 5, 4)).unwrap();
        let x = [0.3, -0.8, 1.1, 0.0];

        let m1 = wrap(FittedState::Cart(t1.clone()), Family::Cart, 4);
        let m2 = wrap(FittedState::Cart(t2.clone()), Family::Cart, 4);
        let ens = wrap(
            FittedState::GradientBoosting(BoostModel {
                init: 0.0,
                learning_rate: 1.0,
                trees: vec![t1, t2],
            }),
            Family::GradientBoosting,
            4,
        );
        let p1 = shap_tree(&m1, &x, &bg).unwrap();
        let p2 = shap_tree(&m2, &x, &bg).unwrap();
        let pe = shap_tree(&ens, &x, &bg).unwrap();
        let sum: Vec<f64> = p1.phi.iter().zip(&p2.phi).map(|(a, b)| a + b).collect();
        assert!(max_abs_diff(&pe.phi, &sum) < 1e-12);
    }

    #[test]
    fn tree_handles_forest_and_boosting_weights() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let x_train = random_matrix(&mut rng, 40, 4);
        let y: Vec<f64> = (0..40)
            .map(|r| x_train.get(r, 0) * 2.0 - x_train.get(r, 2) + rng.gen_range(-0.05..0.05))
            .collect();
        let bg = Background::from_all(&random_matrix(&mut rng, 6, 4)).unwrap();
        let x = [0.4, 0.1, -0.7, 0.9];
        for family in
            [Family::RandomForest, Family::GradientBoosting, Family::RegularizedBoosting]
        {
            let mut cfg = ModelConfig::new(family);
            cfg.n_estimators = 12;
            cfg.max_depth = Some(3);
            let m = models::fit(&cfg, &x_train, &y).unwrap();
            let got = shap_tree(&m, &x, &bg).unwrap();
            let want = shap_exact(&m, &x, &bg).unwrap();
            assert!(
                max_abs_diff(&got.phi, &want.phi) < 1e-9,
                "{family}: tree vs exact diverged"
            );
            assert!(got.efficiency_gap().abs() < 1e-9, "{family}: efficiency");
        }
    }

    #[test]
    fn tree_rejects_non_tree_models() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let x_train = random_matrix(&mut rng, 25, 3);
        let y: Vec<f64> = (0..25).map(|r| x_train.get(r, 0)).collect();
        let bg = Background::from_all(&random_matrix(&mut rng, 4, 3)).unwrap();
        for family in [Family::Linear, Family::Knn, Family::Svr, Family::AdaboostR2] {
            let mut cfg = ModelConfig::new(family);
            cfg.n_estimators = 5;
            let m = models::fit(&cfg, &x_train, &y).unwrap();
            assert!(
                matches!(shap_tree(&m, &[0.1, 0.2, 0.3], &bg), Err(ExplainError::NotATreeModel(f)) if f == family),
                "{family} should not take the tree path"
            );
        }
    }

    // ------------------------------------------------------------------
    // shap_kernel: exactness under enumeration, closed form, budget.
    // ------------------------------------------------------------------

    #[test]
    fn kernel_matches_exact_under_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for _ in 0..10 {
            let p = rng.gen_range(2..=6);
            let tree = random_tree(&mut rng, p, 3);
            let m = wrap(FittedState::Cart(tree), Family::Cart, p);
            let bg = Background::from_all(&random_matrix(&mut rng, 5, p)).unwrap();
            let x: Vec<f64> = (0..p).map(|_| rng.gen_range(-1.5..1.5)).collect();
            let a = shap_kernel(&m, &x, &bg, &KernelOptions::default()).unwrap();
            let b = shap_exact(&m, &x, &bg).unwrap();
            assert!(max_abs_diff(&a.phi, &b.phi) < 1e-6);
            assert!(a.efficiency_gap().abs() < 1e-9, "efficiency by construction");
        }
    }

    #[test]
    fn kernel_linear_closed_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let beta = vec![2.0, -1.0, 0.5, 0.0];
        let m = linear_model(beta.clone(), 1.0);
        let bg_rows = random_matrix(&mut rng, 8, 4);
        let bg = Background::from_all(&bg_rows).unwrap();
        let x = [0.25, -0.75, 1.2, 0.6];
        let got = shap_kernel(&m, &x, &bg, &KernelOptions::default()).unwrap();
        for i in 0..4 {
            let mean_i = (0..8).map(|r| bg_rows.get(r, i)).sum::<f64>() / 8.0;
            let want = beta[i] * (x[i] - mean_i);
            assert!((got.phi[i] - want).abs() < 1e-9, "feature {i}");
        }
    }

    #[test]
    fn kernel_budget_too_small() {
        let m = linear_model(vec![1.0; 4], 0.0);
        let bg = Background::from_all(&Matrix::zeros(2, 4).clone()).unwrap();
        let opts = KernelOptions { budget: 5, seed: 0 };
        assert!(matches!(
            shap_kernel(&m, &[0.0; 4], &bg, &opts),
            Err(ExplainError::BudgetTooSmall { budget: 5, needed: 6, p: 4 })
        ));
    }

    #[test]
    fn kernel_sampling_path_approximates_closed_form() {
        // 13 features forces the sampled path (enumeration stops at 12).
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let p = 13;
        let beta: Vec<f64> = (0..p).map(|i| (i as f64 - 6.0) / 4.0).collect();
        let m = linear_model(beta.clone(), 0.0);
        let bg_rows = random_matrix(&mut rng, 4, p);
        let bg = Background::from_all(&bg_rows).unwrap();
        let x: Vec<f64> = (0..p).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let opts = KernelOptions { budget: 6000, seed: 99 };
        let got = shap_kernel(&m, &x, &bg, &opts).unwrap();
        assert!(got.efficiency_gap().abs() < 1e-9, "efficiency holds even sampled");
        let mut worst = 0.0f64;
        for i in 0..p {
            let mean_i = (0..4).map(|r| bg_rows.get(r, i)).sum::<f64>() / 4.0;
            worst = worst.max((got.phi[i] - beta[i] * (x[i] - mean_i)).abs());
        }
        assert!(worst < 0.05, "sampled kernel drifted {worst} from closed form");
        // Same seed, same answer.
        let again = shap_kernel(&m, &x, &bg, &opts).unwrap();
        assert_eq!(got.phi, again.phi);
    }

    #[test]
    fn kernel_single_feature() {
        let m = linear_model(vec![3.0], -1.0);
        let bg = Background::from_all(&Matrix::from_rows(vec![vec![2.0]])).unwrap();
        let got = shap_kernel(&m, &[5.0], &bg, &KernelOptions::default()).unwrap();
        assert!((got.phi[0] - 9.0).abs() < 1e-12, "3·(5−2)");
    }

    // ------------------------------------------------------------------
    // Axioms: symmetry across estimators.
    // ------------------------------------------------------------------

    #[test]
    fn symmetry_axiom() {
        // Two trees that are mirror images across features 0 and 1, a
        // background symmetric in those columns, and a query with equal
        // values there: the features are interchangeable, so φ₀ = φ₁.
        let t0 = stump(0, 0.0, -1.0, 1.0);
        let t1 = stump(1, 0.0, -1.0, 1.0);
        use crate::models::BoostModel;
        let m = wrap(
            FittedState::GradientBoosting(BoostModel {
                init: 0.0,
                learning_rate: 1.0,
                trees: vec![t0, t1],
            }),
            Family::GradientBoosting,
            2,
        );
        let bg = Background::from_all(&Matrix::from_rows(vec![
            vec![-0.5, 0.7],
            vec![0.7, -0.5],
            vec![0.2, 0.2],
        ]))
        .unwrap();
        let x = [0.9, 0.9];
        for v in [
            shap_exact(&m, &x, &bg).unwrap(),
            shap_tree(&m, &x, &bg).unwrap(),
            shap_kernel(&m, &x, &bg, &KernelOptions::default()).unwrap(),
        ] {
            assert!(
                (v.phi[0] - v.phi[1]).abs() < 1e-9,
                "interchangeable features must tie: {:?}",
                v.phi
            );
        }
    }

    // ------------------------------------------------------------------
    // Matrix-level API and downstream tables.
    // ------------------------------------------------------------------

    #[test]
    fn shap_matrix_auto_routes_and_is_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let x_train = random_matrix(&mut rng, 30, 3);
        let y: Vec<f64> = (0..30).map(|r| x_train.get(r, 1) * 3.0).collect();
        let queries = random_matrix(&mut rng, 7, 3);
        let bg = Background::sample(&x_train, 5, 42).unwrap();

        let mut cfg = ModelConfig::new(Family::GradientBoosting);
        cfg.n_estimators = 10;
        let m = models::fit(&cfg, &x_train, &y).unwrap();
        let a = shap_matrix(&m, &queries, &bg, ShapMethod::Auto, &KernelOptions::default())
            .unwrap();
        assert_eq!(a.method, ShapMethod::Tree, "tree family takes the tree path");
        assert_eq!(a.conditioning, "interventional");
        assert_eq!(a.phi.n_rows(), 7);
        assert_eq!(a.predictions.len(), 7);
        let b = shap_matrix(&m, &queries, &bg, ShapMethod::Auto, &KernelOptions::default())
            .unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );

        let mut knn_cfg = ModelConfig::new(Family::Knn);
        knn_cfg.k = 3;
        let knn = models::fit(&knn_cfg, &x_train, &y).unwrap();
        let k = shap_matrix(&knn, &queries, &bg, ShapMethod::Auto, &KernelOptions::default())
            .unwrap();
        assert_eq!(k.method, ShapMethod::Kernel, "non-tree family falls back to kernel");
        for r in 0..7 {
            let total: f64 = (0..3).map(|f| k.phi.get(r, f)).sum();
            assert!((k.base_value + total - k.predictions[r]).abs() < 1e-6);
        }
    }

    #[test]
    fn summary_ranks_by_mean_abs_phi() {
        let phi = Matrix::from_rows(vec![vec![0.0, 2.0, 0.0], vec![0.0, -4.0, 0.0]]);
        let x = Matrix::from_rows(vec![vec![1.0, 10.0, 5.0], vec![2.0, 20.0, 6.0]]);
        let names: Vec<String> = ["a", "b", "c"].iter().map(|s| s.to_string()).collect();
        let matrix = ShapMatrix {
            phi,
            base_value: 0.0,
            predictions: vec![2.0, -4.0],
            method: ShapMethod::Exact,
            conditioning: CONDITIONING.to_string(),
        };
        let table = shap_summary(&matrix, &x, &names).unwrap();
        assert_eq!(table.features[0].feature_name, "b");
        assert!((table.features[0].mean_abs_phi - 3.0).abs() < 1e-12);
        assert_eq!(table.features[1].feature_index, 0, "zero tie broken by index");
        assert_eq!(table.features[2].feature_index, 2);
        for f in &table.features {
            assert_eq!(f.points.len(), 2, "one point per query row");
        }
        assert_eq!(table.features[0].points[0], (10.0, 2.0));

        let bad = shap_summary(&matrix, &Matrix::zeros(3, 3), &names);
        assert!(matches!(bad, Err(ExplainError::Misaligned(_))));
    }

    #[test]
    fn dependence_sorts_by_feature_value() {
        let phi = Matrix::from_rows(vec![
            vec![0.1, 1.0],
            vec![0.2, -1.0],
            vec![0.3, 0.5],
        ]);
        let x = Matrix::from_rows(vec![
            vec![5.0, 9.0],
            vec![3.0, 8.0],
            vec![4.0, 7.0],
        ]);
        let names: Vec<String> = ["u", "v"].iter().map(|s| s.to_string()).collect();
        let matrix = ShapMatrix {
            phi,
            base_value: 0.0,
            predictions: vec![1.1, -0.8, 0.8],
            method: ShapMethod::Tree,
            conditioning: CONDITIONING.to_string(),
        };
        let dep = shap_dependence(&matrix, &x, &names, 0, Some(1)).unwrap();
        assert_eq!(dep.points.len(), 3, "one triple per query row");
        let values: Vec<f64> = dep.points.iter().map(|pt| pt.value).collect();
        assert_eq!(values, vec![3.0, 4.0, 5.0]);
        assert_eq!(dep.points[0].interaction_value, Some(8.0));
        assert_eq!(dep.interaction_name.as_deref(), Some("v"));

        assert!(matches!(
            shap_dependence(&matrix, &x, &names, 9, None),
            Err(ExplainError::BadFeature { index: 9, p: 2 })
        ));
    }

    #[test]
    fn local_explanation_orders_by_magnitude() {
        let v = ShapVector {
            phi: vec![0.5, -2.0, 0.0, 1.0],
            base_value: 3.0,
            prediction: 2.5,
        };
        let names: Vec<String> =
            ["a", "b", "c", "d"].iter().map(|s| s.to_string()).collect();
        let x = [9.0, 8.0, 7.0, 6.0];
        let out = local_explanation(&v, &x, &names).unwrap();
        let order: Vec<&str> = out.iter().map(|c| c.feature_name.as_str()).collect();
        assert_eq!(order, vec!["b", "d", "a", "c"]);
        assert_eq!(out[0].phi, -2.0, "sign retained");
        assert_eq!(out[0].feature_value, 8.0);
    }

    #[test]
    fn background_sampling_is_seeded_and_bounded() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let x = random_matrix(&mut rng, 50, 3);
        let a = Background::sample(&x, 10, 7).unwrap();
        let b = Background::sample(&x, 10, 7).unwrap();
        assert_eq!(a.rows, b.rows);
        assert_eq!(a.len(), 10);
        let all = Background::sample(&x, 500, 7).unwrap();
        assert_eq!(all.len(), 50, "oversized request falls back to every row");
        assert!(Background::sample(&x, 0, 7).is_err());
    }
}
