//! Regression metrics, per-label classification metrics, and model ranking.
//!
//! Variance is computed with the population convention (divide by `n`)
//! everywhere, which makes `R^2 = 1 - MSE / Var(y)` an exact identity rather
//! than an approximation. Zero-denominator cases in the classification
//! metrics resolve to 0 and are flagged instead of producing NaN.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matrix::Matrix;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("need at least 2 samples, got {0}")]
    TooFewSamples(usize),
    #[error("target variance is zero; R^2 and EVS are undefined")]
    ZeroVariance,
    #[error("shape mismatch: {0}x{1} vs {2}x{3}")]
    ShapeMismatch(usize, usize, usize, usize),
    #[error("non-binary value {value} at row {row}, label {label}")]
    NonBinaryValue { row: usize, label: usize, value: f64 },
    #[error("no reports to rank")]
    Empty,
}

/// The six regression metrics, plus identifiers for reporting.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub model: String,
    pub split: String,
    pub mse: f64,
    pub mae: f64,
    pub rmse: f64,
    pub r2: f64,
    pub evs: f64,
    pub max_error: f64,
}

impl EvalReport {
    /// Metric values in reporting column order.
    pub fn values(&self) -> [f64; 6] {
        [self.mse, self.mae, self.rmse, self.r2, self.evs, self.max_error]
    }

    /// Reporting column names, aligned with [`Self::values`].
    pub fn metric_names() -> [&'static str; 6] {
        ["MSE", "MAE", "RMSE", "R2", "EVS", "MaxError"]
    }
}

/// Population variance: mean squared deviation from the mean.
pub fn population_variance(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n
}

/// Compute the six regression metrics of a prediction vector.
pub fn regression_metrics(
    model: &str,
    split: &str,
    y_true: &[f64],
    y_pred: &[f64],
) -> Result<EvalReport, MetricsError> {
    if y_true.len() != y_pred.len() {
        return Err(MetricsError::LengthMismatch(y_true.len(), y_pred.len()));
    }
    let n = y_true.len();
    if n < 2 {
        return Err(MetricsError::TooFewSamples(n));
    }
    let var = population_variance(y_true);
    if var == 0.0 {
        return Err(MetricsError::ZeroVariance);
    }

    let residuals: Vec<f64> = y_true.iter().zip(y_pred).map(|(t, p)| t - p).collect();
    let mse = residuals.iter().map(|r| r * r).sum::<f64>() / n as f64;
    let mae = residuals.iter().map(|r| r.abs()).sum::<f64>() / n as f64;
    let max_error = residuals.iter().fold(0.0f64, |m, r| m.max(r.abs()));
    let r2 = 1.0 - mse / var;
    let evs = 1.0 - population_variance(&residuals) / var;

    Ok(EvalReport {
        model: model.to_string(),
        split: split.to_string(),
        mse,
        mae,
        rmse: mse.sqrt(),
        r2,
        evs,
        max_error,
    })
}

/// One label's classification tallies and derived scores.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabelReport {
    pub label: String,
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub tn: usize,
    /// Number of true positives in the data.
    pub support: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// True when any score was forced to 0 by an empty denominator.
    pub degenerate: bool,
}

/// Per-label precision/recall/F1 over 0/1 matrices of shape `n x labels`.
pub fn classification_metrics(
    label_names: &[String],
    y_true: &Matrix,
    y_pred: &Matrix,
) -> Result<Vec<LabelReport>, MetricsError> {
    if y_true.n_rows() != y_pred.n_rows() || y_true.n_cols() != y_pred.n_cols() {
        return Err(MetricsError::ShapeMismatch(
            y_true.n_rows(),
            y_true.n_cols(),
            y_pred.n_rows(),
            y_pred.n_cols(),
        ));
    }
    assert_eq!(label_names.len(), y_true.n_cols(), "one name per label column");

    let check = |m: &Matrix| -> Result<(), MetricsError> {
        for r in 0..m.n_rows() {
            for c in 0..m.n_cols() {
                let v = m.get(r, c);
                if v != 0.0 && v != 1.0 {
                    return Err(MetricsError::NonBinaryValue { row: r, label: c, value: v });
                }
            }
        }
        Ok(())
    };
    check(y_true)?;
    check(y_pred)?;

    let mut reports = Vec::with_capacity(label_names.len());
    for (c, name) in label_names.iter().enumerate() {
        let (mut tp, mut fp, mut fn_, mut tn) = (0usize, 0usize, 0usize, 0usize);
        for r in 0..y_true.n_rows() {
            match (y_true.get(r, c) == 1.0, y_pred.get(r, c) == 1.0) {
                (true, true) => tp += 1,
                (false, true) => fp += 1,
                (true, false) => fn_ += 1,
                (false, false) => tn += 1,
            }
        }
        let mut degenerate = false;
        let mut ratio = |num: usize, den: usize| -> f64 {
            if den == 0 {
                degenerate = true;
                0.0
            } else {
                num as f64 / den as f64
            }
        };
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        let f1 = if precision + recall == 0.0 {
            degenerate = true;
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        reports.push(LabelReport {
            label: name.clone(),
            tp,
            fp,
            fn_,
            tn,
            support: tp + fn_,
            precision,
            recall,
            f1,
            degenerate,
        });
    }
    Ok(reports)
}

/// Order reports ascending by RMSE; ties fall back to MAE, then model name.
pub fn rank_models(reports: &[EvalReport]) -> Result<Vec<EvalReport>, MetricsError> {
    if reports.is_empty() {
        return Err(MetricsError::Empty);
    }
    let mut ranked = reports.to_vec();
    ranked.sort_by(|a, b| {
        a.rmse
            .total_cmp(&b.rmse)
            .then(a.mae.total_cmp(&b.mae))
            .then(a.model.cmp(&b.model))
    });
    Ok(ranked)
}
