//! Pearson correlation analysis over dataset columns.
//!
//! Columns are addressed by their schema names: the six encoded features,
//! `Machine failure`, and the five fault flags. Binary 0/1 columns go through
//! the same formula (point-biserial correlation is Pearson on 0/1 codes).

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{Dataset, FLAG_NAMES};
use crate::matrix::Matrix;
use crate::parallel;

#[derive(Debug, Error)]
pub enum StatsError {
    #[error("unknown column `{0}`")]
    UnknownColumn(String),
    #[error("need at least 2 rows, got {0}")]
    TooFewRows(usize),
}

/// Symmetric Pearson correlation matrix with axis names attached.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CorrMatrix {
    pub names: Vec<String>,
    pub r: Matrix,
    /// Columns with zero spread; their off-diagonal entries are defined as 0.
    pub constant_columns: Vec<String>,
}

impl CorrMatrix {
    pub fn get(&self, a: &str, b: &str) -> Option<f64> {
        let i = self.names.iter().position(|n| n == a)?;
        let j = self.names.iter().position(|n| n == b)?;
        Some(self.r.get(i, j))
    }
}

/// The default analysis subset: the five numeric sensor features plus all
/// six labels. The encoded `Type` column can still be requested by name.
pub fn default_corr_columns() -> Vec<String> {
    let mut cols: Vec<String> = vec![
        "Air temperature [K]".into(),
        "Process temperature [K]".into(),
        "Rotational speed [rpm]".into(),
        "Torque [Nm]".into(),
        "Tool wear [min]".into(),
        "Machine failure".into(),
    ];
    cols.extend(FLAG_NAMES.iter().map(|s| s.to_string()));
    cols
}

/// Resolve a column name to its values.
pub fn column_vector(d: &Dataset, name: &str) -> Result<Vec<f64>, StatsError> {
    if let Some(idx) = d.feature_names.iter().position(|n| n == name) {
        return Ok(d.features.column(idx));
    }
    if name == "Machine failure" {
        return Ok(d.machine_failure.iter().map(|&v| f64::from(v)).collect());
    }
    if let Some(idx) = FLAG_NAMES.iter().position(|&n| n == name) {
        return Ok(d.flags.iter().map(|f| f64::from(f[idx])).collect());
    }
    Err(StatsError::UnknownColumn(name.to_string()))
}

/// Pairwise Pearson r over the named columns.
///
/// Sample (n-1) convention throughout; the factor cancels in the ratio but
/// the intermediate statistics use it. Entries are clamped to [-1, 1] to
/// absorb last-bit float spill, the diagonal is exactly 1, and any constant
/// column correlates 0 with everything else and is reported by name.
pub fn pearson_matrix(d: &Dataset, columns: &[String]) -> Result<CorrMatrix, StatsError> {
    let n = d.n_rows();
    if n < 2 {
        return Err(StatsError::TooFewRows(n));
    }
    let m = columns.len();
    let mut centered: Vec<Vec<f64>> = Vec::with_capacity(m);
    let mut sds: Vec<f64> = Vec::with_capacity(m);
    for name in columns {
        let mut v = column_vector(d, name)?;
        let mean = v.iter().sum::<f64>() / n as f64;
        for x in &mut v {
            *x -= mean;
        }
        let ss: f64 = v.iter().map(|x| x * x).sum();
        sds.push((ss / (n as f64 - 1.0)).sqrt());
        centered.push(v);
    }

    let constant_columns: Vec<String> = columns
        .iter()
        .zip(&sds)
        .filter(|(_, &sd)| sd == 0.0)
        .map(|(name, _)| name.clone())
        .collect();

    // Upper-triangle pairs (i <= j), each independent of the rest.
    let pairs: Vec<(usize, usize)> =
        (0..m).flat_map(|i| (i..m).map(move |j| (i, j))).collect();
    let values = parallel::map_slice(&pairs, |&(i, j)| {
        if i == j {
            return 1.0;
        }
        if sds[i] == 0.0 || sds[j] == 0.0 {
            return 0.0;
        }
        let cov: f64 = centered[i]
            .iter()
            .zip(&centered[j])
            .map(|(a, b)| a * b)
            .sum::<f64>()
            / (n as f64 - 1.0);
        (cov / (sds[i] * sds[j])).clamp(-1.0, 1.0)
    });

    let mut r = Matrix::zeros(m, m);
    for (&(i, j), &v) in pairs.iter().zip(&values) {
        r.set(i, j, v);
        r.set(j, i, v);
    }
    Ok(CorrMatrix { names: columns.to_vec(), r, constant_columns })
}

/// Pearson r of two equal-length slices (same conventions as the matrix).
pub fn pearson(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len(), "length mismatch");
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut vx = 0.0;
    let mut vy = 0.0;
    for (&a, &b) in x.iter().zip(y) {
        cov += (a - mx) * (b - my);
        vx += (a - mx) * (a - mx);
        vy += (b - my) * (b - my);
    }
    if vx == 0.0 || vy == 0.0 {
        return 0.0;
    }
    (cov / (vx.sqrt() * vy.sqrt())).clamp(-1.0, 1.0)
}
