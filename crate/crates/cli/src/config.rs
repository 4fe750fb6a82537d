//! Run configuration: one JSON document describing a full pipeline run.
//!
//! Every field has a default, so a config file only needs the fields it
//! changes; the resolved form (all fields populated) is what gets emitted
//! into `config.json` and the run manifest, making runs self-describing.
//! The configuration hash covers the computation-defining fields only: the
//! output directory is replaced by a fixed placeholder before hashing so
//! the same analysis written to two directories compares equal.

use std::path::{Path, PathBuf};

use anyhow::Context;
use pdm_core::dataset::TargetMode;
use pdm_core::explain::ShapMethod;
use pdm_core::models::{Family, ModelConfig};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Train/test partition parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SplitSpec {
    pub test_fraction: f64,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> SplitSpec {
        SplitSpec { test_fraction: 0.2, seed: 42 }
    }
}

/// Attribution-stage parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ShapSpec {
    pub method: ShapMethod,
    /// Background sample size drawn from the training rows.
    pub background: usize,
    pub background_seed: u64,
    /// How many of the highest-risk rows get explained.
    pub queries: usize,
    pub kernel_budget: usize,
    pub kernel_seed: u64,
}

impl Default for ShapSpec {
    fn default() -> ShapSpec {
        ShapSpec {
            method: ShapMethod::Auto,
            background: 100,
            background_seed: 7,
            queries: 500,
            kernel_budget: 2048,
            kernel_seed: 0,
        }
    }
}

/// Which search strategy the tuning stage runs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchKind {
    Grid,
    Random,
}

impl std::str::FromStr for SearchKind {
    type Err = String;

    fn from_str(s: &str) -> Result<SearchKind, String> {
        match s {
            "grid" => Ok(SearchKind::Grid),
            "random" => Ok(SearchKind::Random),
            other => Err(format!("unknown search kind `{other}` (grid|random)")),
        }
    }
}

impl std::fmt::Display for SearchKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SearchKind::Grid => "grid",
            SearchKind::Random => "random",
        })
    }
}

/// Cross-validated hyperparameter search over one family's default space.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TuningSpec {
    pub family: Family,
    #[serde(default = "default_search")]
    pub search: SearchKind,
    #[serde(default = "default_folds")]
    pub folds: usize,
    #[serde(default = "default_tune_seed")]
    pub seed: u64,
    /// Candidate draws for random search; ignored by grid search.
    #[serde(default = "default_budget")]
    pub budget: usize,
}

fn default_search() -> SearchKind {
    SearchKind::Grid
}

fn default_folds() -> usize {
    5
}

fn default_tune_seed() -> u64 {
    42
}

fn default_budget() -> usize {
    16
}

/// The whole pipeline description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Input CSV path; empty until a dataset is supplied.
    pub dataset: PathBuf,
    pub target: TargetMode,
    pub split: SplitSpec,
    /// Trained roster; defaults to every family at its baseline config.
    pub models: Vec<ModelConfig>,
    /// Optional tuning pass between training and evaluation.
    pub tuning: Option<TuningSpec>,
    pub shap: ShapSpec,
    pub out_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> RunConfig {
        RunConfig {
            dataset: PathBuf::new(),
            target: TargetMode::Severity,
            split: SplitSpec::default(),
            models: default_roster(),
            tuning: None,
            shap: ShapSpec::default(),
            out_dir: PathBuf::from("out"),
        }
    }
}

/// Baseline configuration for every family, in roster order.
pub fn default_roster() -> Vec<ModelConfig> {
    Family::ALL.iter().map(|&f| ModelConfig::new(f)).collect()
}

impl RunConfig {
    /// Read a config file, filling unset fields with defaults.
    pub fn load(path: &Path) -> anyhow::Result<RunConfig> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config file {}", path.display()))?;
        let config: RunConfig = serde_json::from_str(&text)
            .with_context(|| format!("parsing config file {}", path.display()))?;
        Ok(config)
    }

    /// SHA-256 over the resolved config with the output directory masked.
    pub fn hash(&self) -> String {
        let mut masked = self.clone();
        masked.out_dir = PathBuf::new();
        let bytes = serde_json::to_vec(&masked).expect("config serializes");
        let digest = Sha256::digest(&bytes);
        let mut hex = String::with_capacity(64);
        for byte in digest {
            hex.push_str(&format!("{byte:02x}"));
        }
        hex
    }

}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_round_trips() {
        let config = RunConfig::default();
        let text = serde_json::to_string_pretty(&config).unwrap();
        let back: RunConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(config, back);
    }

    #[test]
    fn hash_ignores_out_dir_but_not_dataset() {
        let mut a = RunConfig::default();
        let mut b = RunConfig::default();
        b.out_dir = PathBuf::from("elsewhere");
        assert_eq!(a.hash(), b.hash());
        a.dataset = PathBuf::from("other.csv");
        assert_ne!(a.hash(), b.hash());
    }

    #[test]
    fn partial_config_fills_defaults() {
        let config: RunConfig =
            serde_json::from_str(r#"{"dataset": "data.csv", "split": {"seed": 7}}"#).unwrap();
        assert_eq!(config.dataset, PathBuf::from("data.csv"));
        assert_eq!(config.split.seed, 7);
        assert_eq!(config.split.test_fraction, 0.2);
        assert_eq!(config.models.len(), 8);
        assert_eq!(config.shap.background, 100);
        assert!(config.tuning.is_none());
    }

    #[test]
    fn roster_covers_every_family_once() {
        let roster = default_roster();
        assert_eq!(roster.len(), Family::ALL.len());
        for family in Family::ALL {
            assert_eq!(roster.iter().filter(|m| m.family == family).count(), 1);
        }
    }
}
