//! Artifact plumbing: output-directory resolution, deterministic JSON/CSV
//! writers, and the run manifest.
//!
//! Numeric artifacts (JSON and CSV) are byte-stable: serde_json formats
//! floats as their shortest round-trip decimal, CSV cells use the same
//! `Display` form, struct fields serialize in declaration order, and no
//! hash-ordered container is ever serialized. Reruns with the same config
//! therefore reproduce these files byte for byte; only wall-clock fields in
//! the manifest differ between runs.

use std::fmt::Display;
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::RunConfig;

/// Environment variable that overrides the default output directory.
pub const OUT_DIR_ENV: &str = "PDM_OUT_DIR";

#[derive(Debug, Error)]
pub enum ArtifactError {
    /// A stage needs an artifact an earlier stage did not produce.
    #[error("missing artifact `{path}`: run `pdm {stage}` first")]
    Missing { path: String, stage: &'static str },
}

/// Resolved output directory. Precedence: explicit flag, then the
/// `PDM_OUT_DIR` environment variable, then the config file, then `out`.
#[derive(Clone, Debug)]
pub struct OutDir {
    root: PathBuf,
}

impl OutDir {
    pub fn resolve(flag: Option<&Path>, config: Option<&Path>) -> anyhow::Result<OutDir> {
        let root = flag
            .map(Path::to_path_buf)
            .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
            .or_else(|| config.map(Path::to_path_buf))
            .unwrap_or_else(|| PathBuf::from("out"));
        std::fs::create_dir_all(&root)
            .with_context(|| format!("creating output directory {}", root.display()))?;
        Ok(OutDir { root })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    /// Write pretty JSON plus a trailing newline.
    pub fn write_json<T: Serialize>(&self, name: &str, value: &T) -> anyhow::Result<String> {
        let mut text = serde_json::to_string_pretty(value)
            .with_context(|| format!("serializing {name}"))?;
        text.push('\n');
        self.write_text(name, &text)
    }

    pub fn write_text(&self, name: &str, text: &str) -> anyhow::Result<String> {
        let path = self.path(name);
        std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        Ok(name.to_string())
    }

    /// Read a JSON artifact, failing with a pointer at the producing stage.
    pub fn read_json<T: DeserializeOwned>(
        &self,
        name: &str,
        producer: &'static str,
    ) -> anyhow::Result<T> {
        let path = self.path(name);
        if !path.exists() {
            return Err(ArtifactError::Missing { path: name.to_string(), stage: producer }.into());
        }
        let text = std::fs::read_to_string(&path)
            .with_context(|| format!("reading {}", path.display()))?;
        let value = serde_json::from_str(&text)
            .with_context(|| format!("parsing {}", path.display()))?;
        Ok(value)
    }

    pub fn read_text(&self, name: &str, producer: &'static str) -> anyhow::Result<String> {
        let path = self.path(name);
        if !path.exists() {
            return Err(ArtifactError::Missing { path: name.to_string(), stage: producer }.into());
        }
        std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))
    }
}

/// Build a CSV body from a header and rows of `Display` cells.
pub fn csv_body<R, C>(header: &[&str], rows: R) -> String
where
    R: IntoIterator<Item = Vec<C>>,
    C: Display,
{
    let mut out = String::new();
    out.push_str(&header.join(","));
    out.push('\n');
    for row in rows {
        let mut first = true;
        for cell in row {
            if !first {
                out.push(',');
            }
            out.push_str(&cell.to_string());
            first = false;
        }
        out.push('\n');
    }
    out
}

/// One pipeline stage's outcome inside the manifest.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StageRecord {
    pub stage: String,
    pub status: String,
    /// Present only when the stage failed; artifacts written before the
    /// failure stay on disk and stay listed.
    pub error: Option<String>,
    pub wall_ms: u64,
    /// Paths relative to the output directory.
    pub artifacts: Vec<String>,
}

/// Everything needed to audit a run: tool version, the resolved config and
/// its hash, and per-stage artifact lists with timings.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub config_hash: String,
    pub status: String,
    pub config: RunConfig,
    pub stages: Vec<StageRecord>,
}

impl RunManifest {
    pub fn new(config: &RunConfig) -> RunManifest {
        RunManifest {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            config_hash: config.hash(),
            status: "ok".to_string(),
            config: config.clone(),
            stages: Vec::new(),
        }
    }
}
