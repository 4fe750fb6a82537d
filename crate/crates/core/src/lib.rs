//! Predictive-maintenance toolkit for milling-machine condition data.
//!
//! The crate covers the whole tabular workflow: ingesting AI4I-format CSV
//! files, encoding and standardizing features, training eight regression
//! learners behind one fit/predict surface, scoring them with the usual
//! regression and per-label classification metrics, tuning hyperparameters
//! with k-fold cross-validation, and attributing predictions to features
//! with Shapley values (exact enumeration, a tree-ensemble path
//! decomposition, and a kernel-weighted least-squares approximation).
//!
//! Everything is deterministic under a fixed seed: parallel work is split
//! into independently seeded units and reduced in a fixed order, so results
//! do not depend on the worker count. The `parallel` feature (on by
//! default) runs those units on rayon; without it the same code runs
//! sequentially.

pub mod dataset;
pub mod explain;
mod linalg;
pub mod matrix;
pub mod metrics;
pub mod models;
pub mod parallel;
pub mod stats;
pub mod synth;
pub mod tuning;

pub use matrix::Matrix;
