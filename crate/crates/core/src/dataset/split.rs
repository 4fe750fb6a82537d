//! Seeded train/test splitting and k-fold planning.
//!
//! All randomness flows through a counter-based RNG seeded explicitly, so a
//! `(n, fraction, seed)` or `(n, k, seed)` triple always reproduces the same
//! partition. Index lists are returned sorted ascending; the shuffle decides
//! membership, not ordering.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::DatasetError;

/// Split `0..n` into disjoint (train, test) index sets.
///
/// The test set holds `round(n * test_fraction)` rows. Fractions outside the
/// open interval (0, 1) are rejected.
pub fn train_test_split(
    n: usize,
    test_fraction: f64,
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>), DatasetError> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(DatasetError::BadFraction(test_fraction));
    }
    if n == 0 {
        return Err(DatasetError::EmptyIndexSet);
    }
    let n_test = (n as f64 * test_fraction).round() as usize;
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);

    let mut test: Vec<usize> = order[..n_test].to_vec();
    let mut train: Vec<usize> = order[n_test..].to_vec();
    test.sort_unstable();
    train.sort_unstable();
    Ok((train, test))
}

/// A reproducible k-fold assignment of rows to folds.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FoldPlan {
    pub k: usize,
    pub seed: u64,
    pub stratified: bool,
    /// `assignment[row]` is the fold that holds `row` as validation data.
    pub assignment: Vec<u32>,
}

impl FoldPlan {
    /// Validation rows of fold `fold`, ascending.
    pub fn validation_rows(&self, fold: usize) -> Vec<usize> {
        self.assignment
            .iter()
            .enumerate()
            .filter(|(_, &a)| a as usize == fold)
            .map(|(i, _)| i)
            .collect()
    }

    /// Training rows of fold `fold` (everything else), ascending.
    pub fn training_rows(&self, fold: usize) -> Vec<usize> {
        self.assignment
            .iter()
            .enumerate()
            .filter(|(_, &a)| a as usize != fold)
            .map(|(i, _)| i)
            .collect()
    }

    /// Validation-set sizes per fold.
    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0usize; self.k];
        for &a in &self.assignment {
            sizes[a as usize] += 1;
        }
        sizes
    }
}

/// Plan `k` folds over `0..n`, optionally stratifying on a label column.
///
/// Fold sizes differ by at most one. With `stratify_on`, each distinct label
/// value is dealt round-robin across folds, so per-fold counts of each class
/// also differ by at most one.
pub fn kfold(
    n: usize,
    k: usize,
    seed: u64,
    stratify_on: Option<&[u8]>,
) -> Result<FoldPlan, DatasetError> {
    if k < 2 || k > n {
        return Err(DatasetError::BadK { k, n });
    }
    if let Some(labels) = stratify_on {
        assert_eq!(labels.len(), n, "stratification labels must cover every row");
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignment = vec![0u32; n];

    match stratify_on {
        None => {
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(&mut rng);
            for (pos, &row) in order.iter().enumerate() {
                assignment[row] = (pos % k) as u32;
            }
        }
        Some(labels) => {
            // Group rows by label value; shuffle within each group; deal the
            // groups in sequence with one fold cursor so overall sizes stay
            // within one of each other as well.
            let mut values: Vec<u8> = labels.to_vec();
            values.sort_unstable();
            values.dedup();
            let mut cursor = 0usize;
            for value in values {
                let mut group: Vec<usize> =
                    (0..n).filter(|&row| labels[row] == value).collect();
                group.shuffle(&mut rng);
                for row in group {
                    assignment[row] = (cursor % k) as u32;
                    cursor += 1;
                }
            }
        }
    }

    Ok(FoldPlan { k, seed, stratified: stratify_on.is_some(), assignment })
}
