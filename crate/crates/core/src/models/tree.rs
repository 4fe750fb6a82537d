//! Shared regression-tree builder used by CART, the random forest, and both
//! boosting variants.
//!
//! The builder works on a second-order objective: per-row gradients `g` and
//! hessians `h`, an L2 leaf penalty `lambda`, and a split penalty `gamma`.
//! Leaf values are `-G / (H + lambda)` over the rows in the leaf, and split
//! quality is
//!
//! ```text
//! gain = 1/2 * [ G_L^2/(H_L+l) + G_R^2/(H_R+l) - G^2/(H+l) ] - gamma
//! ```
//!
//! Plain CART and squared-loss gradient boosting are the special case
//! `g = -target, h = 1, lambda = 0, gamma = 0`, where the leaf value reduces
//! to the mean target and the gain ranks splits exactly like variance
//! reduction. With `gamma = 0` an impure node accepts the best split even at
//! zero gain (an XOR-style checkerboard needs the first, zero-gain cut);
//! with `gamma > 0` only strictly positive penalized gain splits.
//!
//! Candidate thresholds sit at midpoints of consecutive distinct sorted
//! values. Ties in gain resolve to the lowest feature index, then the lowest
//! threshold, making trees fully deterministic. A row goes left when
//! `x[feature] <= threshold`.

use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::matrix::Matrix;

/// Tree growth controls.
#[derive(Clone, Debug)]
pub struct TreeParams {
    /// `None` grows until purity or exhaustion; `Some(0)` is a single leaf.
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    /// L2 penalty on leaf values.
    pub lambda: f64,
    /// Minimum penalized gain; 0 enables zero-gain splits on impure nodes.
    pub gamma: f64,
    /// Features drawn per split (`None` = all available).
    pub mtry: Option<usize>,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams { max_depth: None, min_samples_leaf: 1, lambda: 0.0, gamma: 0.0, mtry: None }
    }
}

/// A regression tree flattened into parallel arrays; node 0 is the root.
///
/// `feature[i] >= 0` marks an internal node with children `left[i]` and
/// `right[i]`; `feature[i] == -1` marks a leaf whose prediction is
/// `value[i]`. Internal nodes also carry `value` (their would-be leaf
/// weight), which downstream explainers may use.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlatTree {
    pub feature: Vec<i32>,
    pub threshold: Vec<f64>,
    pub left: Vec<i32>,
    pub right: Vec<i32>,
    pub value: Vec<f64>,
}

impl FlatTree {
    pub fn n_nodes(&self) -> usize {
        self.feature.len()
    }

    pub fn is_leaf(&self, node: usize) -> bool {
        self.feature[node] < 0
    }

    /// Depth of the deepest leaf (root-only tree has depth 0).
    pub fn depth(&self) -> usize {
        fn walk(t: &FlatTree, node: usize) -> usize {
            if t.is_leaf(node) {
                0
            } else {
                1 + walk(t, t.left[node] as usize).max(walk(t, t.right[node] as usize))
            }
        }
        walk(self, 0)
    }

    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let mut node = 0usize;
        while !self.is_leaf(node) {
            let f = self.feature[node] as usize;
            node = if row[f] <= self.threshold[node] {
                self.left[node] as usize
            } else {
                self.right[node] as usize
            };
        }
        self.value[node]
    }

    pub fn predict(&self, x: &Matrix) -> Vec<f64> {
        (0..x.n_rows()).map(|r| self.predict_row(x.row(r))).collect()
    }

    /// Structural sanity: child links in range, thresholds/values finite.
    pub fn check(&self, n_features: usize) -> bool {
        let n = self.n_nodes();
        (0..n).all(|i| {
            if self.is_leaf(i) {
                self.value[i].is_finite()
            } else {
                (self.feature[i] as usize) < n_features
                    && self.threshold[i].is_finite()
                    && (self.left[i] as usize) < n
                    && (self.right[i] as usize) < n
            }
        })
    }
}

struct Builder<'a> {
    x: &'a Matrix,
    g: &'a [f64],
    h: &'a [f64],
    cols: &'a [usize],
    params: &'a TreeParams,
    rng: &'a mut ChaCha8Rng,
    tree: FlatTree,
}

/// Grow a tree on `rows`, splitting only on `cols`.
///
/// `rows` index into `x`/`g`/`h` and may repeat (bootstrap). The RNG is only
/// consumed when `mtry` actually subsamples features, so parameter sets that
/// do not subsample are bit-identical regardless of seed.
pub fn build(
    x: &Matrix,
    g: &[f64],
    h: &[f64],
    rows: &[usize],
    cols: &[usize],
    params: &TreeParams,
    rng: &mut ChaCha8Rng,
) -> FlatTree {
    assert_eq!(x.n_rows(), g.len());
    assert_eq!(g.len(), h.len());
    assert!(!rows.is_empty(), "cannot grow a tree on zero rows");
    assert!(!cols.is_empty(), "cannot grow a tree on zero features");

    let mut b = Builder {
        x,
        g,
        h,
        cols,
        params,
        rng,
        tree: FlatTree {
            feature: Vec::new(),
            threshold: Vec::new(),
            left: Vec::new(),
            right: Vec::new(),
            value: Vec::new(),
        },
    };
    let mut rows = rows.to_vec();
    b.grow(&mut rows, 0);
    b.tree
}

/// Best split found for a node.
struct Split {
    feature: usize,
    threshold: f64,
    gain: f64,
}

impl Builder<'_> {
    fn leaf_value(&self, rows: &[usize]) -> f64 {
        let g: f64 = rows.iter().map(|&r| self.g[r]).sum();
        let h: f64 = rows.iter().map(|&r| self.h[r]).sum();
        -g / (h + self.params.lambda)
    }

    fn node_score(&self, g: f64, h: f64) -> f64 {
        g * g / (h + self.params.lambda)
    }

    /// A node is pure when every row implies the same leaf value.
    fn is_pure(&self, rows: &[usize]) -> bool {
        let first = self.g[rows[0]] / self.h[rows[0]];
        rows.iter().all(|&r| (self.g[r] / self.h[r] - first).abs() < 1e-15)
    }

    fn candidate_cols(&mut self) -> Vec<usize> {
        match self.params.mtry {
            Some(m) if m < self.cols.len() => {
                let mut picked: Vec<usize> =
                    self.cols.choose_multiple(self.rng, m).copied().collect();
                picked.sort_unstable();
                picked
            }
            _ => self.cols.to_vec(),
        }
    }

    fn best_split(&mut self, rows: &[usize]) -> Option<Split> {
        let msl = self.params.min_samples_leaf;
        let g_total: f64 = rows.iter().map(|&r| self.g[r]).sum();
        let h_total: f64 = rows.iter().map(|&r| self.h[r]).sum();
        let parent = self.node_score(g_total, h_total);

        let mut best: Option<Split> = None;
        for f in self.candidate_cols() {
            // Sort the node's rows by this feature; scan split points.
            let mut order: Vec<usize> = rows.to_vec();
            order.sort_by(|&a, &b| self.x.get(a, f).total_cmp(&self.x.get(b, f)));

            let mut gl = 0.0;
            let mut hl = 0.0;
            for i in 0..order.len() - 1 {
                let r = order[i];
                gl += self.g[r];
                hl += self.h[r];
                let v = self.x.get(r, f);
                let v_next = self.x.get(order[i + 1], f);
                if v == v_next {
                    continue; // not a boundary between distinct values
                }
                let n_left = i + 1;
                let n_right = order.len() - n_left;
                if n_left < msl || n_right < msl {
                    continue;
                }
                let threshold = v + (v_next - v) / 2.0;
                let gain = 0.5
                    * (self.node_score(gl, hl)
                        + self.node_score(g_total - gl, h_total - hl)
                        - parent)
                    - self.params.gamma;
                // Strict improvement keeps the first-seen candidate on ties:
                // lowest feature index, then lowest threshold.
                if best.as_ref().map_or(true, |b| gain > b.gain) {
                    best = Some(Split { feature: f, threshold, gain });
                }
            }
        }
        best
    }

    fn push_leaf(&mut self, value: f64) -> usize {
        self.tree.feature.push(-1);
        self.tree.threshold.push(0.0);
        self.tree.left.push(-1);
        self.tree.right.push(-1);
        self.tree.value.push(value);
        self.tree.n_nodes() - 1
    }

    fn grow(&mut self, rows: &mut Vec<usize>, depth: usize) -> usize {
        let value = self.leaf_value(rows);
        let depth_ok = self.params.max_depth.map_or(true, |d| depth < d);
        if !depth_ok || rows.len() < 2 * self.params.min_samples_leaf || self.is_pure(rows) {
            return self.push_leaf(value);
        }
        let split = match self.best_split(rows) {
            Some(s) => s,
            None => return self.push_leaf(value),
        };
        let acceptable = if self.params.gamma == 0.0 { split.gain >= 0.0 } else { split.gain > 0.0 };
        if !acceptable {
            return self.push_leaf(value);
        }

        let node = self.push_leaf(value); // reserve slot, then patch
        self.tree.feature[node] = split.feature as i32;
        self.tree.threshold[node] = split.threshold;

        let (mut left_rows, mut right_rows): (Vec<usize>, Vec<usize>) =
            rows.iter().partition(|&&r| self.x.get(r, split.feature) <= split.threshold);
        rows.clear();
        rows.shrink_to_fit();

        let l = self.grow(&mut left_rows, depth + 1);
        let r = self.grow(&mut right_rows, depth + 1);
        self.tree.left[node] = l as i32;
        self.tree.right[node] = r as i32;
        node
    }
}
