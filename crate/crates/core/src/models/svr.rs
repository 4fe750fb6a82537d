//! Epsilon-insensitive support vector regression trained by sequential
//! minimal optimization.
//!
//! The dual QP is posed over 2n box variables `beta = [alpha; alpha*]` with
//! the single equality constraint `sum(alpha) = sum(alpha*)`. Each step
//! picks the maximal violating pair, solves the two-variable subproblem
//! analytically, clips to the box, and updates the gradient incrementally
//! from two kernel rows (served by a bounded row cache). Optimization stops
//! when the KKT violation gap drops to `tol`, or at the iteration cap — in
//! which case the best-so-far solution is returned with `converged = false`
//! rather than an error.

use std::collections::{HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::matrix::Matrix;
use crate::parallel;

/// Kernel-cache memory budget in bytes (rows of `n` f64s each).
const CACHE_BUDGET: usize = 32 << 20;

#[derive(Clone, Debug)]
pub struct SvrParams {
    /// Box constraint on each dual coefficient.
    pub c: f64,
    /// Half-width of the insensitive tube.
    pub epsilon: f64,
    /// RBF width; `None` = 1 / n_features.
    pub gamma: Option<f64>,
    /// KKT gap at which optimization stops.
    pub tol: f64,
    /// Hard cap on SMO pair updates.
    pub max_iter: usize,
}

impl Default for SvrParams {
    fn default() -> Self {
        SvrParams { c: 1.0, epsilon: 0.1, gamma: None, tol: 1e-3, max_iter: 200_000 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SvrModel {
    /// Training rows with a non-zero dual coefficient.
    pub support_x: Matrix,
    /// `alpha_i - alpha*_i` per support row.
    pub dual_coefs: Vec<f64>,
    pub bias: f64,
    pub gamma: f64,
    pub epsilon: f64,
    pub c: f64,
    /// False when the iteration cap cut optimization short.
    pub converged: bool,
    pub iterations: usize,
}

fn rbf(gamma: f64, a: &[f64], b: &[f64]) -> f64 {
    let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    (-gamma * d2).exp()
}

/// FIFO-evicting cache of kernel rows `K[r][.]`.
struct KernelCache<'a> {
    x: &'a Matrix,
    gamma: f64,
    capacity: usize,
    rows: HashMap<usize, Vec<f64>>,
    order: VecDeque<usize>,
}

impl<'a> KernelCache<'a> {
    fn new(x: &'a Matrix, gamma: f64) -> Self {
        let n = x.n_rows().max(1);
        let capacity = (CACHE_BUDGET / (8 * n)).clamp(2, n);
        KernelCache { x, gamma, capacity, rows: HashMap::new(), order: VecDeque::new() }
    }

    /// Make sure `r` is resident without evicting `pin`.
    fn ensure(&mut self, r: usize, pin: usize) {
        if self.rows.contains_key(&r) {
            return;
        }
        while self.rows.len() >= self.capacity {
            match self.order.iter().position(|&o| o != pin && o != r) {
                Some(idx) => {
                    let evict = self.order.remove(idx).unwrap();
                    self.rows.remove(&evict);
                }
                None => break,
            }
        }
        let n = self.x.n_rows();
        let a = self.x.row(r);
        let row: Vec<f64> = (0..n).map(|s| rbf(self.gamma, a, self.x.row(s))).collect();
        self.rows.insert(r, row);
        self.order.push_back(r);
    }

    fn get(&self, r: usize) -> &[f64] {
        &self.rows[&r]
    }
}

impl SvrModel {
    pub fn fit(params: &SvrParams, x: &Matrix, y: &[f64]) -> SvrModel {
        let n = x.n_rows();
        assert_eq!(n, y.len());
        assert!(n > 0);
        let p = x.n_cols();
        let gamma = params.gamma.unwrap_or(1.0 / p.max(1) as f64);
        let c = params.c;
        let eps = params.epsilon;

        // beta[t]: alpha_t for t < n, alpha*_{t-n} for t >= n.
        // sign[t]: +1 for the alpha block, -1 for the alpha* block.
        let sign = |t: usize| -> f64 {
            if t < n {
                1.0
            } else {
                -1.0
            }
        };
        let mut beta = vec![0.0; 2 * n];
        // grad[t] = d objective / d beta[t]; starts at the linear term.
        let mut grad: Vec<f64> = (0..2 * n)
            .map(|t| if t < n { eps - y[t] } else { eps + y[t - n] })
            .collect();

        let mut cache = KernelCache::new(x, gamma);
        let mut iterations = 0usize;
        let mut converged = false;

        while iterations < params.max_iter {
            // Maximal violating pair over v_t = -sign_t * grad_t.
            let mut i_best: Option<(usize, f64)> = None;
            let mut j_best: Option<(usize, f64)> = None;
            for t in 0..2 * n {
                let s = sign(t);
                let v = -s * grad[t];
                let in_up = (s > 0.0 && beta[t] < c) || (s < 0.0 && beta[t] > 0.0);
                let in_low = (s > 0.0 && beta[t] > 0.0) || (s < 0.0 && beta[t] < c);
                if in_up && i_best.map_or(true, |(_, b)| v > b) {
                    i_best = Some((t, v));
                }
                if in_low && j_best.map_or(true, |(_, b)| v < b) {
                    j_best = Some((t, v));
                }
            }
            let (Some((i, vi)), Some((j, vj))) = (i_best, j_best) else {
                converged = true;
                break;
            };
            if vi - vj <= params.tol {
                converged = true;
                break;
            }

            let (ri, rj) = (i % n, j % n);
            cache.ensure(ri, rj);
            cache.ensure(rj, ri);
            let kij = cache.get(ri)[rj];
            let quad = (2.0 - 2.0 * kij).max(1e-12);
            let mut step = (vi - vj) / quad;

            // Box limits along the feasible direction
            // beta_i += sign_i * step, beta_j -= sign_j * step.
            let hi_i = if sign(i) > 0.0 { c - beta[i] } else { beta[i] };
            let hi_j = if sign(j) > 0.0 { beta[j] } else { c - beta[j] };
            step = step.min(hi_i).min(hi_j);

            let d_i = sign(i) * step;
            let d_j = -sign(j) * step;
            beta[i] += d_i;
            beta[j] += d_j;

            let ki = cache.get(ri);
            let kj = cache.get(rj);
            for t in 0..2 * n {
                let kt = ki[t % n] - kj[t % n];
                grad[t] += sign(t) * step * kt;
            }
            iterations += 1;
        }

        // Bias from the KKT scores v_t = -sign_t grad_t: every free variable
        // pins b exactly; otherwise take the midpoint of the feasible band.
        let mut free_sum = 0.0;
        let mut free_count = 0usize;
        let mut up_max = f64::NEG_INFINITY;
        let mut low_min = f64::INFINITY;
        for t in 0..2 * n {
            let s = sign(t);
            let v = -s * grad[t];
            if beta[t] > 0.0 && beta[t] < c {
                free_sum += v;
                free_count += 1;
            }
            let in_up = (s > 0.0 && beta[t] < c) || (s < 0.0 && beta[t] > 0.0);
            let in_low = (s > 0.0 && beta[t] > 0.0) || (s < 0.0 && beta[t] < c);
            if in_up {
                up_max = up_max.max(v);
            }
            if in_low {
                low_min = low_min.min(v);
            }
        }
        let bias = if free_count > 0 {
            free_sum / free_count as f64
        } else if up_max.is_finite() && low_min.is_finite() {
            (up_max + low_min) / 2.0
        } else {
            y.iter().sum::<f64>() / n as f64
        };

        let mut support_rows = Vec::new();
        let mut dual_coefs = Vec::new();
        for r in 0..n {
            let w = beta[r] - beta[r + n];
            if w.abs() > 1e-12 {
                support_rows.push(r);
                dual_coefs.push(w);
            }
        }
        let support_x = x.select_rows(&support_rows);

        SvrModel {
            support_x,
            dual_coefs,
            bias,
            gamma,
            epsilon: eps,
            c,
            converged,
            iterations,
        }
    }

    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let mut acc = self.bias;
        for (sv, w) in self.support_x.rows_iter().zip(&self.dual_coefs) {
            acc += w * rbf(self.gamma, sv, row);
        }
        acc
    }

    pub fn predict(&self, x: &Matrix) -> Vec<f64> {
        parallel::map_indexed(x.n_rows(), |r| self.predict_row(x.row(r)))
    }
}
