//! Small dense linear-algebra helpers for the handful of solves this crate
//! needs: Gaussian elimination with partial pivoting, cyclic Jacobi
//! eigendecomposition of symmetric matrices, and a pseudo-inverse solve for
//! (possibly singular) positive semi-definite systems.
//!
//! Systems here are tiny — normal equations over at most a few dozen
//! unknowns — so clarity wins over blocking or pivGrowth tricks.

/// Solve `a x = b` by Gaussian elimination with partial pivoting.
///
/// Returns `None` when a pivot collapses below `tol` times the largest
/// absolute entry of `a`, i.e. the system is numerically singular.
pub fn gauss_solve(a: &[Vec<f64>], b: &[f64], tol: f64) -> Option<Vec<f64>> {
    let n = a.len();
    assert_eq!(b.len(), n);
    let scale = a
        .iter()
        .flat_map(|row| row.iter().map(|v| v.abs()))
        .fold(0.0f64, f64::max)
        .max(1e-300);

    let mut m: Vec<Vec<f64>> = a.iter().map(|row| {
        assert_eq!(row.len(), n);
        row.clone()
    }).collect();
    let mut rhs = b.to_vec();

    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))
            .unwrap();
        if m[pivot_row][col].abs() < tol * scale {
            return None;
        }
        m.swap(col, pivot_row);
        rhs.swap(col, pivot_row);
        for row in col + 1..n {
            let factor = m[row][col] / m[col][col];
            if factor == 0.0 {
                continue;
            }
            for k in col..n {
                m[row][k] -= factor * m[col][k];
            }
            rhs[row] -= factor * rhs[col];
        }
    }

    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut acc = rhs[row];
        for k in row + 1..n {
            acc -= m[row][k] * x[k];
        }
        x[row] = acc / m[row][row];
    }
    Some(x)
}

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// Returns `(values, vectors)` with `vectors[k]` the eigenvector of
/// `values[k]`, so `a = sum_k values[k] * v_k v_k^T`.
pub fn jacobi_eigh(a: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a.to_vec();
    let mut v: Vec<Vec<f64>> =
        (0..n).map(|i| (0..n).map(|j| f64::from(u8::from(i == j))).collect()).collect();

    for _sweep in 0..100 {
        let mut off = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                off += m[i][j] * m[i][j];
            }
        }
        if off < 1e-24 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if m[p][q].abs() < 1e-30 {
                    continue;
                }
                let theta = (m[q][q] - m[p][p]) / (2.0 * m[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[k][p];
                    let mkq = m[k][q];
                    m[k][p] = c * mkp - s * mkq;
                    m[k][q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[p][k];
                    let mqk = m[q][k];
                    m[p][k] = c * mpk - s * mqk;
                    m[q][k] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[k][p];
                    let vkq = v[k][q];
                    v[k][p] = c * vkp - s * vkq;
                    v[k][q] = s * vkp + c * vkq;
                }
            }
        }
    }

    let values: Vec<f64> = (0..n).map(|i| m[i][i]).collect();
    let vectors: Vec<Vec<f64>> = (0..n).map(|k| (0..n).map(|i| v[i][k]).collect()).collect();
    (values, vectors)
}

/// Solve the PSD system `a x = b`, falling back to the Moore-Penrose
/// pseudo-inverse when `a` is singular. The fallback returns the
/// minimum-norm solution.
pub fn solve_psd(a: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
    if let Some(x) = gauss_solve(a, b, 1e-10) {
        return x;
    }
    let (values, vectors) = jacobi_eigh(a);
    let max_ev = values.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
    let n = b.len();
    let mut x = vec![0.0; n];
    for (ev, vec_k) in values.iter().zip(&vectors) {
        if ev.abs() < 1e-10 * max_ev {
            continue;
        }
        let proj: f64 = vec_k.iter().zip(b).map(|(vi, bi)| vi * bi).sum();
        let w = proj / ev;
        for (xi, vi) in x.iter_mut().zip(vec_k) {
            *xi += w * vi;
        }
    }
    x
}
