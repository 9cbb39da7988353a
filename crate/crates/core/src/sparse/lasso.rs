//! Per-snapshot l1-regularized solve by cyclic coordinate descent.

use ndarray::{Array1, Array2, ArrayView1};

use crate::error::{Error, Result};
use super::Dictionary;

/// Maximum coordinate-descent sweeps per solve.
const MAX_SWEEPS: usize = 2000;
/// Sweep stops when no coordinate moved more than this (relative).
const SWEEP_TOL: f64 = 1e-12;

/// Minimizes `||x - D a||_2^2 + lambda ||a||_1` over `a`.
///
/// Cyclic coordinate descent with covariance updates; each coordinate is
/// minimized exactly via the soft threshold `lambda / 2`, so the objective
/// never increases and the returned point satisfies the stationarity
/// conditions. Coordinates are visited in ascending index order.
pub fn lasso_solve(dict: &Dictionary, x: ArrayView1<f64>, lambda: f64) -> Result<Array1<f64>> {
    if !(lambda > 0.0) {
        return Err(Error::arg(format!("lambda must be > 0, got {lambda}")));
    }
    if x.len() != dict.rows() {
        return Err(Error::arg(format!(
            "dimension mismatch: dictionary has {} rows, signal has {}",
            dict.rows(),
            x.len()
        )));
    }
    let gram = dict.atoms.t().dot(&dict.atoms);
    let dtx = dict.atoms.t().dot(&x);
    let mut a = Array1::zeros(dict.k());
    coordinate_descent(&gram, &dtx, lambda, &mut a, MAX_SWEEPS);
    Ok(a)
}

/// The inner coordinate-descent loop over one coefficient column, warm
/// started from the current contents of `a`. `gram = D^T D`, `dtx = D^T x`.
pub(crate) fn coordinate_descent(
    gram: &Array2<f64>,
    dtx: &Array1<f64>,
    lambda: f64,
    a: &mut Array1<f64>,
    max_sweeps: usize,
) {
    let k = a.len();
    let half = lambda / 2.0;
    let mut ga = gram.dot(a);
    for sweep in 0..max_sweeps {
        let mut max_move = 0.0_f64;
        let mut max_abs = 0.0_f64;
        for j in 0..k {
            let qjj = gram[[j, j]];
            let old = a[j];
            if qjj <= f64::EPSILON {
                // Zero (retired) atom: its coefficient stays zero.
                if old != 0.0 {
                    a[j] = 0.0;
                    for i in 0..k {
                        ga[i] -= gram[[i, j]] * old;
                    }
                }
                continue;
            }
            let z = dtx[j] - ga[j] + qjj * old;
            let new = soft_threshold(z, half) / qjj;
            let delta = new - old;
            if delta != 0.0 {
                a[j] = new;
                let col = gram.column(j);
                for i in 0..k {
                    ga[i] += col[i] * delta;
                }
            }
            max_move = max_move.max(delta.abs());
            max_abs = max_abs.max(new.abs());
        }
        if max_move <= SWEEP_TOL * (1.0 + max_abs) {
            break;
        }
        // Counter accumulated drift in the maintained product.
        if sweep % 64 == 63 {
            ga = gram.dot(a);
        }
    }
}

#[inline]
fn soft_threshold(z: f64, half_lambda: f64) -> f64 {
    z.signum() * (z.abs() - half_lambda).max(0.0)
}
