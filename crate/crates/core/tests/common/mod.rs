//! Independent oracles shared by the integration and acceptance suites.
//! Everything here is derived from first principles, not from the library
//! implementation paths it checks.

use ndarray::{Array1, Array2};

/// Nonzero threshold mirrored from the library contract.
pub const NNZ_EPS: f64 = 1e-8;

/// Dense Gaussian elimination with partial pivoting, for tiny systems.
pub fn gauss_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())?;
        if a[pivot][col].abs() < 1e-12 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut acc = b[row];
        for k in row + 1..n {
            acc -= a[row][k] * x[k];
        }
        x[row] = acc / a[row][row];
    }
    Some(x)
}

/// Euclidean projection onto the elastic-net ball by exhaustive support
/// enumeration.
///
/// With signs fixed to those of `v`, the KKT system on a support S gives
/// `u_i = (|v_i| - mu g/2) / (1 + mu)` and the active-ball equality
/// reduces to the quadratic `A mu^2 + 2A mu + C = 0` with
/// `A = 1 + g^2 |S| / 4` and `C = 1 - sum w^2 - g sum w` over S, so
/// `mu = -1 + sqrt((A - C)/A)`. Every support is tried; candidates must
/// pass the primal/dual sign checks and the lowest objective wins.
pub fn enet_project_oracle(v: &[f64], gamma: f64) -> Vec<f64> {
    let n = v.len();
    let w: Vec<f64> = v.iter().map(|x| x.abs()).collect();
    let value = |u: &[f64]| -> f64 {
        u.iter().map(|x| x * x).sum::<f64>() + gamma * u.iter().sum::<f64>()
    };
    if gamma == 0.0 {
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        return if norm <= 1.0 {
            v.to_vec()
        } else {
            v.iter().map(|x| x / norm).collect()
        };
    }
    if value(&w) <= 1.0 {
        return v.to_vec();
    }

    let mut best: Option<(f64, Vec<f64>)> = None;
    for mask in 1u32..(1 << n) {
        let support: Vec<usize> = (0..n).filter(|&i| mask & (1 << i) != 0).collect();
        let p: f64 = support.iter().map(|&i| w[i]).sum();
        let q: f64 = support.iter().map(|&i| w[i] * w[i]).sum();
        let m = support.len() as f64;
        let a = 1.0 + gamma * gamma * m / 4.0;
        let c = 1.0 - q - gamma * p;
        if c >= 0.0 {
            continue;
        }
        let mu = -1.0 + ((a - c) / a).sqrt();
        let threshold = mu * gamma / 2.0;
        if support.iter().any(|&i| w[i] <= threshold) {
            continue;
        }
        if (0..n).any(|i| !support.contains(&i) && w[i] > threshold + 1e-12) {
            continue;
        }
        let mut u = vec![0.0; n];
        for &i in &support {
            u[i] = (w[i] - threshold) / (1.0 + mu);
        }
        let objective: f64 = (0..n).map(|i| (u[i] - w[i]).powi(2)).sum();
        if best.as_ref().is_none_or(|(b, _)| objective < *b) {
            best = Some((objective, u));
        }
    }
    let (_, u) = best.expect("infeasible v must have an active-ball KKT point");
    (0..n).map(|i| v[i].signum() * u[i]).collect()
}

/// Exhaustive-support oracle for `min ||x - D a||^2 + lambda ||a||_1`.
///
/// For every support and sign pattern, stationarity gives the linear
/// system `(D_S^T D_S) a = D_S^T x - (lambda/2) sigma`; sign-consistent
/// solutions are feasible points, and the optimum is among them, so the
/// minimum objective over all candidates (plus a = 0) is exact.
pub fn lasso_oracle(d: &Array2<f64>, x: &Array1<f64>, lambda: f64) -> (Vec<f64>, f64) {
    let k = d.ncols();
    let objective = |a: &[f64]| -> f64 {
        let mut fit = 0.0;
        for i in 0..d.nrows() {
            let mut r = x[i];
            for j in 0..k {
                r -= d[[i, j]] * a[j];
            }
            fit += r * r;
        }
        fit + lambda * a.iter().map(|v| v.abs()).sum::<f64>()
    };

    let zero = vec![0.0; k];
    let mut best = (objective(&zero), zero);

    for mask in 1u32..(1 << k) {
        let support: Vec<usize> = (0..k).filter(|&j| mask & (1 << j) != 0).collect();
        let s = support.len();
        for signs in 0u32..(1 << s) {
            let sigma: Vec<f64> =
                (0..s).map(|i| if signs & (1 << i) != 0 { -1.0 } else { 1.0 }).collect();
            let mut gram = vec![vec![0.0; s]; s];
            let mut rhs = vec![0.0; s];
            for (ii, &ji) in support.iter().enumerate() {
                for (kk, &jk) in support.iter().enumerate() {
                    gram[ii][kk] = d.column(ji).dot(&d.column(jk));
                }
                rhs[ii] = d.column(ji).dot(x) - lambda / 2.0 * sigma[ii];
            }
            let Some(sol) = gauss_solve(gram, rhs) else { continue };
            if sol.iter().zip(&sigma) .any(|(&a, &sg)| a * sg <= 0.0) {
                continue;
            }
            let mut a = vec![0.0; k];
            for (ii, &j) in support.iter().enumerate() {
                a[j] = sol[ii];
            }
            let obj = objective(&a);
            if obj < best.0 {
                best = (obj, a);
            }
        }
    }
    (best.1, best.0)
}

/// Literal transliteration of the super-atom pseudocode: partition the
/// domain, count atoms with any nonzero per partition, aggregate per-point
/// counts where the persistence threshold is met, then zero entries at or
/// below the amplitude threshold.
#[allow(dead_code)]
pub fn naive_superatom(
    atoms: &Array2<f64>,
    nx: usize,
    ny: usize,
    m1: usize,
    m2: usize,
    persistence_min: usize,
    amplitude_min: f64,
) -> Vec<u32> {
    let k1 = atoms.ncols();
    let mut s = vec![0u32; nx * ny];
    let base_w = nx / m1;
    let base_h = ny / m2;
    for pv in 0..m2 {
        for pu in 0..m1 {
            let c0 = pu * base_w;
            let c1 = if pu + 1 == m1 { nx - 1 } else { (pu + 1) * base_w - 1 };
            let r0 = pv * base_h;
            let r1 = if pv + 1 == m2 { ny - 1 } else { (pv + 1) * base_h - 1 };
            let mut points = Vec::new();
            for iy in r0..=r1 {
                for ix in c0..=c1 {
                    points.push(iy * nx + ix);
                }
            }
            let mut persistent_atoms = 0;
            for j in 0..k1 {
                if points.iter().any(|&p| atoms[[p, j]].abs() > NNZ_EPS) {
                    persistent_atoms += 1;
                }
            }
            if persistent_atoms >= persistence_min {
                for &p in &points {
                    let mut count = 0u32;
                    for j in 0..k1 {
                        if atoms[[p, j]].abs() > NNZ_EPS {
                            count += 1;
                        }
                    }
                    s[p] = count;
                }
            }
            for &p in &points {
                if (s[p] as f64) <= amplitude_min {
                    s[p] = 0;
                }
            }
        }
    }
    s
}

/// Elastic-net constraint value.
pub fn enet_value(u: &[f64], gamma: f64) -> f64 {
    u.iter().map(|x| x * x).sum::<f64>() + gamma * u.iter().map(|x| x.abs()).sum::<f64>()
}
