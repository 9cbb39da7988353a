//! Constrained dictionary update with coefficients held fixed.

use ndarray::Array2;

use crate::error::{Error, Result};
use super::{CoefficientMatrix, Dictionary};

/// Block coordinate descent over atoms: with `A` fixed, the fit term is a
/// spherical quadratic in each atom, so the constrained minimizer is the
/// ball projection of `(X A^T - D A A^T + d_j c_jj)_j / c_jj`. Atoms are
/// visited in ascending index order; the objective never increases.
///
/// Atoms whose coefficient row is identically zero are left unchanged and
/// flagged retired.
pub fn dict_update(
    dict: &Dictionary,
    x_block: &Array2<f64>,
    coef: &CoefficientMatrix,
) -> Result<Dictionary> {
    let mut out = dict.clone();
    dict_update_inplace(&mut out, x_block, coef)?;
    Ok(out)
}

pub(crate) fn dict_update_inplace(
    dict: &mut Dictionary,
    x_block: &Array2<f64>,
    coef: &CoefficientMatrix,
) -> Result<()> {
    let (n, k) = (dict.rows(), dict.k());
    if x_block.nrows() != n || coef.k() != k || x_block.ncols() != coef.t() {
        return Err(Error::arg(format!(
            "dimension mismatch: dictionary {}x{}, data {}x{}, coefficients {}x{}",
            n,
            k,
            x_block.nrows(),
            x_block.ncols(),
            coef.k(),
            coef.t()
        )));
    }
    let b = x_block.dot(&coef.coeffs.t()); // N x K
    let c = coef.coeffs.dot(&coef.coeffs.t()); // K x K
    for j in 0..k {
        let s = c[[j, j]];
        if s == 0.0 {
            dict.retired[j] = true;
            continue;
        }
        // c_j = B[:, j] - D C[:, j] + d_j s, then minimize s ||d - c_j/s||^2.
        let dc = dict.atoms.dot(&c.column(j));
        let mut target = b.column(j).to_owned();
        for i in 0..n {
            target[i] = (target[i] - dc[i] + dict.atoms[[i, j]] * s) / s;
        }
        dict.constraint.project(target.view_mut());
        dict.atoms.column_mut(j).assign(&target);
        if dict.atoms.column(j).iter().all(|&v| v == 0.0) {
            dict.retired[j] = true;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparse::{objective, project_l2_ball, Constraint, FEAS_EPS};
    use ndarray::array;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_coefficients_project_data_columns() {
        // K = T, a_t = e_t: each atom moves to the projection of its column.
        let x = array![[2.0, 0.1], [0.0, 0.2], [1.0, -0.1]];
        let d0 = Dictionary::new(array![[0.5, 0.0], [0.5, 0.5], [0.0, 0.5]], Constraint::L2Ball);
        let coef = CoefficientMatrix { coeffs: Array2::eye(2) };
        let d1 = dict_update(&d0, &x, &coef).unwrap();
        for j in 0..2 {
            let expected = project_l2_ball(x.column(j));
            for i in 0..3 {
                assert!((d1.atoms[[i, j]] - expected[i]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn objective_never_increases_on_random_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for trial in 0..50 {
            let (n, k, t) = (8, 4, 6);
            let x = Array2::from_shape_fn((n, t), |_| rng.random_range(-1.0..1.0));
            let mut atoms = Array2::from_shape_fn((n, k), |_| rng.random_range(-1.0..1.0));
            let constraint = if trial % 2 == 0 {
                Constraint::L2Ball
            } else {
                Constraint::ElasticNetBall { gamma: 0.8 }
            };
            for j in 0..k {
                constraint.project(atoms.column_mut(j));
            }
            let dict = Dictionary::new(atoms, constraint);
            let coef = CoefficientMatrix {
                coeffs: Array2::from_shape_fn((k, t), |_| rng.random_range(-1.0..1.0)),
            };
            let lambda = 0.1;
            let before = objective(&x, &dict, &coef, lambda);
            let updated = dict_update(&dict, &x, &coef).unwrap();
            let after = objective(&x, &updated, &coef, lambda);
            assert!(
                after <= before + 1e-10 * before.max(1.0),
                "trial {trial}: objective rose {before} -> {after}"
            );
            assert!(updated.feasibility_residual() <= FEAS_EPS);
        }
    }

    #[test]
    fn exact_factorization_is_a_fixed_point() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (n, k, t) = (6, 3, 5);
        let mut atoms = Array2::from_shape_fn((n, k), |_| rng.random_range(-1.0..1.0));
        for j in 0..k {
            let norm: f64 = atoms.column(j).iter().map(|v| v * v).sum::<f64>().sqrt();
            atoms.column_mut(j).mapv_inplace(|v| 0.9 * v / norm);
        }
        let dict = Dictionary::new(atoms, Constraint::L2Ball);
        let coef = CoefficientMatrix {
            coeffs: Array2::from_shape_fn((k, t), |_| rng.random_range(-1.0..1.0)),
        };
        let x = dict.atoms.dot(&coef.coeffs);
        let updated = dict_update(&dict, &x, &coef).unwrap();
        for (a, b) in dict.atoms.iter().zip(updated.atoms.iter()) {
            assert!((a - b).abs() <= 1e-10, "moved from fixed point: {a} vs {b}");
        }
    }

    #[test]
    fn zero_coefficient_row_retires_atom() {
        let x = array![[1.0, 2.0], [3.0, 4.0]];
        let dict = Dictionary::new(array![[0.7, 0.1], [0.3, 0.2]], Constraint::L2Ball);
        let coef = CoefficientMatrix { coeffs: array![[1.0, -1.0], [0.0, 0.0]] };
        let updated = dict_update(&dict, &x, &coef).unwrap();
        assert!(updated.retired[1]);
        assert!(!updated.retired[0]);
        assert_eq!(updated.atoms.column(1), dict.atoms.column(1));
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let dict = Dictionary::new(Array2::zeros((3, 2)), Constraint::L2Ball);
        let coef = CoefficientMatrix { coeffs: Array2::zeros((2, 4)) };
        let x = Array2::zeros((3, 5));
        assert!(dict_update(&dict, &x, &coef).is_err());
    }
}
