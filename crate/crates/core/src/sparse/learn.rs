//! Alternating minimization: coefficient solves and dictionary updates
//! until the objective stalls.

use ndarray::{Array1, Array2};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use super::dict::dict_update_inplace;
use super::lasso::coordinate_descent;
use super::{objective, relative_error, CoefficientMatrix, Constraint, Dictionary, LearnParams};

/// Coordinate-descent budget for the batch coefficient step. Warm starts
/// keep the actual sweep count low; early termination cannot break
/// monotonicity because every coordinate update is an exact minimization.
const BATCH_SWEEPS: usize = 60;

/// Objective values recorded after each half-step of one alternation.
#[derive(Debug, Clone, Copy)]
pub struct ObjectiveTrace {
    pub iter: usize,
    pub after_coef_step: f64,
    pub after_dict_step: f64,
}

/// The outcome of one alternating solve.
#[derive(Debug, Clone)]
pub struct LearnOutcome {
    pub dictionary: Dictionary,
    pub coefficients: CoefficientMatrix,
    pub trace: Vec<ObjectiveTrace>,
    /// `||X - D A||_F / ||X||_F` at return.
    pub rel_error: f64,
    /// False when the iteration cap stopped the loop.
    pub converged: bool,
}

/// Learns a `k`-atom dictionary under `constraint` by alternating the
/// coefficient solve and the dictionary update until the relative
/// objective change drops below `params.tol`.
///
/// Atoms are initialized from data columns drawn by a seeded generator and
/// projected onto the constraint set. An atom whose coefficient row dies
/// is re-seeded once from the worst-reconstructed column, then permanently
/// retired if it dies again. A zero data block yields a fully retired zero
/// dictionary.
pub fn learn_dictionary(
    x_block: &Array2<f64>,
    k: usize,
    constraint: Constraint,
    params: &LearnParams,
) -> Result<(Dictionary, CoefficientMatrix)> {
    let outcome = learn_dictionary_detailed(x_block, k, constraint, params)?;
    Ok((outcome.dictionary, outcome.coefficients))
}

/// As [`learn_dictionary`], also returning the objective trace.
pub fn learn_dictionary_detailed(
    x_block: &Array2<f64>,
    k: usize,
    constraint: Constraint,
    params: &LearnParams,
) -> Result<LearnOutcome> {
    params.validate()?;
    validate_data(x_block)?;
    if k == 0 {
        return Err(Error::arg("atom count k must be >= 1"));
    }
    let t = x_block.ncols();
    if x_block.iter().all(|&v| v == 0.0) {
        let mut dict = Dictionary::new(Array2::zeros((x_block.nrows(), k)), constraint);
        dict.retired = vec![true; k];
        return Ok(LearnOutcome {
            dictionary: dict,
            coefficients: CoefficientMatrix::zeros(k, t),
            trace: Vec::new(),
            rel_error: 0.0,
            converged: true,
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut atoms = Array2::zeros((x_block.nrows(), k));
    let picks: Vec<usize> = if t >= k {
        rand::seq::index::sample(&mut rng, t, k).into_vec()
    } else {
        (0..k).map(|_| rng.random_range(0..t)).collect()
    };
    for (j, &col) in picks.iter().enumerate() {
        atoms.column_mut(j).assign(&x_block.column(col));
        constraint.project(atoms.column_mut(j));
    }
    let dict = Dictionary::new(atoms, constraint);
    let coef = CoefficientMatrix::zeros(k, t);
    alternate(x_block, dict, coef, params)
}

/// Warm-started variant: continues from existing factors after projecting
/// every atom onto the dictionary's (possibly tightened) constraint set.
pub fn learn_dictionary_warm(
    x_block: &Array2<f64>,
    mut dict: Dictionary,
    coef: CoefficientMatrix,
    params: &LearnParams,
) -> Result<LearnOutcome> {
    params.validate()?;
    validate_data(x_block)?;
    if dict.rows() != x_block.nrows() || coef.k() != dict.k() || coef.t() != x_block.ncols() {
        return Err(Error::arg(format!(
            "dimension mismatch: data {}x{}, dictionary {}x{}, coefficients {}x{}",
            x_block.nrows(),
            x_block.ncols(),
            dict.rows(),
            dict.k(),
            coef.k(),
            coef.t()
        )));
    }
    dict.project_all();
    alternate(x_block, dict, coef, params)
}

fn validate_data(x_block: &Array2<f64>) -> Result<()> {
    if !x_block.iter().all(|v| v.is_finite()) {
        return Err(Error::arg("data block contains non-finite entries"));
    }
    if x_block.nrows() == 0 || x_block.ncols() == 0 {
        return Err(Error::arg("data block must be non-empty"));
    }
    Ok(())
}

fn alternate(
    x_block: &Array2<f64>,
    mut dict: Dictionary,
    mut coef: CoefficientMatrix,
    params: &LearnParams,
) -> Result<LearnOutcome> {
    let lambda = params.lambda;
    let mut trace = Vec::with_capacity(params.max_alt_iters);
    let mut reseeded = vec![false; dict.k()];
    let mut prev = f64::INFINITY;
    let mut converged = false;

    for iter in 0..params.max_alt_iters {
        coefficient_step(&dict, x_block, &mut coef, lambda);
        let after_coef_step = objective(x_block, &dict, &coef, lambda);
        dict_update_inplace(&mut dict, x_block, &coef)?;
        reseed_dead_atoms(&mut dict, x_block, &coef, &mut reseeded);
        let after_dict_step = objective(x_block, &dict, &coef, lambda);
        debug_assert!(
            after_coef_step <= prev.min(f64::MAX) * (1.0 + 1e-9) + 1e-12
                && after_dict_step <= after_coef_step * (1.0 + 1e-9) + 1e-12,
            "objective increased: {prev} -> {after_coef_step} -> {after_dict_step}"
        );
        trace.push(ObjectiveTrace { iter, after_coef_step, after_dict_step });
        if prev.is_finite() {
            let change = (prev - after_dict_step) / prev.abs().max(f64::MIN_POSITIVE);
            if change.abs() < params.tol {
                converged = true;
                break;
            }
        }
        prev = after_dict_step;
    }

    let recon = dict.atoms.dot(&coef.coeffs);
    let rel_error = relative_error(x_block, &recon);
    Ok(LearnOutcome { dictionary: dict, coefficients: coef, trace, rel_error, converged })
}

/// Solves every coefficient column independently (read-only dictionary),
/// warm started from the current values. Column results are written back
/// by index, so the outcome does not depend on scheduling.
fn coefficient_step(dict: &Dictionary, x_block: &Array2<f64>, coef: &mut CoefficientMatrix, lambda: f64) {
    let gram = dict.atoms.t().dot(&dict.atoms);
    let dtx = dict.atoms.t().dot(x_block);
    let t = x_block.ncols();
    let cols: Vec<Array1<f64>> = (0..t)
        .into_par_iter()
        .map(|ti| {
            let mut a = coef.coeffs.column(ti).to_owned();
            coordinate_descent(&gram, &dtx.column(ti).to_owned(), lambda, &mut a, BATCH_SWEEPS);
            a
        })
        .collect();
    for (ti, col) in cols.into_iter().enumerate() {
        coef.coeffs.column_mut(ti).assign(&col);
    }
}

/// Re-seeds each newly dead atom from the worst-reconstructed data column.
/// The dead atom's coefficient row is zero, so replacing the atom leaves
/// the objective untouched; a second death retires the atom for good.
fn reseed_dead_atoms(
    dict: &mut Dictionary,
    x_block: &Array2<f64>,
    coef: &CoefficientMatrix,
    reseeded: &mut [bool],
) {
    let dead: Vec<usize> = (0..dict.k()).filter(|&j| dict.retired[j]).collect();
    if dead.is_empty() {
        return;
    }
    let fresh: Vec<usize> = dead.iter().copied().filter(|&j| !reseeded[j]).collect();
    if fresh.is_empty() {
        // Permanently retired: zero the atoms so their support is empty.
        for &j in &dead {
            dict.atoms.column_mut(j).fill(0.0);
        }
        return;
    }
    let recon = dict.atoms.dot(&coef.coeffs);
    let mut residual_norms: Vec<(usize, f64)> = (0..x_block.ncols())
        .map(|ti| {
            let mut e = 0.0;
            for i in 0..x_block.nrows() {
                let d = x_block[[i, ti]] - recon[[i, ti]];
                e += d * d;
            }
            (ti, e)
        })
        .collect();
    residual_norms.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    for (slot, &j) in fresh.iter().enumerate() {
        let col = residual_norms[slot % residual_norms.len()].0;
        dict.atoms.column_mut(j).assign(&x_block.column(col));
        dict.constraint.project(dict.atoms.column_mut(j));
        dict.retired[j] = false;
        reseeded[j] = true;
    }
    for &j in &dead {
        if dict.retired[j] {
            dict.atoms.column_mut(j).fill(0.0);
        }
    }
}
