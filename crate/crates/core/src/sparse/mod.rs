//! Sparse-coding kernels: the l1-regularized coefficient solve, constrained
//! dictionary updates and the two ball projections behind the atom
//! constraints.
//!
//! The objective follows the per-snapshot form
//! `sum_t ||x_t - D a_t||_2^2 + lambda ||a_t||_1` with no 1/2 factor, so
//! soft thresholds are `lambda / 2` throughout.

mod dict;
mod io;
mod lasso;
mod learn;
mod project;

pub use dict::dict_update;
pub use io::{load_coefficients, load_dictionary, save_coefficients, save_dictionary};
pub use lasso::lasso_solve;
pub use learn::{learn_dictionary, learn_dictionary_detailed, learn_dictionary_warm, LearnOutcome, ObjectiveTrace};
pub use project::{project_elastic_net_ball, project_l2_ball};

use ndarray::{Array2, ArrayView1, ArrayViewMut1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Entries with magnitude at or below this threshold count as zero when
/// measuring atom sparsity. Exact zeros arise from soft-thresholding, but
/// ball projections can leave tiny residue.
pub const NNZ_EPS: f64 = 1e-8;

/// Feasibility slack allowed on the ball constraints.
pub const FEAS_EPS: f64 = 1e-9;

/// Column constraint set for a dictionary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Constraint {
    /// `||d||_2 <= 1`
    L2Ball,
    /// `||d||_2^2 + gamma ||d||_1 <= 1`
    ElasticNetBall { gamma: f64 },
}

impl Constraint {
    /// Constraint value minus the bound; feasible points give <= 0.
    pub fn residual(&self, v: ArrayView1<f64>) -> f64 {
        let sq: f64 = v.iter().map(|x| x * x).sum();
        match *self {
            Constraint::L2Ball => sq - 1.0,
            Constraint::ElasticNetBall { gamma } => {
                let l1: f64 = v.iter().map(|x| x.abs()).sum();
                sq + gamma * l1 - 1.0
            }
        }
    }

    /// Euclidean projection onto the constraint set, in place.
    pub fn project(&self, mut v: ArrayViewMut1<f64>) {
        match *self {
            Constraint::L2Ball => {
                let proj = project_l2_ball(v.view());
                v.assign(&proj);
            }
            Constraint::ElasticNetBall { gamma } => {
                let proj = project_elastic_net_ball(v.view(), gamma);
                v.assign(&proj);
            }
        }
    }

    pub fn gamma(&self) -> f64 {
        match *self {
            Constraint::L2Ball => 0.0,
            Constraint::ElasticNetBall { gamma } => gamma,
        }
    }
}

/// A dictionary: columns are spatial atoms subject to a ball constraint.
#[derive(Debug, Clone, PartialEq)]
pub struct Dictionary {
    /// Shape `rows x K`; column j is atom j.
    pub atoms: Array2<f64>,
    pub constraint: Constraint,
    /// Atoms whose coefficient rows died and were deliberately zeroed.
    pub retired: Vec<bool>,
}

impl Dictionary {
    pub fn new(atoms: Array2<f64>, constraint: Constraint) -> Self {
        let k = atoms.ncols();
        Dictionary { atoms, constraint, retired: vec![false; k] }
    }

    pub fn rows(&self) -> usize {
        self.atoms.nrows()
    }

    pub fn k(&self) -> usize {
        self.atoms.ncols()
    }

    /// Largest constraint residual over all atoms.
    pub fn feasibility_residual(&self) -> f64 {
        (0..self.k())
            .map(|j| self.constraint.residual(self.atoms.column(j)))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Projects every atom onto the constraint set.
    pub fn project_all(&mut self) {
        for j in 0..self.k() {
            self.constraint.project(self.atoms.column_mut(j));
        }
    }

    /// Count of entries with magnitude above [`NNZ_EPS`].
    pub fn nnz_total(&self) -> usize {
        self.atoms.iter().filter(|v| v.abs() > NNZ_EPS).count()
    }
}

/// Per-snapshot atom activations, shape `K x T`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientMatrix {
    pub coeffs: Array2<f64>,
}

impl CoefficientMatrix {
    pub fn zeros(k: usize, t: usize) -> Self {
        CoefficientMatrix { coeffs: Array2::zeros((k, t)) }
    }

    pub fn k(&self) -> usize {
        self.coeffs.nrows()
    }

    pub fn t(&self) -> usize {
        self.coeffs.ncols()
    }
}

/// Parameters of one alternating dictionary-learning solve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LearnParams {
    /// l1 weight on the coefficients; must be positive.
    pub lambda: f64,
    /// Cap on coefficient/dictionary alternations.
    pub max_alt_iters: usize,
    /// Relative objective-change stopping tolerance.
    pub tol: f64,
    /// Seed for atom initialization.
    pub seed: u64,
}

impl LearnParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0) {
            return Err(Error::arg(format!("lambda must be > 0, got {}", self.lambda)));
        }
        if !(self.tol > 0.0) {
            return Err(Error::arg(format!("tol must be > 0, got {}", self.tol)));
        }
        if self.max_alt_iters == 0 {
            return Err(Error::arg("max_alt_iters must be >= 1"));
        }
        Ok(())
    }
}

/// Full objective `||X - D A||_F^2 + lambda * sum |A|`, evaluated with a
/// fixed sequential reduction order.
pub fn objective(x: &Array2<f64>, dict: &Dictionary, coef: &CoefficientMatrix, lambda: f64) -> f64 {
    let recon = dict.atoms.dot(&coef.coeffs);
    let mut fit = 0.0;
    for (xv, rv) in x.iter().zip(recon.iter()) {
        let d = xv - rv;
        fit += d * d;
    }
    let l1: f64 = coef.coeffs.iter().map(|v| v.abs()).sum();
    fit + lambda * l1
}

/// Relative Frobenius reconstruction error `||X - D A||_F / ||X||_F`.
pub fn relative_error(x: &Array2<f64>, recon: &Array2<f64>) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for (xv, rv) in x.iter().zip(recon.iter()) {
        let d = xv - rv;
        num += d * d;
        den += xv * xv;
    }
    if den == 0.0 {
        if num == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        (num / den).sqrt()
    }
}
