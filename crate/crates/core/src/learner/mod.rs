//! Two-dictionary decomposition: alternating sparse/diffuse learning with
//! escalation of the elastic-net weight until the sparse atoms are thin.
//!
//! The loop learns `(D1, A1)` on the raw data under the elastic-net ball,
//! then while the sparsity target is missed it raises gamma by `delta`,
//! refits the diffuse pair `(D2, A2)` on `X - D1 A1` under the l2 ball,
//! and refits the sparse pair on `X - D2 A2` under the tightened ball.
//! Both refits warm-start from the previous factors.

use ndarray::Array2;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sparse::{
    learn_dictionary_detailed, learn_dictionary_warm, relative_error, CoefficientMatrix,
    Constraint, Dictionary, LearnParams,
};
use crate::wavefield::MaskedCube;

/// Parameters of the two-dictionary decomposition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoDictParams {
    /// Sparse atom count K1.
    pub k1: usize,
    /// Diffuse atom count K2.
    pub k2: usize,
    /// l1 weight shared by both inner problems, relative to data rescaled
    /// so the largest snapshot has unit energy.
    pub lambda: f64,
    /// Initial elastic-net weight.
    pub gamma0: f64,
    /// Gamma increment per outer iteration.
    pub delta: f64,
    /// Sparsity target: maximum mean nonzero entries per sparse atom.
    pub epsilon_nnz: f64,
    /// Cap on outer iterations; hitting it sets the truncation flag.
    pub max_outer_iters: usize,
    /// Cap on inner coefficient/dictionary alternations.
    pub max_alt_iters: usize,
    /// Inner relative objective-change tolerance.
    pub tol: f64,
    pub seed: u64,
}

impl TwoDictParams {
    pub fn validate(&self) -> Result<()> {
        if self.k1 < 1 || self.k2 < 1 {
            return Err(Error::arg(format!("k1 and k2 must be >= 1, got {} and {}", self.k1, self.k2)));
        }
        if !(self.delta > 0.0) {
            return Err(Error::arg(format!("delta must be > 0, got {}", self.delta)));
        }
        if !(self.gamma0 >= 0.0) {
            return Err(Error::arg(format!("gamma0 must be >= 0, got {}", self.gamma0)));
        }
        if !(self.epsilon_nnz >= 1.0) {
            return Err(Error::arg(format!("epsilon_nnz must be >= 1, got {}", self.epsilon_nnz)));
        }
        self.inner(0).validate()
    }

    fn inner(&self, seed: u64) -> LearnParams {
        LearnParams {
            lambda: self.lambda,
            max_alt_iters: self.max_alt_iters,
            tol: self.tol,
            seed,
        }
    }
}

/// Per-outer-iteration log entry.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct IterationRecord {
    pub outer: usize,
    pub gamma: f64,
    /// Mean nonzero entries per sparse atom after this iteration.
    pub mean_nnz: f64,
    /// `||X - D1 A1 - D2 A2||_F / ||X||_F` after this iteration.
    pub rel_error: f64,
}

/// Output of [`learn_two_dict`]. Dictionaries are over active rows; use
/// [`expand_dictionary`] to map atoms back onto the full grid.
#[derive(Debug, Clone)]
pub struct TwoDictResult {
    pub d1: Dictionary,
    pub a1: CoefficientMatrix,
    pub d2: Dictionary,
    pub a2: CoefficientMatrix,
    pub gamma_final: f64,
    pub outer_iters: usize,
    pub rel_error: f64,
    /// Set when the outer cap stopped the loop before the sparsity target.
    pub truncated: bool,
    pub iterations: Vec<IterationRecord>,
}

/// Mean count of entries with magnitude above the nonzero threshold,
/// per atom.
pub fn sparsity_metric(d1: &Dictionary) -> f64 {
    assert!(d1.k() > 0, "dictionary must be nonempty");
    d1.nnz_total() as f64 / d1.k() as f64
}

/// Runs the full escalation loop on the masked cube.
pub fn learn_two_dict(masked: &MaskedCube, params: &TwoDictParams) -> Result<TwoDictResult> {
    params.validate()?;
    let n_active = masked.active_count();
    if params.epsilon_nnz >= n_active as f64 {
        return Err(Error::arg(format!(
            "epsilon_nnz = {} is vacuous: only {} active rows",
            params.epsilon_nnz, n_active
        )));
    }
    let t_active = masked.active_snapshots();
    if t_active < params.k1 + params.k2 {
        return Err(Error::arg(format!(
            "need at least k1 + k2 = {} active snapshots for initialization, have {}",
            params.k1 + params.k2,
            t_active
        )));
    }

    let mut x = masked.active_block();
    // Scale so the largest snapshot has unit energy; lambda is calibrated
    // against this normalization. Coefficients are scaled back on return.
    let scale = (0..x.ncols())
        .map(|t| x.column(t).iter().map(|v| v * v).sum::<f64>().sqrt())
        .fold(0.0_f64, f64::max);
    if scale > 0.0 {
        x.mapv_inplace(|v| v / scale);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let seed_d1 = rng.random::<u64>();
    let seed_d2 = rng.random::<u64>();

    let enet = |gamma: f64| Constraint::ElasticNetBall { gamma };
    let mut gamma = params.gamma0;

    log::info!("learning initial sparse pair: k1={}, gamma={gamma}", params.k1);
    let init = learn_dictionary_detailed(&x, params.k1, enet(gamma), &params.inner(seed_d1))?;
    let mut d1 = init.dictionary;
    let mut a1 = init.coefficients;
    let mut diffuse: Option<(Dictionary, CoefficientMatrix)> = None;

    let mut outer = 0;
    let mut truncated = false;
    let mut iterations = Vec::new();

    while sparsity_metric(&d1) > params.epsilon_nnz {
        if outer >= params.max_outer_iters {
            truncated = true;
            break;
        }
        outer += 1;
        gamma = params.gamma0 + outer as f64 * params.delta;

        let x_minus_sparse = &x - &d1.atoms.dot(&a1.coeffs);
        let outcome = match diffuse.take() {
            Some((d2, a2)) => learn_dictionary_warm(&x_minus_sparse, d2, a2, &params.inner(seed_d2))?,
            None => learn_dictionary_detailed(
                &x_minus_sparse,
                params.k2,
                Constraint::L2Ball,
                &params.inner(seed_d2),
            )?,
        };
        let (d2, a2) = (outcome.dictionary, outcome.coefficients);

        let x_minus_diffuse = &x - &d2.atoms.dot(&a2.coeffs);
        d1.constraint = enet(gamma);
        let outcome = learn_dictionary_warm(&x_minus_diffuse, d1, a1, &params.inner(seed_d1))?;
        d1 = outcome.dictionary;
        a1 = outcome.coefficients;

        let rel = residual_error(&x, &d1, &a1, Some((&d2, &a2)));
        let mean_nnz = sparsity_metric(&d1);
        log::info!(
            "outer {outer}: gamma={gamma:.4}, mean nnz per atom={mean_nnz:.2}, rel_error={rel:.4}"
        );
        iterations.push(IterationRecord { outer, gamma, mean_nnz, rel_error: rel });
        diffuse = Some((d2, a2));
    }

    // The initialization may already meet the target; learn the diffuse
    // pair once so the decomposition is always complete.
    let (d2, mut a2) = match diffuse {
        Some(pair) => pair,
        None => {
            let x_minus_sparse = &x - &d1.atoms.dot(&a1.coeffs);
            let outcome = learn_dictionary_detailed(
                &x_minus_sparse,
                params.k2,
                Constraint::L2Ball,
                &params.inner(seed_d2),
            )?;
            (outcome.dictionary, outcome.coefficients)
        }
    };

    let rel_error = residual_error(&x, &d1, &a1, Some((&d2, &a2)));
    if scale > 0.0 {
        a1.coeffs.mapv_inplace(|v| v * scale);
        a2.coeffs.mapv_inplace(|v| v * scale);
    }
    Ok(TwoDictResult {
        d1,
        a1,
        d2,
        a2,
        gamma_final: gamma,
        outer_iters: outer,
        rel_error,
        truncated,
        iterations,
    })
}

fn residual_error(
    x: &Array2<f64>,
    d1: &Dictionary,
    a1: &CoefficientMatrix,
    diffuse: Option<(&Dictionary, &CoefficientMatrix)>,
) -> f64 {
    let mut recon = d1.atoms.dot(&a1.coeffs);
    if let Some((d2, a2)) = diffuse {
        recon += &d2.atoms.dot(&a2.coeffs);
    }
    relative_error(x, &recon)
}

/// Scatters a learned dictionary back onto the full grid: inactive rows
/// are exactly zero in every atom.
pub fn expand_dictionary(dict: &Dictionary, active: &[bool]) -> Dictionary {
    let n_active = active.iter().filter(|&&a| a).count();
    assert_eq!(dict.rows(), n_active, "dictionary rows must match active count");
    let mut atoms = Array2::zeros((active.len(), dict.k()));
    let mut r = 0;
    for (i, &act) in active.iter().enumerate() {
        if act {
            atoms.row_mut(i).assign(&dict.atoms.row(r));
            r += 1;
        }
    }
    Dictionary { atoms, constraint: dict.constraint, retired: dict.retired.clone() }
}

/// Bisection on lambda (log domain) until the decomposition's relative
/// error lands within `half_band` of `target`. Returns the tuned lambda
/// and the run that achieved it; when the probe budget runs out the
/// closest run wins.
pub fn tune_lambda(
    masked: &MaskedCube,
    base: &TwoDictParams,
    target: f64,
    half_band: f64,
    max_probes: usize,
) -> Result<(f64, TwoDictResult)> {
    if !(target > 0.0 && target < 1.0) {
        return Err(Error::arg(format!("target relative error must lie in (0, 1), got {target}")));
    }
    if max_probes == 0 {
        return Err(Error::arg("max_probes must be >= 1"));
    }

    let run = |lambda: f64| -> Result<TwoDictResult> {
        let params = TwoDictParams { lambda, ..*base };
        learn_two_dict(masked, &params)
    };

    // Larger lambda drives coefficients to zero and the error towards 1:
    // bracket the target from both sides, then bisect in log space.
    let mut below: Option<f64> = None; // largest lambda with rel_error < target
    let mut above: Option<f64> = None; // smallest lambda with rel_error >= target
    let mut best: Option<(f64, TwoDictResult)> = None;
    let mut lambda = base.lambda;

    for probe in 1..=max_probes {
        let result = run(lambda)?;
        let rel = result.rel_error;
        log::info!("lambda probe {probe}: lambda={lambda:.6}, rel_error={rel:.4}");
        if rel < target {
            below = Some(below.map_or(lambda, |l: f64| l.max(lambda)));
        } else {
            above = Some(above.map_or(lambda, |l: f64| l.min(lambda)));
        }
        let dist = (rel - target).abs();
        let improved = best
            .as_ref()
            .is_none_or(|(_, b)| dist < (b.rel_error - target).abs());
        if improved {
            best = Some((lambda, result));
        }
        if dist <= half_band {
            break;
        }
        lambda = match (below, above) {
            (Some(lo), Some(hi)) => (0.5 * (lo.ln() + hi.ln())).exp(),
            (Some(lo), None) => lo * 4.0,
            (None, Some(hi)) => hi / 4.0,
            (None, None) => unreachable!("every probe lands in one bracket"),
        };
    }
    Ok(best.expect("at least one probe runs"))
}

#[cfg(test)]
mod tests;
