use super::*;
use crate::wavefield::{GridSpec, WavefieldCube};

fn params() -> TwoDictParams {
    TwoDictParams {
        k1: 3,
        k2: 2,
        lambda: 0.05,
        gamma0: 0.05,
        delta: 0.2,
        epsilon_nnz: 6.0,
        max_outer_iters: 20,
        max_alt_iters: 20,
        tol: 1e-5,
        seed: 42,
    }
}

/// 10 x 10 grid, T = 40: a smooth rank-2 background plus one grid cell
/// that carries its own temporal signature.
fn spike_plus_smooth(spike_idx: Option<usize>) -> MaskedCube {
    let grid = GridSpec::new(10, 10, 0.01, 0.01, 0.0, 0.0).unwrap();
    let n = grid.n();
    let t = 40;
    let mut data = Array2::zeros((n, t));
    for idx in 0..n {
        let (ix, iy) = grid.unflat(idx);
        let u1 = ((ix as f64) * 0.5).sin() * ((iy as f64) * 0.4).cos();
        let u2 = ((ix as f64) * 0.23 + 0.4).cos() * ((iy as f64) * 0.31).sin();
        for k in 0..t {
            let v1 = ((k as f64) * 0.3).sin();
            let v2 = ((k as f64) * 0.21 + 0.8).cos();
            data[[idx, k]] = u1 * v1 + u2 * v2;
        }
    }
    if let Some(p) = spike_idx {
        for k in 0..t {
            data[[p, k]] += 2.5 * ((k as f64) * 0.9).sin();
        }
    }
    let cube = WavefieldCube::new(grid, 1e-4, data).unwrap();
    MaskedCube::all_active(cube)
}

#[test]
fn sparse_dictionary_concentrates_on_the_spike() {
    let grid = GridSpec::new(10, 10, 0.01, 0.01, 0.0, 0.0).unwrap();
    let spike = grid.flat(6, 4);
    let masked = spike_plus_smooth(Some(spike));
    let result = learn_two_dict(&masked, &params()).unwrap();

    // Energy of D1 within one cell of the spike vs total.
    let (sx, sy) = grid.unflat(spike);
    let mut near = 0.0;
    let mut total = 0.0;
    for idx in 0..grid.n() {
        let (ix, iy) = grid.unflat(idx);
        let e: f64 = result.d1.atoms.row(idx).iter().map(|v| v * v).sum();
        total += e;
        let close = (ix as isize - sx as isize).abs() <= 1 && (iy as isize - sy as isize).abs() <= 1;
        if close {
            near += e;
        }
    }
    assert!(total > 0.0, "sparse dictionary is empty");
    let ratio = near / total;
    assert!(ratio >= 0.8, "only {:.0}% of sparse energy near the spike", 100.0 * ratio);
}

#[test]
fn smooth_field_escalates_gamma_until_thin() {
    let masked = spike_plus_smooth(None);
    let p = TwoDictParams { epsilon_nnz: 3.0, ..params() };
    let result = learn_two_dict(&masked, &p).unwrap();
    assert!(!result.truncated, "escalation should terminate before the cap");
    assert!(result.gamma_final > p.gamma0);
    assert!(sparsity_metric(&result.d1) <= p.epsilon_nnz);
}

#[test]
fn gamma_sequence_is_arithmetic() {
    let masked = spike_plus_smooth(None);
    let p = TwoDictParams { epsilon_nnz: 2.0, ..params() };
    let result = learn_two_dict(&masked, &p).unwrap();
    assert_eq!(result.gamma_final, p.gamma0 + result.outer_iters as f64 * p.delta);
    for (i, rec) in result.iterations.iter().enumerate() {
        assert_eq!(rec.outer, i + 1);
        assert_eq!(rec.gamma, p.gamma0 + (i + 1) as f64 * p.delta);
    }
}

#[test]
fn truncation_flag_at_iteration_cap() {
    let masked = spike_plus_smooth(Some(33));
    // An absurd target with no room to escalate.
    let p = TwoDictParams { epsilon_nnz: 1.0, max_outer_iters: 1, delta: 1e-6, ..params() };
    let result = learn_two_dict(&masked, &p).unwrap();
    assert!(result.truncated);
    assert_eq!(result.outer_iters, 1);
}

#[test]
fn vacuous_sparsity_target_rejected() {
    let masked = spike_plus_smooth(None);
    let p = TwoDictParams { epsilon_nnz: 100.0, ..params() };
    assert!(matches!(learn_two_dict(&masked, &p), Err(Error::Argument(_))));
}

#[test]
fn too_few_snapshots_rejected() {
    let masked = spike_plus_smooth(None);
    let p = TwoDictParams { k1: 30, k2: 20, ..params() };
    assert!(matches!(learn_two_dict(&masked, &p), Err(Error::Argument(_))));
}

#[test]
fn results_are_deterministic() {
    let masked = spike_plus_smooth(Some(15));
    let a = learn_two_dict(&masked, &params()).unwrap();
    let b = learn_two_dict(&masked, &params()).unwrap();
    assert_eq!(a.d1.atoms, b.d1.atoms);
    assert_eq!(a.d2.atoms, b.d2.atoms);
    assert_eq!(a.a1.coeffs, b.a1.coeffs);
    assert_eq!(a.a2.coeffs, b.a2.coeffs);
    assert_eq!(a.gamma_final, b.gamma_final);
}

#[test]
fn expanded_atoms_vanish_on_masked_rows() {
    let masked = spike_plus_smooth(Some(44))
        .exclude_boundary_layer(crate::wavefield::Edge::Left, 0.015)
        .unwrap();
    let result = learn_two_dict(&masked, &params()).unwrap();
    let full = expand_dictionary(&result.d1, &masked.active);
    assert_eq!(full.rows(), masked.active.len());
    for (i, &act) in masked.active.iter().enumerate() {
        if !act {
            assert!(full.atoms.row(i).iter().all(|&v| v == 0.0));
        }
    }
}

#[test]
fn reconstruction_error_is_reported() {
    let masked = spike_plus_smooth(Some(21));
    let result = learn_two_dict(&masked, &params()).unwrap();
    assert!(result.rel_error.is_finite());
    assert!(result.rel_error < 1.0);
}

#[test]
fn sparsity_metric_counts_mean_nnz() {
    let zero = Dictionary::new(Array2::zeros((5, 4)), Constraint::L2Ball);
    assert_eq!(sparsity_metric(&zero), 0.0);
    let mut one_per_atom = Array2::zeros((5, 4));
    for j in 0..4 {
        one_per_atom[[j, j]] = 0.5;
    }
    assert_eq!(sparsity_metric(&Dictionary::new(one_per_atom, Constraint::L2Ball)), 1.0);
    let dense = Array2::from_elem((50, 4), 0.1);
    assert_eq!(sparsity_metric(&Dictionary::new(dense, Constraint::L2Ball)), 50.0);
}

#[test]
fn lambda_bisection_hits_target_band() {
    let masked = spike_plus_smooth(Some(55));
    let base = params();
    let (lambda, result) = tune_lambda(&masked, &base, 0.10, 0.02, 12).unwrap();
    assert!(lambda > 0.0);
    assert!(
        (result.rel_error - 0.10).abs() <= 0.02,
        "rel_error {} missed the band around 0.10",
        result.rel_error
    );
}
