//! Euclidean projections onto the l2 ball and the elastic-net ball.

use ndarray::{Array1, ArrayView1};

/// Constraint-residual tolerance of the bisection.
const RESIDUAL_TOL: f64 = 1e-10;

/// Projects onto `{d : ||d||_2 <= 1}`: identity inside, radial scaling outside.
pub fn project_l2_ball(v: ArrayView1<f64>) -> Array1<f64> {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm <= 1.0 {
        v.to_owned()
    } else {
        v.mapv(|x| x / norm)
    }
}

/// Euclidean projection onto `{d : ||d||_2^2 + gamma ||d||_1 <= 1}`.
///
/// Computed by bisection on the Lagrange multiplier `mu >= 0` of the
/// shrink map `d(mu) = sign(v) max(|v| - mu gamma / 2, 0) / (1 + mu)`,
/// stopping when the constraint residual is within [`RESIDUAL_TOL`].
pub fn project_elastic_net_ball(v: ArrayView1<f64>, gamma: f64) -> Array1<f64> {
    assert!(gamma >= 0.0, "gamma must be nonnegative");
    if gamma == 0.0 {
        return project_l2_ball(v);
    }
    // Points within the bisection tolerance count as feasible, which also
    // makes the projection idempotent.
    if constraint_value(v.iter().copied(), gamma) <= 1.0 + RESIDUAL_TOL {
        return v.to_owned();
    }

    let shrink = |mu: f64| -> Array1<f64> {
        v.mapv(|x| {
            let mag = (x.abs() - mu * gamma / 2.0).max(0.0);
            x.signum() * mag / (1.0 + mu)
        })
    };
    let residual = |mu: f64| constraint_value(shrink(mu).iter().copied(), gamma) - 1.0;

    // The residual is continuous and strictly decreasing towards -1.
    let mut lo = 0.0;
    let mut hi = 1.0;
    while residual(hi) > 0.0 {
        lo = hi;
        hi *= 2.0;
    }
    let mut mid = hi;
    for _ in 0..200 {
        mid = 0.5 * (lo + hi);
        let r = residual(mid);
        if r.abs() <= RESIDUAL_TOL {
            return shrink(mid);
        }
        if r > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // Bracket collapsed below the residual tolerance; the upper end is
    // feasible by construction.
    if residual(mid) > 0.0 {
        shrink(hi)
    } else {
        shrink(mid)
    }
}

fn constraint_value(v: impl Iterator<Item = f64>, gamma: f64) -> f64 {
    let mut sq = 0.0;
    let mut l1 = 0.0;
    for x in v {
        sq += x * x;
        l1 += x.abs();
    }
    sq + gamma * l1
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn l2_interior_point_unchanged() {
        let v = array![0.3, 0.0, -0.4];
        assert_eq!(project_l2_ball(v.view()), v);
    }

    #[test]
    fn l2_exterior_point_scaled_to_unit_norm() {
        let v = array![0.0, 4.0];
        let p = project_l2_ball(v.view());
        assert!((p[1] - 1.0).abs() < 1e-15);
        let norm: f64 = p.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!((norm - 1.0).abs() < 1e-15);
    }

    #[test]
    fn enet_gamma_zero_equals_l2() {
        let v = array![2.0, -3.0, 0.5];
        assert_eq!(project_elastic_net_ball(v.view(), 0.0), project_l2_ball(v.view()));
    }

    #[test]
    fn enet_feasible_point_unchanged() {
        let v = array![0.2, -0.1, 0.05];
        assert_eq!(project_elastic_net_ball(v.view(), 2.0), v);
    }

    #[test]
    fn enet_output_is_feasible_and_idempotent() {
        let v = array![3.0, -1.5, 0.25, 0.0, 7.0, -0.125];
        for gamma in [0.5, 2.0, 10.0] {
            let p = project_elastic_net_ball(v.view(), gamma);
            let res = constraint_value(p.iter().copied(), gamma) - 1.0;
            assert!(res <= 1e-9, "infeasible projection: residual {res}");
            let q = project_elastic_net_ball(p.view(), gamma);
            assert_eq!(p, q, "projection not idempotent");
        }
    }

    #[test]
    fn enet_shrinks_small_entries_to_zero() {
        let v = array![10.0, 0.01, -0.01];
        let p = project_elastic_net_ball(v.view(), 2.0);
        assert_eq!(p[1], 0.0);
        assert_eq!(p[2], 0.0);
        assert!(p[0] > 0.0);
    }
}
