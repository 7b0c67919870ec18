//! The equilibrium resolvent and an independent scalar oracle for it.
//!
//! For a bifunction F on C x C, an operator A and r > 0, the resolvent of
//! `x` is the unique `u in C` with
//!
//! `F(u, y) + <Au, y - u> + (1/r) <y - u, Ju - Jx> >= 0  for all y in C`.
//!
//! It is single-valued and firmly nonexpansive, its fixed points are exactly
//! the solutions of the generalized equilibrium problem, and it obeys
//! `phi(p, u) + phi(u, x) <= phi(p, x)` for every solution `p`.
//!
//! Three solve paths, tried in order:
//!
//! 1. Closed form for the scalar quadratic family
//!    `F(u, y) = a y^2 + b u y + c u^2` with `a, b >= 0`, `a + b + c = 0`
//!    and the identity operator in dimension one: the defining inequality
//!    holds for all y exactly when its discriminant vanishes, which pins
//!    `u = x / ((2a + b + 1) r + 1)`.
//! 2. Scalar problems on an interval: bisection on the diagonal
//!    stationarity residual `d(u) = F_y(u, u) + Au + (u - x)/r`, which is
//!    strictly increasing for monotone data, with complementarity at the
//!    endpoints.
//! 3. General: the damped fixed-point iteration
//!    `u <- (1 - d) u + d Pi_C J^{-1}(Jx - r (F_y(u, u) + Au))`.
//!
//! Every path ends with a sampled certificate of the defining inequality;
//! a failed certificate falls through to the next path or errors with the
//! best residual seen instead of returning a bad point.

use crate::geometry::{pairing, DualVector, Vector};
use crate::problems::{BifunctionKind, OperatorKind, ProblemSpec};
use crate::sets::{generalized_project, ProjectionError, SetSpec};
use thiserror::Error;

const FIXED_POINT_CAP: usize = 10_000;
const FIXED_POINT_DAMPING: f64 = 0.5;
const BISECT_STEPS: usize = 200;

#[derive(Debug, Error)]
pub enum ResolventError {
    #[error("resolvent parameter must be positive, got {0}")]
    NonPositiveR(f64),
    #[error("problem has no bifunction")]
    MissingBifunction,
    #[error("resolvent iteration did not certify a solution (worst residual {residual:.3e})")]
    NoConvergence { residual: f64 },
    #[error("scalar oracle needs a one-dimensional box feasible set")]
    OracleNeedsInterval,
    #[error(transparent)]
    Projection(#[from] ProjectionError),
}

/// Value of the defining expression
/// `g(u, y) = F(u, y) + <Au, y - u> + (1/r) <y - u, Ju - Jx>`.
fn defining_value(problem: &ProblemSpec, r: f64, x: &Vector, u: &Vector, y: &Vector) -> f64 {
    let bif = problem.bifunction.as_ref().expect("bifunction checked by callers");
    let au = problem.operator.apply(u);
    let ju = problem.space.duality_map(u);
    let jx = problem.space.duality_map(x);
    let d = y.sub(u);
    bif.eval(u, y) + pairing(&d, &au) + pairing(&d, &ju.sub(&jx)) / r
}

/// Worst (most negative) value of the defining expression over probe points.
fn certificate(problem: &ProblemSpec, r: f64, x: &Vector, u: &Vector) -> f64 {
    let mut worst = f64::INFINITY;
    for y in problem.feasible.probe_points(u) {
        worst = worst.min(defining_value(problem, r, x, u, &y));
    }
    worst
}

fn certificate_tolerance(problem: &ProblemSpec, x: &Vector) -> f64 {
    1e-8 * (1.0 + problem.space.norm(x))
}

/// Evaluate the resolvent at `x`.
pub fn resolvent(problem: &ProblemSpec, r: f64, x: &Vector) -> Result<Vector, ResolventError> {
    if r <= 0.0 {
        return Err(ResolventError::NonPositiveR(r));
    }
    if problem.bifunction.is_none() {
        return Err(ResolventError::MissingBifunction);
    }

    if let Some(u) = closed_form(problem, r, x) {
        return Ok(u);
    }
    if let Some((lo, hi)) = interval_bounds(&problem.feasible) {
        let u = scalar_bisection(problem, r, x, lo, hi);
        if certificate(problem, r, x, &u) >= -certificate_tolerance(problem, x) {
            return Ok(u);
        }
    }
    fixed_point(problem, r, x)
}

/// Closed form for the scalar quadratic family (see the module docs).
fn closed_form(problem: &ProblemSpec, r: f64, x: &Vector) -> Option<Vector> {
    if problem.space.dim() != 1 || !matches!(problem.operator.kind, OperatorKind::Identity) {
        return None;
    }
    let bif = problem.bifunction.as_ref()?;
    let BifunctionKind::ScalarQuadratic { a, b, c } = bif.kind else {
        return None;
    };
    if !(a >= 0.0 && b >= 0.0 && a + b + c == 0.0) {
        return None;
    }
    let k = 2.0 * a + b + 1.0;
    let u = Vector::new(vec![x[0] / (k * r + 1.0)]);
    // The discriminant argument assumes the constraint is inactive; fall
    // back to the constrained paths when it is not.
    problem.feasible.contains(&u, 0.0).then_some(u)
}

/// `[lo, hi]` when the feasible set is a one-dimensional box.
fn interval_bounds(set: &SetSpec) -> Option<(f64, f64)> {
    match set {
        SetSpec::Box { lo, hi } if lo.len() == 1 => Some((lo[0], hi[0])),
        _ => None,
    }
}

/// Scalar solve: the first-order condition of the defining inequality at an
/// interior solution is `d(u) = 0` with
/// `d(u) = F_y(u, u) + Au + (u - x)/r`; at the endpoints complementarity
/// applies. `d` is increasing for monotone data, so bisection suffices.
fn scalar_bisection(problem: &ProblemSpec, r: f64, x: &Vector, lo: f64, hi: f64) -> Vector {
    let d = |u: f64| -> f64 {
        let uv = Vector::new(vec![u]);
        let grad = problem.bifunction.as_ref().expect("checked").grad_y_at_diagonal(&uv);
        let au = problem.operator.apply(&uv);
        grad[0] + au[0] + (u - x[0]) / r
    };
    if d(lo) >= 0.0 {
        return Vector::new(vec![lo]);
    }
    if d(hi) <= 0.0 {
        return Vector::new(vec![hi]);
    }
    let (mut a, mut b) = (lo, hi);
    for _ in 0..BISECT_STEPS {
        let mid = 0.5 * (a + b);
        if d(mid) < 0.0 {
            a = mid;
        } else {
            b = mid;
        }
    }
    Vector::new(vec![0.5 * (a + b)])
}

/// Damped fixed-point iteration for the general case.
fn fixed_point(problem: &ProblemSpec, r: f64, x: &Vector) -> Result<Vector, ResolventError> {
    let space = &problem.space;
    let jx = space.duality_map(x);
    let bif = problem.bifunction.as_ref().expect("checked");
    let mut u = generalized_project(space, &problem.feasible, x)?;
    let mut best_residual = f64::NEG_INFINITY;
    let mut stable = 0;
    for _ in 0..FIXED_POINT_CAP {
        let drive = bif.grad_y_at_diagonal(&u).add(&problem.operator.apply(&u));
        let target = DualVector::new(
            jx.iter().zip(drive.iter()).map(|(j, g)| j - r * g).collect(),
        );
        let projected = generalized_project(space, &problem.feasible, &space.inverse_duality_map(&target))?;
        let next = u.scale(1.0 - FIXED_POINT_DAMPING).add(&projected.scale(FIXED_POINT_DAMPING));
        let moved = space.norm(&next.sub(&u));
        u = next;
        if moved <= 1e-15 * (1.0 + space.norm(&u)) {
            stable += 1;
            if stable >= 3 {
                break;
            }
        } else {
            stable = 0;
        }
    }
    let worst = certificate(problem, r, x, &u);
    best_residual = best_residual.max(worst);
    if worst >= -certificate_tolerance(problem, x) {
        Ok(u)
    } else {
        Err(ResolventError::NoConvergence { residual: best_residual })
    }
}

/// Independent scalar oracle: maximise
/// `h(u) = min_{y in C} g(u, y)` by grid scan with local refinement, using
/// nothing but evaluations of the defining expression. The maximiser of `h`
/// is the resolvent (where `h` touches zero); the returned value is the grid
/// maximiser after refinement.
pub fn resolvent_oracle_1d(problem: &ProblemSpec, r: f64, x: &Vector) -> Result<Vector, ResolventError> {
    if r <= 0.0 {
        return Err(ResolventError::NonPositiveR(r));
    }
    if problem.bifunction.is_none() {
        return Err(ResolventError::MissingBifunction);
    }
    let Some((lo, hi)) = interval_bounds(&problem.feasible) else {
        return Err(ResolventError::OracleNeedsInterval);
    };

    let g = |u: f64, y: f64| {
        defining_value(problem, r, x, &Vector::new(vec![u]), &Vector::new(vec![y]))
    };

    // Inner minimum over y: coarse grid, then one parabola refinement, which
    // is exact for the quadratic family and a good local model otherwise.
    let h = |u: f64| -> f64 {
        let m = 257;
        let mut best = (f64::INFINITY, lo);
        for i in 0..m {
            let y = lo + (hi - lo) * i as f64 / (m - 1) as f64;
            let v = g(u, y);
            if v < best.0 {
                best = (v, y);
            }
        }
        let step = (hi - lo) / (m - 1) as f64;
        let (y0, y1, y2) = (best.1 - step, best.1, best.1 + step);
        if y0 >= lo && y2 <= hi {
            let (f0, f1, f2) = (g(u, y0), g(u, y1), g(u, y2));
            let denom = f0 - 2.0 * f1 + f2;
            if denom > 0.0 {
                let vertex = y1 + step * 0.5 * (f0 - f2) / denom;
                let vertex = vertex.max(lo).min(hi);
                return best.0.min(g(u, vertex));
            }
        }
        best.0
    };

    // Outer maximum over u: coarse grid, then shrinking refinement windows.
    let coarse = 1001;
    let mut best = (f64::NEG_INFINITY, lo);
    for i in 0..coarse {
        let u = lo + (hi - lo) * i as f64 / (coarse - 1) as f64;
        let v = h(u);
        if v > best.0 {
            best = (v, u);
        }
    }
    let mut window = (hi - lo) / (coarse - 1) as f64;
    for _ in 0..8 {
        let pts = 41;
        let (wlo, whi) = ((best.1 - window).max(lo), (best.1 + window).min(hi));
        for i in 0..pts {
            let u = wlo + (whi - wlo) * i as f64 / (pts - 1) as f64;
            let v = h(u);
            if v > best.0 {
                best = (v, u);
            }
        }
        window *= 0.2;
    }
    let scale = 1.0 + x[0].abs();
    if best.0 < -1e-5 * scale {
        return Err(ResolventError::NoConvergence { residual: best.0 });
    }
    Ok(Vector::new(vec![best.1]))
}
