//! Closed convex feasible sets, generalized projections, and cut sets.
//!
//! The generalized projection `Pi_C x = argmin_{y in C} phi(y, x)` replaces
//! the metric projection outside Hilbert space. It is characterised by the
//! variational inequality `<y - z, Jx - Jz> <= 0 for all y in C` (z = Pi_C x)
//! and obeys the three-point estimate
//! `phi(y, z) + phi(z, x) <= phi(y, x)`.
//!
//! Euclidean projections use closed forms where they exist (boxes, balls,
//! half-spaces), an exact multiplier bisection for box-and-half-space
//! intersections, and Dykstra's alternating corrections for general
//! intersections. In lp spaces the box and half-space cases reduce to a
//! scalar monotone root find on the KKT system, solved by bisection to
//! near machine precision; balls and general intersections fall back to a
//! projected first-order descent on `y -> phi(y, x)` over the set's
//! euclidean geometry, stopped by an exact optimality certificate.
//!
//! A [`CutSet`] is the half-space slice
//! `{v in C : phi(v, w) <= phi(v, x)}`, which the expansion of phi turns
//! into `{v in C : 2 <v, Jx - Jw> <= ||x||^2 - ||w||^2}`.

use crate::geometry::{pairing, DualVector, NormFamily, SpaceSpec, Vector};
use rand::Rng;
use thiserror::Error;

/// Cap on Dykstra sweeps over the members of an intersection.
const DYKSTRA_CAP: usize = 10_000;
/// Dykstra stops when a full sweep moves the iterate less than this.
const DYKSTRA_TOL: f64 = 1e-10;
/// Optimality residual at which the descent-based generalized projection
/// declares convergence.
const DESCENT_TOL: f64 = 1e-11;
const DESCENT_CAP: usize = 200_000;
const BISECT_STEPS: usize = 200;

#[derive(Debug, Error)]
pub enum SetError {
    #[error("box bounds must satisfy lo <= hi in every coordinate")]
    InvalidBounds,
    #[error("ball radius must be positive, got {0}")]
    InvalidRadius(f64),
    #[error("half-space normal must be nonzero")]
    ZeroNormal,
    #[error("intersection needs at least one member")]
    EmptyIntersection,
    #[error("intersection members must share one dimension")]
    MixedDimensions,
    #[error("intersection looks empty: feasibility probe stopped {residual:.3e} away from the members")]
    InfeasibleIntersection { residual: f64 },
}

#[derive(Debug, Error)]
pub enum ProjectionError {
    #[error("projection onto intersection stalled after {iters} sweeps (sweep displacement {residual:.3e})")]
    DykstraStalled { residual: f64, iters: usize },
    #[error("generalized projection descent stopped at optimality residual {residual:.3e} (tolerance {tol:.3e})")]
    DescentStalled { residual: f64, tol: f64 },
    #[error("cut set is empty: the cut requires <normal, v> <= {rhs:.6e} but the base set only reaches {support:.6e}")]
    InfeasibleCut { support: f64, rhs: f64 },
}

/// A closed convex subset of `R^dim`.
///
/// Balls are euclidean balls regardless of the ambient norm family; a
/// half-space is `{x : <normal, x> <= offset}` with the normal living in the
/// dual space. Intersections built through [`SetSpec::intersection`] are
/// probed for feasibility at construction.
#[derive(Clone, Debug)]
pub enum SetSpec {
    Box { lo: Vector, hi: Vector },
    Ball { center: Vector, radius: f64 },
    Halfspace { normal: DualVector, offset: f64 },
    Intersection(Vec<SetSpec>),
    WholeSpace { dim: usize },
}

impl SetSpec {
    pub fn box_set(lo: Vector, hi: Vector) -> Result<Self, SetError> {
        if lo.len() != hi.len() {
            return Err(SetError::MixedDimensions);
        }
        if lo.iter().zip(hi.iter()).any(|(a, b)| a > b) {
            return Err(SetError::InvalidBounds);
        }
        Ok(SetSpec::Box { lo, hi })
    }

    /// One-dimensional interval `[lo, hi]`.
    pub fn interval(lo: f64, hi: f64) -> Result<Self, SetError> {
        Self::box_set(Vector::new(vec![lo]), Vector::new(vec![hi]))
    }

    pub fn ball(center: Vector, radius: f64) -> Result<Self, SetError> {
        if radius <= 0.0 {
            return Err(SetError::InvalidRadius(radius));
        }
        Ok(SetSpec::Ball { center, radius })
    }

    pub fn halfspace(normal: DualVector, offset: f64) -> Result<Self, SetError> {
        if normal.iter().all(|t| *t == 0.0) {
            return Err(SetError::ZeroNormal);
        }
        Ok(SetSpec::Halfspace { normal, offset })
    }

    pub fn whole_space(dim: usize) -> Self {
        SetSpec::WholeSpace { dim }
    }

    /// Validating intersection constructor: checks the members agree on the
    /// dimension and runs a feasibility probe (a Dykstra projection of an
    /// interior-ish point) so that obviously empty intersections are
    /// rejected up front.
    pub fn intersection(members: Vec<SetSpec>) -> Result<Self, SetError> {
        if members.is_empty() {
            return Err(SetError::EmptyIntersection);
        }
        let dim = members[0].dim();
        if members.iter().any(|m| m.dim() != dim) {
            return Err(SetError::MixedDimensions);
        }
        let set = SetSpec::Intersection(members);
        let probe = set.anchor_point();
        match euclidean_project(&set, &probe) {
            Ok(z) if set.contains(&z, 1e-7) => Ok(set),
            Ok(z) => {
                let residual = worst_violation(&set, &z);
                Err(SetError::InfeasibleIntersection { residual })
            }
            Err(ProjectionError::DykstraStalled { residual, .. }) => {
                Err(SetError::InfeasibleIntersection { residual })
            }
            Err(_) => Err(SetError::InfeasibleIntersection { residual: f64::NAN }),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            SetSpec::Box { lo, .. } => lo.len(),
            SetSpec::Ball { center, .. } => center.len(),
            SetSpec::Halfspace { normal, .. } => normal.len(),
            SetSpec::Intersection(members) => members[0].dim(),
            SetSpec::WholeSpace { dim } => *dim,
        }
    }

    /// Membership test with an absolute slack on every defining inequality.
    pub fn contains(&self, x: &Vector, tol: f64) -> bool {
        match self {
            SetSpec::Box { lo, hi } => x
                .iter()
                .enumerate()
                .all(|(i, t)| *t >= lo[i] - tol && *t <= hi[i] + tol),
            SetSpec::Ball { center, radius } => {
                euclid_dist(x, center) <= radius + tol
            }
            SetSpec::Halfspace { normal, offset } => pairing(x, normal) <= offset + tol,
            SetSpec::Intersection(members) => members.iter().all(|m| m.contains(x, tol)),
            SetSpec::WholeSpace { .. } => true,
        }
    }

    /// A deterministic point used to seed feasibility probes and samplers:
    /// the center of the set when one is obvious.
    pub fn anchor_point(&self) -> Vector {
        match self {
            SetSpec::Box { lo, hi } => Vector::new(
                lo.iter().zip(hi.iter()).map(|(a, b)| 0.5 * (a + b)).collect(),
            ),
            SetSpec::Ball { center, .. } => center.clone(),
            SetSpec::Halfspace { normal, offset } => {
                // Foot of the perpendicular from the origin, pulled inside.
                let n2: f64 = normal.iter().map(|t| t * t).sum();
                let t = (offset - 1.0) / n2;
                let foot = Vector::new(normal.iter().map(|a| a * t.min(0.0)).collect());
                if pairing(&foot, normal) <= *offset {
                    foot
                } else {
                    Vector::new(normal.iter().map(|a| a * (offset / n2)).collect())
                }
            }
            SetSpec::Intersection(members) => {
                let dim = self.dim();
                let mut acc = vec![0.0; dim];
                for m in members {
                    let a = m.anchor_point();
                    for (s, t) in acc.iter_mut().zip(a.iter()) {
                        *s += t / members.len() as f64;
                    }
                }
                Vector::new(acc)
            }
            SetSpec::WholeSpace { dim } => Vector::zeros(*dim),
        }
    }

    /// Draw a feasible point, roughly uniform over the bounded sets.
    /// Rejection sampling against a bounding box, with a projection fallback
    /// for thin intersections.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vector {
        match self {
            SetSpec::Box { lo, hi } => Vector::new(
                lo.iter()
                    .zip(hi.iter())
                    .map(|(a, b)| if a == b { *a } else { rng.gen_range(*a..=*b) })
                    .collect(),
            ),
            SetSpec::Ball { center, radius } => loop {
                let cand: Vec<f64> = center
                    .iter()
                    .map(|c| rng.gen_range(c - radius..=c + radius))
                    .collect();
                let cand = Vector::new(cand);
                if euclid_dist(&cand, center) <= *radius {
                    return cand;
                }
            },
            SetSpec::Halfspace { normal, offset } => {
                let anchor = self.anchor_point();
                let span = 2.0 + anchor.iter().map(|t| t.abs()).fold(0.0, f64::max);
                for _ in 0..200 {
                    let cand = Vector::new(
                        anchor.iter().map(|c| rng.gen_range(c - span..=c + span)).collect(),
                    );
                    if pairing(&cand, normal) <= *offset {
                        return cand;
                    }
                }
                anchor
            }
            SetSpec::Intersection(_) => {
                let anchor = self.anchor_point();
                let span = 2.0 + anchor.iter().map(|t| t.abs()).fold(0.0, f64::max);
                for _ in 0..1000 {
                    let cand = Vector::new(
                        anchor.iter().map(|c| rng.gen_range(c - span..=c + span)).collect(),
                    );
                    if self.contains(&cand, 0.0) {
                        return cand;
                    }
                }
                // Thin set: project a random candidate instead.
                let cand = Vector::new(
                    anchor.iter().map(|c| rng.gen_range(c - span..=c + span)).collect(),
                );
                euclidean_project(self, &cand).unwrap_or(anchor)
            }
            SetSpec::WholeSpace { dim } => {
                Vector::new((0..*dim).map(|_| rng.gen_range(-10.0..=10.0)).collect())
            }
        }
    }

    /// Deterministic probe points used by residual certificates: extreme
    /// points plus a small interior lattice.
    pub fn probe_points(&self, around: &Vector) -> Vec<Vector> {
        let dim = self.dim();
        match self {
            SetSpec::Box { lo, hi } => {
                let per_axis: usize = match dim {
                    1 => 33,
                    2 => 9,
                    3 => 5,
                    _ => 3,
                };
                let mut pts = lattice(lo.as_slice(), hi.as_slice(), per_axis);
                pts.push(self.anchor_point());
                pts
            }
            SetSpec::Ball { center, radius } => {
                let mut pts = vec![center.clone()];
                for i in 0..dim {
                    for sign in [-1.0, 1.0] {
                        for frac in [0.5, 1.0] {
                            let mut c = center.as_slice().to_vec();
                            c[i] += sign * frac * radius;
                            pts.push(Vector::new(c));
                        }
                    }
                }
                pts
            }
            SetSpec::Halfspace { .. } | SetSpec::WholeSpace { .. } => {
                let span = 1.0 + 2.0 * around.iter().map(|t| t.abs()).fold(0.0, f64::max);
                let lo: Vec<f64> = around.iter().map(|t| t - span).collect();
                let hi: Vec<f64> = around.iter().map(|t| t + span).collect();
                let per_axis = if dim <= 2 { 9 } else { 3 };
                lattice(&lo, &hi, per_axis)
                    .into_iter()
                    .map(|p| euclidean_project(self, &p).expect("closed-form projection"))
                    .collect()
            }
            SetSpec::Intersection(members) => {
                let mut pts = Vec::new();
                for m in members {
                    for p in m.probe_points(around) {
                        if let Ok(z) = euclidean_project(self, &p) {
                            if self.contains(&z, 1e-9) {
                                pts.push(z);
                            }
                        }
                    }
                }
                pts.push(self.anchor_point());
                pts
            }
        }
    }

    /// Exact value of `max_{y in set} <y - z, g>` when the set admits a
    /// closed-form support function (boxes and balls; intersections give an
    /// upper bound by taking the smallest member value, which is still a
    /// sound convergence certificate).
    pub fn support_gap(&self, z: &Vector, g: &DualVector) -> Option<f64> {
        match self {
            SetSpec::Box { lo, hi } => Some(
                (0..z.len())
                    .map(|i| f64::max(g[i] * (lo[i] - z[i]), g[i] * (hi[i] - z[i])))
                    .sum(),
            ),
            SetSpec::Ball { center, radius } => {
                let gg: f64 = g.iter().map(|t| t * t).sum::<f64>().sqrt();
                Some(pairing(&center.sub(z), g) + radius * gg)
            }
            SetSpec::Intersection(members) => members
                .iter()
                .filter_map(|m| m.support_gap(z, g))
                .min_by(|a, b| a.partial_cmp(b).expect("finite support gaps")),
            SetSpec::Halfspace { .. } | SetSpec::WholeSpace { .. } => None,
        }
    }

    /// Exact `min_{y in set} <normal, y>` when available; used to detect
    /// empty cuts before projecting onto them.
    fn support_min(&self, normal: &DualVector) -> Option<f64> {
        match self {
            SetSpec::Box { lo, hi } => Some(
                (0..lo.len())
                    .map(|i| f64::min(normal[i] * lo[i], normal[i] * hi[i]))
                    .sum(),
            ),
            SetSpec::Ball { center, radius } => {
                let nn: f64 = normal.iter().map(|t| t * t).sum::<f64>().sqrt();
                Some(pairing(center, normal) - radius * nn)
            }
            SetSpec::Intersection(members) => members
                .iter()
                .filter_map(|m| m.support_min(normal))
                .max_by(|a, b| a.partial_cmp(b).expect("finite support minima")),
            SetSpec::Halfspace { .. } | SetSpec::WholeSpace { .. } => None,
        }
    }
}

fn euclid_dist(x: &Vector, y: &Vector) -> f64 {
    x.iter().zip(y.iter()).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
}

fn worst_violation(set: &SetSpec, x: &Vector) -> f64 {
    match set {
        SetSpec::Box { lo, hi } => x
            .iter()
            .enumerate()
            .map(|(i, t)| f64::max(lo[i] - t, t - hi[i]))
            .fold(0.0, f64::max),
        SetSpec::Ball { center, radius } => (euclid_dist(x, center) - radius).max(0.0),
        SetSpec::Halfspace { normal, offset } => (pairing(x, normal) - offset).max(0.0),
        SetSpec::Intersection(members) => members
            .iter()
            .map(|m| worst_violation(m, x))
            .fold(0.0, f64::max),
        SetSpec::WholeSpace { .. } => 0.0,
    }
}

fn lattice(lo: &[f64], hi: &[f64], per_axis: usize) -> Vec<Vector> {
    let dim = lo.len();
    let mut pts = Vec::new();
    let mut idx = vec![0usize; dim];
    loop {
        let p: Vec<f64> = (0..dim)
            .map(|i| {
                if per_axis == 1 {
                    0.5 * (lo[i] + hi[i])
                } else {
                    lo[i] + (hi[i] - lo[i]) * idx[i] as f64 / (per_axis - 1) as f64
                }
            })
            .collect();
        pts.push(Vector::new(p));
        let mut k = 0;
        loop {
            if k == dim {
                return pts;
            }
            idx[k] += 1;
            if idx[k] < per_axis {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

fn flatten<'a>(set: &'a SetSpec, out: &mut Vec<&'a SetSpec>) {
    match set {
        SetSpec::Intersection(members) => {
            for m in members {
                flatten(m, out);
            }
        }
        other => out.push(other),
    }
}

/// Metric (euclidean) projection onto the set. Exact for boxes, balls,
/// half-spaces and box-with-half-space intersections; Dykstra otherwise.
pub fn euclidean_project(set: &SetSpec, x: &Vector) -> Result<Vector, ProjectionError> {
    match set {
        SetSpec::Box { lo, hi } => Ok(clamp_box(x, lo, hi)),
        SetSpec::Ball { center, radius } => {
            let d = euclid_dist(x, center);
            if d <= *radius {
                Ok(x.clone())
            } else {
                let t = radius / d;
                Ok(Vector::new(
                    x.iter().zip(center.iter()).map(|(a, c)| c + (a - c) * t).collect(),
                ))
            }
        }
        SetSpec::Halfspace { normal, offset } => Ok(project_halfspace(x, normal, *offset)),
        SetSpec::WholeSpace { .. } => Ok(x.clone()),
        SetSpec::Intersection(_) => {
            let mut leaves = Vec::new();
            flatten(set, &mut leaves);
            if let Some(z) = project_box_halfspace_pair(&leaves, x) {
                return Ok(z);
            }
            dykstra(&leaves, x)
        }
    }
}

fn clamp_box(x: &Vector, lo: &Vector, hi: &Vector) -> Vector {
    Vector::new(
        x.iter()
            .enumerate()
            .map(|(i, t)| t.max(lo[i]).min(hi[i]))
            .collect(),
    )
}

fn project_halfspace(x: &Vector, normal: &DualVector, offset: f64) -> Vector {
    let slack = pairing(x, normal) - offset;
    if slack <= 0.0 {
        return x.clone();
    }
    let n2: f64 = normal.iter().map(|t| t * t).sum();
    let t = slack / n2;
    Vector::new(x.iter().zip(normal.iter()).map(|(a, b)| a - t * b).collect())
}

/// Exact projection onto `box  n  half-space` via the KKT multiplier: the
/// projection is `clamp(x - mu * a)` where `h(mu) = <a, clamp(x - mu a)>` is
/// continuous, piecewise linear and nonincreasing, so the multiplier solving
/// `h(mu) = b` is found by bisection.
fn project_box_halfspace_pair(leaves: &[&SetSpec], x: &Vector) -> Option<Vector> {
    if leaves.len() != 2 {
        return None;
    }
    let (bx, hs) = match (leaves[0], leaves[1]) {
        (b @ SetSpec::Box { .. }, h @ SetSpec::Halfspace { .. }) => (b, h),
        (h @ SetSpec::Halfspace { .. }, b @ SetSpec::Box { .. }) => (b, h),
        _ => return None,
    };
    let (lo, hi) = match bx {
        SetSpec::Box { lo, hi } => (lo, hi),
        _ => unreachable!(),
    };
    let (a, b) = match hs {
        SetSpec::Halfspace { normal, offset } => (normal, *offset),
        _ => unreachable!(),
    };
    let clamped = clamp_box(x, lo, hi);
    if pairing(&clamped, a) <= b {
        return Some(clamped);
    }
    let z_of = |mu: f64| {
        clamp_box(
            &Vector::new(x.iter().zip(a.iter()).map(|(t, n)| t - mu * n).collect()),
            lo,
            hi,
        )
    };
    let h = |mu: f64| pairing(&z_of(mu), a) - b;
    let mut mu_hi = 1.0;
    let mut grow = 0;
    while h(mu_hi) > 0.0 {
        mu_hi *= 2.0;
        grow += 1;
        if grow > 200 {
            // min over the box exceeds b: the pair is infeasible. Leave it
            // to the caller's feasibility checks; project onto the box.
            return Some(z_of(mu_hi));
        }
    }
    let (mut lo_mu, mut hi_mu) = (0.0f64, mu_hi);
    for _ in 0..BISECT_STEPS {
        let mid = 0.5 * (lo_mu + hi_mu);
        if h(mid) > 0.0 {
            lo_mu = mid;
        } else {
            hi_mu = mid;
        }
    }
    Some(z_of(0.5 * (lo_mu + hi_mu)))
}

/// Dykstra's alternating projection with correction terms. Converges to the
/// metric projection onto the intersection for closed convex members.
fn dykstra(leaves: &[&SetSpec], x: &Vector) -> Result<Vector, ProjectionError> {
    let dim = x.len();
    let mut z = x.clone();
    let mut corrections = vec![Vector::zeros(dim); leaves.len()];
    let mut last_residual = f64::INFINITY;
    for sweep in 0..DYKSTRA_CAP {
        let start = z.clone();
        for (m, corr) in leaves.iter().zip(corrections.iter_mut()) {
            let shifted = z.add(corr);
            let projected = euclidean_project(m, &shifted)?;
            *corr = shifted.sub(&projected);
            z = projected;
        }
        last_residual = euclid_dist(&start, &z);
        if last_residual <= DYKSTRA_TOL {
            return Ok(z);
        }
        let _ = sweep;
    }
    Err(ProjectionError::DykstraStalled { residual: last_residual, iters: DYKSTRA_CAP })
}

/// Generalized projection `Pi_C x = argmin_{y in C} phi(y, x)`.
///
/// Coincides with the metric projection in euclidean space. In lp spaces,
/// boxes, half-spaces and box-with-half-space intersections are solved
/// exactly through their KKT systems; balls and other intersections run a
/// projected descent with an optimality certificate and report failure
/// honestly instead of returning a bad point.
pub fn generalized_project(
    space: &SpaceSpec,
    set: &SetSpec,
    x: &Vector,
) -> Result<Vector, ProjectionError> {
    assert!(
        space.dim() == set.dim() && space.dim() == x.len(),
        "dimension mismatch: space {}, set {}, point {}",
        space.dim(),
        set.dim(),
        x.len()
    );
    match space.norm_family() {
        NormFamily::Euclidean => euclidean_project(set, x),
        NormFamily::Lp(p) => {
            if set.contains(x, 0.0) {
                return Ok(x.clone());
            }
            match set {
                SetSpec::WholeSpace { .. } => Ok(x.clone()),
                SetSpec::Box { lo, hi } => Ok(lp_project_box(space, p, lo, hi, x)),
                SetSpec::Halfspace { normal, offset } => {
                    Ok(lp_project_halfspace(space, normal, *offset, x))
                }
                SetSpec::Intersection(members) => match members.as_slice() {
                    [SetSpec::Box { lo, hi }, SetSpec::Halfspace { normal, offset }]
                    | [SetSpec::Halfspace { normal, offset }, SetSpec::Box { lo, hi }] => {
                        lp_project_box_halfspace(space, p, lo, hi, normal, *offset, x)
                    }
                    _ => lp_project_descent(space, set, x),
                },
                SetSpec::Ball { .. } => lp_project_descent(space, set, x),
            }
        }
    }
}

/// Exact lp projection onto a box. With `s = ||z||^{2-p}` the KKT system
/// says each coordinate is the clamp of `sgn((Jx)_i) (|(Jx)_i| / s)^{1/(p-1)}`,
/// and the consistency gap `G(s) = ||z(s)||^{2-p} - s` is strictly
/// decreasing, so the right `s` is found by bisection.
fn lp_project_box(space: &SpaceSpec, p: f64, lo: &Vector, hi: &Vector, x: &Vector) -> Vector {
    lp_project_box_dual(p, lo, hi, &space.duality_map(x), space.norm(x))
}

/// The box projection in dual coordinates: minimizes `phi(z, J^{-1} jx)`
/// over the box, with `norm_x` the primal norm of the preimage (any upper
/// bound works; it only seeds the bracket).
fn lp_project_box_dual(p: f64, lo: &Vector, hi: &Vector, jx: &DualVector, norm_x: f64) -> Vector {
    let z_of = |s: f64| -> Vector {
        let coords: Vec<f64> = (0..jx.len())
            .map(|i| {
                let unclamped = if jx[i] == 0.0 {
                    0.0
                } else if s == 0.0 {
                    jx[i].signum() * f64::INFINITY
                } else {
                    jx[i].signum() * (jx[i].abs() / s).powf(1.0 / (p - 1.0))
                };
                unclamped.max(lo[i]).min(hi[i])
            })
            .collect();
        Vector::new(coords)
    };
    let g = |s: f64| -> f64 {
        let z = z_of(s);
        let n = z.iter().map(|t| t.abs().powf(p)).sum::<f64>().powf(1.0 / p);
        n.powf(2.0 - p) - s
    };
    let mut s_hi = 1.0f64.max(norm_x.powf(2.0 - p));
    let mut grow = 0;
    while g(s_hi) > 0.0 && grow < 400 {
        s_hi *= 2.0;
        grow += 1;
    }
    let (mut a, mut b) = (0.0f64, s_hi);
    for _ in 0..BISECT_STEPS {
        let mid = 0.5 * (a + b);
        if g(mid) > 0.0 {
            a = mid;
        } else {
            b = mid;
        }
    }
    z_of(0.5 * (a + b))
}

/// Exact lp projection onto a half-space: the KKT system is
/// `Jz = Jx - mu a, <a, z> = b, mu >= 0`, and `mu -> <a, J^{-1}(Jx - mu a)>`
/// is strictly decreasing.
fn lp_project_halfspace(
    space: &SpaceSpec,
    normal: &DualVector,
    offset: f64,
    x: &Vector,
) -> Vector {
    let jx = space.duality_map(x);
    let z_of = |mu: f64| {
        let shifted = DualVector::new(
            jx.iter().zip(normal.iter()).map(|(j, a)| j - mu * a).collect(),
        );
        space.inverse_duality_map(&shifted)
    };
    let h = |mu: f64| pairing(&z_of(mu), normal) - offset;
    if h(0.0) <= 0.0 {
        return x.clone();
    }
    let mut mu_hi = 1.0;
    let mut grow = 0;
    while h(mu_hi) > 0.0 && grow < 400 {
        mu_hi *= 2.0;
        grow += 1;
    }
    let (mut a, mut b) = (0.0f64, mu_hi);
    for _ in 0..BISECT_STEPS {
        let mid = 0.5 * (a + b);
        if h(mid) > 0.0 {
            a = mid;
        } else {
            b = mid;
        }
    }
    z_of(0.5 * (a + b))
}

/// Exact lp projection onto a box intersected with one half-space, the
/// shape every cut set takes. The outer KKT multiplier `mu >= 0` of the
/// half-space shifts the dual point to `Jx - mu a` and the inner problem is
/// the exact box projection of that shift; `mu -> <a, z(mu)>` is
/// nonincreasing (add the two variational characterisations and use the
/// monotonicity of the duality map), so complementarity is a bisection.
fn lp_project_box_halfspace(
    space: &SpaceSpec,
    p: f64,
    lo: &Vector,
    hi: &Vector,
    normal: &DualVector,
    offset: f64,
    x: &Vector,
) -> Result<Vector, ProjectionError> {
    let jx = space.duality_map(x);
    let z_of = |mu: f64| -> Vector {
        let shifted = DualVector::new(
            jx.iter().zip(normal.iter()).map(|(j, a)| j - mu * a).collect(),
        );
        let bound = space.dual_norm(&shifted);
        lp_project_box_dual(p, lo, hi, &shifted, bound)
    };
    let h = |mu: f64| pairing(&z_of(mu), normal) - offset;
    if h(0.0) <= 0.0 {
        return Ok(z_of(0.0));
    }
    let support: f64 = (0..x.len())
        .map(|i| f64::min(normal[i] * lo[i], normal[i] * hi[i]))
        .sum();
    if support > offset {
        return Err(ProjectionError::InfeasibleCut { support, rhs: offset });
    }
    let mut mu_hi = 1.0;
    let mut grow = 0;
    while h(mu_hi) > 0.0 && grow < 400 {
        mu_hi *= 2.0;
        grow += 1;
    }
    if h(mu_hi) > 0.0 {
        // Met only in the limit: the feasible region is a sliver of the
        // box boundary that the dual shift cannot reach at finite mu.
        return Err(ProjectionError::DescentStalled { residual: h(mu_hi), tol: DESCENT_TOL });
    }
    let (mut a, mut b) = (0.0f64, mu_hi);
    for _ in 0..BISECT_STEPS {
        let mid = 0.5 * (a + b);
        if h(mid) > 0.0 {
            a = mid;
        } else {
            b = mid;
        }
    }
    // Take the feasible end of the bracket so the half-space holds exactly.
    Ok(z_of(b))
}

/// Projected first-order descent on `y -> phi(y, x)` over the euclidean
/// geometry of the set, with proximal-gradient sufficient decrease and an
/// exact support-function certificate
/// `max_{y in C} <y - z, Jx - Jz> <= tol` as the stopping rule.
fn lp_project_descent(
    space: &SpaceSpec,
    set: &SetSpec,
    x: &Vector,
) -> Result<Vector, ProjectionError> {
    let jx = space.duality_map(x);
    let value = |y: &Vector| space.phi(y, x);
    let grad = |y: &Vector| -> Vector {
        let jy = space.duality_map(y);
        Vector::new(jy.iter().zip(jx.iter()).map(|(a, b)| 2.0 * (a - b)).collect())
    };
    let residual = |y: &Vector| -> f64 {
        let jy = space.duality_map(y);
        let g = DualVector::new(jx.iter().zip(jy.iter()).map(|(a, b)| a - b).collect());
        set.support_gap(y, &g).unwrap_or(f64::INFINITY)
    };

    let mut y = euclidean_project(set, x)?;
    let mut t = 0.5;
    let mut best_res = f64::INFINITY;
    for iter in 0..DESCENT_CAP {
        let fy = value(&y);
        let gy = grad(&y);
        let mut accepted = None;
        for _ in 0..80 {
            let cand = euclidean_project(set, &y.sub(&gy.scale(t)))?;
            let d = cand.sub(&y);
            let dd: f64 = d.iter().map(|a| a * a).sum();
            let lin = pairing(&d, &DualVector::new(gy.as_slice().to_vec()));
            if value(&cand) <= fy + lin + dd / (2.0 * t) + 1e-15 * (1.0 + fy.abs()) {
                accepted = Some((cand, dd.sqrt()));
                break;
            }
            t *= 0.5;
        }
        let (next, moved) = match accepted {
            Some(v) => v,
            None => (y.clone(), 0.0),
        };
        y = next;
        t = (t * 2.0).min(1e6);
        if moved <= 1e-15 * (1.0 + space.norm(&y)) || iter % 25 == 0 {
            let r = residual(&y);
            best_res = best_res.min(r);
            if r <= DESCENT_TOL {
                return Ok(y);
            }
            if moved == 0.0 && r > DESCENT_TOL {
                // Line search exhausted without reaching the certificate.
                return Err(ProjectionError::DescentStalled { residual: r, tol: DESCENT_TOL });
            }
        }
    }
    Err(ProjectionError::DescentStalled { residual: best_res, tol: DESCENT_TOL })
}

/// The half-space cut `{v in base : phi(v, w) <= phi(v, x)}` in linear form
/// `<v, normal> <= rhs` with `normal = Jx - Jw`, `rhs = (||x||^2 - ||w||^2)/2`.
#[derive(Clone, Debug)]
pub struct CutSet {
    pub base: SetSpec,
    pub normal: DualVector,
    pub rhs: f64,
}

/// Build the cut from the current iterate `x` and the comparison point `w`.
///
/// The right-hand side is `(||x||^2 - ||w||^2) / 2`, but evaluated through
/// the identity `||x||^2 - ||w||^2 = <x, a> - <d, a> + <d, Jx>` with
/// `d = x - w`: every term is proportional to a small difference, so the
/// plane stays accurately placed when `x` and `w` nearly coincide (late
/// iterations). The naive two-square form loses the plane position to
/// roundoff of order `eps ||x||^2 / ||a||`, which a projection then
/// amplifies into visible iterate jumps. In euclidean space the stable
/// form reduces to the perpendicular bisector `<x - w, (x + w) / 2>`.
pub fn cut_set(space: &SpaceSpec, base: &SetSpec, x: &Vector, w: &Vector) -> CutSet {
    let jx = space.duality_map(x);
    let jw = space.duality_map(w);
    let normal = jx.sub(&jw);
    let d = x.sub(w);
    let rhs = 0.5 * (pairing(x, &normal) - pairing(&d, &normal) + pairing(&d, &jx));
    CutSet { base: base.clone(), normal, rhs }
}

impl CutSet {
    /// Membership with slack `tol` on both the base set and the cut
    /// inequality.
    pub fn contains(&self, v: &Vector, tol: f64) -> bool {
        self.base.contains(v, tol) && pairing(v, &self.normal) <= self.rhs + tol
    }

    /// The cut as a plain set (base intersected with the half-space), or
    /// just the base when the cut is degenerate (zero normal, nonnegative
    /// right-hand side, i.e. the inequality holds everywhere).
    fn as_set(&self) -> Result<SetSpec, ProjectionError> {
        let degenerate = self.normal.iter().all(|t| *t == 0.0);
        if degenerate {
            return if self.rhs >= 0.0 {
                Ok(self.base.clone())
            } else {
                Err(ProjectionError::InfeasibleCut { support: 0.0, rhs: self.rhs })
            };
        }
        if let Some(smin) = self.base.support_min(&self.normal) {
            let scale = 1.0 + smin.abs() + self.rhs.abs();
            if smin > self.rhs + 1e-9 * scale {
                return Err(ProjectionError::InfeasibleCut { support: smin, rhs: self.rhs });
            }
        }
        let half = SetSpec::Halfspace { normal: self.normal.clone(), offset: self.rhs };
        Ok(match &self.base {
            SetSpec::WholeSpace { .. } => half,
            base => SetSpec::Intersection(vec![base.clone(), half]),
        })
    }
}

/// Generalized projection onto a cut set, with an infeasibility check first.
pub fn project_onto_cut(
    space: &SpaceSpec,
    cut: &CutSet,
    x: &Vector,
) -> Result<Vector, ProjectionError> {
    let set = cut.as_set()?;
    generalized_project(space, &set, x)
}
