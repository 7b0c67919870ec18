//! Problem instances: monotone operators, equilibrium bifunctions, anchor
//! maps, and a registry of packaged problems.
//!
//! A [`ProblemSpec`] bundles a space, a feasible set C, an operator
//! A: E -> E* that is alpha-inverse-strongly monotone
//! (`<Ax - Ay, x - y> >= alpha ||Ax - Ay||_*^2`), an optional equilibrium
//! bifunction, an optional contraction used as the anchor in the viscosity
//! step, and an optional known solution for diagnostics. The standing
//! assumptions are not certifiable symbolically for arbitrary callables, so
//! this module ships numeric spot checks (`verify_*`) that sample the
//! feasible set with a caller-seeded generator and report worst margins.

use crate::geometry::{pairing, DualVector, SpaceSpec, Vector};
use crate::sets::SetSpec;
use rand::Rng;
use std::fmt;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ProblemError {
    #[error("point lies outside the feasible set")]
    OutsideFeasibleSet,
    #[error("problem has no bifunction")]
    MissingBifunction,
}

/// Dense row-major matrix, just big enough for the affine operators used
/// here (dimensions stay in single digits).
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert!(data.len() == rows * cols, "matrix data length mismatch");
        Self { rows, cols, data }
    }

    pub fn identity(n: usize) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = 1.0;
        }
        Self::new(n, n, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn mul(&self, x: &[f64]) -> Vec<f64> {
        assert!(x.len() == self.cols, "dimension mismatch: matrix cols {} vs {}", self.cols, x.len());
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self.data[i * self.cols + j] * x[j]).sum())
            .collect()
    }
}

type OperatorFn = Arc<dyn Fn(&Vector) -> DualVector + Send + Sync>;
type BifunctionFn = Arc<dyn Fn(&Vector, &Vector) -> f64 + Send + Sync>;
type MapFn = Arc<dyn Fn(&Vector) -> Vector + Send + Sync>;

/// The operator A: E -> E*, identified coordinatewise.
#[derive(Clone)]
pub enum OperatorKind {
    /// `Ax = x` on coordinates (not the duality map).
    Identity,
    /// `Ax = Mx + b` on coordinates.
    Affine { matrix: Matrix, offset: Vec<f64> },
    Custom(OperatorFn),
}

impl fmt::Debug for OperatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OperatorKind::Identity => write!(f, "Identity"),
            OperatorKind::Affine { matrix, offset } => {
                write!(f, "Affine {{ matrix: {matrix:?}, offset: {offset:?} }}")
            }
            OperatorKind::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

/// Operator together with its claimed inverse-strong-monotonicity modulus.
/// The modulus is a claim: `verify_ism` spot-checks it.
#[derive(Clone, Debug)]
pub struct OperatorSpec {
    pub kind: OperatorKind,
    ism_alpha: f64,
}

impl OperatorSpec {
    pub fn new(kind: OperatorKind, ism_alpha: f64) -> Self {
        assert!(ism_alpha > 0.0, "ism modulus must be positive, got {ism_alpha}");
        Self { kind, ism_alpha }
    }

    pub fn identity(ism_alpha: f64) -> Self {
        Self::new(OperatorKind::Identity, ism_alpha)
    }

    pub fn affine(matrix: Matrix, offset: Vec<f64>, ism_alpha: f64) -> Self {
        assert!(matrix.rows() == offset.len(), "affine offset length mismatch");
        Self::new(OperatorKind::Affine { matrix, offset }, ism_alpha)
    }

    pub fn custom(f: OperatorFn, ism_alpha: f64) -> Self {
        Self::new(OperatorKind::Custom(f), ism_alpha)
    }

    pub fn ism_alpha(&self) -> f64 {
        self.ism_alpha
    }

    /// Structurally Lipschitz kinds (identity, affine). Custom callables are
    /// treated as unknown.
    pub fn is_known_lipschitz(&self) -> bool {
        !matches!(self.kind, OperatorKind::Custom(_))
    }

    pub fn apply(&self, x: &Vector) -> DualVector {
        match &self.kind {
            OperatorKind::Identity => DualVector::new(x.as_slice().to_vec()),
            OperatorKind::Affine { matrix, offset } => {
                let mut out = matrix.mul(x.as_slice());
                for (o, b) in out.iter_mut().zip(offset) {
                    *o += b;
                }
                DualVector::new(out)
            }
            OperatorKind::Custom(f) => f(x),
        }
    }
}

/// Equilibrium bifunction kinds. `ScalarQuadratic { a, b, c }` is
/// `F(u, y) = a ||y||^2 + b <u, y> + c ||u||^2` (coordinate dot products),
/// the family the packaged example draws from; it satisfies the equilibrium
/// axioms when `a >= 0`, `b >= 0` and `a + b + c = 0`.
#[derive(Clone)]
pub enum BifunctionKind {
    Zero,
    ScalarQuadratic { a: f64, b: f64, c: f64 },
    Custom(BifunctionFn),
}

impl fmt::Debug for BifunctionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BifunctionKind::Zero => write!(f, "Zero"),
            BifunctionKind::ScalarQuadratic { a, b, c } => {
                write!(f, "ScalarQuadratic {{ a: {a}, b: {b}, c: {c} }}")
            }
            BifunctionKind::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct BifunctionSpec {
    pub kind: BifunctionKind,
}

impl BifunctionSpec {
    pub fn zero() -> Self {
        Self { kind: BifunctionKind::Zero }
    }

    pub fn scalar_quadratic(a: f64, b: f64, c: f64) -> Self {
        Self { kind: BifunctionKind::ScalarQuadratic { a, b, c } }
    }

    pub fn custom(f: BifunctionFn) -> Self {
        Self { kind: BifunctionKind::Custom(f) }
    }

    pub fn eval(&self, u: &Vector, y: &Vector) -> f64 {
        match &self.kind {
            BifunctionKind::Zero => 0.0,
            BifunctionKind::ScalarQuadratic { a, b, c } => {
                let yy: f64 = y.iter().map(|t| t * t).sum();
                let uy: f64 = u.iter().zip(y.iter()).map(|(s, t)| s * t).sum();
                let uu: f64 = u.iter().map(|t| t * t).sum();
                a * yy + b * uy + c * uu
            }
            BifunctionKind::Custom(f) => f(u, y),
        }
    }

    /// Gradient of `y -> F(u, y)` at `y = u`, the direction the resolvent
    /// solvers need. Analytic for the structured kinds, central differences
    /// for custom callables.
    pub fn grad_y_at_diagonal(&self, u: &Vector) -> DualVector {
        match &self.kind {
            BifunctionKind::Zero => DualVector::zeros(u.len()),
            BifunctionKind::ScalarQuadratic { a, b, .. } => {
                DualVector::new(u.iter().map(|t| (2.0 * a + b) * t).collect())
            }
            BifunctionKind::Custom(f) => {
                let h = 1e-6;
                let coords = (0..u.len())
                    .map(|i| {
                        let mut up = u.as_slice().to_vec();
                        let mut dn = u.as_slice().to_vec();
                        up[i] += h;
                        dn[i] -= h;
                        (f(u, &Vector::new(up)) - f(u, &Vector::new(dn))) / (2.0 * h)
                    })
                    .collect();
                DualVector::new(coords)
            }
        }
    }
}

/// Anchor map for the viscosity step; expected to be a contraction whose
/// fixed point lies in the solution set of the problem it is attached to.
#[derive(Clone)]
pub enum MapKind {
    Identity,
    /// `f(x) = t x`.
    Scaling(f64),
    Custom(MapFn),
}

impl fmt::Debug for MapKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MapKind::Identity => write!(f, "Identity"),
            MapKind::Scaling(t) => write!(f, "Scaling({t})"),
            MapKind::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct MapSpec {
    pub kind: MapKind,
}

impl MapSpec {
    pub fn identity() -> Self {
        Self { kind: MapKind::Identity }
    }

    pub fn scaling(t: f64) -> Self {
        Self { kind: MapKind::Scaling(t) }
    }

    /// Contraction toward an anchor point: `f(x) = anchor + t (x - anchor)`.
    pub fn toward(anchor: Vector, t: f64) -> Self {
        Self {
            kind: MapKind::Custom(Arc::new(move |x: &Vector| {
                anchor.add(&x.sub(&anchor).scale(t))
            })),
        }
    }

    pub fn custom(f: MapFn) -> Self {
        Self { kind: MapKind::Custom(f) }
    }

    pub fn apply(&self, x: &Vector) -> Vector {
        match &self.kind {
            MapKind::Identity => x.clone(),
            MapKind::Scaling(t) => x.scale(*t),
            MapKind::Custom(f) => f(x),
        }
    }
}

/// A full problem instance.
#[derive(Clone, Debug)]
pub struct ProblemSpec {
    pub space: SpaceSpec,
    pub feasible: SetSpec,
    pub operator: OperatorSpec,
    pub bifunction: Option<BifunctionSpec>,
    pub map: Option<MapSpec>,
    pub known_solution: Option<Vector>,
}

impl ProblemSpec {
    /// Evaluate the operator. Points outside C are allowed (the forward
    /// steps may query slightly outside before projecting) but logged, since
    /// the monotonicity assumptions only hold on C.
    pub fn apply_operator(&self, x: &Vector) -> DualVector {
        if log::log_enabled!(log::Level::Debug) && !self.feasible.contains(x, 1e-9) {
            log::debug!("operator evaluated outside the feasible set at {x}");
        }
        self.operator.apply(x)
    }

    pub fn apply_map(&self, x: &Vector) -> Option<Vector> {
        self.map.as_ref().map(|m| m.apply(x))
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }
}

/// Result of one numeric verification: the worst margin observed and
/// whether it clears the tolerance. Margins are oriented so that
/// nonnegative (up to tolerance) means the property holds.
#[derive(Clone, Debug)]
pub struct CheckReport {
    pub name: &'static str,
    pub pass: bool,
    pub worst_margin: f64,
    pub samples: usize,
    pub detail: String,
}

impl CheckReport {
    fn from_margin(name: &'static str, worst: f64, samples: usize, tol: f64, detail: String) -> Self {
        CheckReport { name, pass: worst >= -tol, worst_margin: worst, samples, detail }
    }
}

impl fmt::Display for CheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "check {}: {} (worst margin {:.3e} over {} samples{})",
            self.name,
            if self.pass { "PASS" } else { "FAIL" },
            self.worst_margin,
            self.samples,
            if self.detail.is_empty() { String::new() } else { format!(", {}", self.detail) }
        )
    }
}

/// Spot-check inverse strong monotonicity of the operator on C:
/// `<Ax - Ay, x - y> - alpha ||Ax - Ay||_*^2 >= -tol` over sampled pairs.
pub fn verify_ism<R: Rng + ?Sized>(
    problem: &ProblemSpec,
    samples: usize,
    tol: f64,
    rng: &mut R,
) -> CheckReport {
    let mut worst = f64::INFINITY;
    for _ in 0..samples {
        let x = problem.feasible.sample(rng);
        let y = problem.feasible.sample(rng);
        let ax = problem.operator.apply(&x);
        let ay = problem.operator.apply(&y);
        let d = ax.sub(&ay);
        let lhs = pairing(&x.sub(&y), &d);
        let dn = problem.space.dual_norm(&d);
        worst = worst.min(lhs - problem.operator.ism_alpha() * dn * dn);
    }
    CheckReport::from_margin(
        "ism",
        worst,
        samples,
        tol,
        format!("alpha = {}", problem.operator.ism_alpha()),
    )
}

/// Spot-check the norm comparison `||Ax||_* <= ||Ax - A u_hat||_*` on C,
/// which (taking x = u_hat) forces `A u_hat = 0`.
pub fn verify_norm_condition<R: Rng + ?Sized>(
    problem: &ProblemSpec,
    u_hat: &Vector,
    samples: usize,
    tol: f64,
    rng: &mut R,
) -> CheckReport {
    let au = problem.operator.apply(u_hat);
    let mut worst = f64::INFINITY;
    for _ in 0..samples {
        let x = problem.feasible.sample(rng);
        let ax = problem.operator.apply(&x);
        let margin = problem.space.dual_norm(&ax.sub(&au)) - problem.space.dual_norm(&ax);
        worst = worst.min(margin);
    }
    // The condition at x = u_hat itself reads ||A u_hat|| <= 0.
    worst = worst.min(-problem.space.dual_norm(&au));
    CheckReport::from_margin("norm_condition", worst, samples + 1, tol, String::new())
}

/// Spot-check the four equilibrium axioms of a bifunction on C:
/// vanishing diagonal, monotonicity, upper hemicontinuity along segments,
/// and convexity in the second argument.
pub fn verify_bifunction_axioms<R: Rng + ?Sized>(
    problem: &ProblemSpec,
    samples: usize,
    tol: f64,
    rng: &mut R,
) -> Result<Vec<CheckReport>, ProblemError> {
    let bif = problem.bifunction.as_ref().ok_or(ProblemError::MissingBifunction)?;
    let set = &problem.feasible;
    let (mut w1, mut w2, mut w3, mut w4) = (f64::INFINITY, f64::INFINITY, f64::INFINITY, f64::INFINITY);
    for _ in 0..samples {
        let x = set.sample(rng);
        let y = set.sample(rng);
        let z = set.sample(rng);
        // (A1) F(x, x) = 0.
        w1 = w1.min(-bif.eval(&x, &x).abs());
        // (A2) monotone: F(x, y) + F(y, x) <= 0.
        w2 = w2.min(-(bif.eval(&x, &y) + bif.eval(&y, &x)));
        // (A3) hemicontinuity along x -> z: the overshoot above the
        // endpoint value must vanish with t. A ratio test separates the
        // O(t) drift of any continuous bifunction from an O(1) jump: the
        // overshoot at t = 1e-6 may not exceed one percent of the
        // overshoot at t = 1e-3.
        let fxy = bif.eval(&x, &y);
        let overshoot = |t: f64| bif.eval(&x.add(&z.sub(&x).scale(t)), &y) - fxy;
        let scale = 1.0 + fxy.abs();
        w3 = w3.min((0.01 * overshoot(1e-3).abs() + 1e-9 * scale - overshoot(1e-6)) / scale);
        // (A4) convex in y.
        let s: f64 = rng.gen_range(0.0..=1.0);
        let ys = y.add(&z.sub(&y).scale(s));
        w4 = w4.min((1.0 - s) * bif.eval(&x, &y) + s * bif.eval(&x, &z) - bif.eval(&x, &ys));
    }
    Ok(vec![
        CheckReport::from_margin("bifunction_diagonal", w1, samples, tol, String::new()),
        CheckReport::from_margin("bifunction_monotone", w2, samples, tol, String::new()),
        CheckReport::from_margin("bifunction_hemicontinuous", w3, samples, tol, String::new()),
        CheckReport::from_margin("bifunction_convex", w4, samples, tol, String::new()),
    ])
}

/// Spot-check that `q` solves the problem: `F(q, y) + <Aq, y - q> >= -tol`
/// over sampled feasible `y` (the bifunction term drops out when absent).
pub fn verify_vi_membership<R: Rng + ?Sized>(
    problem: &ProblemSpec,
    q: &Vector,
    samples: usize,
    tol: f64,
    rng: &mut R,
) -> Result<CheckReport, ProblemError> {
    if !problem.feasible.contains(q, 1e-9) {
        return Err(ProblemError::OutsideFeasibleSet);
    }
    let aq = problem.operator.apply(q);
    let mut worst = f64::INFINITY;
    let mut check = |y: &Vector| {
        let mut v = pairing(&y.sub(q), &aq);
        if let Some(b) = &problem.bifunction {
            v += b.eval(q, y);
        }
        worst = worst.min(v);
    };
    for _ in 0..samples {
        let y = problem.feasible.sample(rng);
        check(&y);
    }
    for y in problem.feasible.probe_points(q) {
        check(&y);
    }
    Ok(CheckReport::from_margin("vi_membership", worst, samples, tol, String::new()))
}

/// A packaged problem with defaults for the harness.
#[derive(Clone, Debug)]
pub struct RegisteredProblem {
    pub id: &'static str,
    pub problem: ProblemSpec,
    pub default_x0: Vector,
    /// Resolvent parameter the packaged runs use (alg2 only).
    pub default_r: Option<f64>,
    /// True when `default_r` was inferred from the source material rather
    /// than stated.
    pub r_inferred: bool,
    /// False for instances that are deliberately mis-specified (used to
    /// exercise the verification failure paths).
    pub expected_valid: bool,
    pub description: &'static str,
}

fn interval(lo: f64, hi: f64) -> SetSpec {
    SetSpec::interval(lo, hi).expect("valid interval")
}

fn box2(lo: f64, hi: f64) -> SetSpec {
    SetSpec::box_set(Vector::new(vec![lo, lo]), Vector::new(vec![hi, hi])).expect("valid box")
}

/// The packaged problems.
///
/// Every entry with a known solution pairs it with an anchor map fixing that
/// solution, so the viscosity step does not fight the projections near the
/// limit. `bad-alpha` overstates its monotonicity modulus on purpose; it is
/// the negative test for `verify_ism` and is marked `expected_valid: false`.
#[allow(clippy::vec_init_then_push)]
pub fn registry() -> Vec<RegisteredProblem> {
    let mut entries = Vec::new();

    entries.push(RegisteredProblem {
        id: "example-4-1",
        problem: ProblemSpec {
            space: SpaceSpec::euclidean(1),
            feasible: interval(-5.0, 5.0),
            operator: OperatorSpec::identity(1.0),
            bifunction: Some(BifunctionSpec::scalar_quadratic(16.0, 9.0, -25.0)),
            map: Some(MapSpec::scaling(1.0 / 3.0)),
            known_solution: Some(Vector::new(vec![0.0])),
        },
        default_x0: Vector::new(vec![5.0]),
        default_r: Some(1.0 / 42.0),
        r_inferred: true,
        expected_valid: true,
        description: "Scalar instance on [-5,5] with Ax = x, anchor x/3 and the quadratic \
                      bifunction 16 y^2 + 9 u y - 25 u^2; solution 0. The resolvent parameter \
                      1/42 is inferred from the resolvent closed form u = x / (42 r + 1).",
    });

    entries.push(RegisteredProblem {
        id: "affine-box-2d",
        problem: ProblemSpec {
            space: SpaceSpec::euclidean(2),
            feasible: box2(-2.0, 2.0),
            operator: OperatorSpec::affine(
                Matrix::new(2, 2, vec![2.0, 0.0, 0.0, 3.0]),
                vec![0.0, 0.0],
                1.0 / 3.0,
            ),
            bifunction: Some(BifunctionSpec::zero()),
            map: Some(MapSpec::scaling(1.0 / 3.0)),
            known_solution: Some(Vector::zeros(2)),
        },
        default_x0: Vector::new(vec![1.5, -1.0]),
        default_r: Some(0.2),
        r_inferred: false,
        expected_valid: true,
        description: "Euclidean plane, box [-2,2]^2, Ax = diag(2,3) x (ism modulus 1/3), \
                      zero bifunction; solution at the origin.",
    });

    entries.push(RegisteredProblem {
        id: "affine-shift-2d",
        problem: ProblemSpec {
            space: SpaceSpec::euclidean(2),
            feasible: box2(-2.0, 2.0),
            operator: OperatorSpec::affine(
                Matrix::new(2, 2, vec![2.0, 0.0, 0.0, 3.0]),
                vec![-2.0, -3.0],
                1.0 / 3.0,
            ),
            bifunction: Some(BifunctionSpec::zero()),
            map: Some(MapSpec::toward(Vector::new(vec![1.0, 1.0]), 1.0 / 3.0)),
            known_solution: Some(Vector::new(vec![1.0, 1.0])),
        },
        default_x0: Vector::new(vec![-1.5, 0.5]),
        default_r: Some(0.2),
        r_inferred: false,
        expected_valid: true,
        description: "Shifted affine operator diag(2,3) x - (2,3) on the box [-2,2]^2; the \
                      interior solution (1,1) exercises nonzero-solution paths.",
    });

    entries.push(RegisteredProblem {
        id: "rotation-box-2d",
        problem: ProblemSpec {
            space: SpaceSpec::euclidean(2),
            feasible: box2(-2.0, 2.0),
            operator: OperatorSpec::affine(
                Matrix::new(2, 2, vec![0.5, 1.0, -1.0, 0.5]),
                vec![0.0, 0.0],
                0.4,
            ),
            bifunction: Some(BifunctionSpec::zero()),
            map: Some(MapSpec::scaling(0.5)),
            known_solution: Some(Vector::zeros(2)),
        },
        default_x0: Vector::new(vec![1.5, 1.0]),
        default_r: Some(0.2),
        r_inferred: false,
        expected_valid: true,
        description: "Rotation-plus-damping operator [[0.5,1],[-1,0.5]] (ism modulus exactly \
                      0.4) on the box [-2,2]^2; solution at the origin.",
    });

    entries.push(RegisteredProblem {
        id: "lp15-box-2d",
        problem: ProblemSpec {
            space: SpaceSpec::lp(2, 1.5),
            feasible: box2(-1.0, 1.0),
            operator: OperatorSpec::identity(1.0),
            bifunction: Some(BifunctionSpec::zero()),
            map: Some(MapSpec::scaling(0.5)),
            known_solution: Some(Vector::zeros(2)),
        },
        default_x0: Vector::new(vec![0.8, -0.6]),
        default_r: Some(0.5),
        r_inferred: false,
        expected_valid: true,
        description: "lp(1.5) plane with the coordinate identity operator on the box [-1,1]^2; \
                      the duality map is genuinely nonlinear here. Solution at the origin.",
    });

    entries.push(RegisteredProblem {
        id: "lp15-affine-2d",
        problem: ProblemSpec {
            space: SpaceSpec::lp(2, 1.5),
            feasible: box2(-2.0, 2.0),
            operator: OperatorSpec::affine(
                Matrix::new(2, 2, vec![1.0, 0.3, -0.3, 1.0]),
                vec![0.0, 0.0],
                0.9,
            ),
            bifunction: Some(BifunctionSpec::zero()),
            map: Some(MapSpec::scaling(0.5)),
            known_solution: Some(Vector::zeros(2)),
        },
        default_x0: Vector::new(vec![1.0, 1.0]),
        default_r: Some(0.3),
        r_inferred: false,
        expected_valid: true,
        description: "lp(1.5) plane with a rotation-perturbed affine operator on [-2,2]^2 \
                      (ism modulus 0.9 < 1/1.09); solution at the origin.",
    });

    entries.push(RegisteredProblem {
        id: "bad-alpha",
        problem: ProblemSpec {
            space: SpaceSpec::euclidean(2),
            feasible: box2(-1.0, 1.0),
            operator: OperatorSpec::identity(2.0),
            bifunction: None,
            map: None,
            known_solution: None,
        },
        default_x0: Vector::new(vec![0.5, 0.5]),
        default_r: None,
        r_inferred: false,
        expected_valid: false,
        description: "Deliberately mis-specified: the identity operator is claimed to have \
                      ism modulus 2 (its true modulus is 1), so the ism check must fail.",
    });

    entries
}

/// Look up a packaged problem by id.
pub fn lookup(id: &str) -> Option<RegisteredProblem> {
    registry().into_iter().find(|e| e.id == id)
}
