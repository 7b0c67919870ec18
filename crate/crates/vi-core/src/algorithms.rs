//! Iterative solvers: two strongly convergent projection schemes and three
//! classical baselines, plus the shared schedule, stopping and trace types.
//!
//! Scheme 1 (three-weight viscosity extragradient):
//!
//! ```text
//! y_n = Pi_C J^{-1}(J x_n - lambda_n A x_n)
//! z_n =      J^{-1}(J y_n - lambda_n A y_n)        (no projection)
//! x_{n+1} = Pi_C J^{-1}(a_{n,1} J x_n + a_{n,2} J f(x_n) + a_{n,3} J z_n)
//! ```
//!
//! Scheme 2 (four weights, equilibrium resolvent and a cut set):
//!
//! ```text
//! u_n = resolvent of x_n at r_n
//! w_n = Pi_C J^{-1}(J u_n - lambda_n A u_n)
//! y_n = Pi_C J^{-1}(J x_n - lambda_n A x_n)
//! C_n = { v in C : phi(v, w_n) <= phi(v, x_n) }
//! z_n = Pi_{C_n} J^{-1}(J y_n - lambda_n A y_n)
//! x_{n+1} = Pi_C J^{-1}(sum_i a_{n,i} J [x_n, f(x_n), z_n, w_n]_i)
//! ```
//!
//! The baselines (Korpelevich's extragradient, Tseng's forward-backward-
//! forward, and Thong's viscosity variant with Armijo backtracking) are
//! euclidean-only.
//!
//! Step sizes for the two schemes match an alpha-inverse-strongly-monotone
//! operator: the estimates hold for `lambda <= c^2 alpha / 2`, so the
//! default rule caps the harmonic sequence at `0.99 c^2 alpha / 2`. The
//! uncapped harmonic rule is available for literal reproductions and logs a
//! warning while it exceeds the cap. All runs are deterministic.

use crate::geometry::{DualVector, SpaceSpec, Vector};
use crate::problems::ProblemSpec;
use crate::resolvent::resolvent;
use crate::sets::{cut_set, generalized_project, project_onto_cut};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ScheduleError {
    #[error("schedule has {got} weight rules, the scheme needs {expected}")]
    WrongAlphaCount { expected: usize, got: usize },
    #[error("weight bases must sum to 1, got {0}")]
    AlphaBaseSum(f64),
    #[error("weight slopes must sum to 0, got {0}")]
    AlphaSlopeSum(f64),
    #[error("weight rule {index} leaves [0, 1] (base {base}, value at n=1 {at_one})")]
    AlphaOutOfRange { index: usize, base: f64, at_one: f64 },
    #[error("weight rules {i} and {j} must have positive limits (their product controls convergence)")]
    DegenerateWeightPair { i: usize, j: usize },
    #[error("capped harmonic rule needs kappa in (0, 1), got {0}")]
    BadKappa(f64),
    #[error("constant step size must be positive, got {0}")]
    NonPositiveLambda(f64),
    #[error("scheme needs a resolvent parameter r > 0")]
    MissingR,
    #[error("resolvent parameter must be positive, got {0}")]
    NonPositiveR(f64),
}

/// Step-size rule for the forward steps.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LambdaRule {
    Constant(f64),
    /// The literal `1/n`, which exceeds the stable cap for small n.
    Harmonic,
    /// `min(1/n, kappa * c^2 alpha / 2, 1)`, the default.
    CappedHarmonic { kappa: f64 },
}

impl LambdaRule {
    fn at(&self, n: usize, cap: f64) -> f64 {
        let harmonic = 1.0 / n as f64;
        match self {
            LambdaRule::Constant(v) => *v,
            LambdaRule::Harmonic => harmonic,
            LambdaRule::CappedHarmonic { kappa } => harmonic.min(kappa * cap).min(1.0),
        }
    }
}

/// Affine weight rule `a + b / n`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AlphaRule {
    pub base: f64,
    pub slope: f64,
}

impl AlphaRule {
    pub fn new(base: f64, slope: f64) -> Self {
        Self { base, slope }
    }

    pub fn at(&self, n: usize) -> f64 {
        self.base + self.slope / n as f64
    }
}

/// Full parameter schedule for one run.
#[derive(Clone, Debug)]
pub struct ScheduleSet {
    pub lambda: LambdaRule,
    pub alphas: Vec<AlphaRule>,
    /// Resolvent parameter, constant over the run (scheme 2 only).
    pub r: Option<f64>,
}

impl ScheduleSet {
    /// Default three-weight schedule: capped harmonic steps, equal weights.
    pub fn default_scheme1() -> Self {
        ScheduleSet {
            lambda: LambdaRule::CappedHarmonic { kappa: 0.99 },
            alphas: vec![AlphaRule::new(1.0 / 3.0, 0.0); 3],
            r: None,
        }
    }

    /// Default four-weight schedule: capped harmonic steps and the weight
    /// rules of the packaged scalar example.
    pub fn default_scheme2(r: f64) -> Self {
        ScheduleSet {
            lambda: LambdaRule::CappedHarmonic { kappa: 0.99 },
            alphas: vec![
                AlphaRule::new(0.25, 0.25),
                AlphaRule::new(0.25, -1.0 / 6.0),
                AlphaRule::new(0.25, 1.0 / 12.0),
                AlphaRule::new(0.25, -1.0 / 6.0),
            ],
            r: Some(r),
        }
    }

    /// Switch to the literal harmonic step rule.
    pub fn strict_steps(mut self) -> Self {
        self.lambda = LambdaRule::Harmonic;
        self
    }

    /// Validate the schedule for a scheme with `arms` weights. Returns
    /// advisory warnings (conditions the convergence theory wants in the
    /// limit but that do not make a single run ill-posed).
    pub fn validate(&self, arms: usize, require_r: bool) -> Result<Vec<String>, ScheduleError> {
        if self.alphas.len() != arms {
            return Err(ScheduleError::WrongAlphaCount { expected: arms, got: self.alphas.len() });
        }
        let base_sum: f64 = self.alphas.iter().map(|a| a.base).sum();
        if (base_sum - 1.0).abs() > 1e-12 {
            return Err(ScheduleError::AlphaBaseSum(base_sum));
        }
        let slope_sum: f64 = self.alphas.iter().map(|a| a.slope).sum();
        if slope_sum.abs() > 1e-12 {
            return Err(ScheduleError::AlphaSlopeSum(slope_sum));
        }
        for (index, a) in self.alphas.iter().enumerate() {
            let at_one = a.base + a.slope;
            let in_range = |t: f64| (-1e-12..=1.0 + 1e-12).contains(&t);
            if !in_range(a.base) || !in_range(at_one) {
                return Err(ScheduleError::AlphaOutOfRange { index, base: a.base, at_one });
            }
        }
        // The anchor weight times each corrector weight must stay away from
        // zero in the limit; with affine rules the limits are the bases.
        for j in 2..arms {
            if self.alphas[1].base * self.alphas[j].base <= 0.0 {
                return Err(ScheduleError::DegenerateWeightPair { i: 1, j });
            }
        }
        match self.lambda {
            LambdaRule::Constant(v) if v <= 0.0 => return Err(ScheduleError::NonPositiveLambda(v)),
            LambdaRule::CappedHarmonic { kappa } if !(kappa > 0.0 && kappa < 1.0) => {
                return Err(ScheduleError::BadKappa(kappa))
            }
            _ => {}
        }
        if require_r {
            match self.r {
                None => return Err(ScheduleError::MissingR),
                Some(r) if r <= 0.0 => return Err(ScheduleError::NonPositiveR(r)),
                _ => {}
            }
        }
        let mut warnings = Vec::new();
        if let LambdaRule::Constant(v) = self.lambda {
            warnings.push(format!(
                "constant step size {v} does not vanish; the strong convergence theory wants lambda_n -> 0"
            ));
        }
        Ok(warnings)
    }
}

/// Dual stopping rule: a run converges when both the step and the forward
/// residual fall below their tolerances; otherwise it stops at `max_iter`.
#[derive(Clone, Copy, Debug)]
pub struct StopRule {
    pub tol_step: f64,
    pub tol_residual: f64,
    pub max_iter: usize,
}

impl StopRule {
    pub fn new(tol_step: f64, tol_residual: f64, max_iter: usize) -> Self {
        Self { tol_step, tol_residual, max_iter }
    }

    // Negated comparisons so NaN tolerances fail validation too.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    fn validate(&self) -> Result<(), AlgorithmError> {
        if !(self.tol_step > 0.0) || !(self.tol_residual > 0.0) {
            return Err(AlgorithmError::BadStopRule(format!(
                "tolerances must be positive, got step {} and residual {}",
                self.tol_step, self.tol_residual
            )));
        }
        if self.max_iter == 0 {
            return Err(AlgorithmError::BadStopRule("max_iter must be at least 1".into()));
        }
        Ok(())
    }
}

impl Default for StopRule {
    fn default() -> Self {
        StopRule::new(1e-10, 1e-8, 500)
    }
}

/// One iteration of a run. `x` is the iterate the step started from; the
/// auxiliary points that a given scheme does not produce stay `None`.
#[derive(Clone, Debug)]
pub struct TraceRow {
    pub n: usize,
    pub x: Vector,
    pub y: Vector,
    pub z: Option<Vector>,
    pub w: Option<Vector>,
    pub u: Option<Vector>,
    pub lambda: f64,
    pub step_norm: f64,
    pub xy_residual: f64,
    /// `phi(known solution, x_n)` when the problem records a solution.
    pub phi_to_solution: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum RunStatus {
    Converged,
    MaxIter,
    /// A projection or resolvent failed mid-run; the rows up to the failure
    /// are preserved.
    Failed(String),
}

#[derive(Clone, Debug)]
pub struct IterateTrace {
    pub rows: Vec<TraceRow>,
    pub status: RunStatus,
    pub final_x: Vector,
}

impl IterateTrace {
    pub fn converged(&self) -> bool {
        self.status == RunStatus::Converged
    }

    pub fn iterations(&self) -> usize {
        self.rows.len()
    }
}

#[derive(Debug, Error)]
pub enum AlgorithmError {
    #[error("x0 lies outside the feasible set")]
    X0OutsideFeasibleSet,
    #[error("scheme needs an anchor map on the problem")]
    MissingMap,
    #[error("scheme needs a bifunction on the problem")]
    MissingBifunction,
    #[error("algorithm requires a euclidean space")]
    RequiresEuclidean,
    #[error("step size must be positive, got {0}")]
    NonPositiveLambda(f64),
    #[error("invalid stop rule: {0}")]
    BadStopRule(String),
    #[error("invalid schedule: {0}")]
    Schedule(#[from] ScheduleError),
    #[error("invalid line search: {0}")]
    BadLineSearch(String),
}

struct RunState {
    rows: Vec<TraceRow>,
    warned_cap: bool,
}

impl RunState {
    fn new() -> Self {
        Self { rows: Vec::new(), warned_cap: false }
    }

    fn note_step(&mut self, lambda: f64, cap: f64, n: usize) {
        if lambda > cap + 1e-15 && !self.warned_cap {
            log::warn!(
                "step size {lambda} at n = {n} exceeds the stable cap {cap}; the phi estimates do not cover these steps"
            );
            self.warned_cap = true;
        }
    }
}

fn check_start(problem: &ProblemSpec, x0: &Vector, stop: &StopRule) -> Result<(), AlgorithmError> {
    stop.validate()?;
    assert!(
        x0.len() == problem.dim(),
        "dimension mismatch: problem dim {}, x0 dim {}",
        problem.dim(),
        x0.len()
    );
    if !problem.feasible.contains(x0, 1e-9) {
        return Err(AlgorithmError::X0OutsideFeasibleSet);
    }
    Ok(())
}

/// Forward step `J^{-1}(J x - lambda A x)` without projection.
fn forward(space: &SpaceSpec, problem: &ProblemSpec, x: &Vector, lambda: f64) -> Vector {
    let jx = space.duality_map(x);
    let ax = problem.apply_operator(x);
    let shifted = DualVector::new(
        jx.iter().zip(ax.iter()).map(|(j, a)| j - lambda * a).collect(),
    );
    space.inverse_duality_map(&shifted)
}

fn phi_to_solution(problem: &ProblemSpec, x: &Vector) -> Option<f64> {
    problem.known_solution.as_ref().map(|s| problem.space.phi(s, x))
}

/// Scheme 1. Requires an anchor map on the problem.
pub fn run_algorithm1(
    problem: &ProblemSpec,
    schedule: &ScheduleSet,
    x0: &Vector,
    stop: &StopRule,
) -> Result<IterateTrace, AlgorithmError> {
    check_start(problem, x0, stop)?;
    let map = problem.map.as_ref().ok_or(AlgorithmError::MissingMap)?;
    for w in schedule.validate(3, false)? {
        log::warn!("{w}");
    }
    let space = &problem.space;
    let cap = space.step_cap(problem.operator.ism_alpha());
    let mut state = RunState::new();
    let mut x = x0.clone();
    let mut status = RunStatus::MaxIter;

    for n in 1..=stop.max_iter {
        let lambda = schedule.lambda.at(n, cap);
        state.note_step(lambda, cap, n);
        let a = [schedule.alphas[0].at(n), schedule.alphas[1].at(n), schedule.alphas[2].at(n)];

        let y = match generalized_project(space, &problem.feasible, &forward(space, problem, &x, lambda)) {
            Ok(v) => v,
            Err(e) => {
                status = RunStatus::Failed(e.to_string());
                break;
            }
        };
        let z = forward(space, problem, &y, lambda);
        let fx = map.apply(&x);
        let blend = DualVector::combine(&[
            (a[0], &space.duality_map(&x)),
            (a[1], &space.duality_map(&fx)),
            (a[2], &space.duality_map(&z)),
        ]);
        let next = match generalized_project(space, &problem.feasible, &space.inverse_duality_map(&blend)) {
            Ok(v) => v,
            Err(e) => {
                status = RunStatus::Failed(e.to_string());
                break;
            }
        };

        let step_norm = space.norm(&next.sub(&x));
        let xy_residual = space.norm(&x.sub(&y));
        state.rows.push(TraceRow {
            n,
            x: x.clone(),
            y,
            z: Some(z),
            w: None,
            u: None,
            lambda,
            step_norm,
            xy_residual,
            phi_to_solution: phi_to_solution(problem, &x),
        });
        x = next;
        if step_norm <= stop.tol_step && xy_residual <= stop.tol_residual {
            status = RunStatus::Converged;
            break;
        }
    }
    Ok(IterateTrace { rows: state.rows, status, final_x: x })
}

/// Scheme 2. Requires an anchor map, a bifunction and a resolvent parameter.
pub fn run_algorithm2(
    problem: &ProblemSpec,
    schedule: &ScheduleSet,
    x0: &Vector,
    stop: &StopRule,
) -> Result<IterateTrace, AlgorithmError> {
    check_start(problem, x0, stop)?;
    let map = problem.map.as_ref().ok_or(AlgorithmError::MissingMap)?;
    if problem.bifunction.is_none() {
        return Err(AlgorithmError::MissingBifunction);
    }
    for w in schedule.validate(4, true)? {
        log::warn!("{w}");
    }
    let r = schedule.r.expect("validated");
    let space = &problem.space;
    let cap = space.step_cap(problem.operator.ism_alpha());
    let mut state = RunState::new();
    let mut x = x0.clone();
    let mut status = RunStatus::MaxIter;

    'outer: for n in 1..=stop.max_iter {
        let lambda = schedule.lambda.at(n, cap);
        state.note_step(lambda, cap, n);
        let a: Vec<f64> = schedule.alphas.iter().map(|w| w.at(n)).collect();

        macro_rules! step {
            ($expr:expr) => {
                match $expr {
                    Ok(v) => v,
                    Err(e) => {
                        status = RunStatus::Failed(e.to_string());
                        break 'outer;
                    }
                }
            };
        }

        let u = step!(resolvent(problem, r, &x));
        let w = step!(generalized_project(space, &problem.feasible, &forward(space, problem, &u, lambda)));
        let y = step!(generalized_project(space, &problem.feasible, &forward(space, problem, &x, lambda)));
        let cut = cut_set(space, &problem.feasible, &x, &w);
        let z = step!(project_onto_cut(space, &cut, &forward(space, problem, &y, lambda)));
        let fx = map.apply(&x);
        let blend = DualVector::combine(&[
            (a[0], &space.duality_map(&x)),
            (a[1], &space.duality_map(&fx)),
            (a[2], &space.duality_map(&z)),
            (a[3], &space.duality_map(&w)),
        ]);
        let next = step!(generalized_project(space, &problem.feasible, &space.inverse_duality_map(&blend)));

        let step_norm = space.norm(&next.sub(&x));
        let xy_residual = space.norm(&x.sub(&y));
        state.rows.push(TraceRow {
            n,
            x: x.clone(),
            y,
            z: Some(z),
            w: Some(w),
            u: Some(u),
            lambda,
            step_norm,
            xy_residual,
            phi_to_solution: phi_to_solution(problem, &x),
        });
        x = next;
        if step_norm <= stop.tol_step && xy_residual <= stop.tol_residual {
            status = RunStatus::Converged;
            break;
        }
    }
    Ok(IterateTrace { rows: state.rows, status, final_x: x })
}

fn require_euclidean(problem: &ProblemSpec) -> Result<(), AlgorithmError> {
    if problem.space.is_euclidean() {
        Ok(())
    } else {
        Err(AlgorithmError::RequiresEuclidean)
    }
}

/// Korpelevich's extragradient method (euclidean only):
/// `y = P_C(x - lambda A x)`, `x+ = P_C(x - lambda A y)`.
pub fn run_korpelevich(
    problem: &ProblemSpec,
    lambda: f64,
    x0: &Vector,
    stop: &StopRule,
) -> Result<IterateTrace, AlgorithmError> {
    require_euclidean(problem)?;
    check_start(problem, x0, stop)?;
    if lambda <= 0.0 {
        return Err(AlgorithmError::NonPositiveLambda(lambda));
    }
    let space = &problem.space;
    let mut rows = Vec::new();
    let mut x = x0.clone();
    let mut status = RunStatus::MaxIter;
    for n in 1..=stop.max_iter {
        let y = match generalized_project(space, &problem.feasible, &forward(space, problem, &x, lambda)) {
            Ok(v) => v,
            Err(e) => {
                status = RunStatus::Failed(e.to_string());
                break;
            }
        };
        let ay = problem.apply_operator(&y);
        let shifted = Vector::new(
            x.iter().zip(ay.iter()).map(|(t, a)| t - lambda * a).collect(),
        );
        let next = match generalized_project(space, &problem.feasible, &shifted) {
            Ok(v) => v,
            Err(e) => {
                status = RunStatus::Failed(e.to_string());
                break;
            }
        };
        let step_norm = space.norm(&next.sub(&x));
        let xy_residual = space.norm(&x.sub(&y));
        rows.push(TraceRow {
            n,
            x: x.clone(),
            y,
            z: None,
            w: None,
            u: None,
            lambda,
            step_norm,
            xy_residual,
            phi_to_solution: phi_to_solution(problem, &x),
        });
        x = next;
        if step_norm <= stop.tol_step && xy_residual <= stop.tol_residual {
            status = RunStatus::Converged;
            break;
        }
    }
    Ok(IterateTrace { rows, status, final_x: x })
}

/// Tseng's forward-backward-forward method (euclidean only):
/// `y = P_C(x - lambda A x)`, `x+ = P_X(y - lambda (A y - A x))` with X the
/// whole space for structurally Lipschitz operators and C otherwise.
pub fn run_tseng(
    problem: &ProblemSpec,
    lambda: f64,
    x0: &Vector,
    stop: &StopRule,
) -> Result<IterateTrace, AlgorithmError> {
    require_euclidean(problem)?;
    check_start(problem, x0, stop)?;
    if lambda <= 0.0 {
        return Err(AlgorithmError::NonPositiveLambda(lambda));
    }
    let space = &problem.space;
    let project_final = !problem.operator.is_known_lipschitz();
    let mut rows = Vec::new();
    let mut x = x0.clone();
    let mut status = RunStatus::MaxIter;
    for n in 1..=stop.max_iter {
        let ax = problem.apply_operator(&x);
        let y = match generalized_project(space, &problem.feasible, &forward(space, problem, &x, lambda)) {
            Ok(v) => v,
            Err(e) => {
                status = RunStatus::Failed(e.to_string());
                break;
            }
        };
        let ay = problem.apply_operator(&y);
        let z = Vector::new(
            (0..y.len()).map(|i| y[i] - lambda * (ay[i] - ax[i])).collect(),
        );
        let next = if project_final {
            match generalized_project(space, &problem.feasible, &z) {
                Ok(v) => v,
                Err(e) => {
                    status = RunStatus::Failed(e.to_string());
                    break;
                }
            }
        } else {
            z.clone()
        };
        let step_norm = space.norm(&next.sub(&x));
        let xy_residual = space.norm(&x.sub(&y));
        rows.push(TraceRow {
            n,
            x: x.clone(),
            y,
            z: Some(z),
            w: None,
            u: None,
            lambda,
            step_norm,
            xy_residual,
            phi_to_solution: phi_to_solution(problem, &x),
        });
        x = next;
        if step_norm <= stop.tol_step && xy_residual <= stop.tol_residual {
            status = RunStatus::Converged;
            break;
        }
    }
    Ok(IterateTrace { rows, status, final_x: x })
}

/// Parameters for Thong's viscosity scheme with Armijo backtracking. The
/// step size at iteration n is the largest `gamma * l^j` satisfying
/// `lambda ||A x - A y(lambda)|| <= mu ||x - y(lambda)||`.
#[derive(Clone, Debug)]
pub struct ThongParams {
    pub gamma: f64,
    pub l: f64,
    pub mu: f64,
    /// Anchor weights `alpha_n = 1 / (n + alpha_offset)`.
    pub alpha_offset: f64,
    pub map: crate::problems::MapSpec,
}

impl ThongParams {
    pub fn with_map(map: crate::problems::MapSpec) -> Self {
        ThongParams { gamma: 1.0, l: 0.5, mu: 0.6, alpha_offset: 1.0, map }
    }

    // Negated comparisons so NaN parameters fail validation too.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    fn validate(&self) -> Result<(), AlgorithmError> {
        if !(self.gamma > 0.0) {
            return Err(AlgorithmError::BadLineSearch(format!("gamma must be positive, got {}", self.gamma)));
        }
        if !(self.l > 0.0 && self.l < 1.0) {
            return Err(AlgorithmError::BadLineSearch(format!("l must lie in (0,1), got {}", self.l)));
        }
        if !(self.mu > 0.0 && self.mu < 1.0) {
            return Err(AlgorithmError::BadLineSearch(format!("mu must lie in (0,1), got {}", self.mu)));
        }
        if !(self.alpha_offset > 0.0) {
            return Err(AlgorithmError::BadLineSearch(format!(
                "alpha offset must be positive so the anchor weights stay in (0,1), got {}",
                self.alpha_offset
            )));
        }
        Ok(())
    }
}

const THONG_BACKTRACK_CAP: usize = 200;

/// Thong's viscosity forward-backward-forward method with backtracking
/// (euclidean only): `x+ = alpha_n f(x) + (1 - alpha_n) z_n` where
/// `z = y - lambda (A y - A x)` and `y = P_C(x - lambda A x)`.
pub fn run_thong(
    problem: &ProblemSpec,
    params: &ThongParams,
    x0: &Vector,
    stop: &StopRule,
) -> Result<IterateTrace, AlgorithmError> {
    require_euclidean(problem)?;
    check_start(problem, x0, stop)?;
    params.validate()?;
    let space = &problem.space;
    let mut rows = Vec::new();
    let mut x = x0.clone();
    let mut status = RunStatus::MaxIter;
    'outer: for n in 1..=stop.max_iter {
        let ax = problem.apply_operator(&x);
        let mut accepted: Option<(f64, Vector, DualVector)> = None;
        let mut lambda = params.gamma;
        for _ in 0..=THONG_BACKTRACK_CAP {
            let y = match generalized_project(space, &problem.feasible, &forward(space, problem, &x, lambda)) {
                Ok(v) => v,
                Err(e) => {
                    status = RunStatus::Failed(e.to_string());
                    break 'outer;
                }
            };
            let ay = problem.apply_operator(&y);
            let grad_gap = space.dual_norm(&ax.sub(&ay));
            if lambda * grad_gap <= params.mu * space.norm(&x.sub(&y)) {
                accepted = Some((lambda, y, ay));
                break;
            }
            lambda *= params.l;
        }
        let Some((lambda, y, ay)) = accepted else {
            status = RunStatus::Failed(format!(
                "line search exhausted {THONG_BACKTRACK_CAP} shrinks without satisfying the step condition"
            ));
            break;
        };
        let z = Vector::new(
            (0..y.len()).map(|i| y[i] - lambda * (ay[i] - ax[i])).collect(),
        );
        let alpha_n = 1.0 / (n as f64 + params.alpha_offset);
        let fx = params.map.apply(&x);
        let next = fx.scale(alpha_n).add(&z.scale(1.0 - alpha_n));
        let step_norm = space.norm(&next.sub(&x));
        let xy_residual = space.norm(&x.sub(&y));
        rows.push(TraceRow {
            n,
            x: x.clone(),
            y,
            z: Some(z),
            w: None,
            u: None,
            lambda,
            step_norm,
            xy_residual,
            phi_to_solution: phi_to_solution(problem, &x),
        });
        x = next;
        if step_norm <= stop.tol_step && xy_residual <= stop.tol_residual {
            status = RunStatus::Converged;
            break;
        }
    }
    Ok(IterateTrace { rows, status, final_x: x })
}
