//! Command implementations: prepare a run from resolved settings, execute
//! it, and the compare/validate helpers behind the CLI subcommands.

use crate::config::{Algorithm, Settings};
use crate::trace::trace_to_csv;
use rand::rngs::StdRng;
use rand::SeedableRng;
use std::fmt::Write as _;
use thiserror::Error;
use vi_core::algorithms::{
    run_algorithm1, run_algorithm2, run_korpelevich, run_thong, run_tseng, AlgorithmError,
    IterateTrace, RunStatus, ScheduleSet, StopRule, ThongParams,
};
use vi_core::problems::{
    lookup, registry, verify_bifunction_axioms, verify_ism, verify_norm_condition,
    verify_vi_membership, CheckReport, RegisteredProblem,
};
use vi_core::Vector;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("unknown problem '{id}'; available: {available}")]
    UnknownProblem { id: String, available: String },
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Algorithm(#[from] AlgorithmError),
    #[error("cannot write {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub fn available_ids() -> String {
    registry()
        .iter()
        .map(|e| e.id)
        .collect::<Vec<_>>()
        .join(", ")
}

pub fn find_problem(id: &str) -> Result<RegisteredProblem, HarnessError> {
    lookup(id).ok_or_else(|| HarnessError::UnknownProblem {
        id: id.to_string(),
        available: available_ids(),
    })
}

#[derive(Debug)]
pub struct RunOutcome {
    pub problem_id: String,
    pub algorithm: Algorithm,
    pub trace: IterateTrace,
}

fn resolve_x0(entry: &RegisteredProblem, settings: &Settings) -> Result<Vector, HarnessError> {
    match &settings.x0 {
        None => Ok(entry.default_x0.clone()),
        Some(coords) => {
            if coords.iter().any(|t| !t.is_finite()) {
                return Err(HarnessError::Invalid("x0 must be finite".into()));
            }
            if coords.len() != entry.problem.dim() {
                return Err(HarnessError::Invalid(format!(
                    "x0 has dimension {}, problem '{}' needs {}",
                    coords.len(),
                    entry.id,
                    entry.problem.dim()
                )));
            }
            Ok(Vector::new(coords.clone()))
        }
    }
}

/// Default step size for the fixed-step baselines: half the inverse of the
/// Lipschitz bound that inverse strong monotonicity guarantees.
fn baseline_lambda(entry: &RegisteredProblem, settings: &Settings) -> f64 {
    settings.lambda.unwrap_or(0.5 * entry.problem.operator.ism_alpha())
}

pub fn execute(settings: &Settings) -> Result<RunOutcome, HarnessError> {
    let entry = find_problem(&settings.problem)?;
    let x0 = resolve_x0(&entry, settings)?;
    let stop = StopRule::new(settings.tol_step, settings.tol_residual, settings.max_iter);
    let problem = &entry.problem;

    let trace = match settings.algorithm {
        Algorithm::Alg1 => {
            let mut schedule = ScheduleSet::default_scheme1();
            if settings.strict_paper {
                schedule = schedule.strict_steps();
            }
            if let Some(l) = settings.lambda {
                schedule.lambda = vi_core::algorithms::LambdaRule::Constant(l);
            }
            run_algorithm1(problem, &schedule, &x0, &stop)?
        }
        Algorithm::Alg2 => {
            let r = settings.r.or(entry.default_r).ok_or_else(|| {
                HarnessError::Invalid(format!(
                    "problem '{}' has no default resolvent parameter; pass --r",
                    entry.id
                ))
            })?;
            let mut schedule = ScheduleSet::default_scheme2(r);
            if settings.strict_paper {
                schedule = schedule.strict_steps();
            }
            if let Some(l) = settings.lambda {
                schedule.lambda = vi_core::algorithms::LambdaRule::Constant(l);
            }
            run_algorithm2(problem, &schedule, &x0, &stop)?
        }
        Algorithm::Korpelevich => {
            run_korpelevich(problem, baseline_lambda(&entry, settings), &x0, &stop)?
        }
        Algorithm::Tseng => run_tseng(problem, baseline_lambda(&entry, settings), &x0, &stop)?,
        Algorithm::Thong => {
            let map = problem.map.clone().ok_or_else(|| {
                HarnessError::Invalid(format!(
                    "problem '{}' has no anchor map, which the viscosity baseline needs",
                    entry.id
                ))
            })?;
            let mut params = ThongParams::with_map(map);
            if let Some(l) = settings.lambda {
                params.gamma = l;
            }
            run_thong(problem, &params, &x0, &stop)?
        }
    };

    Ok(RunOutcome {
        problem_id: entry.id.to_string(),
        algorithm: settings.algorithm,
        trace,
    })
}

pub fn exit_code(status: &RunStatus) -> i32 {
    match status {
        RunStatus::Converged => 0,
        RunStatus::MaxIter => 2,
        RunStatus::Failed(_) => 1,
    }
}

pub fn summarize(outcome: &RunOutcome) -> String {
    let trace = &outcome.trace;
    let mut s = String::new();
    let _ = writeln!(s, "problem:    {}", outcome.problem_id);
    let _ = writeln!(s, "algorithm:  {}", outcome.algorithm);
    match &trace.status {
        RunStatus::Converged => {
            let _ = writeln!(s, "status:     converged after {} iterations", trace.iterations());
        }
        RunStatus::MaxIter => {
            let _ = writeln!(s, "status:     iteration budget exhausted ({} steps)", trace.iterations());
        }
        RunStatus::Failed(msg) => {
            let _ = writeln!(s, "status:     failed after {} iterations: {msg}", trace.iterations());
        }
    }
    let _ = writeln!(s, "final x:    {}", trace.final_x);
    if let Some(last) = trace.rows.last() {
        let _ = writeln!(s, "step norm:  {:.6e}", last.step_norm);
        let _ = writeln!(s, "residual:   {:.6e}", last.xy_residual);
        if let Some(phi) = last.phi_to_solution {
            let _ = writeln!(s, "phi to solution: {phi:.6e}");
        }
    }
    s
}

/// Run the trace writer if the settings ask for one.
pub fn maybe_write_trace(settings: &Settings, outcome: &RunOutcome) -> Result<(), HarnessError> {
    if let Some(path) = &settings.trace {
        crate::trace::write_trace(path, &outcome.trace).map_err(|e| HarnessError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
    }
    Ok(())
}

/// Run several algorithms on one problem; returns the combined convergence
/// table and the worst exit code (failure > budget > converged).
pub fn compare(
    settings: &Settings,
    algorithms: &[Algorithm],
) -> Result<(String, i32), HarnessError> {
    if algorithms.is_empty() {
        return Err(HarnessError::Invalid("no algorithms to compare".into()));
    }
    let mut outcomes = Vec::new();
    for a in algorithms {
        let mut s = settings.clone();
        s.algorithm = *a;
        outcomes.push(execute(&s)?);
    }
    let mut header = String::from("n");
    for o in &outcomes {
        let _ = write!(header, ",{0}_step_norm,{0}_phi_to_solution", o.algorithm);
    }
    let rows = outcomes.iter().map(|o| o.trace.rows.len()).max().unwrap_or(0);
    let mut out = header;
    out.push('\n');
    for i in 0..rows {
        let _ = write!(out, "{}", i + 1);
        for o in &outcomes {
            match o.trace.rows.get(i) {
                Some(row) => {
                    let phi = row
                        .phi_to_solution
                        .map(|p| format!("{p:.16e}"))
                        .unwrap_or_default();
                    let _ = write!(out, ",{:.16e},{}", row.step_norm, phi);
                }
                None => out.push_str(",,"),
            }
        }
        out.push('\n');
    }
    let code = outcomes
        .iter()
        .map(|o| exit_code(&o.trace.status))
        .max()
        .unwrap_or(0);
    Ok((out, code))
}

/// Structural checks for one registered problem: inverse strong
/// monotonicity always, the equilibrium axioms when a bifunction is
/// packaged, and the solution certificates when a solution is recorded.
pub fn validate(
    problem_id: &str,
    samples: usize,
    tol: f64,
    seed: u64,
) -> Result<(Vec<CheckReport>, bool), HarnessError> {
    let entry = find_problem(problem_id)?;
    let mut rng = StdRng::seed_from_u64(seed);
    let mut reports = Vec::new();
    reports.push(verify_ism(&entry.problem, samples, tol, &mut rng));
    if entry.problem.bifunction.is_some() {
        match verify_bifunction_axioms(&entry.problem, samples, tol, &mut rng) {
            Ok(mut r) => reports.append(&mut r),
            Err(e) => return Err(HarnessError::Invalid(e.to_string())),
        }
    }
    if let Some(solution) = entry.problem.known_solution.clone() {
        reports.push(verify_norm_condition(&entry.problem, &solution, samples, tol, &mut rng));
        match verify_vi_membership(&entry.problem, &solution, samples, tol, &mut rng) {
            Ok(r) => reports.push(r),
            Err(e) => return Err(HarnessError::Invalid(e.to_string())),
        }
    }
    let all_pass = reports.iter().all(|r| r.pass);
    Ok((reports, all_pass))
}

/// All registered problems as `id: description` lines.
pub fn problem_listing() -> String {
    let mut s = String::new();
    for e in registry() {
        let _ = writeln!(s, "{:<16} dim {}  {}", e.id, e.problem.dim(), e.description);
    }
    s
}

/// One CSV export of a full trace (used by the run subcommand when the
/// trace is printed rather than written to a file).
pub fn trace_csv(outcome: &RunOutcome) -> String {
    trace_to_csv(&outcome.trace)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn settings(problem: &str, algorithm: Algorithm) -> Settings {
        Settings {
            problem: problem.into(),
            algorithm,
            ..Default::default()
        }
    }

    #[test]
    fn unknown_problem_reports_the_catalogue() {
        let err = execute(&settings("no-such", Algorithm::Alg1)).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("unknown problem 'no-such'"), "{msg}");
        assert!(msg.contains("example-4-1"), "{msg}");
    }

    #[test]
    fn default_run_converges_on_the_example() {
        let outcome = execute(&settings("example-4-1", Algorithm::Alg2)).unwrap();
        assert_eq!(outcome.trace.status, RunStatus::Converged);
        assert!(outcome.trace.final_x[0].abs() < 1e-6);
        assert_eq!(exit_code(&outcome.trace.status), 0);
    }

    #[test]
    fn x0_dimension_mismatch_is_a_clean_error() {
        let mut s = settings("example-4-1", Algorithm::Alg1);
        s.x0 = Some(vec![1.0, 2.0]);
        let err = execute(&s).unwrap_err();
        assert!(err.to_string().contains("dimension"));
    }

    #[test]
    fn non_euclidean_baseline_is_rejected() {
        let err = execute(&settings("lp15-box-2d", Algorithm::Tseng)).unwrap_err();
        assert!(err.to_string().contains("euclidean"), "{err}");
    }

    #[test]
    fn alg2_without_r_is_rejected() {
        // bad-alpha has no default resolvent parameter.
        let err = execute(&settings("bad-alpha", Algorithm::Alg2)).unwrap_err();
        assert!(err.to_string().contains("resolvent parameter"), "{err}");
    }

    #[test]
    fn compare_produces_aligned_columns() {
        let mut s = settings("example-4-1", Algorithm::Alg1);
        s.max_iter = 30;
        let (csv, code) =
            compare(&s, &[Algorithm::Alg1, Algorithm::Korpelevich]).unwrap();
        let mut lines = csv.lines();
        assert_eq!(
            lines.next().unwrap(),
            "n,alg1_step_norm,alg1_phi_to_solution,korpelevich_step_norm,korpelevich_phi_to_solution"
        );
        let first = lines.next().unwrap();
        assert!(first.starts_with("1,"));
        assert_eq!(first.split(',').count(), 5);
        assert!(code == 0 || code == 2);
    }

    #[test]
    fn validate_passes_for_sound_problems_and_fails_for_the_fixture() {
        let (reports, ok) = validate("example-4-1", 150, 1e-7, 0).unwrap();
        assert!(ok, "{reports:?}");
        assert!(reports.len() >= 3);
        let (reports, ok) = validate("bad-alpha", 150, 1e-7, 0).unwrap();
        assert!(!ok, "the fixture's claimed modulus should fail: {reports:?}");
    }

    #[test]
    fn baseline_default_step_uses_the_modulus() {
        let entry = find_problem("rotation-box-2d").unwrap();
        let s = settings("rotation-box-2d", Algorithm::Korpelevich);
        assert!((baseline_lambda(&entry, &s) - 0.2).abs() < 1e-15);
    }
}
