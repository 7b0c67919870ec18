//! Acceptance suite. Each test checks one shipping criterion end to end at
//! its stated tolerance and prints a single PASS/FAIL line (visible with
//! `cargo test -- --nocapture`).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::time::Instant;
use vi_core::algorithms::{
    run_algorithm1, run_algorithm2, run_korpelevich, run_thong, run_tseng, IterateTrace,
    RunStatus, ScheduleSet, StopRule, ThongParams,
};
use vi_core::geometry::pairing;
use vi_core::problems::{lookup, registry, RegisteredProblem};
use vi_core::resolvent::{resolvent, resolvent_oracle_1d};
use vi_core::sets::{cut_set, generalized_project, SetSpec};
use vi_core::{SpaceSpec, Vector};

struct Criterion {
    label: &'static str,
    budget_secs: f64,
    start: Instant,
    failures: Vec<String>,
}

impl Criterion {
    fn new(label: &'static str, budget_secs: f64) -> Self {
        Criterion { label, budget_secs, start: Instant::now(), failures: Vec::new() }
    }

    fn check(&mut self, ok: bool, msg: impl FnOnce() -> String) {
        if !ok && self.failures.len() < 20 {
            self.failures.push(msg());
        }
    }

    fn finish(self) {
        let elapsed = self.start.elapsed().as_secs_f64();
        let in_budget = elapsed <= self.budget_secs;
        let ok = self.failures.is_empty() && in_budget;
        println!(
            "criterion {}: {} ({elapsed:.2}s)",
            self.label,
            if ok { "PASS" } else { "FAIL" }
        );
        assert!(
            self.failures.is_empty(),
            "criterion {} failed:\n{}",
            self.label,
            self.failures.join("\n")
        );
        assert!(
            in_budget,
            "criterion {} exceeded its {}s budget: {elapsed:.2}s",
            self.label, self.budget_secs
        );
    }
}

fn never_stop(max_iter: usize) -> StopRule {
    StopRule::new(1e-300, 1e-300, max_iter)
}

fn solution_problems() -> Vec<RegisteredProblem> {
    registry()
        .into_iter()
        .filter(|e| e.problem.known_solution.is_some())
        .collect()
}

/// The scalar recursion of the packaged example under literal harmonic
/// steps, written independently of the library: u = x/2, forward factors
/// (1 - 1/n), box clamp to [-5, 5], and the cut clamp toward (x + w)/2.
fn scalar_recursion(x1: f64, steps: usize) -> Vec<f64> {
    let clamp = |t: f64| t.clamp(-5.0, 5.0);
    let mut xs = Vec::with_capacity(steps + 1);
    let mut x = x1;
    xs.push(x);
    for n in 1..=steps {
        let nf = n as f64;
        let u = x / 2.0;
        let w = clamp((1.0 - 1.0 / nf) * u);
        let y = clamp((1.0 - 1.0 / nf) * x);
        let cand = (1.0 - 1.0 / nf) * y;
        let z = if x > w {
            cand.min(0.5 * (x + w))
        } else if x < w {
            cand.max(0.5 * (x + w))
        } else {
            cand
        };
        let a = [
            0.25 + 0.25 / nf,
            0.25 - 1.0 / (6.0 * nf),
            0.25 + 1.0 / (12.0 * nf),
            0.25 - 1.0 / (6.0 * nf),
        ];
        x = clamp(a[0] * x + a[1] * (x / 3.0) + a[2] * z + a[3] * w);
        xs.push(x);
    }
    xs
}

#[test]
fn criterion_1_faithful_scalar_recursion() {
    let mut c = Criterion::new("1 (faithful scalar recursion)", 1.0);
    let entry = lookup("example-4-1").unwrap();
    let schedule = ScheduleSet::default_scheme2(entry.default_r.unwrap()).strict_steps();
    let steps = 100;
    let trace = run_algorithm2(
        &entry.problem,
        &schedule,
        &Vector::new(vec![5.0]),
        &never_stop(steps),
    )
    .unwrap();
    c.check(trace.rows.len() == steps, || {
        format!("expected {steps} rows, got {}", trace.rows.len())
    });
    let oracle = scalar_recursion(5.0, steps);
    for (i, row) in trace.rows.iter().enumerate() {
        let gap = (row.x[0] - oracle[i]).abs();
        c.check(gap <= 1e-12, || {
            format!("iterate {}: library {} vs recursion {} (gap {gap:.3e})", i + 1, row.x[0], oracle[i])
        });
    }
    let final_gap = (trace.final_x[0] - oracle[steps]).abs();
    c.check(final_gap <= 1e-12, || format!("final iterate gap {final_gap:.3e}"));
    let first_small = trace
        .rows
        .iter()
        .find(|r| r.x[0].abs() <= 1e-6)
        .map(|r| r.n);
    c.check(first_small == Some(35), || {
        format!("first |x_n| <= 1e-6 at {first_small:?}, expected Some(35)")
    });
    c.finish();
}

#[test]
fn criterion_2_resolvent_matches_independent_oracle() {
    let mut c = Criterion::new("2 (resolvent vs grid oracle)", 10.0);
    let entry = lookup("example-4-1").unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for i in 0..100 {
        let r = rng.gen_range(0.01..10.0);
        let x = Vector::new(vec![rng.gen_range(-5.0..5.0)]);
        let fast = resolvent(&entry.problem, r, &x).unwrap();
        let slow = resolvent_oracle_1d(&entry.problem, r, &x).unwrap();
        let closed = x[0] / (42.0 * r + 1.0);
        c.check((fast[0] - slow[0]).abs() <= 1e-4, || {
            format!("case {i}: resolvent {} vs oracle {} at r={r}, x={}", fast[0], slow[0], x[0])
        });
        c.check((fast[0] - closed).abs() <= 1e-10, || {
            format!("case {i}: resolvent {} vs closed form {closed} at r={r}", fast[0])
        });
        c.check((slow[0] - closed).abs() <= 1e-4, || {
            format!("case {i}: oracle {} vs closed form {closed} at r={r}", slow[0])
        });
    }
    c.finish();
}

fn geometry_cases() -> Vec<(SpaceSpec, u64)> {
    let mut cases = Vec::new();
    for dim in 1..=5 {
        cases.push((SpaceSpec::euclidean(dim), 1000 + dim as u64));
    }
    for dim in 1..=3 {
        cases.push((SpaceSpec::lp(dim, 1.5), 2000 + dim as u64));
    }
    cases
}

#[test]
fn criterion_3_duality_map_identities() {
    let mut c = Criterion::new("3 (duality map identities)", 30.0);
    for (space, seed) in geometry_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dim = space.dim();
        for _ in 0..1000 {
            let x = Vector::new((0..dim).map(|_| rng.gen_range(-10.0..10.0)).collect());
            let y = Vector::new((0..dim).map(|_| rng.gen_range(-10.0..10.0)).collect());
            let n = space.norm(&x);
            let jx = space.duality_map(&x);
            let tol = 1e-9 * (1.0 + n * n);
            c.check((pairing(&x, &jx) - n * n).abs() <= tol, || {
                format!("<x, Jx> != ||x||^2 at {x} in {space:?}")
            });
            c.check((space.dual_norm(&jx) - n).abs() <= 1e-9 * (1.0 + n), || {
                format!("||Jx||_* != ||x|| at {x} in {space:?}")
            });
            let back = space.inverse_duality_map(&jx);
            let round = (0..dim).map(|i| (back[i] - x[i]).abs()).fold(0.0, f64::max);
            c.check(round <= 1e-9 * (1.0 + n), || {
                format!("J^-1(Jx) missed x by {round:.3e} at {x} in {space:?}")
            });
            let phi = space.phi(&x, &y);
            let ny = space.norm(&y);
            let tol2 = 1e-9 * (1.0 + n * n + ny * ny);
            c.check(
                phi >= (n - ny).powi(2) - tol2 && phi <= (n + ny).powi(2) + tol2,
                || format!("phi bounds violated: phi={phi} at {x}, {y} in {space:?}"),
            );
            let v = space.v_functional(&x, &space.duality_map(&y));
            c.check((v - phi).abs() <= tol2.max(1e-9 * (1.0 + v.abs())), || {
                format!("V(x, Jy) != phi(x, y): {v} vs {phi} in {space:?}")
            });
        }
    }
    c.finish();
}

fn random_set(dim: usize, rng: &mut ChaCha8Rng) -> SetSpec {
    match rng.gen_range(0..3) {
        0 => {
            let lo: Vec<f64> = (0..dim).map(|_| rng.gen_range(-4.0..0.0)).collect();
            let hi: Vec<f64> = lo.iter().map(|a| a + rng.gen_range(0.5..4.0)).collect();
            SetSpec::box_set(Vector::new(lo), Vector::new(hi)).unwrap()
        }
        1 => {
            let center: Vec<f64> = (0..dim).map(|_| rng.gen_range(-2.0..2.0)).collect();
            SetSpec::ball(Vector::new(center), rng.gen_range(0.5..3.0)).unwrap()
        }
        _ => {
            let mut normal: Vec<f64> = (0..dim).map(|_| rng.gen_range(-2.0..2.0)).collect();
            if normal.iter().all(|t| t.abs() < 0.3) {
                normal[0] = 1.0;
            }
            SetSpec::halfspace(vi_core::DualVector::new(normal), rng.gen_range(-2.0..2.0))
                .unwrap()
        }
    }
}

#[test]
fn criterion_4_projection_characterisations() {
    let mut c = Criterion::new("4 (projection characterisations)", 60.0);
    // Euclidean family: boxes, balls, half-spaces in dims 1..3.
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for case in 0..200 {
        let dim = 1 + case % 3;
        let space = SpaceSpec::euclidean(dim);
        let set = random_set(dim, &mut rng);
        let x = Vector::new((0..dim).map(|_| rng.gen_range(-8.0..8.0)).collect());
        let z = generalized_project(&space, &set, &x).unwrap();
        c.check(set.contains(&z, 1e-9), || format!("euclid case {case}: {z} left the set"));
        for _ in 0..1000 {
            let y = set.sample(&mut rng);
            let inner: f64 = (0..dim).map(|i| (x[i] - z[i]) * (y[i] - z[i])).sum();
            let scale = (1.0 + space.norm(&x)) * (1.0 + space.norm(&y));
            c.check(inner <= 1e-8 * scale, || {
                format!("euclid case {case}: <x-z, y-z> = {inner:.3e} > 0 at y={y}")
            });
            let three = space.phi(&y, &z) + space.phi(&z, &x) - space.phi(&y, &x);
            c.check(three <= 1e-8 * scale * scale, || {
                format!("euclid case {case}: three-point violated by {three:.3e}")
            });
        }
    }
    // lp family: boxes and half-spaces (exact KKT paths) in dims 1..2.
    let mut rng = ChaCha8Rng::seed_from_u64(78);
    for case in 0..200 {
        let dim = 1 + case % 2;
        let space = SpaceSpec::lp(dim, 1.5);
        let set = loop {
            let s = random_set(dim, &mut rng);
            if !matches!(s, SetSpec::Ball { .. }) {
                break s;
            }
        };
        let x = Vector::new((0..dim).map(|_| rng.gen_range(-4.0..4.0)).collect());
        let z = generalized_project(&space, &set, &x).unwrap();
        c.check(set.contains(&z, 1e-7), || format!("lp case {case}: {z} left the set"));
        let gap = space.duality_map(&x).sub(&space.duality_map(&z));
        for _ in 0..1000 {
            let y = set.sample(&mut rng);
            let inner = pairing(&y.sub(&z), &gap);
            let scale = (1.0 + space.norm(&x)) * (1.0 + space.norm(&y));
            c.check(inner <= 1e-8 * scale, || {
                format!("lp case {case}: <y-z, Jx-Jz> = {inner:.3e} > 0 at y={y}")
            });
            let three = space.phi(&y, &z) + space.phi(&z, &x) - space.phi(&y, &x);
            c.check(three <= 1e-8 * scale * scale, || {
                format!("lp case {case}: three-point violated by {three:.3e}")
            });
        }
    }
    c.finish();
}

/// Run both schemes on one problem with the default (capped) schedules and
/// an unreachable stopping tolerance, so exactly `steps` rows accumulate.
fn scheme_traces(entry: &RegisteredProblem, steps: usize) -> (IterateTrace, IterateTrace) {
    let stop = never_stop(steps);
    let t1 = run_algorithm1(
        &entry.problem,
        &ScheduleSet::default_scheme1(),
        &entry.default_x0,
        &stop,
    )
    .unwrap();
    let t2 = run_algorithm2(
        &entry.problem,
        &ScheduleSet::default_scheme2(entry.default_r.unwrap()),
        &entry.default_x0,
        &stop,
    )
    .unwrap();
    (t1, t2)
}

#[test]
fn criterion_5_lyapunov_descent_along_runs() {
    let mut c = Criterion::new("5 (Lyapunov descent along runs)", 120.0);
    let tol = 1e-10;
    for entry in solution_problems() {
        let space = &entry.problem.space;
        let sol = entry.problem.known_solution.clone().unwrap();
        let (t1, t2) = scheme_traces(&entry, 200);
        for (name, trace) in [("scheme1", &t1), ("scheme2", &t2)] {
            c.check(!matches!(trace.status, RunStatus::Failed(_)), || {
                format!("{}/{name}: run failed: {:?}", entry.id, trace.status)
            });
            // phi(solution, x_n) never increases, including into the final
            // iterate that the trace rows do not cover.
            let mut phis: Vec<f64> = trace.rows.iter().map(|r| space.phi(&sol, &r.x)).collect();
            phis.push(space.phi(&sol, &trace.final_x));
            for (i, w) in phis.windows(2).enumerate() {
                c.check(w[1] <= w[0] + tol, || {
                    format!("{}/{name}: phi rose at n={}: {} -> {}", entry.id, i + 1, w[0], w[1])
                });
            }
            // Within one iteration each auxiliary point is at least as
            // close to the solution, in phi, as the point it came from.
            for row in &trace.rows {
                let px = space.phi(&sol, &row.x);
                let py = space.phi(&sol, &row.y);
                c.check(py <= px + tol, || {
                    format!("{}/{name} n={}: phi(sol,y)={py} > phi(sol,x)={px}", entry.id, row.n)
                });
                if let Some(z) = &row.z {
                    let pz = space.phi(&sol, z);
                    c.check(pz <= py + tol, || {
                        format!("{}/{name} n={}: phi(sol,z)={pz} > phi(sol,y)={py}", entry.id, row.n)
                    });
                }
                if let Some(u) = &row.u {
                    let pu = space.phi(&sol, u);
                    c.check(pu <= px + tol, || {
                        format!("{}/{name} n={}: phi(sol,u)={pu} > phi(sol,x)={px}", entry.id, row.n)
                    });
                    if let Some(w) = &row.w {
                        let pw = space.phi(&sol, w);
                        c.check(pw <= pu + tol, || {
                            format!("{}/{name} n={}: phi(sol,w)={pw} > phi(sol,u)={pu}", entry.id, row.n)
                        });
                    }
                }
            }
        }
    }
    c.finish();
}

#[test]
fn criterion_6_cut_sets_contain_the_solution() {
    let mut c = Criterion::new("6 (cut sets contain the solution)", 120.0);
    for entry in solution_problems() {
        let space = &entry.problem.space;
        let sol = entry.problem.known_solution.clone().unwrap();
        let trace = run_algorithm2(
            &entry.problem,
            &ScheduleSet::default_scheme2(entry.default_r.unwrap()),
            &entry.default_x0,
            &never_stop(200),
        )
        .unwrap();
        c.check(!matches!(trace.status, RunStatus::Failed(_)), || {
            format!("{}: run failed: {:?}", entry.id, trace.status)
        });
        for row in &trace.rows {
            let w = row.w.as_ref().expect("scheme 2 rows carry w");
            let cut = cut_set(space, &entry.problem.feasible, &row.x, w);
            c.check(cut.contains(&sol, 1e-10), || {
                format!(
                    "{} n={}: solution violates the cut by {:.3e}",
                    entry.id,
                    row.n,
                    pairing(&sol, &cut.normal) - cut.rhs
                )
            });
        }
    }
    c.finish();
}

#[test]
fn criterion_7_resolvent_operator_properties() {
    let mut c = Criterion::new("7 (resolvent firm nonexpansiveness)", 30.0);
    let entry = lookup("example-4-1").unwrap();
    let space = &entry.problem.space;
    let sol = entry.problem.known_solution.clone().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4242);
    for i in 0..500 {
        let r = rng.gen_range(0.01..2.0);
        let x = Vector::new(vec![rng.gen_range(-5.0..5.0)]);
        let y = Vector::new(vec![rng.gen_range(-5.0..5.0)]);
        let kx = resolvent(&entry.problem, r, &x).unwrap();
        let ky = resolvent(&entry.problem, r, &y).unwrap();
        let d = kx.sub(&ky);
        let lhs = pairing(&d, &space.duality_map(&kx).sub(&space.duality_map(&ky)));
        let rhs = pairing(&d, &space.duality_map(&x).sub(&space.duality_map(&y)));
        c.check(lhs <= rhs + 1e-8, || {
            format!("pair {i}: firm nonexpansiveness failed: {lhs} > {rhs} (r={r})")
        });
        let contraction =
            space.phi(&sol, &kx) + space.phi(&kx, &x) - space.phi(&sol, &x);
        c.check(contraction <= 1e-8, || {
            format!("pair {i}: phi contraction violated by {contraction:.3e} (r={r})")
        });
    }
    c.finish();
}

#[test]
fn criterion_8_baselines_converge() {
    let mut c = Criterion::new("8 (baseline methods converge)", 5.0);
    let stop = StopRule::default();
    for id in ["example-4-1", "affine-box-2d", "rotation-box-2d"] {
        let entry = lookup(id).unwrap();
        let lambda = 0.5 * entry.problem.operator.ism_alpha();
        let x0 = &entry.default_x0;
        let map = entry.problem.map.clone().unwrap();
        let runs = [
            ("korpelevich", run_korpelevich(&entry.problem, lambda, x0, &stop).unwrap()),
            ("tseng", run_tseng(&entry.problem, lambda, x0, &stop).unwrap()),
            ("thong", run_thong(&entry.problem, &ThongParams::with_map(map), x0, &stop).unwrap()),
        ];
        for (name, trace) in runs {
            c.check(trace.status == RunStatus::Converged, || {
                format!("{id}/{name}: did not converge: {:?}", trace.status)
            });
            if let Some(last) = trace.rows.last() {
                c.check(last.xy_residual <= 1e-8, || {
                    format!("{id}/{name}: final residual {:.3e}", last.xy_residual)
                });
            }
        }
    }
    // The backtracking step is the largest admissible one on the grid
    // gamma * l^j: every coarser step must fail the line-search test.
    let entry = lookup("example-4-1").unwrap();
    let params = ThongParams::with_map(entry.problem.map.clone().unwrap());
    let trace = run_thong(&entry.problem, &params, &entry.default_x0, &stop).unwrap();
    for row in &trace.rows {
        let space = &entry.problem.space;
        let ax = entry.problem.apply_operator(&row.x);
        let passes = |l: f64| {
            let shifted = Vector::new(
                (0..row.x.len()).map(|i| row.x[i] - l * ax[i]).collect(),
            );
            let y = generalized_project(space, &entry.problem.feasible, &shifted).unwrap();
            let ay = entry.problem.apply_operator(&y);
            l * space.dual_norm(&ax.sub(&ay)) <= params.mu * space.norm(&row.x.sub(&y))
        };
        c.check(passes(row.lambda), || {
            format!("n={}: accepted step {} fails its own test", row.n, row.lambda)
        });
        let mut coarser = params.gamma;
        while coarser > row.lambda * (1.0 + 1e-12) {
            c.check(!passes(coarser), || {
                format!("n={}: coarser step {coarser} also passes, {} is not maximal", row.n, row.lambda)
            });
            coarser *= params.l;
        }
    }
    c.finish();
}

#[test]
fn criterion_9_trace_output_is_deterministic() {
    let mut c = Criterion::new("9 (byte-identical traces)", 30.0);
    let bin = env!("CARGO_BIN_EXE_visolve");
    let dir = tempfile::tempdir().unwrap();
    let cases: [&[&str]; 2] = [
        &[
            "run", "--problem", "example-4-1", "--algorithm", "alg2", "--strict-paper",
            "--max-iter", "50", "--tol-step", "1e-300", "--tol-residual", "1e-300",
        ],
        &["run", "--problem", "lp15-box-2d", "--algorithm", "alg1", "--max-iter", "30"],
    ];
    for (k, base_args) in cases.iter().enumerate() {
        let mut bytes = Vec::new();
        for attempt in 0..2 {
            let path = dir.path().join(format!("trace_{k}_{attempt}.csv"));
            let out = std::process::Command::new(bin)
                .args(*base_args)
                .arg("--trace")
                .arg(&path)
                .output()
                .expect("binary runs");
            c.check(out.status.code().is_some(), || format!("case {k}: no exit code"));
            let content = std::fs::read(&path).expect("trace file exists");
            c.check(!content.is_empty(), || format!("case {k}: empty trace"));
            bytes.push(content);
        }
        c.check(bytes[0] == bytes[1], || {
            format!("case {k}: the two invocations disagree byte-wise")
        });
        let text = String::from_utf8(bytes[0].clone()).unwrap();
        c.check(
            text.starts_with("n,x,y,z,w,u,lambda,step_norm,xy_residual,phi_to_solution\n"),
            || format!("case {k}: unexpected header"),
        );
    }
    c.finish();
}
