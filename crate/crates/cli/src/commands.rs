use std::fs;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{Value, json};

use sweepvel::analysis::{
    self, AnalysisError, BoundMode, BoundParams, SensitivityMode, check_gronwall, cumulative_trapezoid, gronwall_bound,
};
use sweepvel::integrator::certify;
use sweepvel::operators::DEFAULT_KERNEL_TOL;
use sweepvel::spec_file::SpecFile;
use sweepvel::{IntegratorError, ProblemSpec, SymmetricOperator, Trajectory, ViSolveConfig};

use crate::{Demo, DemoArgs, Failure, Format, SolveArgs, Suite, VerifyArgs, bundled};

/// Certification tolerance relative to the VI tolerance. The certificate is
/// the natural-map residual at unit step, which the solver already keeps
/// below `tol`; the factor absorbs rounding from re-evaluating the step
/// inclusion term by term.
const CERTIFY_FACTOR: f64 = 100.0;

/// Shift used to build a second solution for the convexity suite.
const CONVEXITY_SHIFT: f64 = 3.0;

struct Loaded {
    name: String,
    file: SpecFile,
    problem: ProblemSpec,
}

fn load(arg: &str) -> Result<Loaded, Failure> {
    let (name, text) = if Path::new(arg).is_file() {
        let text = fs::read_to_string(arg).map_err(|e| Failure::Usage(format!("{arg}: {e}")))?;
        (arg.to_string(), text)
    } else if let Some((name, text)) = bundled::lookup(arg) {
        (name.to_string(), text.to_string())
    } else {
        return Err(Failure::Usage(format!("{arg}: no such file or bundled spec (see `sweepvel spec`)")));
    };
    let file = SpecFile::from_json(&text).map_err(|e| Failure::Usage(format!("{name}: {e}")))?;
    let problem = file.to_problem().map_err(|e| Failure::Usage(format!("{name}: {e}")))?;
    Ok(Loaded { name, file, problem })
}

fn solver_config(file: &SpecFile, tol: Option<f64>) -> Result<ViSolveConfig, Failure> {
    let mut cfg = file.solver_config();
    if let Some(t) = tol {
        cfg.tol = t;
    }
    cfg.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    Ok(cfg)
}

fn certify_tol(cfg: &ViSolveConfig) -> f64 {
    cfg.tol * CERTIFY_FACTOR
}

fn steps_or(steps: Option<usize>, default: usize) -> Result<usize, Failure> {
    match steps.unwrap_or(default) {
        0 => Err(Failure::Usage("--steps must be at least 1".into())),
        n => Ok(n),
    }
}

fn integrator_failure(e: IntegratorError) -> Failure {
    match e {
        IntegratorError::StepFailed { .. } | IntegratorError::Set(_) => Failure::Numerical(e.to_string()),
        other => Failure::Usage(other.to_string()),
    }
}

fn analysis_failure(e: AnalysisError) -> Failure {
    match e {
        AnalysisError::Integrator(i) => integrator_failure(i),
        AnalysisError::NotCertified { .. } | AnalysisError::KernelViolation { .. } | AnalysisError::Set(_) => {
            Failure::Numerical(e.to_string())
        }
        other => Failure::Usage(other.to_string()),
    }
}

fn to_json<T: serde::Serialize>(value: &T) -> Value {
    serde_json::to_value(value).expect("reports always serialize")
}

fn write_file(path: &Path, text: &str) -> Result<(), Failure> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Failure::Usage(format!("{}: {e}", parent.display())))?;
    }
    fs::write(path, text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn pretty(value: &Value) -> String {
    serde_json::to_string_pretty(value).expect("json values always serialize") + "\n"
}

/// Unit vector spanning the first kernel direction of `op`, signed so its
/// first nonzero entry is positive.
fn kernel_direction(op: &SymmetricOperator) -> Option<Vec<f64>> {
    let mut d = op.spectrum(DEFAULT_KERNEL_TOL).ok()?.kernel_basis.into_iter().next()?;
    if d.iter().find(|x| x.abs() > 1e-12).is_some_and(|x| *x < 0.0) {
        d.iter_mut().for_each(|x| *x = -*x);
    }
    Some(d)
}

/// `u` with every velocity shifted by `lambda d`.
fn shifted(u: &Trajectory, d: &[f64], lambda: f64) -> Result<Trajectory, Failure> {
    let v = u
        .velocities()
        .iter()
        .map(|v| v.iter().zip(d).map(|(a, b)| a + lambda * b).collect())
        .collect();
    u.with_velocities(v).map_err(integrator_failure)
}

/// Solutions `u + λ t d` for `d` spanning `ker A0 ∩ ker A1`; each must certify.
fn kernel_family(problem: &ProblemSpec, u: &Trajectory, lambdas: &[f64], tol: f64) -> Result<Vec<Trajectory>, Failure> {
    let sum = problem.a0().combine(1.0, problem.a1(), 1.0).map_err(|e| Failure::Usage(e.to_string()))?;
    let d = kernel_direction(&sum)
        .ok_or_else(|| Failure::Usage("ker A0 ∩ ker A1 is trivial, so no second solution can be built".into()))?;
    lambdas
        .iter()
        .map(|&lambda| {
            let w = shifted(u, &d, lambda)?;
            let cert = certify(problem, &w, tol);
            if cert.is_solution {
                Ok(w)
            } else {
                Err(Failure::Usage(format!(
                    "shifting by {lambda} along {d:?} does not give a solution (residual {:e})",
                    cert.max_residual
                )))
            }
        })
        .collect()
}

pub fn solve(args: &SolveArgs) -> Result<(), Failure> {
    let spec = load(&args.spec)?;
    let cfg = solver_config(&spec.file, args.tol)?;
    let steps = steps_or(args.steps, spec.file.steps)?;
    let traj = sweepvel::solve(&spec.problem, steps, &cfg).map_err(integrator_failure)?;
    let tol = certify_tol(&cfg);
    let cert = certify(&spec.problem, &traj, tol);
    let mut summary = json!({
        "spec": spec.name,
        "dim": traj.dim(),
        "steps": steps,
        "horizon": traj.horizon(),
        "step_size": traj.step_size(),
        "certified": cert.is_solution,
        "certify_tol": tol,
        "max_residual": cert.max_residual,
        "max_speed": traj.max_speed(),
        "c0_norm": traj.c0_norm(),
        "w11_norm": traj.w11_norm(),
        "velocity_l1": traj.velocity_l1(),
        "final_state": traj.states().last(),
    });
    if let Some(reference) = &spec.file.reference {
        let err = (0..=steps)
            .map(|k| {
                let exact = reference.eval(traj.time(k), traj.dim());
                traj.states()[k].iter().zip(&exact).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt()
            })
            .fold(0.0, f64::max);
        let two_h = 2.0 * traj.step_size();
        summary["reference"] = json!({ "max_node_error": err, "two_h": two_h, "within_two_h": err <= two_h });
    }
    let csv = traj.to_csv();
    let text = pretty(&summary);
    if let Some(dir) = &args.out {
        write_file(&dir.join("trajectory.csv"), &csv)?;
        write_file(&dir.join("summary.json"), &text)?;
    }
    match args.format {
        Format::Csv => print!("{csv}"),
        Format::Json => print!("{text}"),
    }
    if !cert.is_solution {
        return Err(Failure::Numerical(format!(
            "certification failed: max residual {:e} exceeds {tol:e}",
            cert.max_residual
        )));
    }
    Ok(())
}

fn suite_name(suite: Suite) -> &'static str {
    match suite {
        Suite::SensitivityA0 => "sensitivity-a0",
        Suite::SensitivityA1 => "sensitivity-a1",
        Suite::BoundH3a => "bound-h3a",
        Suite::BoundH3b => "bound-h3b",
        Suite::BoundH3c => "bound-h3c",
        Suite::Gronwall => "gronwall",
        Suite::Convexity => "convexity",
        Suite::OuterEstimate => "outer-estimate",
        Suite::KernelPerturb => "kernel-perturb",
        Suite::Nonclosedness => "nonclosedness",
    }
}

fn default_spec(suite: Suite) -> Option<&'static str> {
    match suite {
        Suite::SensitivityA0 => Some("a0coercive"),
        Suite::SensitivityA1 => Some("a1coercive"),
        Suite::BoundH3a => Some("ball"),
        Suite::BoundH3b | Suite::BoundH3c => Some("drifting_ball"),
        Suite::Convexity => Some("convexity"),
        Suite::OuterEstimate => Some("unbounded"),
        Suite::KernelPerturb => Some("strip"),
        Suite::Gronwall | Suite::Nonclosedness => None,
    }
}

/// Report plus either a one-line verdict or the violating datum.
type SuiteOutcome = (Value, Result<String, String>);

pub fn verify(args: &VerifyArgs) -> Result<(), Failure> {
    let name = suite_name(args.suite);
    let spec = match (&args.spec, default_spec(args.suite)) {
        (Some(path), Some(_)) => Some(load(path)?),
        (None, Some(default)) => Some(load(default)?),
        (Some(_), None) => return Err(Failure::Usage(format!("suite {name} takes no spec"))),
        (None, None) => None,
    };
    let (result, verdict) = match (&spec, args.suite) {
        (_, Suite::Gronwall) => gronwall(args)?,
        (_, Suite::Nonclosedness) => nonclosedness(args.ks.as_deref().unwrap_or(&[10, 100, 1000]))?,
        (Some(spec), suite) => run_on_spec(suite, spec, args)?,
        (None, _) => unreachable!("every remaining suite has a default spec"),
    };
    let report = json!({
        "suite": name,
        "spec": spec.as_ref().map(|s| s.name.clone()),
        "pass": verdict.is_ok(),
        "result": result,
    });
    let text = pretty(&report);
    match &args.out {
        Some(path) => write_file(path, &text)?,
        None => print!("{text}"),
    }
    match verdict {
        Ok(line) => {
            eprintln!("PASS {name}: {line}");
            Ok(())
        }
        Err(datum) => Err(Failure::Numerical(format!("{name}: {datum}"))),
    }
}

fn run_on_spec(suite: Suite, spec: &Loaded, args: &VerifyArgs) -> Result<SuiteOutcome, Failure> {
    let p = &spec.problem;
    let cfg = spec.file.solver_config();
    let steps = steps_or(args.steps, spec.file.steps)?;
    match suite {
        Suite::SensitivityA0 | Suite::SensitivityA1 => {
            let mode = if suite == Suite::SensitivityA0 { SensitivityMode::A0Coercive } else { SensitivityMode::A1Coercive };
            let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
            let pairs = analysis::random_initial_pairs(p, args.pairs, &mut rng).map_err(analysis_failure)?;
            let r = analysis::sensitivity_experiment(p, &pairs, mode, steps, analysis::sensitivity::DEFAULT_SLACK, &cfg)
                .map_err(analysis_failure)?;
            let limit = r.modulus_theoretical * (1.0 + r.slack);
            let verdict = if r.pass {
                Ok(format!("max_ratio {:.6} <= modulus {:.6} (seed {})", r.max_ratio, r.modulus_theoretical, args.seed))
            } else {
                let worst = r.pairs.iter().max_by(|a, b| a.ratio.total_cmp(&b.ratio)).expect("pairs are nonempty");
                Err(format!(
                    "pair x0={:?} y0={:?} has ratio {} > {limit} (modulus {})",
                    worst.x0, worst.y0, worst.ratio, r.modulus_theoretical
                ))
            };
            Ok((json!({ "seed": args.seed, "report": to_json(&r) }), verdict))
        }
        Suite::BoundH3a | Suite::BoundH3b | Suite::BoundH3c => {
            let mode = match suite {
                Suite::BoundH3a => BoundMode::H3a,
                Suite::BoundH3b => BoundMode::H3b,
                _ => BoundMode::H3c,
            };
            let declared_beta = if mode == BoundMode::H3c { p.constraint().lipschitz_beta() } else { None };
            let params = BoundParams {
                rho0: args.rho0,
                c1_hat: args.c1_hat,
                c2_hat: args.c2_hat,
                beta: args.beta.or(declared_beta),
                tol: args.tol.unwrap_or(BoundParams::default().tol),
                ..BoundParams::default()
            };
            let r = analysis::boundedness_bound(p, mode, &params, steps, &cfg).map_err(analysis_failure)?;
            let verdict = if r.pass {
                Ok(format!("c0 norm {:.6} <= bound {:.6}", r.observed_c0, r.bound))
            } else if r.observed_c0 > r.bound + params.tol {
                Err(format!("observed c0 norm {} exceeds bound {}", r.observed_c0, r.bound))
            } else if r.observed_velocity_l1 > r.velocity_l1_bound + params.tol {
                Err(format!("observed h·Σ|v| {} exceeds {}", r.observed_velocity_l1, r.velocity_l1_bound))
            } else {
                Err(format!("max speed {} exceeds rho {:?}", r.max_speed, r.constants.rho))
            };
            Ok((to_json(&r), verdict))
        }
        Suite::Convexity => {
            let tol = args.tol.unwrap_or(1e-9);
            let lambdas = args.lambdas.clone().unwrap_or_else(|| vec![0.25, 0.5, 0.75]);
            let u = sweepvel::solve(p, steps, &cfg).map_err(integrator_failure)?;
            let v = kernel_family(p, &u, &[CONVEXITY_SHIFT], tol)?.remove(0);
            let r = analysis::convexity_check(p, &u, &v, &lambdas, tol).map_err(analysis_failure)?;
            let verdict = if r.pass {
                Ok(format!("{} blends certified", r.lambdas.len()))
            } else {
                let (lambda, res) = r
                    .lambdas
                    .iter()
                    .zip(&r.residuals)
                    .max_by(|a, b| a.1.total_cmp(b.1))
                    .expect("lambdas are nonempty");
                Err(format!("blend at lambda {lambda} has residual {res:e} > {tol:e}"))
            };
            Ok((to_json(&r), verdict))
        }
        Suite::OuterEstimate => {
            let tol = args.tol.unwrap_or(1e-9);
            let lambdas = args.lambdas.clone().unwrap_or_else(|| vec![-2.0, 3.0]);
            let u = sweepvel::solve(p, steps, &cfg).map_err(integrator_failure)?;
            let mut family = vec![u.clone()];
            family.extend(kernel_family(p, &u, &lambdas, tol)?);
            let r = analysis::outer_estimate_check(p, &family, tol).map_err(analysis_failure)?;
            let verdict = match r.pairs.iter().find(|m| !m.member) {
                None if r.pass => Ok(format!("{} ordered pairs in u + K", r.pairs.len())),
                None => Err(format!("a trajectory failed certification: residuals {:?}", r.certificate_residuals)),
                Some(m) => Err(format!("trajectory {} is not in trajectory {} + K", m.other, m.base)),
            };
            Ok((to_json(&r), verdict))
        }
        Suite::KernelPerturb => {
            let tol = args.tol.unwrap_or(1e-9);
            let d = kernel_direction(p.a0()).ok_or_else(|| Failure::Usage("A0 has trivial kernel".into()))?;
            let u = sweepvel::solve(p, steps, &cfg).map_err(integrator_failure)?;
            let r = analysis::verify_kernel_perturbation(p, &u, &d, args.magnitude, tol).map_err(analysis_failure)?;
            let verdict = if r.pass {
                Ok(format!("u + x certified along {:?} (residual {:.2e})", r.direction, r.residual))
            } else {
                Err(format!("u + x has residual {:e} > {tol:e}, invariants hold: {}", r.residual, r.invariants_hold))
            };
            Ok((to_json(&r), verdict))
        }
        Suite::Gronwall | Suite::Nonclosedness => unreachable!("handled without a spec"),
    }
}

fn gronwall(args: &VerifyArgs) -> Result<SuiteOutcome, Failure> {
    let n = steps_or(args.steps, 10_000)?;
    let dt = 1.0 / n as f64;
    let mut cases = Vec::new();
    let mut failure = None;
    for (a, b) in [(1.0, 1.0), (0.5, 2.0)] {
        // equality case f = a e^{bt}
        let f: Vec<f64> = (0..=n).map(|k| a * (b * k as f64 * dt).exp()).collect();
        let integral = cumulative_trapezoid(&f, dt);
        let mut excess = f64::NEG_INFINITY;
        let mut gap: f64 = 0.0;
        for (k, i) in integral.iter().enumerate() {
            let bound = gronwall_bound(a, b, k as f64 * dt).map_err(analysis_failure)?;
            excess = excess.max(i - bound);
            gap = gap.max((i - bound).abs());
        }
        let check = check_gronwall(&f, dt, a, b).map_err(analysis_failure)?;
        let pass = excess <= 1e-6 && gap <= 1e-4 && check.hypothesis_holds && check.conclusion_holds;
        if !pass && failure.is_none() {
            failure = Some(format!("(a, b) = ({a}, {b}): integral exceeds bound by {excess:e}, gap {gap:e}"));
        }
        cases.push(json!({ "a": a, "b": b, "samples": n + 1, "max_excess": excess, "max_gap": gap, "check": to_json(&check), "pass": pass }));
    }
    let verdict = match failure {
        None => Ok(format!("equality case within {:.2e} of the bound", cases.iter().map(|c| c["max_gap"].as_f64().unwrap_or(0.0)).fold(0.0, f64::max))),
        Some(f) => Err(f),
    };
    Ok((json!({ "cases": cases }), verdict))
}

fn nonclosedness(ks: &[u64]) -> Result<SuiteOutcome, Failure> {
    let r = analysis::nonclosedness_demo(ks, 8).map_err(analysis_failure)?;
    let verdict = if r.pass {
        Ok(format!("c0 distances within 2/k², W11 norms increasing over k = {ks:?}"))
    } else if let Some(row) = r.rows.iter().find(|row| row.c0_distance > row.c0_bound) {
        Err(format!("k = {}: c0 distance {} exceeds {}", row.k, row.c0_distance, row.c0_bound))
    } else {
        Err("W11 norms are not strictly increasing".to_string())
    };
    Ok((to_json(&r), verdict))
}

pub fn demo(args: &DemoArgs) -> Result<(), Failure> {
    match args.name {
        Demo::Nonclosedness => {
            let r = analysis::nonclosedness_demo(&args.ks, 8).map_err(analysis_failure)?;
            let csv = r.to_csv();
            match &args.out {
                Some(path) => write_file(path, &csv)?,
                None => print!("{csv}"),
            }
            if !r.pass {
                return Err(Failure::Numerical("non-closedness table violates its bounds".into()));
            }
            Ok(())
        }
        Demo::Unbounded => {
            let spec = load("unbounded")?;
            let p = &spec.problem;
            let steps = steps_or(args.steps, spec.file.steps)?;
            let tol = certify_tol(&spec.file.solver_config());
            let d = vec![1.0, 0.0];
            let mut members = Vec::new();
            let mut failed = Vec::new();
            for &lambda in &args.lambdas {
                let u = Trajectory::from_velocities(p.u0(), p.horizon(), vec![vec![lambda * d[0], lambda * d[1]]; steps])
                    .map_err(integrator_failure)?;
                let cert = certify(p, &u, tol);
                let mut entry = json!({
                    "lambda": lambda,
                    "certified": cert.is_solution,
                    "max_residual": cert.max_residual,
                    "c0_norm": u.c0_norm(),
                    "w11_norm": u.w11_norm(),
                });
                if let Some(dir) = &args.out {
                    let path = dir.join(format!("unbounded_lambda_{lambda}.csv"));
                    write_file(&path, &u.to_csv())?;
                    entry["file"] = json!(path.display().to_string());
                }
                if !cert.is_solution {
                    failed.push(lambda);
                }
                members.push(entry);
            }
            print!("{}", pretty(&json!({ "steps": steps, "members": members })));
            if !failed.is_empty() {
                return Err(Failure::Numerical(format!("members {failed:?} failed certification")));
            }
            Ok(())
        }
    }
}

pub fn spec(name: Option<&str>) -> Result<(), Failure> {
    match name {
        None => {
            for (n, _) in bundled::SPECS {
                println!("{n}");
            }
            Ok(())
        }
        Some(n) => match bundled::lookup(n) {
            Some((_, text)) => {
                print!("{text}");
                Ok(())
            }
            None => Err(Failure::Usage(format!("no bundled spec named {n}"))),
        },
    }
}
