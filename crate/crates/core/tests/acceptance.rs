//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each,
//! and exits non-zero if any criterion fails.

use std::f64::consts::FRAC_PI_2;
use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sweepvel::analysis::{
    self, AnalysisError, BoundMode, BoundParams, SensitivityMode, check_gronwall, convexity_check, cumulative_trapezoid,
    gronwall_bound, nonclosedness_demo, outer_estimate_check, random_initial_pairs, sensitivity_experiment,
    verify_kernel_perturbation,
};
use sweepvel::integrator::certify;
use sweepvel::{
    ConvexSetDesc, MovingSet, ProblemSpec, ProjectionConfig, SetFamily, SymmetricOperator, TimeFunction, Trajectory,
    ViSolveConfig, WarmStart, solve, solve_with,
};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond { Ok(()) } else { Err(msg()) }
}

fn line_example(a0: SymmetricOperator) -> ProblemSpec {
    let line = ConvexSetDesc::AffineSubspace { point: vec![0.0, 0.0], basis: vec![vec![1.0, 0.0]] };
    ProblemSpec::new(
        a0,
        SymmetricOperator::diagonal(&[0.0, 1.0]),
        TimeFunction::linear(vec![0.0, 0.0], vec![0.0, 1.0]),
        MovingSet::fixed(line, 1.0).unwrap(),
        vec![0.0, 0.0],
        1.0,
    )
    .unwrap()
}

fn line_member(lambda: f64, steps: usize) -> Trajectory {
    Trajectory::from_velocities(&[0.0, 0.0], 1.0, vec![vec![lambda, 0.0]; steps]).unwrap()
}

fn unbounded_family() -> Outcome {
    let spec = line_example(SymmetricOperator::diagonal(&[0.0, 1.0]));
    let steps = 1000;
    let mut members = Vec::new();
    for lambda in [-2.0, 0.0, 3.0] {
        let u = line_member(lambda, steps);
        let cert = certify(&spec, &u, 1e-10);
        ensure(cert.is_solution, || format!("lambda={lambda}: residual {:e}", cert.max_residual))?;
        let c0 = u.c0_norm();
        ensure(c0 == lambda.abs(), || format!("lambda={lambda}: c0 norm {c0:.17e}"))?;
        members.push(u);
    }
    let outer = outer_estimate_check(&spec, &members, 1e-10).map_err(|e| e.to_string())?;
    ensure(outer.pass, || "outer estimate rejected a pair".into())?;
    let solved = solve(&spec, steps, &ViSolveConfig::default()).map_err(|e| e.to_string())?;
    Ok(format!(
        "3 members certified, c0 norms 2/0/3, {} ordered pairs in u+K; solver picks c0 norm {:.1e}",
        outer.pairs.len(),
        solved.c0_norm()
    ))
}

fn clamp_convergence() -> Outcome {
    let spec = ProblemSpec::new(
        SymmetricOperator::zeros(1),
        SymmetricOperator::identity(1),
        TimeFunction::linear(vec![0.0], vec![1.0]),
        MovingSet::fixed(ConvexSetDesc::Box { lo: vec![-1.0], hi: vec![1.0] }, 2.0).unwrap(),
        vec![0.0],
        2.0,
    )
    .unwrap();
    let exact = |t: f64| if t <= 1.0 { 0.5 * t * t } else { t - 0.5 };
    let mut errors = Vec::new();
    for steps in [500, 1000, 2000] {
        let traj = solve(&spec, steps, &ViSolveConfig::default()).map_err(|e| e.to_string())?;
        let err = (0..=steps).map(|k| (traj.states()[k][0] - exact(traj.time(k))).abs()).fold(0.0, f64::max);
        let h = traj.step_size();
        ensure(err <= 2.0 * h, || format!("N={steps}: error {err:e} > 2h"))?;
        errors.push(err);
    }
    let ratios: Vec<f64> = errors.windows(2).map(|w| w[0] / w[1]).collect();
    ensure(ratios.iter().all(|r| (1.5..=2.5).contains(r)), || format!("ratios {ratios:?}"))?;
    Ok(format!("errors {:.3e} {:.3e} {:.3e}, ratios {:.3} {:.3}", errors[0], errors[1], errors[2], ratios[0], ratios[1]))
}

fn ball_spec(a0: &[f64], a1: &[f64], horizon: f64) -> ProblemSpec {
    ProblemSpec::new(
        SymmetricOperator::diagonal(a0),
        SymmetricOperator::diagonal(a1),
        TimeFunction::Zero,
        MovingSet::fixed(ConvexSetDesc::Ball { center: vec![0.0, 0.0], radius: 1.0 }, horizon).unwrap(),
        vec![0.0, 0.0],
        horizon,
    )
    .unwrap()
}

fn sensitivity(spec: ProblemSpec, mode: SensitivityMode, seed: u64) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pairs = random_initial_pairs(&spec, 10, &mut rng).map_err(|e| e.to_string())?;
    let r = sensitivity_experiment(&spec, &pairs, mode, 2000, 0.05, &ViSolveConfig::default()).map_err(|e| e.to_string())?;
    ensure(r.modulus_theoretical == 2.0, || format!("modulus {}", r.modulus_theoretical))?;
    ensure(r.max_ratio <= 2.0 * 1.05, || format!("max ratio {} > 2.1", r.max_ratio))?;
    Ok(format!("max ratio {:.6} over {} pairs, modulus {}", r.max_ratio, r.pairs.len(), r.modulus_theoretical))
}

fn boundedness_h3a() -> Outcome {
    let spec = ProblemSpec::new(
        SymmetricOperator::zeros(2),
        SymmetricOperator::identity(2),
        TimeFunction::constant(vec![3.0, 4.0]),
        MovingSet::fixed(ConvexSetDesc::Ball { center: vec![0.0, 0.0], radius: 1.0 }, 1.0).unwrap(),
        vec![0.0, 0.0],
        1.0,
    )
    .unwrap();
    let params = BoundParams { tol: 1e-8, ..BoundParams::default() };
    let r = analysis::boundedness_bound(&spec, BoundMode::H3a, &params, 1000, &ViSolveConfig::default())
        .map_err(|e| e.to_string())?;
    let rho = r.constants.rho.unwrap_or(f64::NAN);
    ensure(r.bound == 1.0 && rho == 1.0, || format!("bound {} rho {rho}", r.bound))?;
    ensure(r.observed_c0 <= 1.0 + 1e-8, || format!("c0 {}", r.observed_c0))?;
    ensure(r.observed_velocity_l1 <= rho * 1.0 + 1e-8, || format!("h sum |v| {}", r.observed_velocity_l1))?;
    ensure(r.pass, || "report flagged failure".into())?;
    Ok(format!("c0 {:.12} <= 1, h sum |v| {:.12} <= 1", r.observed_c0, r.observed_velocity_l1))
}

fn gronwall_equality() -> Outcome {
    let n = 10_000;
    let dt = 1.0 / n as f64;
    let mut details = Vec::new();
    for (a, b) in [(1.0, 1.0), (0.5, 2.0)] {
        let f: Vec<f64> = (0..=n).map(|k| a * f64::exp(b * k as f64 * dt)).collect();
        let integral = cumulative_trapezoid(&f, dt);
        let mut worst_excess = f64::NEG_INFINITY;
        let mut worst_gap: f64 = 0.0;
        for (k, i) in integral.iter().enumerate() {
            let bound = gronwall_bound(a, b, k as f64 * dt).map_err(|e| e.to_string())?;
            worst_excess = worst_excess.max(i - bound);
            worst_gap = worst_gap.max((i - bound).abs());
        }
        ensure(worst_excess <= 1e-6, || format!("(a,b)=({a},{b}): excess {worst_excess:e}"))?;
        ensure(worst_gap <= 1e-4, || format!("(a,b)=({a},{b}): gap {worst_gap:e}"))?;
        let c = check_gronwall(&f, dt, a, b).map_err(|e| e.to_string())?;
        ensure(c.hypothesis_holds && c.conclusion_holds, || format!("(a,b)=({a},{b}): {c:?}"))?;
        details.push(format!("({a},{b}) gap {worst_gap:.2e}"));
    }
    Ok(details.join(", "))
}

fn convexity() -> Outcome {
    let spec = line_example(SymmetricOperator::zeros(2));
    let r = convexity_check(&spec, &line_member(0.0, 1000), &line_member(3.0, 1000), &[0.25, 0.5, 0.75], 1e-9)
        .map_err(|e| e.to_string())?;
    ensure(r.pass, || format!("residuals {:?}", r.residuals))?;
    Ok(format!("blend residuals {:?}", r.residuals))
}

fn strip_spec(f: TimeFunction) -> ProblemSpec {
    // C(t) = [-2, 2] × {cos t}
    let edge = |offset: f64| TimeFunction::Sinusoid {
        amplitude: vec![0.0, 1.0],
        frequency: vec![0.0, 1.0],
        phase: vec![0.0, FRAC_PI_2],
        offset: vec![offset, 0.0],
    };
    ProblemSpec::new(
        SymmetricOperator::diagonal(&[0.0, 1.0]),
        SymmetricOperator::zeros(2),
        f,
        MovingSet::new(SetFamily::BoxPath { lo: edge(-2.0), hi: edge(2.0) }, 1.0).unwrap(),
        vec![0.0, 1.0],
        1.0,
    )
    .unwrap()
}

fn kernel_perturbation() -> Outcome {
    let force = TimeFunction::Sinusoid {
        amplitude: vec![0.0, 1.0],
        frequency: vec![1.0, 1.0],
        phase: vec![0.0, 0.0],
        offset: vec![0.0, 0.0],
    };
    let spec = strip_spec(force);
    let u = solve(&spec, 1000, &ViSolveConfig::default()).map_err(|e| e.to_string())?;
    let r = verify_kernel_perturbation(&spec, &u, &[1.0, 0.0], 1.0, 1e-9).map_err(|e| e.to_string())?;
    ensure(r.pass && r.residual <= 1e-9, || format!("{r:?}"))?;

    let bad = strip_spec(TimeFunction::constant(vec![1.0, 0.0]));
    let u_bad = solve(&bad, 1000, &ViSolveConfig::default()).map_err(|e| e.to_string())?;
    match verify_kernel_perturbation(&bad, &u_bad, &[1.0, 0.0], 1.0, 1e-9) {
        Err(AnalysisError::HypothesisViolated(m)) if m.contains("orthogonal") => {}
        other => return Err(format!("non-orthogonal force not rejected: {other:?}")),
    }
    Ok(format!("u+x residual {:.2e}, s_k in [{}, {}]; f=(1,0) rejected", r.residual, r.min_profile, r.max_profile))
}

fn nonclosedness() -> Outcome {
    let r = nonclosedness_demo(&[10, 100, 1000], 8).map_err(|e| e.to_string())?;
    for row in &r.rows {
        ensure(row.c0_distance <= 2.0 / (row.k as f64).powi(2), || format!("k={}: c0 {}", row.k, row.c0_distance))?;
    }
    ensure(r.w11_strictly_increasing, || "W11 norms not increasing".into())?;
    let w: Vec<String> = r.rows.iter().map(|x| format!("{:.4}", x.w11_norm)).collect();
    let c: Vec<String> = r.rows.iter().map(|x| format!("{:.2e}", x.c0_distance)).collect();
    Ok(format!("c0 [{}], W11 [{}]", c.join(", "), w.join(", ")))
}

/// Smallest `‖x - z‖` over feasible points `z` of a grid on `[lo, hi]²`:
/// a coarse scan, then refinements around the best point down to `pitch`.
fn grid_distance(feasible: impl Fn([f64; 2]) -> bool, x: &[f64], lo: f64, hi: f64, pitch: f64) -> f64 {
    let mut best = [f64::NAN; 2];
    let mut best_d = f64::INFINITY;
    let mut window = ([lo, lo], [hi, hi]);
    for step in [1e-2, 1e-3, pitch] {
        let nx = ((window.1[0] - window.0[0]) / step).round() as usize;
        let ny = ((window.1[1] - window.0[1]) / step).round() as usize;
        for i in 0..=nx {
            for j in 0..=ny {
                let z = [window.0[0] + i as f64 * step, window.0[1] + j as f64 * step];
                if feasible(z) {
                    let d = (z[0] - x[0]).hypot(z[1] - x[1]);
                    if d < best_d {
                        best_d = d;
                        best = z;
                    }
                }
            }
        }
        // the argmin drifts along curved boundaries by about √step
        let r = 4.0 * step.sqrt();
        window = ([best[0] - r, best[1] - r], [best[0] + r, best[1] + r]);
    }
    best_d
}

fn in_box_and_ball(z: [f64; 2]) -> bool {
    z[0].abs() <= 1.0 && z[1].abs() <= 1.0 && z[0].hypot(z[1]) <= 1.2
}

fn orthonormal_plane() -> Vec<Vec<f64>> {
    let a = 0.5f64.sqrt();
    let b = 6f64.sqrt().recip();
    vec![vec![a, a, 0.0], vec![b, -b, 2.0 * b]]
}

fn projections() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let cfg = ProjectionConfig::default();
    let members = vec![
        ConvexSetDesc::Box { lo: vec![-1.0, -1.0], hi: vec![1.0, 1.0] },
        ConvexSetDesc::Ball { center: vec![0.0, 0.0], radius: 1.2 },
    ];
    let inter = ConvexSetDesc::Intersection { sets: members.clone(), witness: vec![0.0, 0.0] };
    let pitch = 2.5e-4;
    let mut queries = vec![vec![2.0, 2.0]];
    queries.extend((1..50).map(|_| vec![rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)]));
    let mut worst: f64 = 0.0;
    for x in &queries {
        let p = inter.project(x, &cfg).map_err(|e| e.to_string())?;
        for m in &members {
            ensure(m.distance(&p, &cfg).unwrap() <= 1e-9, || format!("x={x:?}: {p:?} infeasible"))?;
        }
        let d = (p[0] - x[0]).hypot(p[1] - x[1]);
        let g = grid_distance(in_box_and_ball, x, -1.0, 1.0, pitch);
        ensure(d <= g + 1e-9, || format!("x={x:?}: grid point closer ({g} < {d})"))?;
        worst = worst.max(g - d);
    }
    ensure(worst <= 1e-3, || format!("Dykstra vs grid distance gap {worst:e}"))?;

    let sets = vec![
        ConvexSetDesc::Ball { center: vec![0.5, -1.0, 2.0], radius: 1.5 },
        ConvexSetDesc::Box { lo: vec![-1.0, 0.0, -3.0], hi: vec![1.0, 2.0, -1.0] },
        ConvexSetDesc::Halfspace { normal: vec![1.0, -2.0, 0.5], offset: 0.7 },
        ConvexSetDesc::Hyperplane { normal: vec![0.0, 3.0, 4.0], offset: -1.0 },
        ConvexSetDesc::AffineSubspace { point: vec![1.0, 1.0, 1.0], basis: orthonormal_plane() },
        ConvexSetDesc::Singleton { point: vec![0.2, 0.4, -0.6] },
        ConvexSetDesc::WholeSpace { dim: 3 },
    ];
    let mut pairs = 0;
    for _ in 0..1000 {
        let x: Vec<f64> = (0..3).map(|_| rng.gen_range(-5.0..5.0)).collect();
        let y: Vec<f64> = (0..3).map(|_| rng.gen_range(-5.0..5.0)).collect();
        for s in &sets {
            let px = s.project(&x, &cfg).map_err(|e| e.to_string())?;
            let py = s.project(&y, &cfg).map_err(|e| e.to_string())?;
            let dp: Vec<f64> = px.iter().zip(&py).map(|(a, b)| a - b).collect();
            let lhs: f64 = dp.iter().map(|d| d * d).sum();
            let rhs: f64 = dp.iter().zip(x.iter().zip(&y)).map(|(d, (a, b))| d * (a - b)).sum();
            ensure(lhs <= rhs + 1e-10, || format!("{s:?}: firm nonexpansiveness {lhs} > {rhs}"))?;
            let ppx = s.project(&px, &cfg).map_err(|e| e.to_string())?;
            let drift = ppx.iter().zip(&px).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            ensure(drift <= 1e-12, || format!("{s:?}: idempotence drift {drift:e}"))?;
        }
        pairs += 1;
    }
    Ok(format!("Dykstra vs grid (pitch {pitch:e}) max distance gap {worst:.2e}; {pairs} pairs x {} closed forms", sets.len()))
}

fn uniqueness() -> Outcome {
    let family = SetFamily::BoxPath {
        lo: TimeFunction::linear(vec![-1.0, -0.5], vec![0.2, 0.0]),
        hi: TimeFunction::linear(vec![1.0, 0.5], vec![0.2, 0.3]),
    };
    let spec = ProblemSpec::new(
        SymmetricOperator::diagonal(&[0.5, 0.0]),
        SymmetricOperator::from_rows(&[vec![2.0, 0.5], vec![0.5, 1.0]]).unwrap(),
        TimeFunction::Sinusoid {
            amplitude: vec![3.0, 2.0],
            frequency: vec![2.0, 5.0],
            phase: vec![0.0, 1.0],
            offset: vec![0.5, 0.0],
        },
        MovingSet::new(family, 2.0).unwrap(),
        vec![0.0, 0.0],
        2.0,
    )
    .map_err(|e| e.to_string())?;
    let cfg = ViSolveConfig::default();
    let a = solve_with(&spec, 1000, &cfg, &WarmStart::Zero).map_err(|e| e.to_string())?;
    let b = solve_with(&spec, 1000, &cfg, &WarmStart::Fixed(vec![7.0, -4.0])).map_err(|e| e.to_string())?;
    let c = solve_with(&spec, 1000, &cfg, &WarmStart::Previous).map_err(|e| e.to_string())?;
    let d1 = a.c0_distance(&b).map_err(|e| e.to_string())?;
    let d2 = a.c0_distance(&c).map_err(|e| e.to_string())?;
    ensure(d1.max(d2) <= 1e-9, || format!("C0 gaps {d1:e}, {d2:e}"))?;
    Ok(format!("C0 gaps between warm starts {d1:.2e}, {d2:.2e}"))
}

fn main() -> ExitCode {
    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome>)> = vec![
        ("unbounded solution family", Box::new(unbounded_family)),
        ("closed-form convergence", Box::new(clamp_convergence)),
        ("sensitivity, A0 coercive", Box::new(|| sensitivity(ball_spec(&[2.0, 0.5], &[0.0, 0.0], 1.0), SensitivityMode::A0Coercive, 7))),
        ("sensitivity, A1 coercive", Box::new(|| sensitivity(ball_spec(&[1.0, 1.0], &[1.0, 1.0], 2.0), SensitivityMode::A1Coercive, 8))),
        ("boundedness with bounded C(0)", Box::new(boundedness_h3a)),
        ("Gronwall equality case", Box::new(gronwall_equality)),
        ("convexity with A0 = 0", Box::new(convexity)),
        ("kernel perturbation", Box::new(kernel_perturbation)),
        ("non-closedness in C0", Box::new(nonclosedness)),
        ("projection correctness", Box::new(projections)),
        ("uniqueness across warm starts", Box::new(uniqueness)),
    ];
    let mut failed = 0;
    let total = Instant::now();
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(std::panic::AssertUnwindSafe(run))
            .unwrap_or_else(|_| Err("panicked".to_string()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS  {name} ({secs:.2}s): {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name} ({secs:.2}s): {detail}", i + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed in {:.1}s",
        criteria.len() - failed,
        total.elapsed().as_secs_f64()
    );
    if failed == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE }
}
