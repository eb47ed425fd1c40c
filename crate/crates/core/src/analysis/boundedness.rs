//! A-priori bounds on the solution set in `C⁰` and `W^{1,1}`.
//!
//! * `H3a`: `C(0)` bounded (radius `ρ0`). Then `‖u'‖ ≤ ρ = ρ0 + max|g(0) - g(s)|`
//!   and `‖u‖_{C⁰} ≤ ‖u0‖ + ρT`.
//! * `H3b`: `⟨A1 x, x⟩ ≥ ĉ1‖x‖² - ĉ2` on the sets. With
//!   `β = ‖u0‖ + max|g(0) - g(τ)| + ε` and
//!   `γ = max{(β‖A1‖ + ‖f‖_{C⁰}) / ĉ1, ‖A0‖ / ĉ1}` the claimed bound is
//!   `‖u‖_{C⁰} ≤ ‖u0‖ + (1 + ‖u0‖)(e^{γT} - 1)`.
//! * `H3c`: same constants with a user-declared `β`.
//!
//! The `H3b`/`H3c` velocity estimate `‖u'‖ ≤ a1/ĉ1` drops the `ĉ2` and
//! `A0 u`, `f` contributions to the constant term of the quadratic, so the
//! bound is not guaranteed when `ĉ2 > 0`; reports record the comparison
//! honestly rather than assuming it.

use serde::Serialize;

use super::AnalysisError;
use crate::integrator::{ProblemSpec, solve};
use crate::vector::norm;
use crate::vi_solver::ViSolveConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BoundMode {
    H3a,
    H3b,
    H3c,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundParams {
    /// Radius of `C(0)` about the origin, when it cannot be computed.
    pub rho0: Option<f64>,
    pub c1_hat: Option<f64>,
    pub c2_hat: Option<f64>,
    /// Required for `H3c`; overrides the formula for `H3b`.
    pub beta: Option<f64>,
    pub epsilon: f64,
    /// Sampling resolution for `max|g(0) - g|` and `‖f‖_{C⁰}`.
    pub samples: usize,
    pub tol: f64,
}

impl Default for BoundParams {
    fn default() -> Self {
        Self { rho0: None, c1_hat: None, c2_hat: None, beta: None, epsilon: 0.01, samples: 1000, tol: 1e-8 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct BoundConstants {
    pub rho0: Option<f64>,
    pub rho: Option<f64>,
    pub beta: Option<f64>,
    pub gamma: Option<f64>,
    pub c1_hat: Option<f64>,
    pub c2_hat: Option<f64>,
    pub epsilon: Option<f64>,
    pub g_variation: Option<f64>,
    pub f_c0: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub mode: BoundMode,
    pub constants: BoundConstants,
    /// Bound on `‖u‖_{C⁰}`.
    pub bound: f64,
    /// Bound on `∫‖u'‖`.
    pub velocity_l1_bound: f64,
    pub observed_c0: f64,
    pub observed_w11: f64,
    pub observed_velocity_l1: f64,
    pub max_speed: f64,
    pub steps: usize,
    pub pass: bool,
}

fn missing(name: &'static str, reason: &str) -> AnalysisError {
    AnalysisError::MissingConstant { name, reason: reason.to_string() }
}

fn g_variation(spec: &ProblemSpec, samples: usize) -> Result<f64, AnalysisError> {
    spec.constraint()
        .modulus_variation(samples)
        .ok_or_else(|| missing("g", "a moving constraint needs a declared continuity modulus"))
}

fn f_sup(spec: &ProblemSpec, samples: usize, steps: usize) -> f64 {
    let horizon = spec.horizon();
    let coarse = (0..=samples).map(|i| horizon * i as f64 / samples.max(1) as f64);
    let grid = (0..=steps).map(|k| horizon * k as f64 / steps as f64);
    coarse.chain(grid).map(|t| norm(&spec.f_at(t))).fold(0.0, f64::max)
}

fn lower_bound_constants(spec: &ProblemSpec, params: &BoundParams) -> Result<(f64, f64), AnalysisError> {
    match params.c1_hat {
        Some(c1) if c1 > 0.0 => Ok((c1, params.c2_hat.unwrap_or(0.0).max(0.0))),
        Some(c1) => Err(AnalysisError::InvalidInput(format!("c1_hat must be positive, got {c1}"))),
        None => {
            let alpha1 = spec.a1().coercivity_modulus();
            if alpha1 > 0.0 {
                Ok((alpha1, 0.0))
            } else {
                Err(missing("c1_hat", "A1 is not coercive, so c1_hat and c2_hat must be supplied"))
            }
        }
    }
}

/// Computes the constants for `mode`, solves with `steps` steps and compares
/// the observed norms with the bound.
pub fn boundedness_bound(
    spec: &ProblemSpec,
    mode: BoundMode,
    params: &BoundParams,
    steps: usize,
    cfg: &ViSolveConfig,
) -> Result<BoundReport, AnalysisError> {
    if !spec.initial_in_set() {
        return Err(AnalysisError::HypothesisViolated("u0 must lie in C(0)".into()));
    }
    let horizon = spec.horizon();
    let u0_norm = norm(spec.u0());
    let mut constants = BoundConstants::default();
    let (bound, velocity_l1_bound, speed_bound) = match mode {
        BoundMode::H3a => {
            let rho0 = match (spec.constraint().at(0.0)?.radius_about_origin(), params.rho0) {
                (Some(r), _) => r,
                (None, Some(r)) => r,
                (None, None) => return Err(missing("rho0", "C(0) is unbounded")),
            };
            let var = g_variation(spec, params.samples)?;
            let rho = rho0 + var;
            constants.rho0 = Some(rho0);
            constants.g_variation = Some(var);
            constants.rho = Some(rho);
            (u0_norm + rho * horizon, rho * horizon, Some(rho))
        }
        BoundMode::H3b | BoundMode::H3c => {
            let (c1, c2) = lower_bound_constants(spec, params)?;
            let beta = match (mode, params.beta) {
                (_, Some(b)) => b,
                (BoundMode::H3c, None) => {
                    return Err(missing("beta", "the Lipschitz-like covering constant has no computable form"));
                }
                _ => {
                    let var = g_variation(spec, params.samples)?;
                    constants.g_variation = Some(var);
                    constants.epsilon = Some(params.epsilon);
                    u0_norm + var + params.epsilon
                }
            };
            let f_c0 = f_sup(spec, params.samples, steps);
            let gamma = ((beta * spec.a1().norm() + f_c0) / c1).max(spec.a0().norm() / c1);
            constants.beta = Some(beta);
            constants.c1_hat = Some(c1);
            constants.c2_hat = Some(c2);
            constants.f_c0 = Some(f_c0);
            constants.gamma = Some(gamma);
            let growth = (1.0 + u0_norm) * (gamma * horizon).exp_m1();
            (u0_norm + growth, growth, None)
        }
    };
    let traj = solve(spec, steps, cfg)?;
    let observed_c0 = traj.c0_norm();
    let observed_velocity_l1 = traj.velocity_l1();
    let max_speed = traj.max_speed();
    let tol = params.tol;
    let pass = observed_c0 <= bound + tol
        && observed_velocity_l1 <= velocity_l1_bound + tol
        && speed_bound.is_none_or(|r| max_speed <= r + tol);
    Ok(BoundReport {
        mode,
        constants,
        bound,
        velocity_l1_bound,
        observed_c0,
        observed_w11: traj.w11_norm(),
        observed_velocity_l1,
        max_speed,
        steps,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::convex_sets::{ConvexSetDesc, MovingSet, SetFamily};
    use crate::operators::SymmetricOperator;
    use crate::time_fn::TimeFunction;
    use approx::assert_abs_diff_eq;

    fn with_set(c: MovingSet, a0: SymmetricOperator, a1: SymmetricOperator, f: TimeFunction) -> ProblemSpec {
        let n = c.dim();
        let horizon = c.horizon();
        ProblemSpec::new(a0, a1, f, c, vec![0.0; n], horizon).unwrap()
    }

    fn unit_ball(horizon: f64) -> MovingSet {
        MovingSet::fixed(ConvexSetDesc::Ball { center: vec![0.0, 0.0], radius: 1.0 }, horizon).unwrap()
    }

    #[test]
    fn h3a_static_ball() {
        let spec = with_set(
            unit_ball(1.0),
            SymmetricOperator::zeros(2),
            SymmetricOperator::identity(2),
            TimeFunction::constant(vec![3.0, 4.0]),
        );
        let r = boundedness_bound(&spec, BoundMode::H3a, &BoundParams::default(), 200, &ViSolveConfig::default()).unwrap();
        assert_eq!(r.constants.rho, Some(1.0));
        assert_eq!(r.bound, 1.0);
        assert!(r.pass);
        // pushed against the boundary the whole time
        assert_abs_diff_eq!(r.observed_c0, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn h3a_moving_ball_uses_modulus() {
        let family = SetFamily::BallPath {
            center: TimeFunction::linear(vec![0.0, 0.0], vec![0.5, 0.0]),
            radius: TimeFunction::scalar_constant(1.0),
        };
        let c = MovingSet::new(family, 2.0).unwrap().with_modulus(TimeFunction::linear(vec![0.0], vec![0.5])).unwrap();
        let spec = with_set(c, SymmetricOperator::zeros(2), SymmetricOperator::identity(2), TimeFunction::Zero);
        let r = boundedness_bound(&spec, BoundMode::H3a, &BoundParams::default(), 100, &ViSolveConfig::default()).unwrap();
        assert_abs_diff_eq!(r.constants.rho.unwrap(), 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.bound, 4.0, epsilon = 1e-12);
        assert!(r.pass);
    }

    #[test]
    fn h3a_requires_modulus_for_moving_sets() {
        let family = SetFamily::BallPath {
            center: TimeFunction::linear(vec![0.0, 0.0], vec![0.5, 0.0]),
            radius: TimeFunction::scalar_constant(1.0),
        };
        let spec = with_set(
            MovingSet::new(family, 1.0).unwrap(),
            SymmetricOperator::zeros(2),
            SymmetricOperator::identity(2),
            TimeFunction::Zero,
        );
        let err = boundedness_bound(&spec, BoundMode::H3a, &BoundParams::default(), 10, &ViSolveConfig::default());
        assert!(matches!(err, Err(AnalysisError::MissingConstant { name: "g", .. })));
    }

    #[test]
    fn h3a_unbounded_initial_set() {
        let a = SymmetricOperator::diagonal(&[0.0, 1.0]);
        let line = ConvexSetDesc::AffineSubspace { point: vec![0.0, 0.0], basis: vec![vec![1.0, 0.0]] };
        let spec = with_set(MovingSet::fixed(line, 1.0).unwrap(), a.clone(), a, TimeFunction::Zero);
        let err = boundedness_bound(&spec, BoundMode::H3a, &BoundParams::default(), 10, &ViSolveConfig::default());
        assert!(matches!(err, Err(AnalysisError::MissingConstant { name: "rho0", .. })));
    }

    #[test]
    fn h3b_identity_operators() {
        let plane = ConvexSetDesc::WholeSpace { dim: 2 };
        let spec = with_set(
            MovingSet::fixed(plane, 1.0).unwrap(),
            SymmetricOperator::identity(2),
            SymmetricOperator::identity(2),
            TimeFunction::Zero,
        );
        let r = boundedness_bound(&spec, BoundMode::H3b, &BoundParams::default(), 100, &ViSolveConfig::default()).unwrap();
        assert_abs_diff_eq!(r.constants.beta.unwrap(), 0.01, epsilon = 1e-15);
        assert_eq!(r.constants.gamma, Some(1.0));
        assert_abs_diff_eq!(r.bound, std::f64::consts::E - 1.0, epsilon = 1e-14);
        assert!(r.pass);
    }

    #[test]
    fn h3c_needs_beta() {
        let spec = with_set(unit_ball(1.0), SymmetricOperator::zeros(2), SymmetricOperator::identity(2), TimeFunction::Zero);
        let cfg = ViSolveConfig::default();
        assert!(matches!(
            boundedness_bound(&spec, BoundMode::H3c, &BoundParams::default(), 10, &cfg),
            Err(AnalysisError::MissingConstant { name: "beta", .. })
        ));
        let params = BoundParams { beta: Some(2.0), ..BoundParams::default() };
        let r = boundedness_bound(&spec, BoundMode::H3c, &params, 10, &cfg).unwrap();
        assert_eq!(r.constants.gamma, Some(2.0));
        assert!(r.pass);
    }

    #[test]
    fn h3b_needs_lower_bound_constants_for_singular_a1() {
        let spec = with_set(unit_ball(1.0), SymmetricOperator::zeros(2), SymmetricOperator::diagonal(&[1.0, 0.0]), TimeFunction::Zero);
        assert!(matches!(
            boundedness_bound(&spec, BoundMode::H3b, &BoundParams::default(), 10, &ViSolveConfig::default()),
            Err(AnalysisError::MissingConstant { name: "c1_hat", .. })
        ));
    }

    #[test]
    fn h3b_estimate_fails_when_c2_is_active() {
        // ⟨A1 x, x⟩ = x1² ≥ |x|² - 1 on the box, but the second component is
        // driven at full speed by a tiny force that A1 does not resist.
        let c = MovingSet::fixed(ConvexSetDesc::Box { lo: vec![-10.0, -1.0], hi: vec![10.0, 1.0] }, 1.0).unwrap();
        let spec = with_set(c, SymmetricOperator::zeros(2), SymmetricOperator::diagonal(&[1.0, 0.0]), TimeFunction::constant(vec![0.0, 1e-3]));
        let params = BoundParams { c1_hat: Some(1.0), c2_hat: Some(1.0), ..BoundParams::default() };
        let r = boundedness_bound(&spec, BoundMode::H3b, &params, 100, &ViSolveConfig::default()).unwrap();
        assert_abs_diff_eq!(r.observed_c0, 1.0, epsilon = 1e-9);
        assert!(r.bound < 0.02);
        assert!(!r.pass);
    }

    #[test]
    fn initial_value_outside_rejected() {
        let spec = ProblemSpec::new(
            SymmetricOperator::zeros(2),
            SymmetricOperator::identity(2),
            TimeFunction::Zero,
            unit_ball(1.0),
            vec![2.0, 0.0],
            1.0,
        )
        .unwrap();
        assert!(matches!(
            boundedness_bound(&spec, BoundMode::H3a, &BoundParams::default(), 10, &ViSolveConfig::default()),
            Err(AnalysisError::HypothesisViolated(_))
        ));
    }
}
