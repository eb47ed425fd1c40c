//! Convexity of the solution set and the kernel outer estimate.
//!
//! For two solutions `u`, `v` with the same initial value, `v - u` starts at
//! zero and has velocity in `(C(t) - u'(t)) ∩ ker A0`. When `A0 = 0` every
//! velocity blend of two solutions is again a solution; when `A1 = 0` and
//! `f(t) ⊥ ker A0`, every such kernel perturbation of a solution is a
//! solution.

use rayon::prelude::*;
use serde::Serialize;

use super::AnalysisError;
use crate::integrator::{ProblemSpec, Trajectory, certify};
use crate::vector::{add, add_scaled, dist, dot, norm, scale, sub};

/// Containment tolerance used while searching for the perturbation size.
pub const KERNEL_MEMBERSHIP_TOL: f64 = 1e-10;

const BISECTION_STEPS: usize = 20;

fn check_pair(spec: &ProblemSpec, u: &Trajectory, v: &Trajectory, tol: f64) -> Result<(), AnalysisError> {
    if !u.same_grid(v) {
        return Err(AnalysisError::InvalidInput("trajectories live on different grids".into()));
    }
    if dist(&u.states()[0], &v.states()[0]) > tol {
        return Err(AnalysisError::InvalidInput("trajectories start from different initial values".into()));
    }
    for traj in [u, v] {
        let cert = certify(spec, traj, tol);
        if !cert.is_solution {
            return Err(AnalysisError::NotCertified { residual: cert.max_residual });
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvexityReport {
    pub lambdas: Vec<f64>,
    /// Certification residual of each blend.
    pub residuals: Vec<f64>,
    pub tol: f64,
    pub pass: bool,
}

/// Certifies the blends `w_λ` with velocities `(1 - λ) u'_k + λ v'_k`.
/// Requires `A0 = 0` and two certified solutions on one grid.
pub fn convexity_check(
    spec: &ProblemSpec,
    u: &Trajectory,
    v: &Trajectory,
    lambdas: &[f64],
    tol: f64,
) -> Result<ConvexityReport, AnalysisError> {
    if spec.a0().norm() != 0.0 {
        return Err(AnalysisError::HypothesisViolated("convexity of the solution set needs A0 = 0".into()));
    }
    check_pair(spec, u, v, tol)?;
    let residuals = lambdas
        .par_iter()
        .map(|&lambda| -> Result<f64, AnalysisError> {
            let vel = u
                .velocities()
                .iter()
                .zip(v.velocities())
                .map(|(a, b)| add(&scale(a, 1.0 - lambda), &scale(b, lambda)))
                .collect();
            let w = u.with_velocities(vel)?;
            Ok(certify(spec, &w, tol).max_residual)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ConvexityReport { lambdas: lambdas.to_vec(), pass: residuals.iter().all(|r| *r <= tol), residuals, tol })
}

/// Whether `v - u` belongs to the kernel set: shared initial value, `v'_k`
/// feasible and `‖A0 (v'_k - u'_k)‖ ≤ tol` at every step.
pub fn kernel_set_membership(spec: &ProblemSpec, u: &Trajectory, v: &Trajectory, tol: f64) -> bool {
    if !u.same_grid(v) || u.dim() != spec.dim() || dist(&u.states()[0], &v.states()[0]) > tol {
        return false;
    }
    (1..=u.steps()).all(|k| {
        let (du, dv) = (&u.velocities()[k - 1], &v.velocities()[k - 1]);
        let feasible = spec.constraint().at(u.time(k)).and_then(|c| c.contains(dv, tol)).unwrap_or(false);
        feasible && spec.a0().apply(&sub(dv, du)).map(|r| norm(&r) <= tol).unwrap_or(false)
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairMembership {
    pub base: usize,
    pub other: usize,
    pub member: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OuterEstimateReport {
    pub certificate_residuals: Vec<f64>,
    pub pairs: Vec<PairMembership>,
    pub pass: bool,
}

/// Checks every ordered pair of certified solutions against the outer
/// estimate `Sol ⊂ u + K`.
pub fn outer_estimate_check(
    spec: &ProblemSpec,
    solutions: &[Trajectory],
    tol: f64,
) -> Result<OuterEstimateReport, AnalysisError> {
    let mut certificate_residuals = Vec::with_capacity(solutions.len());
    for traj in solutions {
        let cert = certify(spec, traj, tol);
        if !cert.is_solution {
            return Err(AnalysisError::NotCertified { residual: cert.max_residual });
        }
        certificate_residuals.push(cert.max_residual);
    }
    let mut pairs = Vec::new();
    for (i, u) in solutions.iter().enumerate() {
        for (j, v) in solutions.iter().enumerate() {
            if i != j {
                pairs.push(PairMembership { base: i, other: j, member: kernel_set_membership(spec, u, v, tol) });
            }
        }
    }
    Ok(OuterEstimateReport { certificate_residuals, pass: pairs.iter().all(|p| p.member), pairs })
}

/// A grid function `x` with `x_0 = 0` and velocities `ẋ_k`, meant to lie in
/// the kernel set of a base solution.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KernelPerturbation {
    horizon: f64,
    velocities: Vec<Vec<f64>>,
    states: Vec<Vec<f64>>,
    /// Set when every velocity is a multiple `s_k d` of one direction.
    direction: Option<Vec<f64>>,
    profile: Option<Vec<f64>>,
}

impl KernelPerturbation {
    fn from_velocities(horizon: f64, velocities: Vec<Vec<f64>>, direction: Option<Vec<f64>>, profile: Option<Vec<f64>>) -> Self {
        let h = horizon / velocities.len() as f64;
        let mut states = vec![vec![0.0; velocities[0].len()]];
        for v in &velocities {
            let next = add_scaled(states.last().unwrap(), h, v);
            states.push(next);
        }
        Self { horizon, velocities, states, direction, profile }
    }

    pub fn velocities(&self) -> &[Vec<f64>] {
        &self.velocities
    }
    pub fn states(&self) -> &[Vec<f64>] {
        &self.states
    }
    pub fn direction(&self) -> Option<&[f64]> {
        self.direction.as_deref()
    }
    /// Magnitudes `s_k`, when the perturbation follows a single direction.
    pub fn profile(&self) -> Option<&[f64]> {
        self.profile.as_deref()
    }

    /// `u + x` on the grid of `u`.
    pub fn apply(&self, u: &Trajectory) -> Result<Trajectory, AnalysisError> {
        if u.steps() != self.velocities.len() || u.horizon() != self.horizon {
            return Err(AnalysisError::InvalidInput("perturbation and trajectory grids differ".into()));
        }
        let vel = u.velocities().iter().zip(&self.velocities).map(|(a, b)| add(a, b)).collect();
        Ok(u.with_velocities(vel)?)
    }

    /// `(1 - λ) self + λ other`.
    pub fn blend(&self, other: &KernelPerturbation, lambda: f64) -> Result<KernelPerturbation, AnalysisError> {
        if self.velocities.len() != other.velocities.len() || self.horizon != other.horizon {
            return Err(AnalysisError::InvalidInput("perturbations live on different grids".into()));
        }
        let velocities = self
            .velocities
            .iter()
            .zip(&other.velocities)
            .map(|(a, b)| add(&scale(a, 1.0 - lambda), &scale(b, lambda)))
            .collect();
        let (direction, profile) = match (&self.direction, &other.direction, &self.profile, &other.profile) {
            (Some(d1), Some(d2), Some(p1), Some(p2)) if d1 == d2 => {
                (Some(d1.clone()), Some(p1.iter().zip(p2).map(|(a, b)| (1.0 - lambda) * a + lambda * b).collect()))
            }
            _ => (None, None),
        };
        Ok(Self::from_velocities(self.horizon, velocities, direction, profile))
    }

    /// Re-checks `x_0 = 0`, `‖A0 ẋ_k‖ ≤ tol` and `u'_k + ẋ_k ∈ C(t_k)`.
    pub fn is_valid(&self, spec: &ProblemSpec, u: &Trajectory, tol: f64) -> Result<bool, AnalysisError> {
        if u.steps() != self.velocities.len() || norm(&self.states[0]) != 0.0 {
            return Ok(false);
        }
        for k in 1..=u.steps() {
            let xdot = &self.velocities[k - 1];
            if norm(&spec.a0().apply(xdot)?) > tol {
                return Ok(false);
            }
            let c = spec.constraint().at(u.time(k))?;
            if !c.contains(&add(&u.velocities()[k - 1], xdot), tol)? {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// Builds `ẋ_k = s_k d` where `s_k` is the largest `s ∈ [0, magnitude]`
/// (found by bisection) keeping `u'_k + s d` in `C(t_k)`.
pub fn sample_kernel_perturbation(
    spec: &ProblemSpec,
    u: &Trajectory,
    d: &[f64],
    magnitude: f64,
) -> Result<KernelPerturbation, AnalysisError> {
    if d.len() != spec.dim() || (norm(d) - 1.0).abs() > 1e-12 {
        return Err(AnalysisError::InvalidInput("direction must be a unit vector of the problem dimension".into()));
    }
    if !(magnitude.is_finite() && magnitude >= 0.0) {
        return Err(AnalysisError::InvalidInput(format!("magnitude must be nonnegative, got {magnitude}")));
    }
    let residual = norm(&spec.a0().apply(d)?);
    if residual > 1e-10 {
        return Err(AnalysisError::KernelViolation { residual });
    }
    let mut profile = Vec::with_capacity(u.steps());
    for k in 1..=u.steps() {
        let c = spec.constraint().at(u.time(k))?;
        let v = &u.velocities()[k - 1];
        let fits = |s: f64| c.contains(&add_scaled(v, s, d), KERNEL_MEMBERSHIP_TOL);
        let s = if fits(magnitude)? {
            magnitude
        } else if !fits(0.0)? {
            0.0
        } else {
            let (mut lo, mut hi) = (0.0, magnitude);
            for _ in 0..BISECTION_STEPS {
                let mid = 0.5 * (lo + hi);
                if fits(mid)? { lo = mid } else { hi = mid }
            }
            lo
        };
        profile.push(s);
    }
    let velocities = profile.iter().map(|&s| scale(d, s)).collect();
    Ok(KernelPerturbation::from_velocities(u.horizon(), velocities, Some(d.to_vec()), Some(profile)))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KernelHypotheses {
    pub a1_zero: bool,
    pub f_orthogonal: bool,
    /// `max_k max_b |⟨f(t_k), b⟩|` over an orthonormal kernel basis.
    pub max_f_kernel_component: f64,
}

/// Evaluates `A1 = 0` and `f(t_k) ⊥ ker A0` on the grid with `steps` steps.
pub fn kernel_hypotheses(spec: &ProblemSpec, steps: usize, tol: f64) -> Result<KernelHypotheses, AnalysisError> {
    let basis = spec.a0().spectrum(crate::operators::DEFAULT_KERNEL_TOL)?.kernel_basis;
    let h = spec.horizon() / steps.max(1) as f64;
    let mut worst: f64 = 0.0;
    for k in 0..=steps {
        let f = spec.f_at(k as f64 * h);
        for b in &basis {
            worst = worst.max(dot(&f, b).abs());
        }
    }
    Ok(KernelHypotheses { a1_zero: spec.a1().norm() == 0.0, f_orthogonal: worst <= tol, max_f_kernel_component: worst })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KernelPerturbationReport {
    pub hypotheses: KernelHypotheses,
    pub direction: Vec<f64>,
    pub magnitude: f64,
    pub min_profile: f64,
    pub max_profile: f64,
    pub invariants_hold: bool,
    pub residual: f64,
    pub pass: bool,
}

/// Checks the hypotheses, builds a perturbation of the certified solution
/// `u` and certifies `u + x`.
pub fn verify_kernel_perturbation(
    spec: &ProblemSpec,
    u: &Trajectory,
    d: &[f64],
    magnitude: f64,
    tol: f64,
) -> Result<KernelPerturbationReport, AnalysisError> {
    let hypotheses = kernel_hypotheses(spec, u.steps(), tol)?;
    if !hypotheses.a1_zero {
        return Err(AnalysisError::HypothesisViolated("A1 must vanish".into()));
    }
    if !hypotheses.f_orthogonal {
        return Err(AnalysisError::HypothesisViolated(format!(
            "f is not orthogonal to ker A0 (component {:e})",
            hypotheses.max_f_kernel_component
        )));
    }
    let base = certify(spec, u, tol);
    if !base.is_solution {
        return Err(AnalysisError::NotCertified { residual: base.max_residual });
    }
    let x = sample_kernel_perturbation(spec, u, d, magnitude)?;
    let invariants_hold = x.is_valid(spec, u, tol)?;
    let cert = certify(spec, &x.apply(u)?, tol);
    let profile = x.profile().unwrap_or_default();
    Ok(KernelPerturbationReport {
        hypotheses,
        direction: d.to_vec(),
        magnitude,
        min_profile: profile.iter().copied().fold(f64::INFINITY, f64::min),
        max_profile: profile.iter().copied().fold(0.0, f64::max),
        invariants_hold,
        residual: cert.max_residual,
        pass: invariants_hold && cert.is_solution,
    })
}
