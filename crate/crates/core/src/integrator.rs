//! Catching-up time discretisation of the sweeping process and trajectory
//! norms.
//!
//! On the uniform grid `t_k = k h`, `h = T / N`, each step solves
//!
//! ```text
//! v_k = solve_vi(M = A1 + h A0,  q = A0 u_{k-1} - f(t_k),  S = C(t_k))
//! u_k = u_{k-1} + h v_k
//! ```
//!
//! so `A1 v_k + A0 u_k - f(t_k) ∈ -N_{C(t_k)}(v_k)`: the drift is evaluated at
//! the new state, which keeps the step VI linear in `v` while `M` inherits
//! coercivity from either operator.

use std::fmt::Write as _;

use thiserror::Error;

use crate::convex_sets::{MovingSet, ProjectionConfig, SetError};
use crate::operators::{OperatorError, SymmetricOperator};
use crate::time_fn::{TimeFunction, TimeFunctionError};
use crate::vector::{add_scaled, dist, norm, sub};
use crate::vi_solver::{StepVi, ViError, ViSolveConfig, solve_vi_from};

/// Membership tolerance for the initial value.
pub const INITIAL_MEMBERSHIP_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IntegratorError {
    #[error("inconsistent problem: {0}")]
    InvalidProblem(String),
    #[error("step count must be at least 1")]
    NoSteps,
    #[error("step {step} failed: {source}")]
    StepFailed { step: usize, source: ViError },
    #[error("trajectories live on different grids")]
    GridMismatch,
    #[error(transparent)]
    Set(#[from] SetError),
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error(transparent)]
    Function(#[from] TimeFunctionError),
}

/// One instance of the sweeping process.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    a0: SymmetricOperator,
    a1: SymmetricOperator,
    f: TimeFunction,
    c: MovingSet,
    u0: Vec<f64>,
    horizon: f64,
    initial_in_set: bool,
}

impl ProblemSpec {
    pub fn new(
        a0: SymmetricOperator,
        a1: SymmetricOperator,
        f: TimeFunction,
        c: MovingSet,
        u0: Vec<f64>,
        horizon: f64,
    ) -> Result<Self, IntegratorError> {
        let n = a0.dim();
        if a1.dim() != n || c.dim() != n || u0.len() != n {
            return Err(IntegratorError::InvalidProblem(format!(
                "dimensions disagree: A0 {n}, A1 {}, C {}, u0 {}",
                a1.dim(),
                c.dim(),
                u0.len()
            )));
        }
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(IntegratorError::InvalidProblem(format!("T must be positive, got {horizon}")));
        }
        if u0.iter().any(|x| !x.is_finite()) {
            return Err(IntegratorError::InvalidProblem("u0 must be finite".into()));
        }
        f.validate(Some(n))?;
        let c = if c.horizon() == horizon { c } else { c.with_horizon(horizon)? };
        let initial_in_set = c.at(0.0)?.contains(&u0, INITIAL_MEMBERSHIP_TOL)?;
        Ok(Self { a0, a1, f, c, u0, horizon, initial_in_set })
    }

    pub fn a0(&self) -> &SymmetricOperator {
        &self.a0
    }
    pub fn a1(&self) -> &SymmetricOperator {
        &self.a1
    }
    pub fn forcing(&self) -> &TimeFunction {
        &self.f
    }
    pub fn constraint(&self) -> &MovingSet {
        &self.c
    }
    pub fn u0(&self) -> &[f64] {
        &self.u0
    }
    pub fn horizon(&self) -> f64 {
        self.horizon
    }
    pub fn dim(&self) -> usize {
        self.u0.len()
    }
    /// Whether `u0 ∈ C(0)` within [`INITIAL_MEMBERSHIP_TOL`].
    pub fn initial_in_set(&self) -> bool {
        self.initial_in_set
    }

    pub fn f_at(&self, t: f64) -> Vec<f64> {
        self.f.eval(t, self.dim())
    }

    /// Same problem with a different initial value.
    pub fn with_initial(&self, u0: Vec<f64>) -> Result<Self, IntegratorError> {
        Self::new(self.a0.clone(), self.a1.clone(), self.f.clone(), self.c.clone(), u0, self.horizon)
    }

    pub fn with_operators(&self, a0: SymmetricOperator, a1: SymmetricOperator) -> Result<Self, IntegratorError> {
        Self::new(a0, a1, self.f.clone(), self.c.clone(), self.u0.clone(), self.horizon)
    }

    /// Residual of the step inclusion `A1 v + A0 u_k - f(t_k) ∈ -N_{C(t_k)}(v)`
    /// measured through the projection identity.
    pub fn step_residual(&self, t: f64, u_prev: &[f64], h: f64, v: &[f64]) -> Result<f64, IntegratorError> {
        let u_next = add_scaled(u_prev, h, v);
        let a1v = self.a1.apply(v)?;
        let a0u = self.a0.apply(&u_next)?;
        let f = self.f_at(t);
        let w: Vec<f64> = (0..v.len()).map(|i| -(a1v[i] + a0u[i] - f[i])).collect();
        Ok(self.c.at(t)?.normal_cone_residual(v, &w, &ProjectionConfig::default())?)
    }
}

/// Discrete solution on a uniform grid: states `u_0..u_N` and velocities
/// `v_1..v_N`, with `v_k` constant on `(t_{k-1}, t_k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    horizon: f64,
    states: Vec<Vec<f64>>,
    velocities: Vec<Vec<f64>>,
    residuals: Option<Vec<f64>>,
}

impl Trajectory {
    /// Integrates `u_k = u0 + h Σ_{j≤k} v_j`, keeping the velocity sum
    /// separately so constant integer velocities give exact states.
    pub fn from_velocities(u0: &[f64], horizon: f64, velocities: Vec<Vec<f64>>) -> Result<Self, IntegratorError> {
        if velocities.is_empty() {
            return Err(IntegratorError::NoSteps);
        }
        if velocities.iter().any(|v| v.len() != u0.len()) {
            return Err(IntegratorError::InvalidProblem("velocity dimension differs from u0".into()));
        }
        let n = velocities.len() as f64;
        let mut sum = vec![0.0; u0.len()];
        let mut states = Vec::with_capacity(velocities.len() + 1);
        states.push(u0.to_vec());
        for v in &velocities {
            for (s, vi) in sum.iter_mut().zip(v) {
                *s += vi;
            }
            states.push(u0.iter().zip(&sum).map(|(a, s)| a + horizon * s / n).collect());
        }
        Ok(Self { horizon, states, velocities, residuals: None })
    }

    pub fn steps(&self) -> usize {
        self.velocities.len()
    }
    pub fn dim(&self) -> usize {
        self.states[0].len()
    }
    pub fn horizon(&self) -> f64 {
        self.horizon
    }
    pub fn step_size(&self) -> f64 {
        self.horizon / self.steps() as f64
    }
    pub fn time(&self, k: usize) -> f64 {
        self.horizon * k as f64 / self.steps() as f64
    }
    pub fn times(&self) -> Vec<f64> {
        (0..=self.steps()).map(|k| self.time(k)).collect()
    }
    pub fn states(&self) -> &[Vec<f64>] {
        &self.states
    }
    /// `velocities()[k - 1]` is `v_k`.
    pub fn velocities(&self) -> &[Vec<f64>] {
        &self.velocities
    }
    /// Per-step solver residuals, present for solver output only.
    pub fn residuals(&self) -> Option<&[f64]> {
        self.residuals.as_deref()
    }

    pub fn same_grid(&self, other: &Trajectory) -> bool {
        self.steps() == other.steps() && self.horizon == other.horizon && self.dim() == other.dim()
    }

    /// Value of the piecewise-linear interpolant at `t`.
    pub fn interpolate(&self, t: f64) -> Vec<f64> {
        let h = self.step_size();
        let k = ((t / h).floor() as usize).min(self.steps() - 1);
        let s = (t - self.time(k)).clamp(0.0, h);
        add_scaled(&self.states[k], s, &self.velocities[k])
    }

    pub fn max_speed(&self) -> f64 {
        self.velocities.iter().map(|v| norm(v)).fold(0.0, f64::max)
    }

    /// `h Σ ‖v_k‖`, the exact `∫‖u'‖` of the interpolant.
    pub fn velocity_l1(&self) -> f64 {
        self.step_size() * self.velocities.iter().map(|v| norm(v)).sum::<f64>()
    }

    /// `max_k ‖u_k‖`
    pub fn c0_norm(&self) -> f64 {
        self.states.iter().map(|u| norm(u)).fold(0.0, f64::max)
    }

    pub fn c0_distance(&self, other: &Trajectory) -> Result<f64, IntegratorError> {
        if !self.same_grid(other) {
            return Err(IntegratorError::GridMismatch);
        }
        Ok(self.states.iter().zip(&other.states).map(|(a, b)| dist(a, b)).fold(0.0, f64::max))
    }

    /// Trapezoid rule on `‖u‖` plus `h Σ ‖v_k‖`.
    pub fn w11_norm(&self) -> f64 {
        let h = self.step_size();
        let norms: Vec<f64> = self.states.iter().map(|u| norm(u)).collect();
        let state_part: f64 = norms.windows(2).map(|w| 0.5 * h * (w[0] + w[1])).sum();
        state_part + self.velocity_l1()
    }

    pub fn w11_distance(&self, other: &Trajectory) -> Result<f64, IntegratorError> {
        if !self.same_grid(other) {
            return Err(IntegratorError::GridMismatch);
        }
        let h = self.step_size();
        let gaps: Vec<f64> = self.states.iter().zip(&other.states).map(|(a, b)| dist(a, b)).collect();
        let state_part: f64 = gaps.windows(2).map(|w| 0.5 * h * (w[0] + w[1])).sum();
        let vel_part: f64 = h * self.velocities.iter().zip(&other.velocities).map(|(a, b)| dist(a, b)).sum::<f64>();
        Ok(state_part + vel_part)
    }

    /// Pointwise `self + other - base`, used to build `u + (v - u)` style
    /// combinations from velocities.
    pub fn with_velocities(&self, velocities: Vec<Vec<f64>>) -> Result<Self, IntegratorError> {
        if velocities.len() != self.steps() {
            return Err(IntegratorError::GridMismatch);
        }
        Self::from_velocities(&self.states[0], self.horizon, velocities)
    }

    /// CSV with header `t,u_1..u_n,v_1..v_n,residual`, one row per node;
    /// velocity and residual cells are blank at `k = 0` (and residuals when
    /// the trajectory did not come from the solver).
    pub fn to_csv(&self) -> String {
        let n = self.dim();
        let mut out = String::new();
        out.push('t');
        for i in 1..=n {
            let _ = write!(out, ",u_{i}");
        }
        for i in 1..=n {
            let _ = write!(out, ",v_{i}");
        }
        out.push_str(",residual\n");
        for k in 0..=self.steps() {
            out.push_str(&fmt_f64(self.time(k)));
            for x in &self.states[k] {
                out.push(',');
                out.push_str(&fmt_f64(*x));
            }
            if k == 0 {
                for _ in 0..n {
                    out.push(',');
                }
                out.push(',');
            } else {
                for x in &self.velocities[k - 1] {
                    out.push(',');
                    out.push_str(&fmt_f64(*x));
                }
                out.push(',');
                if let Some(r) = &self.residuals {
                    out.push_str(&fmt_f64(r[k - 1]));
                }
            }
            out.push('\n');
        }
        out
    }
}

/// Fixed 17-significant-digit formatting used by every CSV writer.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Initial guess handed to each step VI.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum WarmStart {
    /// Previous step's velocity (zero at the first step).
    #[default]
    Previous,
    Zero,
    /// The same fixed vector at every step.
    Fixed(Vec<f64>),
}

pub fn solve(spec: &ProblemSpec, steps: usize, cfg: &ViSolveConfig) -> Result<Trajectory, IntegratorError> {
    solve_with(spec, steps, cfg, &WarmStart::Previous)
}

pub fn solve_with(
    spec: &ProblemSpec,
    steps: usize,
    cfg: &ViSolveConfig,
    warm: &WarmStart,
) -> Result<Trajectory, IntegratorError> {
    if steps == 0 {
        return Err(IntegratorError::NoSteps);
    }
    let n = spec.dim();
    if let WarmStart::Fixed(v) = warm {
        if v.len() != n {
            return Err(IntegratorError::InvalidProblem("warm start has wrong dimension".into()));
        }
    }
    let h = spec.horizon / steps as f64;
    let m = spec.a1.combine(1.0, &spec.a0, h)?;
    let mut states = Vec::with_capacity(steps + 1);
    let mut velocities: Vec<Vec<f64>> = Vec::with_capacity(steps);
    let mut residuals = Vec::with_capacity(steps);
    states.push(spec.u0.clone());
    let zero = vec![0.0; n];
    for k in 1..=steps {
        let t = k as f64 * h;
        let u_prev = &states[k - 1];
        let a0u = spec.a0.apply(u_prev)?;
        let q = sub(&a0u, &spec.f_at(t));
        let set = spec.c.at(t)?;
        let start = match warm {
            WarmStart::Previous => velocities.last().unwrap_or(&zero),
            WarmStart::Zero => &zero,
            WarmStart::Fixed(v) => v,
        };
        let p = StepVi::new(&m, &q, &set).map_err(|source| IntegratorError::StepFailed { step: k, source })?;
        let sol = solve_vi_from(&p, cfg, start).map_err(|source| IntegratorError::StepFailed { step: k, source })?;
        states.push(add_scaled(u_prev, h, &sol.v));
        velocities.push(sol.v);
        residuals.push(sol.residual);
    }
    Ok(Trajectory { horizon: spec.horizon, states, velocities, residuals: Some(residuals) })
}

/// Outcome of [`certify`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Certificate {
    pub is_solution: bool,
    pub max_residual: f64,
}

/// Checks that a trajectory solves the discrete problem: `u_0 = u0` and every
/// step satisfies `A1 v_k + A0 u_k - f(t_k) ∈ -N_{C(t_k)}(v_k)` within `tol`.
pub fn certify(spec: &ProblemSpec, traj: &Trajectory, tol: f64) -> Certificate {
    let fail = Certificate { is_solution: false, max_residual: f64::INFINITY };
    if traj.dim() != spec.dim() || (traj.horizon - spec.horizon).abs() > 1e-12 * spec.horizon {
        return fail;
    }
    let h = traj.step_size();
    let mut max_residual = dist(&traj.states[0], &spec.u0);
    for k in 1..=traj.steps() {
        match spec.step_residual(traj.time(k), &traj.states[k - 1], h, &traj.velocities[k - 1]) {
            Ok(r) => max_residual = max_residual.max(r),
            Err(_) => return fail,
        }
    }
    Certificate { is_solution: max_residual <= tol, max_residual }
}
