//! Per-step variational inequality
//!
//! ```text
//! find v ∈ S :  ⟨M v + q, z - v⟩ ≥ 0   for all z ∈ S
//! ```
//!
//! with `M` symmetric PSD. This is the inclusion `M v + q ∈ -N_S(v)`, i.e.
//! one time step of the sweeping process.
//!
//! When `M` is coercive the problem has a unique solution, found by the
//! projected fixed-point map `v ← P_S(v - ρ(Mv + q))`. When `M` is singular
//! the solution set may be a continuum; the solver then follows a Tikhonov
//! path `M + ε_j I` with `ε_j = ε₀ θ^j`, warm-starting each stage, and finally
//! polishes on the unregularised problem so the returned point meets the
//! residual target. The result approximates the minimal-norm solution.

use thiserror::Error;

use crate::convex_sets::{ConvexSetDesc, ProjectionConfig, SetError};
use crate::operators::{DEFAULT_KERNEL_TOL, OperatorError, SymmetricOperator};
use crate::vector::{dist, dot};

/// Condition number above which the momentum variant is used.
const PLAIN_CONDITION_LIMIT: f64 = 100.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ViError {
    #[error("VI iteration did not reach tolerance within {max_iter} iterations (residual {residual:e})")]
    NoConverge { max_iter: usize, residual: f64 },
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error("dimension mismatch: operator {operator}, drift {drift}, set {set}")]
    DimensionMismatch { operator: usize, drift: usize, set: usize },
    #[error(transparent)]
    Set(#[from] SetError),
    #[error(transparent)]
    Operator(#[from] OperatorError),
}

/// One step problem: `M`, drift `q` and feasible set `S`.
#[derive(Debug, Clone, Copy)]
pub struct StepVi<'a> {
    pub m: &'a SymmetricOperator,
    pub q: &'a [f64],
    pub set: &'a ConvexSetDesc,
}

impl<'a> StepVi<'a> {
    pub fn new(m: &'a SymmetricOperator, q: &'a [f64], set: &'a ConvexSetDesc) -> Result<Self, ViError> {
        if q.len() != m.dim() || set.dim() != m.dim() {
            return Err(ViError::DimensionMismatch { operator: m.dim(), drift: q.len(), set: set.dim() });
        }
        Ok(Self { m, q, set })
    }

    pub fn dim(&self) -> usize {
        self.m.dim()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ViSolveConfig {
    /// Natural-map residual target.
    pub tol: f64,
    /// Total iteration budget across all stages.
    pub max_iter: usize,
    pub eps0: f64,
    pub theta: f64,
    pub stages: usize,
}

impl Default for ViSolveConfig {
    fn default() -> Self {
        Self { tol: 1e-10, max_iter: 1_000_000, eps0: 1e-2, theta: 0.1, stages: 6 }
    }
}

impl ViSolveConfig {
    pub fn validate(&self) -> Result<(), ViError> {
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(ViError::InvalidConfig(format!("tol must be positive, got {}", self.tol)));
        }
        if !(self.theta > 0.0 && self.theta < 1.0) {
            return Err(ViError::InvalidConfig(format!("theta must lie in (0, 1), got {}", self.theta)));
        }
        if !(self.eps0 > 0.0 && self.eps0.is_finite()) {
            return Err(ViError::InvalidConfig(format!("eps0 must be positive, got {}", self.eps0)));
        }
        if self.max_iter == 0 {
            return Err(ViError::InvalidConfig("max_iter must be positive".into()));
        }
        Ok(())
    }

    fn projection(&self) -> ProjectionConfig {
        ProjectionConfig { tol: 0.1 * self.tol, ..ProjectionConfig::default() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepSolution {
    pub v: Vec<f64>,
    /// `vi_residual(P, v, rho)` at the reported `rho`.
    pub residual: f64,
    pub rho: f64,
    pub iterations: usize,
    /// True when the Tikhonov path was used (singular `M`).
    pub regularized: bool,
}

/// Natural-map residual `‖v - P_S(v - ρ(Mv + q))‖`.
pub fn vi_residual(p: &StepVi<'_>, v: &[f64], rho: f64) -> Result<f64, ViError> {
    vi_residual_with(p, v, rho, &ProjectionConfig::default())
}

fn vi_residual_with(p: &StepVi<'_>, v: &[f64], rho: f64, proj: &ProjectionConfig) -> Result<f64, ViError> {
    if !(rho > 0.0) {
        return Err(ViError::InvalidConfig(format!("rho must be positive, got {rho}")));
    }
    let mv = p.m.apply(v)?;
    let trial: Vec<f64> = (0..v.len()).map(|i| v[i] - rho * (mv[i] + p.q[i])).collect();
    Ok(dist(v, &p.set.project(&trial, proj)?))
}

/// Step size at which residuals are reported: `max(1, 1/‖M‖)`. A residual
/// below `tol` at this step is also below `tol` at `ρ = 1` (the scale of the
/// normal-cone certificate) and at `ρ = 1/‖M‖`, since the natural-map
/// residual is nondecreasing in `ρ`.
pub fn reporting_rho(m: &SymmetricOperator) -> f64 {
    let l = m.norm();
    if l > 0.0 { (1.0 / l).max(1.0) } else { 1.0 }
}

pub fn solve_vi(p: &StepVi<'_>, cfg: &ViSolveConfig) -> Result<StepSolution, ViError> {
    solve_vi_from(p, cfg, &vec![0.0; p.dim()])
}

/// Solves the step VI starting the iteration from `start`.
pub fn solve_vi_from(p: &StepVi<'_>, cfg: &ViSolveConfig, start: &[f64]) -> Result<StepSolution, ViError> {
    cfg.validate()?;
    if start.len() != p.dim() {
        return Err(ViError::DimensionMismatch { operator: p.dim(), drift: start.len(), set: p.set.dim() });
    }
    let spectrum = p.m.spectrum(DEFAULT_KERNEL_TOL)?;
    let rho = reporting_rho(p.m);
    let proj = cfg.projection();
    let mut budget = Budget { left: cfg.max_iter, used: 0 };

    let (v, regularized) = if spectrum.is_coercive() {
        let run = Iteration {
            p,
            shift: 0.0,
            alpha: spectrum.coercivity_modulus,
            lipschitz: spectrum.operator_norm,
            stop_rho: rho,
            tol: cfg.tol,
            proj,
        };
        (run.run(start, &mut budget)?, false)
    } else {
        let mut v = start.to_vec();
        let mut eps = cfg.eps0;
        for _ in 0..cfg.stages {
            let run = Iteration {
                p,
                shift: eps,
                alpha: eps,
                lipschitz: spectrum.operator_norm + eps,
                stop_rho: rho,
                tol: cfg.tol,
                proj,
            };
            v = run.run(&v, &mut budget)?;
            eps *= cfg.theta;
        }
        let polish = Iteration {
            p,
            shift: 0.0,
            alpha: 0.0,
            lipschitz: spectrum.operator_norm,
            stop_rho: rho,
            tol: cfg.tol,
            proj,
        };
        (polish.run(&v, &mut budget)?, true)
    };
    let residual = vi_residual_with(p, &v, rho, &proj)?;
    Ok(StepSolution { v, residual, rho, iterations: budget.used, regularized })
}

struct Budget {
    left: usize,
    used: usize,
}

/// Projected iteration on `⟨(M + shift I)v + q, z - v⟩ ≥ 0`.
struct Iteration<'p, 'a> {
    p: &'p StepVi<'a>,
    shift: f64,
    alpha: f64,
    lipschitz: f64,
    stop_rho: f64,
    tol: f64,
    proj: ProjectionConfig,
}

impl Iteration<'_, '_> {
    fn field(&self, v: &[f64], out: &mut [f64]) {
        self.p.m.apply_into(v, out);
        for i in 0..v.len() {
            out[i] += self.shift * v[i] + self.p.q[i];
        }
    }

    fn step(&self, v: &[f64], rho: f64, scratch: &mut [f64]) -> Result<Vec<f64>, ViError> {
        self.field(v, scratch);
        for i in 0..v.len() {
            scratch[i] = v[i] - rho * scratch[i];
        }
        Ok(self.p.set.project(scratch, &self.proj)?)
    }

    fn residual(&self, v: &[f64], scratch: &mut [f64]) -> Result<f64, ViError> {
        let next = self.step(v, self.stop_rho, scratch)?;
        Ok(dist(v, &next))
    }

    fn run(&self, start: &[f64], budget: &mut Budget) -> Result<Vec<f64>, ViError> {
        let n = start.len();
        let mut scratch = vec![0.0; n];
        let plain = self.alpha > 0.0 && self.lipschitz <= PLAIN_CONDITION_LIMIT * self.alpha;
        // zero operator: any positive step is admissible
        let lipschitz = if self.lipschitz > 0.0 { self.lipschitz } else { 1.0 };
        let rho = if plain { 2.0 / (self.alpha + lipschitz) } else { 1.0 / lipschitz };
        let scale = (self.stop_rho / rho).max(1.0);
        let momentum = if self.alpha > 0.0 {
            let k = (lipschitz / self.alpha).sqrt();
            Some((k - 1.0) / (k + 1.0))
        } else {
            None
        };

        let mut v = self.p.set.project(start, &self.proj)?;
        let mut v_prev = v.clone();
        let mut t_k = 1.0_f64;
        let mut last_residual = f64::INFINITY;
        while budget.left > 0 {
            budget.left -= 1;
            budget.used += 1;
            let (next, lookahead) = if plain {
                (self.step(&v, rho, &mut scratch)?, v.clone())
            } else {
                let beta = match momentum {
                    Some(b) => b,
                    None => {
                        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t_k * t_k).sqrt());
                        let b = (t_k - 1.0) / t_next;
                        t_k = t_next;
                        b
                    }
                };
                let y: Vec<f64> = (0..n).map(|i| v[i] + beta * (v[i] - v_prev[i])).collect();
                (self.step(&y, rho, &mut scratch)?, y)
            };
            let gradient_map = dist(&next, &lookahead);
            if !plain {
                // adaptive restart when the momentum points uphill
                let up: f64 = (0..n).map(|i| (lookahead[i] - next[i]) * (next[i] - v[i])).sum();
                if up > 0.0 {
                    t_k = 1.0;
                    v_prev = next.clone();
                } else {
                    v_prev = std::mem::replace(&mut v, next.clone());
                }
            }
            v = next;
            if gradient_map * scale <= self.tol {
                last_residual = self.residual(&v, &mut scratch)?;
                if last_residual <= self.tol {
                    return Ok(v);
                }
            }
        }
        if !last_residual.is_finite() {
            last_residual = self.residual(&v, &mut scratch)?;
        }
        Err(ViError::NoConverge { max_iter: budget.used, residual: last_residual })
    }
}

/// Iterates of the plain projected map `v ← P_S(v - ρ(Mv + q))`.
pub fn fixed_point_iterates(p: &StepVi<'_>, rho: f64, start: &[f64], count: usize) -> Result<Vec<Vec<f64>>, ViError> {
    let proj = ProjectionConfig::default();
    let mut out = Vec::with_capacity(count + 1);
    let mut v = start.to_vec();
    out.push(v.clone());
    for _ in 0..count {
        let mv = p.m.apply(&v)?;
        let trial: Vec<f64> = (0..v.len()).map(|i| v[i] - rho * (mv[i] + p.q[i])).collect();
        v = p.set.project(&trial, &proj)?;
        out.push(v.clone());
    }
    Ok(out)
}

/// `⟨Mv + q, z - v⟩` for a candidate `z`; nonnegative for all `z ∈ S` iff
/// `v` solves the VI.
pub fn vi_gap(p: &StepVi<'_>, v: &[f64], z: &[f64]) -> Result<f64, ViError> {
    let mv = p.m.apply(v)?;
    let field: Vec<f64> = mv.iter().zip(p.q).map(|(a, b)| a + b).collect();
    let dz: Vec<f64> = z.iter().zip(v).map(|(a, b)| a - b).collect();
    Ok(dot(&field, &dz))
}
