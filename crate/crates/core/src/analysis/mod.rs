//! Numerical checks of structural properties of the solution set: Lipschitz
//! dependence on the initial value, a-priori bounds, a Gronwall-type lemma,
//! failure of closedness in `C⁰`, and convexity / outer estimates built from
//! the kernel of `A0`.
//!
//! Every report derives `Serialize` so the CLI can emit it as JSON.

use thiserror::Error;

use crate::convex_sets::SetError;
use crate::integrator::IntegratorError;
use crate::operators::OperatorError;

pub mod boundedness;
pub mod convexity;
pub mod gronwall;
pub mod nonclosedness;
pub mod sensitivity;

pub use boundedness::{BoundConstants, BoundMode, BoundParams, BoundReport, boundedness_bound};
pub use convexity::{
    ConvexityReport, KernelHypotheses, KernelPerturbation, KernelPerturbationReport, OuterEstimateReport,
    convexity_check, kernel_hypotheses, kernel_set_membership, outer_estimate_check, sample_kernel_perturbation,
    verify_kernel_perturbation,
};
pub use gronwall::{GronwallCheck, check_gronwall, cumulative_trapezoid, gronwall_bound};
pub use nonclosedness::{NonclosednessReport, NonclosednessRow, nonclosedness_demo};
pub use sensitivity::{
    SensitivityMode, SensitivityPair, SensitivityReport, random_initial_pairs, sensitivity_experiment,
    theoretical_modulus,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("missing constant {name}: {reason}")]
    MissingConstant { name: &'static str, reason: String },
    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),
    #[error("coercivity required by mode {mode} is absent: {detail}")]
    ModeMismatch { mode: String, detail: String },
    #[error("initial pair {index} is degenerate: |x0 - y0| = {gap:e}")]
    DegeneratePair { index: usize, gap: f64 },
    #[error("initial point of pair {index} lies outside C(0) (distance {distance:e})")]
    InitialOutsideSet { index: usize, distance: f64 },
    #[error("direction leaves ker A0: |A0 d| = {residual:e}")]
    KernelViolation { residual: f64 },
    #[error("trajectory is not a certified solution (residual {residual:e})")]
    NotCertified { residual: f64 },
    #[error(transparent)]
    Integrator(#[from] IntegratorError),
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error(transparent)]
    Set(#[from] SetError),
}
