//! Numerical solver and verification harness for convex sweeping processes
//! with velocity constraints,
//!
//! ```text
//! A1 u'(t) + A0 u(t) - f(t) ∈ -N_{C(t)}(u'(t)),   u(0) = u0,
//! ```
//!
//! posed on `R^n` with symmetric positive-semidefinite `A0`, `A1` and a moving
//! closed convex set `C(t)`.
//!
//! The crate is organised bottom-up:
//!
//! * [`operators`] – dense symmetric PSD operators with a Jacobi spectrum.
//! * [`convex_sets`] – projectable convex sets, normal cones, moving families.
//! * [`time_fn`] – closed-form and sampled functions of time.
//! * [`vi_solver`] – the per-step variational inequality.
//! * [`integrator`] – the catching-up time discretisation and trajectory norms.
//! * [`analysis`] – numerical checks of sensitivity, boundedness, closedness
//!   and convexity properties of the solution set.
//! * [`spec_file`] – the JSON problem description used by the CLI.

pub mod analysis;
pub mod convex_sets;
pub mod integrator;
pub mod operators;
pub mod spec_file;
pub mod time_fn;
pub mod vi_solver;

mod vector;

pub use convex_sets::{ConvexSetDesc, MovingSet, ProjectionConfig, SetError, SetFamily};
pub use integrator::{
    Certificate, IntegratorError, ProblemSpec, Trajectory, WarmStart, solve, solve_with,
};
pub use operators::{OperatorError, OperatorSpectrum, SymmetricOperator};
pub use time_fn::TimeFunction;
pub use vi_solver::{StepSolution, StepVi, ViError, ViSolveConfig};
