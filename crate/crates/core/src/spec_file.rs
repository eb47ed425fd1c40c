//! JSON problem description.
//!
//! ```json
//! {
//!   "dim": 1,
//!   "A0": [[0.0]],
//!   "A1": [[1.0]],
//!   "f": {"kind": "polynomial", "coeffs": [[0.0], [1.0]]},
//!   "C": {"family": "static", "set": {"type": "box", "lo": [-1.0], "hi": [1.0]}},
//!   "u0": [0.0],
//!   "T": 2.0,
//!   "N": 2000,
//!   "solver": {"tol": 1e-10}
//! }
//! ```
//!
//! Unknown keys are rejected everywhere. `solver` may be omitted or partial;
//! `reference` optionally gives a closed-form solution to compare against.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::convex_sets::{ConvexSetDesc, MovingSet, SetFamily};
use crate::integrator::{IntegratorError, ProblemSpec};
use crate::operators::SymmetricOperator;
use crate::time_fn::TimeFunction;
use crate::vi_solver::ViSolveConfig;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpecError {
    #[error("malformed spec at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("invalid value for key `{key}`: {message}")]
    Invalid { key: &'static str, message: String },
}

fn invalid(key: &'static str, message: impl ToString) -> SpecError {
    SpecError::Invalid { key, message: message.to_string() }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSpec {
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default = "default_eps0")]
    pub eps0: f64,
    #[serde(default = "default_theta")]
    pub theta: f64,
    #[serde(default = "default_stages")]
    pub stages: usize,
}

fn default_tol() -> f64 {
    ViSolveConfig::default().tol
}
fn default_max_iter() -> usize {
    ViSolveConfig::default().max_iter
}
fn default_eps0() -> f64 {
    ViSolveConfig::default().eps0
}
fn default_theta() -> f64 {
    ViSolveConfig::default().theta
}
fn default_stages() -> usize {
    ViSolveConfig::default().stages
}

impl Default for SolverSpec {
    fn default() -> Self {
        ViSolveConfig::default().into()
    }
}

impl From<ViSolveConfig> for SolverSpec {
    fn from(c: ViSolveConfig) -> Self {
        Self { tol: c.tol, max_iter: c.max_iter, eps0: c.eps0, theta: c.theta, stages: c.stages }
    }
}

impl From<&SolverSpec> for ViSolveConfig {
    fn from(s: &SolverSpec) -> Self {
        Self { tol: s.tol, max_iter: s.max_iter, eps0: s.eps0, theta: s.theta, stages: s.stages }
    }
}

/// `C(t)` with its optional continuity modulus `g` and selection bound
/// `beta`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum ConstraintSpec {
    Static {
        set: ConvexSetDesc,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        g: Option<TimeFunction>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        beta: Option<f64>,
    },
    Translate {
        set: ConvexSetDesc,
        path: TimeFunction,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        g: Option<TimeFunction>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        beta: Option<f64>,
    },
    BallPath {
        center: TimeFunction,
        radius: TimeFunction,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        g: Option<TimeFunction>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        beta: Option<f64>,
    },
    BoxPath {
        lo: TimeFunction,
        hi: TimeFunction,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        g: Option<TimeFunction>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        beta: Option<f64>,
    },
}

impl ConstraintSpec {
    fn split(&self) -> (SetFamily, Option<&TimeFunction>, Option<f64>) {
        match self {
            ConstraintSpec::Static { set, g, beta } => (SetFamily::Static { set: set.clone() }, g.as_ref(), *beta),
            ConstraintSpec::Translate { set, path, g, beta } => {
                (SetFamily::Translate { set: set.clone(), path: path.clone() }, g.as_ref(), *beta)
            }
            ConstraintSpec::BallPath { center, radius, g, beta } => {
                (SetFamily::BallPath { center: center.clone(), radius: radius.clone() }, g.as_ref(), *beta)
            }
            ConstraintSpec::BoxPath { lo, hi, g, beta } => {
                (SetFamily::BoxPath { lo: lo.clone(), hi: hi.clone() }, g.as_ref(), *beta)
            }
        }
    }

    pub fn to_moving_set(&self, horizon: f64) -> Result<MovingSet, SpecError> {
        let (family, g, beta) = self.split();
        let mut set = MovingSet::new(family, horizon).map_err(|e| invalid("C", e))?;
        if let Some(g) = g {
            set = set.with_modulus(g.clone()).map_err(|e| invalid("C", e))?;
        }
        if let Some(b) = beta {
            set = set.with_lipschitz_beta(b).map_err(|e| invalid("C", e))?;
        }
        Ok(set)
    }

    pub fn from_moving_set(c: &MovingSet) -> Self {
        let g = c.modulus().cloned();
        let beta = c.lipschitz_beta();
        match c.family().clone() {
            SetFamily::Static { set } => ConstraintSpec::Static { set, g, beta },
            SetFamily::Translate { set, path } => ConstraintSpec::Translate { set, path, g, beta },
            SetFamily::BallPath { center, radius } => ConstraintSpec::BallPath { center, radius, g, beta },
            SetFamily::BoxPath { lo, hi } => ConstraintSpec::BoxPath { lo, hi, g, beta },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecFile {
    pub dim: usize,
    #[serde(rename = "A0")]
    pub a0: Vec<Vec<f64>>,
    #[serde(rename = "A1")]
    pub a1: Vec<Vec<f64>>,
    pub f: TimeFunction,
    #[serde(rename = "C")]
    pub c: ConstraintSpec,
    pub u0: Vec<f64>,
    #[serde(rename = "T")]
    pub horizon: f64,
    #[serde(rename = "N")]
    pub steps: usize,
    #[serde(default)]
    pub solver: SolverSpec,
    /// Closed-form solution `u(t)`, when known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<TimeFunction>,
}

fn operator(key: &'static str, rows: &[Vec<f64>], dim: usize) -> Result<SymmetricOperator, SpecError> {
    if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
        return Err(invalid(key, format!("expected a {dim}x{dim} matrix")));
    }
    SymmetricOperator::from_rows(rows).map_err(|e| invalid(key, e))
}

impl SpecFile {
    pub fn from_json(text: &str) -> Result<Self, SpecError> {
        serde_json::from_str(text).map_err(|e| SpecError::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("spec files always serialize")
    }

    pub fn solver_config(&self) -> ViSolveConfig {
        (&self.solver).into()
    }

    /// Validates every key and assembles the problem.
    pub fn to_problem(&self) -> Result<ProblemSpec, SpecError> {
        let n = self.dim;
        if n == 0 {
            return Err(invalid("dim", "must be at least 1"));
        }
        let a0 = operator("A0", &self.a0, n)?;
        let a1 = operator("A1", &self.a1, n)?;
        self.f.validate(Some(n)).map_err(|e| invalid("f", e))?;
        if self.u0.len() != n {
            return Err(invalid("u0", format!("expected {n} entries, got {}", self.u0.len())));
        }
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            return Err(invalid("T", format!("must be positive, got {}", self.horizon)));
        }
        if self.steps == 0 {
            return Err(invalid("N", "must be at least 1"));
        }
        self.solver_config().validate().map_err(|e| invalid("solver", e))?;
        if let Some(r) = &self.reference {
            r.validate(Some(n)).map_err(|e| invalid("reference", e))?;
        }
        let c = self.c.to_moving_set(self.horizon)?;
        if c.dim() != n {
            return Err(invalid("C", format!("set has dimension {}, expected {n}", c.dim())));
        }
        ProblemSpec::new(a0, a1, self.f.clone(), c, self.u0.clone(), self.horizon).map_err(|e| match e {
            IntegratorError::InvalidProblem(m) => invalid("u0", m),
            other => invalid("C", other),
        })
    }

    pub fn from_problem(spec: &ProblemSpec, steps: usize, cfg: &ViSolveConfig) -> Self {
        Self {
            dim: spec.dim(),
            a0: spec.a0().rows(),
            a1: spec.a1().rows(),
            f: spec.forcing().clone(),
            c: ConstraintSpec::from_moving_set(spec.constraint()),
            u0: spec.u0().to_vec(),
            horizon: spec.horizon(),
            steps,
            solver: (*cfg).into(),
            reference: None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const CLAMP: &str = r#"{
        "dim": 1,
        "A0": [[0.0]],
        "A1": [[1.0]],
        "f": {"kind": "polynomial", "coeffs": [[0.0], [1.0]]},
        "C": {"family": "static", "set": {"type": "box", "lo": [-1.0], "hi": [1.0]}},
        "u0": [0.0],
        "T": 2.0,
        "N": 2000
    }"#;

    #[test]
    fn parses_minimal_spec_with_default_solver() {
        let s = SpecFile::from_json(CLAMP).unwrap();
        assert_eq!(s.solver_config(), ViSolveConfig::default());
        let p = s.to_problem().unwrap();
        assert_eq!(p.dim(), 1);
        assert!(p.initial_in_set());
    }

    #[test]
    fn unknown_keys_rejected() {
        let text = CLAMP.replace("\"N\": 2000", "\"N\": 2000, \"extra\": 1");
        assert!(matches!(SpecFile::from_json(&text), Err(SpecError::Parse { .. })));
        let text = CLAMP.replace("\"family\": \"static\"", "\"family\": \"static\", \"radius\": 2");
        assert!(matches!(SpecFile::from_json(&text), Err(SpecError::Parse { .. })));
    }

    #[test]
    fn parse_error_reports_position() {
        let text = CLAMP.replace("\"T\": 2.0", "\"T\": \"two\"");
        match SpecFile::from_json(&text) {
            Err(SpecError::Parse { line, .. }) => assert_eq!(line, 8),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn asymmetric_operator_names_key_and_invariant() {
        let text = CLAMP
            .replace("\"dim\": 1", "\"dim\": 2")
            .replace("\"A0\": [[0.0]]", "\"A0\": [[1.0, 2.0], [0.0, 1.0]]")
            .replace("\"A1\": [[1.0]]", "\"A1\": [[1.0, 0.0], [0.0, 1.0]]");
        let err = SpecFile::from_json(&text).unwrap().to_problem().unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("`A0`") && msg.contains("symmetr"), "{msg}");
    }

    #[test]
    fn dimension_mismatch_names_key() {
        let text = CLAMP.replace("\"u0\": [0.0]", "\"u0\": [0.0, 1.0]");
        let err = SpecFile::from_json(&text).unwrap().to_problem().unwrap_err();
        assert!(matches!(err, SpecError::Invalid { key: "u0", .. }));
    }

    #[test]
    fn round_trip_preserves_problem() {
        let s = SpecFile::from_json(CLAMP).unwrap();
        let p = s.to_problem().unwrap();
        let back = SpecFile::from_problem(&p, s.steps, &s.solver_config());
        let reparsed = SpecFile::from_json(&back.to_json()).unwrap();
        assert_eq!(reparsed, s);
        assert_eq!(reparsed.to_problem().unwrap(), p);
    }
}
