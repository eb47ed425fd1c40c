//! Vector-valued functions of time used for forcing terms, set paths and
//! continuity moduli.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TimeFunctionError {
    #[error("function has dimension {got}, expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("{0}")]
    Malformed(String),
}

/// A continuous map `[0, T] -> R^d`.
///
/// `Zero` has no intrinsic dimension and evaluates to a zero vector of
/// whatever length is requested.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TimeFunction {
    Zero,
    /// `Σ_j coeffs[j] t^j`, each coefficient a vector.
    Polynomial { coeffs: Vec<Vec<f64>> },
    /// Componentwise `offset + amplitude * sin(frequency * t + phase)`.
    Sinusoid {
        amplitude: Vec<f64>,
        frequency: Vec<f64>,
        phase: Vec<f64>,
        offset: Vec<f64>,
    },
    /// Piecewise-linear interpolation through `(times[i], values[i])`,
    /// held constant outside the sampled range.
    Samples { times: Vec<f64>, values: Vec<Vec<f64>> },
    /// `pieces[i]` is used on `[breakpoints[i-1], breakpoints[i])`, with the
    /// first piece extending to `-∞` and the last to `+∞`.
    Piecewise { breakpoints: Vec<f64>, pieces: Vec<TimeFunction> },
}

impl TimeFunction {
    pub fn constant(value: Vec<f64>) -> Self {
        TimeFunction::Polynomial { coeffs: vec![value] }
    }

    /// `value0 + slope * t`
    pub fn linear(value0: Vec<f64>, slope: Vec<f64>) -> Self {
        TimeFunction::Polynomial { coeffs: vec![value0, slope] }
    }

    pub fn scalar_constant(value: f64) -> Self {
        Self::constant(vec![value])
    }

    /// Intrinsic output dimension, `None` for [`TimeFunction::Zero`].
    pub fn dim(&self) -> Option<usize> {
        match self {
            TimeFunction::Zero => None,
            TimeFunction::Polynomial { coeffs } => coeffs.first().map(Vec::len),
            TimeFunction::Sinusoid { amplitude, .. } => Some(amplitude.len()),
            TimeFunction::Samples { values, .. } => values.first().map(Vec::len),
            TimeFunction::Piecewise { pieces, .. } => pieces.iter().find_map(TimeFunction::dim),
        }
    }

    /// Checks internal consistency and, if given, the output dimension.
    pub fn validate(&self, expected: Option<usize>) -> Result<(), TimeFunctionError> {
        let malformed = |m: &str| Err(TimeFunctionError::Malformed(m.to_string()));
        match self {
            TimeFunction::Zero => {}
            TimeFunction::Polynomial { coeffs } => {
                if coeffs.is_empty() {
                    return malformed("polynomial needs at least one coefficient");
                }
                let d = coeffs[0].len();
                if coeffs.iter().any(|c| c.len() != d) {
                    return malformed("polynomial coefficients have inconsistent lengths");
                }
                if coeffs.iter().flatten().any(|x| !x.is_finite()) {
                    return malformed("polynomial coefficients must be finite");
                }
            }
            TimeFunction::Sinusoid { amplitude, frequency, phase, offset } => {
                let d = amplitude.len();
                if frequency.len() != d || phase.len() != d || offset.len() != d {
                    return malformed("sinusoid parameter vectors have inconsistent lengths");
                }
                if [amplitude, frequency, phase, offset].iter().any(|v| v.iter().any(|x| !x.is_finite())) {
                    return malformed("sinusoid parameters must be finite");
                }
            }
            TimeFunction::Samples { times, values } => {
                if times.is_empty() || times.len() != values.len() {
                    return malformed("samples need equally many (>0) times and values");
                }
                if times.windows(2).any(|w| !(w[1] > w[0])) {
                    return malformed("sample times must be strictly increasing");
                }
                let d = values[0].len();
                if values.iter().any(|v| v.len() != d) {
                    return malformed("sample values have inconsistent lengths");
                }
                if times.iter().chain(values.iter().flatten()).any(|x| !x.is_finite()) {
                    return malformed("samples must be finite");
                }
            }
            TimeFunction::Piecewise { breakpoints, pieces } => {
                if pieces.len() != breakpoints.len() + 1 {
                    return malformed("piecewise needs exactly one more piece than breakpoints");
                }
                if breakpoints.windows(2).any(|w| !(w[1] > w[0])) {
                    return malformed("breakpoints must be strictly increasing");
                }
                let d = self.dim();
                for p in pieces {
                    p.validate(d)?;
                }
            }
        }
        if let (Some(want), Some(got)) = (expected, self.dim()) {
            if want != got {
                return Err(TimeFunctionError::DimensionMismatch { expected: want, got });
            }
        }
        Ok(())
    }

    /// Evaluates into `out`; `out.len()` must match the intrinsic dimension.
    pub fn eval_into(&self, t: f64, out: &mut [f64]) {
        match self {
            TimeFunction::Zero => out.fill(0.0),
            TimeFunction::Polynomial { coeffs } => {
                // Horner
                out.fill(0.0);
                for c in coeffs.iter().rev() {
                    for (o, ci) in out.iter_mut().zip(c) {
                        *o = *o * t + ci;
                    }
                }
            }
            TimeFunction::Sinusoid { amplitude, frequency, phase, offset } => {
                for (i, o) in out.iter_mut().enumerate() {
                    *o = offset[i] + amplitude[i] * (frequency[i] * t + phase[i]).sin();
                }
            }
            TimeFunction::Samples { times, values } => {
                let last = times.len() - 1;
                if t <= times[0] {
                    out.copy_from_slice(&values[0]);
                } else if t >= times[last] {
                    out.copy_from_slice(&values[last]);
                } else {
                    let hi = times.partition_point(|&s| s <= t);
                    let lo = hi - 1;
                    let w = (t - times[lo]) / (times[hi] - times[lo]);
                    for (i, o) in out.iter_mut().enumerate() {
                        *o = (1.0 - w) * values[lo][i] + w * values[hi][i];
                    }
                }
            }
            TimeFunction::Piecewise { breakpoints, pieces } => {
                let idx = breakpoints.partition_point(|&b| b <= t);
                pieces[idx].eval_into(t, out);
            }
        }
    }

    /// Evaluates with output length `dim` (used when the function is `Zero`).
    pub fn eval(&self, t: f64, dim: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.dim().unwrap_or(dim)];
        self.eval_into(t, &mut out);
        out
    }

    /// Evaluates a scalar function.
    pub fn eval_scalar(&self, t: f64) -> f64 {
        self.eval(t, 1)[0]
    }
}
