//! Integral form of the Gronwall inequality: if `f(t) ≤ a + b ∫₀ᵗ f` then
//! `∫₀ᵗ f ≤ (a / b)(e^{bt} - 1)`.

use serde::Serialize;

use super::AnalysisError;

/// `(a / b)(e^{bt} - 1)`
pub fn gronwall_bound(a: f64, b: f64, t: f64) -> Result<f64, AnalysisError> {
    if b == 0.0 || !b.is_finite() {
        return Err(AnalysisError::InvalidInput(format!("b must be finite and nonzero, got {b}")));
    }
    Ok(a / b * (b * t).exp_m1())
}

/// Running trapezoid integral of uniform samples; `out[0] = 0`.
pub fn cumulative_trapezoid(samples: &[f64], dt: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(samples.len());
    let mut acc = 0.0;
    out.push(0.0);
    for w in samples.windows(2) {
        acc += 0.5 * dt * (w[0] + w[1]);
        out.push(acc);
    }
    out.truncate(samples.len());
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GronwallCheck {
    pub hypothesis_holds: bool,
    pub conclusion_holds: bool,
    /// `max_k f_k - (a + b F_k)`
    pub hypothesis_excess: f64,
    /// `max_k F_k - bound(t_k)`
    pub conclusion_excess: f64,
    pub tolerance: f64,
}

/// Audits both sides of the lemma on samples `f_k = f(k dt)`, using the
/// trapezoid integral `F_k`. Both inequalities are checked pointwise with
/// tolerance `1e-6 (1 + |a|)`.
pub fn check_gronwall(samples: &[f64], dt: f64, a: f64, b: f64) -> Result<GronwallCheck, AnalysisError> {
    if samples.is_empty() || !(dt > 0.0) {
        return Err(AnalysisError::InvalidInput("need at least one sample and dt > 0".into()));
    }
    let tolerance = 1e-6 * (1.0 + a.abs());
    let integral = cumulative_trapezoid(samples, dt);
    let mut hypothesis_excess = f64::NEG_INFINITY;
    let mut conclusion_excess = f64::NEG_INFINITY;
    for (k, (&f, &big_f)) in samples.iter().zip(&integral).enumerate() {
        hypothesis_excess = hypothesis_excess.max(f - (a + b * big_f));
        conclusion_excess = conclusion_excess.max(big_f - gronwall_bound(a, b, k as f64 * dt)?);
    }
    Ok(GronwallCheck {
        hypothesis_holds: hypothesis_excess <= tolerance,
        conclusion_holds: conclusion_excess <= tolerance,
        hypothesis_excess,
        conclusion_excess,
        tolerance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn sample(f: impl Fn(f64) -> f64, t_end: f64, n: usize) -> (Vec<f64>, f64) {
        let dt = t_end / n as f64;
        ((0..=n).map(|k| f(k as f64 * dt)).collect(), dt)
    }

    #[test]
    fn bound_values() {
        assert_eq!(gronwall_bound(0.0, 3.0, 2.0).unwrap(), 0.0);
        assert_abs_diff_eq!(gronwall_bound(1.0, 1.0, 1.0).unwrap(), std::f64::consts::E - 1.0, epsilon = 1e-15);
        assert!(gronwall_bound(1.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn equality_case_matches_quadrature() {
        for (a, b) in [(1.0, 1.0), (0.5, 2.0), (2.0, -0.5)] {
            let (f, dt) = sample(|t| a * f64::exp(b * t), 1.0, 20_000);
            let integral = cumulative_trapezoid(&f, dt);
            let bound = gronwall_bound(a, b, 1.0).unwrap();
            assert!((integral.last().unwrap() - bound).abs() <= 1e-8, "a={a} b={b}");
        }
    }

    #[test]
    fn zero_function() {
        let (f, dt) = sample(|_| 0.0, 1.0, 100);
        let c = check_gronwall(&f, dt, 0.1, 1.0).unwrap();
        assert!(c.hypothesis_holds && c.conclusion_holds);
    }

    #[test]
    fn exponential_near_equality() {
        let (f, dt) = sample(f64::exp, 1.0, 1000);
        let c = check_gronwall(&f, dt, 1.0, 1.0).unwrap();
        assert!(c.hypothesis_holds && c.conclusion_holds);
        assert!(c.conclusion_excess.abs() <= 1e-6);
    }

    #[test]
    fn violated_hypothesis_detected() {
        let (f, dt) = sample(|_| 10.0, 1.0, 100);
        let c = check_gronwall(&f, dt, 1.0, 0.01).unwrap();
        assert!(!c.hypothesis_holds);
    }

    #[test]
    fn trapezoid_is_exact_for_linear() {
        let (f, dt) = sample(|t| 3.0 * t + 1.0, 2.0, 7);
        let integral = cumulative_trapezoid(&f, dt);
        assert_abs_diff_eq!(*integral.last().unwrap(), 8.0, epsilon = 1e-13);
    }
}
