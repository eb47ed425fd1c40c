//! Lipschitz dependence of the unique solution on the initial value.
//!
//! With `A0` coercive (modulus `α0`) the map `u0 ↦ u` is Lipschitz into `C⁰`
//! with constant `√(‖A0‖/α0)`; with `A1` coercive (modulus `α1`) the constant
//! is `√(T‖A0‖/(2α1)) + 1`.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::AnalysisError;
use crate::convex_sets::ProjectionConfig;
use crate::integrator::{ProblemSpec, solve};
use crate::vector::{dist, norm};
use crate::vi_solver::ViSolveConfig;

/// Default multiplicative slack on the theoretical modulus.
pub const DEFAULT_SLACK: f64 = 0.05;

/// Membership tolerance for sampled initial points.
const INITIAL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SensitivityMode {
    #[serde(rename = "A0_coercive")]
    A0Coercive,
    #[serde(rename = "A1_coercive")]
    A1Coercive,
}

impl std::fmt::Display for SensitivityMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SensitivityMode::A0Coercive => "A0_coercive",
            SensitivityMode::A1Coercive => "A1_coercive",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SensitivityPair {
    pub x0: Vec<f64>,
    pub y0: Vec<f64>,
    pub c0_distance: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SensitivityReport {
    pub mode: SensitivityMode,
    pub modulus_theoretical: f64,
    pub slack: f64,
    pub steps: usize,
    pub pairs: Vec<SensitivityPair>,
    pub max_ratio: f64,
    pub pass: bool,
}

/// The modulus for `mode`, failing when the required operator is not
/// coercive.
pub fn theoretical_modulus(spec: &ProblemSpec, mode: SensitivityMode) -> Result<f64, AnalysisError> {
    let a0_norm = spec.a0().norm();
    match mode {
        SensitivityMode::A0Coercive => {
            let alpha0 = spec.a0().coercivity_modulus();
            if alpha0 <= 0.0 {
                return Err(AnalysisError::ModeMismatch { mode: mode.to_string(), detail: "A0 is singular".into() });
            }
            Ok((a0_norm / alpha0).sqrt())
        }
        SensitivityMode::A1Coercive => {
            let alpha1 = spec.a1().coercivity_modulus();
            if alpha1 <= 0.0 {
                return Err(AnalysisError::ModeMismatch { mode: mode.to_string(), detail: "A1 is singular".into() });
            }
            Ok((spec.horizon() * a0_norm / (2.0 * alpha1)).sqrt() + 1.0)
        }
    }
}

/// Draws `count` pairs of distinct points of `C(0)` by projecting uniform
/// samples from a cube that covers `C(0)` (or, for unbounded sets, a unit
/// cube around the point of `C(0)` nearest the origin).
pub fn random_initial_pairs<R: Rng + ?Sized>(
    spec: &ProblemSpec,
    count: usize,
    rng: &mut R,
) -> Result<Vec<(Vec<f64>, Vec<f64>)>, AnalysisError> {
    let set = spec.constraint().at(0.0)?;
    let cfg = ProjectionConfig::default();
    let n = spec.dim();
    let (center, half) = match set.radius_about_origin() {
        Some(r) => (vec![0.0; n], r.max(1e-3)),
        None => (set.project(&vec![0.0; n], &cfg)?, 1.0),
    };
    let draw = |rng: &mut R| -> Result<Vec<f64>, AnalysisError> {
        let x: Vec<f64> = center.iter().map(|c| c + rng.gen_range(-half..=half)).collect();
        Ok(set.project(&x, &cfg)?)
    };
    let mut pairs = Vec::with_capacity(count);
    let mut attempts = 0;
    while pairs.len() < count {
        attempts += 1;
        if attempts > 100 * count.max(1) {
            return Err(AnalysisError::InvalidInput("C(0) is too small to draw distinct initial points".into()));
        }
        let x = draw(rng)?;
        let y = draw(rng)?;
        if dist(&x, &y) >= 1e-6 {
            pairs.push((x, y));
        }
    }
    Ok(pairs)
}

/// Solves from both points of every pair and compares
/// `‖x - y‖_{C⁰} / ‖x0 - y0‖` with the theoretical modulus. Pairs are
/// processed in parallel.
pub fn sensitivity_experiment(
    spec: &ProblemSpec,
    initials: &[(Vec<f64>, Vec<f64>)],
    mode: SensitivityMode,
    steps: usize,
    slack: f64,
    cfg: &ViSolveConfig,
) -> Result<SensitivityReport, AnalysisError> {
    let modulus = theoretical_modulus(spec, mode)?;
    if initials.is_empty() {
        return Err(AnalysisError::InvalidInput("no initial pairs".into()));
    }
    let c0 = spec.constraint().at(0.0)?;
    let pcfg = ProjectionConfig::default();
    for (index, (x0, y0)) in initials.iter().enumerate() {
        if x0.len() != spec.dim() || y0.len() != spec.dim() {
            return Err(AnalysisError::InvalidInput(format!("pair {index} has the wrong dimension")));
        }
        let gap = dist(x0, y0);
        if gap < 1e-12 {
            return Err(AnalysisError::DegeneratePair { index, gap });
        }
        for p in [x0, y0] {
            let distance = c0.distance(p, &pcfg)?;
            if distance > INITIAL_TOL {
                return Err(AnalysisError::InitialOutsideSet { index, distance });
            }
        }
    }
    let pairs = initials
        .par_iter()
        .map(|(x0, y0)| -> Result<SensitivityPair, AnalysisError> {
            let x = solve(&spec.with_initial(x0.clone())?, steps, cfg)?;
            let y = solve(&spec.with_initial(y0.clone())?, steps, cfg)?;
            let c0_distance = x.c0_distance(&y)?;
            let ratio = c0_distance / norm(&crate::vector::sub(x0, y0));
            Ok(SensitivityPair { x0: x0.clone(), y0: y0.clone(), c0_distance, ratio })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let max_ratio = pairs.iter().map(|p| p.ratio).fold(0.0, f64::max);
    Ok(SensitivityReport {
        mode,
        modulus_theoretical: modulus,
        slack,
        steps,
        pass: max_ratio <= modulus * (1.0 + slack),
        pairs,
        max_ratio,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::convex_sets::{ConvexSetDesc, MovingSet};
    use crate::operators::SymmetricOperator;
    use crate::time_fn::TimeFunction;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn spec(a0: &[f64], a1: &[f64], horizon: f64) -> ProblemSpec {
        let ball = ConvexSetDesc::Ball { center: vec![0.0, 0.0], radius: 1.0 };
        ProblemSpec::new(
            SymmetricOperator::diagonal(a0),
            SymmetricOperator::diagonal(a1),
            TimeFunction::Zero,
            MovingSet::fixed(ball, horizon).unwrap(),
            vec![0.0, 0.0],
            horizon,
        )
        .unwrap()
    }

    #[test]
    fn modulus_formulas() {
        assert_eq!(theoretical_modulus(&spec(&[1.0, 1.0], &[0.0, 0.0], 1.0), SensitivityMode::A0Coercive).unwrap(), 1.0);
        assert_eq!(theoretical_modulus(&spec(&[2.0, 0.5], &[0.0, 0.0], 1.0), SensitivityMode::A0Coercive).unwrap(), 2.0);
        assert_eq!(theoretical_modulus(&spec(&[1.0, 1.0], &[1.0, 1.0], 2.0), SensitivityMode::A1Coercive).unwrap(), 2.0);
        // T = 8, |A0| = 4, α1 = 4: √(8·4/8) + 1 = 3
        assert_eq!(theoretical_modulus(&spec(&[4.0, 0.0], &[4.0, 5.0], 8.0), SensitivityMode::A1Coercive).unwrap(), 3.0);
    }

    #[test]
    fn mode_mismatch_rejected() {
        let s = spec(&[1.0, 0.0], &[0.0, 0.0], 1.0);
        assert!(matches!(theoretical_modulus(&s, SensitivityMode::A0Coercive), Err(AnalysisError::ModeMismatch { .. })));
        assert!(matches!(theoretical_modulus(&s, SensitivityMode::A1Coercive), Err(AnalysisError::ModeMismatch { .. })));
    }

    #[test]
    fn sampled_pairs_lie_in_initial_set() {
        let s = spec(&[1.0, 1.0], &[0.0, 0.0], 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let pairs = random_initial_pairs(&s, 20, &mut rng).unwrap();
        assert_eq!(pairs.len(), 20);
        for (x, y) in &pairs {
            assert!(norm(x) <= 1.0 + 1e-12 && norm(y) <= 1.0 + 1e-12);
            assert!(dist(x, y) >= 1e-6);
        }
    }

    #[test]
    fn identity_modulus_holds() {
        let s = spec(&[1.0, 1.0], &[0.0, 0.0], 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let pairs = random_initial_pairs(&s, 4, &mut rng).unwrap();
        let r = sensitivity_experiment(&s, &pairs, SensitivityMode::A0Coercive, 100, DEFAULT_SLACK, &ViSolveConfig::default())
            .unwrap();
        assert!(r.pass, "{}", r.max_ratio);
    }

    #[test]
    fn bad_pairs_rejected() {
        let s = spec(&[1.0, 1.0], &[0.0, 0.0], 1.0);
        let cfg = ViSolveConfig::default();
        let same = vec![(vec![0.1, 0.1], vec![0.1, 0.1])];
        assert!(matches!(
            sensitivity_experiment(&s, &same, SensitivityMode::A0Coercive, 10, 0.05, &cfg),
            Err(AnalysisError::DegeneratePair { index: 0, .. })
        ));
        let outside = vec![(vec![0.0, 0.0], vec![2.0, 0.0])];
        assert!(matches!(
            sensitivity_experiment(&s, &outside, SensitivityMode::A0Coercive, 10, 0.05, &cfg),
            Err(AnalysisError::InitialOutsideSet { index: 0, .. })
        ));
    }
}
