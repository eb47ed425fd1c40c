//! Closed convex sets with exact (or Dykstra) projections, normal-cone
//! membership, and time-parametrised families `C(t)`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::time_fn::TimeFunction;
use crate::vector::{add, dist, dot, norm, sub};

/// Slack allowed on `t` beyond the horizon to absorb grid rounding.
const HORIZON_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SetError {
    #[error("invalid set: {0}")]
    InvalidSet(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("Dykstra projection did not converge in {max_iter} sweeps")]
    DykstraNoConverge { max_iter: usize },
    #[error("time {t} outside [0, {horizon}]")]
    TimeOutOfRange { t: f64, horizon: f64 },
    #[error("no exact Hausdorff formula: {0}")]
    UnsupportedFamily(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectionConfig {
    /// Dykstra sweep cap.
    pub max_iter: usize,
    /// Dykstra stops once a sweep moves neither the iterate nor the
    /// increments by more than this.
    pub tol: f64,
}

impl Default for ProjectionConfig {
    fn default() -> Self {
        Self { max_iter: 100_000, tol: 1e-10 }
    }
}

/// A nonempty closed convex subset of `R^n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ConvexSetDesc {
    WholeSpace { dim: usize },
    Singleton { point: Vec<f64> },
    Ball { center: Vec<f64>, radius: f64 },
    Box { lo: Vec<f64>, hi: Vec<f64> },
    /// `{x : ⟨normal, x⟩ ≤ offset}`
    Halfspace { normal: Vec<f64>, offset: f64 },
    /// `{x : ⟨normal, x⟩ = offset}`
    Hyperplane { normal: Vec<f64>, offset: f64 },
    /// `point + span(basis)`, basis orthonormal.
    AffineSubspace { point: Vec<f64>, basis: Vec<Vec<f64>> },
    /// Intersection of the member sets; `witness` lies in every member.
    Intersection { sets: Vec<ConvexSetDesc>, witness: Vec<f64> },
}

impl ConvexSetDesc {
    pub fn dim(&self) -> usize {
        match self {
            ConvexSetDesc::WholeSpace { dim } => *dim,
            ConvexSetDesc::Singleton { point } => point.len(),
            ConvexSetDesc::Ball { center, .. } => center.len(),
            ConvexSetDesc::Box { lo, .. } => lo.len(),
            ConvexSetDesc::Halfspace { normal, .. } | ConvexSetDesc::Hyperplane { normal, .. } => normal.len(),
            ConvexSetDesc::AffineSubspace { point, .. } => point.len(),
            ConvexSetDesc::Intersection { witness, .. } => witness.len(),
        }
    }

    /// Checks the structural invariants of the variant.
    pub fn validate(&self) -> Result<(), SetError> {
        let invalid = |m: String| Err(SetError::InvalidSet(m));
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        match self {
            ConvexSetDesc::WholeSpace { dim } => {
                if *dim == 0 {
                    return invalid("whole_space needs positive dim".into());
                }
            }
            ConvexSetDesc::Singleton { point } => {
                if point.is_empty() || !finite(point) {
                    return invalid("singleton point must be finite and nonempty".into());
                }
            }
            ConvexSetDesc::Ball { center, radius } => {
                if center.is_empty() || !finite(center) {
                    return invalid("ball center must be finite and nonempty".into());
                }
                if !(radius.is_finite() && *radius >= 0.0) {
                    return invalid(format!("ball radius must be finite and >= 0, got {radius}"));
                }
            }
            ConvexSetDesc::Box { lo, hi } => {
                if lo.is_empty() || lo.len() != hi.len() {
                    return invalid("box bounds must be nonempty and of equal length".into());
                }
                if !finite(lo) || !finite(hi) {
                    return invalid("box bounds must be finite".into());
                }
                if let Some(i) = (0..lo.len()).find(|&i| lo[i] > hi[i]) {
                    return invalid(format!("box needs lo <= hi, violated at index {i}"));
                }
            }
            ConvexSetDesc::Halfspace { normal, offset } | ConvexSetDesc::Hyperplane { normal, offset } => {
                if normal.is_empty() || !finite(normal) || !offset.is_finite() {
                    return invalid("normal and offset must be finite".into());
                }
                if norm(normal) == 0.0 {
                    return invalid("normal vector must be nonzero".into());
                }
            }
            ConvexSetDesc::AffineSubspace { point, basis } => {
                if point.is_empty() || !finite(point) {
                    return invalid("affine point must be finite and nonempty".into());
                }
                for (i, b) in basis.iter().enumerate() {
                    if b.len() != point.len() {
                        return Err(SetError::DimensionMismatch { expected: point.len(), got: b.len() });
                    }
                    for (j, c) in basis.iter().enumerate().skip(i) {
                        let want = if i == j { 1.0 } else { 0.0 };
                        if (dot(b, c) - want).abs() > 1e-12 {
                            return invalid(format!("affine basis not orthonormal at ({i}, {j})"));
                        }
                    }
                }
            }
            ConvexSetDesc::Intersection { sets, witness } => {
                if sets.is_empty() {
                    return invalid("intersection needs at least one member".into());
                }
                for s in sets {
                    s.validate()?;
                    if s.dim() != witness.len() {
                        return Err(SetError::DimensionMismatch { expected: witness.len(), got: s.dim() });
                    }
                    let tol = 1e-9 * (1.0 + norm(witness));
                    if !s.contains(witness, tol)? {
                        return invalid("intersection witness lies outside a member set".into());
                    }
                }
            }
        }
        Ok(())
    }

    /// Euclidean projection onto the set.
    pub fn project(&self, x: &[f64], cfg: &ProjectionConfig) -> Result<Vec<f64>, SetError> {
        if x.len() != self.dim() {
            return Err(SetError::DimensionMismatch { expected: self.dim(), got: x.len() });
        }
        Ok(match self {
            ConvexSetDesc::WholeSpace { .. } => x.to_vec(),
            ConvexSetDesc::Singleton { point } => point.clone(),
            ConvexSetDesc::Ball { center, radius } => {
                let d = dist(x, center);
                if d <= *radius {
                    x.to_vec()
                } else {
                    let s = radius / d;
                    center.iter().zip(x).map(|(c, xi)| c + s * (xi - c)).collect()
                }
            }
            ConvexSetDesc::Box { lo, hi } => {
                x.iter().zip(lo.iter().zip(hi)).map(|(xi, (l, h))| xi.clamp(*l, *h)).collect()
            }
            ConvexSetDesc::Halfspace { normal, offset } => {
                let excess = dot(normal, x) - offset;
                if excess <= 0.0 {
                    x.to_vec()
                } else {
                    let s = excess / dot(normal, normal);
                    x.iter().zip(normal).map(|(xi, a)| xi - s * a).collect()
                }
            }
            ConvexSetDesc::Hyperplane { normal, offset } => {
                let s = (dot(normal, x) - offset) / dot(normal, normal);
                x.iter().zip(normal).map(|(xi, a)| xi - s * a).collect()
            }
            ConvexSetDesc::AffineSubspace { point, basis } => {
                let rel = sub(x, point);
                let mut out = point.clone();
                for b in basis {
                    let c = dot(&rel, b);
                    for (o, bi) in out.iter_mut().zip(b) {
                        *o += c * bi;
                    }
                }
                out
            }
            ConvexSetDesc::Intersection { sets, .. } => dykstra(sets, x, cfg)?,
        })
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> Result<bool, SetError> {
        self.contains_with(x, tol, &ProjectionConfig::default())
    }

    pub fn contains_with(&self, x: &[f64], tol: f64, cfg: &ProjectionConfig) -> Result<bool, SetError> {
        Ok(dist(x, &self.project(x, cfg)?) <= tol)
    }

    /// Distance from `x` to the set.
    pub fn distance(&self, x: &[f64], cfg: &ProjectionConfig) -> Result<f64, SetError> {
        Ok(dist(x, &self.project(x, cfg)?))
    }

    /// Tests `w ∈ N_S(x)` through the identity `x = P_S(x + w)`.
    pub fn normal_cone_contains(&self, x: &[f64], w: &[f64], tol: f64) -> Result<bool, SetError> {
        Ok(self.normal_cone_residual(x, w, &ProjectionConfig::default())? <= tol)
    }

    /// `max(‖P_S(x + w) - x‖, dist(x, S))`, zero iff `w ∈ N_S(x)`.
    pub fn normal_cone_residual(&self, x: &[f64], w: &[f64], cfg: &ProjectionConfig) -> Result<f64, SetError> {
        if w.len() != x.len() {
            return Err(SetError::DimensionMismatch { expected: x.len(), got: w.len() });
        }
        let shifted = self.project(&add(x, w), cfg)?;
        let membership = self.distance(x, cfg)?;
        Ok(dist(&shifted, x).max(membership))
    }

    /// Radius of the smallest origin-centred ball known to contain the set,
    /// or `None` for unbounded variants.
    pub fn radius_about_origin(&self) -> Option<f64> {
        match self {
            ConvexSetDesc::Singleton { point } => Some(norm(point)),
            ConvexSetDesc::Ball { center, radius } => Some(norm(center) + radius),
            ConvexSetDesc::Box { lo, hi } => Some(
                lo.iter()
                    .zip(hi)
                    .map(|(l, h)| (l * l).max(h * h))
                    .sum::<f64>()
                    .sqrt(),
            ),
            ConvexSetDesc::Intersection { sets, .. } => sets
                .iter()
                .filter_map(ConvexSetDesc::radius_about_origin)
                .reduce(f64::min),
            ConvexSetDesc::WholeSpace { .. }
            | ConvexSetDesc::Halfspace { .. }
            | ConvexSetDesc::Hyperplane { .. }
            | ConvexSetDesc::AffineSubspace { .. } => None,
        }
    }

    pub fn is_bounded(&self) -> bool {
        self.radius_about_origin().is_some()
    }

    /// The set translated by `shift`.
    pub fn translated(&self, shift: &[f64]) -> ConvexSetDesc {
        match self {
            ConvexSetDesc::WholeSpace { dim } => ConvexSetDesc::WholeSpace { dim: *dim },
            ConvexSetDesc::Singleton { point } => ConvexSetDesc::Singleton { point: add(point, shift) },
            ConvexSetDesc::Ball { center, radius } => ConvexSetDesc::Ball { center: add(center, shift), radius: *radius },
            ConvexSetDesc::Box { lo, hi } => ConvexSetDesc::Box { lo: add(lo, shift), hi: add(hi, shift) },
            ConvexSetDesc::Halfspace { normal, offset } => ConvexSetDesc::Halfspace {
                normal: normal.clone(),
                offset: offset + dot(normal, shift),
            },
            ConvexSetDesc::Hyperplane { normal, offset } => ConvexSetDesc::Hyperplane {
                normal: normal.clone(),
                offset: offset + dot(normal, shift),
            },
            ConvexSetDesc::AffineSubspace { point, basis } => ConvexSetDesc::AffineSubspace {
                point: add(point, shift),
                basis: basis.clone(),
            },
            ConvexSetDesc::Intersection { sets, witness } => ConvexSetDesc::Intersection {
                sets: sets.iter().map(|s| s.translated(shift)).collect(),
                witness: add(witness, shift),
            },
        }
    }

    /// `d_H(S, S + shift)` where a closed form exists.
    fn translation_distance(&self, shift: &[f64]) -> Result<f64, SetError> {
        match self {
            ConvexSetDesc::WholeSpace { .. } => Ok(0.0),
            ConvexSetDesc::Halfspace { normal, .. } | ConvexSetDesc::Hyperplane { normal, .. } => {
                Ok(dot(normal, shift).abs() / norm(normal))
            }
            ConvexSetDesc::AffineSubspace { basis, .. } => {
                let mut orth = shift.to_vec();
                for b in basis {
                    let c = dot(shift, b);
                    for (o, bi) in orth.iter_mut().zip(b) {
                        *o -= c * bi;
                    }
                }
                Ok(norm(&orth))
            }
            // bounded sets: the extreme point in the shift direction is displaced by exactly ‖shift‖
            s if s.is_bounded() => Ok(norm(shift)),
            _ => Err(SetError::UnsupportedFamily(
                "translate of an unbounded intersection".into(),
            )),
        }
    }
}

/// Dykstra's alternating projections onto an intersection.
fn dykstra(sets: &[ConvexSetDesc], x0: &[f64], cfg: &ProjectionConfig) -> Result<Vec<f64>, SetError> {
    if let [only] = sets {
        return only.project(x0, cfg);
    }
    let n = x0.len();
    let mut x = x0.to_vec();
    let mut increments = vec![vec![0.0; n]; sets.len()];
    for _ in 0..cfg.max_iter {
        let prev = x.clone();
        let mut increment_change = 0.0;
        for (set, p) in sets.iter().zip(increments.iter_mut()) {
            let y = add(&x, p);
            let next = set.project(&y, cfg)?;
            for i in 0..n {
                let pi = y[i] - next[i];
                increment_change += (pi - p[i]) * (pi - p[i]);
                p[i] = pi;
            }
            x = next;
        }
        // the iterate can stall for a sweep while the increments still move
        if dist(&x, &prev) <= cfg.tol && increment_change.sqrt() <= cfg.tol {
            return Ok(x);
        }
    }
    Err(SetError::DykstraNoConverge { max_iter: cfg.max_iter })
}

/// How `C(t)` moves with time.
#[derive(Debug, Clone, PartialEq)]
pub enum SetFamily {
    Static { set: ConvexSetDesc },
    /// `C(t) = set + path(t)`
    Translate { set: ConvexSetDesc, path: TimeFunction },
    /// `C(t) = ball(center(t), radius(t))`
    BallPath { center: TimeFunction, radius: TimeFunction },
    /// `C(t) = box(lo(t), hi(t))`
    BoxPath { lo: TimeFunction, hi: TimeFunction },
}

/// A moving convex set on `[0, horizon]`, optionally carrying a Hausdorff
/// continuity modulus `g` and a user-declared bound `beta` on the norm of a
/// selection of `C(t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MovingSet {
    family: SetFamily,
    dim: usize,
    horizon: f64,
    modulus: Option<TimeFunction>,
    lipschitz_beta: Option<f64>,
}

impl MovingSet {
    pub fn new(family: SetFamily, horizon: f64) -> Result<Self, SetError> {
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(SetError::InvalidSet(format!("horizon must be positive, got {horizon}")));
        }
        let dim = match &family {
            SetFamily::Static { set } => {
                set.validate()?;
                set.dim()
            }
            SetFamily::Translate { set, path } => {
                set.validate()?;
                path.validate(Some(set.dim())).map_err(|e| SetError::InvalidSet(format!("path: {e}")))?;
                set.dim()
            }
            SetFamily::BallPath { center, radius } => {
                let dim = center
                    .dim()
                    .ok_or_else(|| SetError::InvalidSet("ball_path center needs an explicit dimension".into()))?;
                center.validate(Some(dim)).map_err(|e| SetError::InvalidSet(format!("center: {e}")))?;
                radius.validate(Some(1)).map_err(|e| SetError::InvalidSet(format!("radius: {e}")))?;
                dim
            }
            SetFamily::BoxPath { lo, hi } => {
                let dim = lo
                    .dim()
                    .or_else(|| hi.dim())
                    .ok_or_else(|| SetError::InvalidSet("box_path bounds need an explicit dimension".into()))?;
                lo.validate(Some(dim)).map_err(|e| SetError::InvalidSet(format!("lo: {e}")))?;
                hi.validate(Some(dim)).map_err(|e| SetError::InvalidSet(format!("hi: {e}")))?;
                dim
            }
        };
        let ms = Self { family, dim, horizon, modulus: None, lipschitz_beta: None };
        // evaluate at the endpoints so gross mistakes (negative radius, lo > hi) surface early
        ms.at(0.0)?;
        ms.at(horizon)?;
        Ok(ms)
    }

    pub fn fixed(set: ConvexSetDesc, horizon: f64) -> Result<Self, SetError> {
        Self::new(SetFamily::Static { set }, horizon)
    }

    /// Attaches the continuity modulus `g`.
    pub fn with_modulus(mut self, g: TimeFunction) -> Result<Self, SetError> {
        g.validate(Some(1)).map_err(|e| SetError::InvalidSet(format!("g: {e}")))?;
        self.modulus = Some(g);
        Ok(self)
    }

    pub fn with_lipschitz_beta(mut self, beta: f64) -> Result<Self, SetError> {
        if !(beta.is_finite() && beta > 0.0) {
            return Err(SetError::InvalidSet(format!("beta must be positive, got {beta}")));
        }
        self.lipschitz_beta = Some(beta);
        Ok(self)
    }

    pub fn family(&self) -> &SetFamily {
        &self.family
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn modulus(&self) -> Option<&TimeFunction> {
        self.modulus.as_ref()
    }

    pub fn lipschitz_beta(&self) -> Option<f64> {
        self.lipschitz_beta
    }

    /// Same family on a different horizon.
    pub fn with_horizon(&self, horizon: f64) -> Result<Self, SetError> {
        let mut out = Self::new(self.family.clone(), horizon)?;
        out.modulus = self.modulus.clone();
        out.lipschitz_beta = self.lipschitz_beta;
        Ok(out)
    }

    fn check_time(&self, t: f64) -> Result<(), SetError> {
        if !(t >= 0.0 && t <= self.horizon * (1.0 + HORIZON_SLACK)) {
            return Err(SetError::TimeOutOfRange { t, horizon: self.horizon });
        }
        Ok(())
    }

    /// `C(t)`.
    pub fn at(&self, t: f64) -> Result<ConvexSetDesc, SetError> {
        self.check_time(t)?;
        let set = match &self.family {
            SetFamily::Static { set } => return Ok(set.clone()),
            SetFamily::Translate { set, path } => return Ok(set.translated(&path.eval(t, self.dim))),
            SetFamily::BallPath { center, radius } => ConvexSetDesc::Ball {
                center: center.eval(t, self.dim),
                radius: radius.eval_scalar(t),
            },
            SetFamily::BoxPath { lo, hi } => ConvexSetDesc::Box { lo: lo.eval(t, self.dim), hi: hi.eval(t, self.dim) },
        };
        set.validate()?;
        Ok(set)
    }

    /// Exact Hausdorff distance `d_H(C(s), C(t))`.
    pub fn hausdorff_distance(&self, s: f64, t: f64) -> Result<f64, SetError> {
        self.check_time(s)?;
        self.check_time(t)?;
        match &self.family {
            SetFamily::Static { .. } => Ok(0.0),
            SetFamily::Translate { set, path } => {
                set.translation_distance(&sub(&path.eval(s, self.dim), &path.eval(t, self.dim)))
            }
            SetFamily::BallPath { center, radius } => Ok(dist(&center.eval(s, self.dim), &center.eval(t, self.dim))
                + (radius.eval_scalar(s) - radius.eval_scalar(t)).abs()),
            SetFamily::BoxPath { lo, hi } => {
                let (lo_s, hi_s) = (lo.eval(s, self.dim), hi.eval(s, self.dim));
                let (lo_t, hi_t) = (lo.eval(t, self.dim), hi.eval(t, self.dim));
                Ok(box_excess(&lo_s, &hi_s, &lo_t, &hi_t).max(box_excess(&lo_t, &hi_t, &lo_s, &hi_s)))
            }
        }
    }

    /// `max_{s ∈ [0, T]} |g(0) - g(s)|` on `samples + 1` uniform points.
    /// A static family without a declared modulus uses `g ≡ 0`.
    pub fn modulus_variation(&self, samples: usize) -> Option<f64> {
        match (&self.modulus, &self.family) {
            (Some(g), _) => {
                let g0 = g.eval_scalar(0.0);
                let samples = samples.max(1);
                Some(
                    (0..=samples)
                        .map(|i| (g0 - g.eval_scalar(self.horizon * i as f64 / samples as f64)).abs())
                        .fold(0.0, f64::max),
                )
            }
            (None, SetFamily::Static { .. }) => Some(0.0),
            (None, _) => None,
        }
    }

    /// Audits `d_H(C(s), C(t)) ≤ |g(s) - g(t)|` over all pairs of a uniform
    /// grid with `points` nodes. Returns the largest excess
    /// `d_H - |g(s) - g(t)|` (≤ 0 when the modulus is valid), or `None` when
    /// no modulus is declared.
    pub fn audit_modulus(&self, points: usize) -> Result<Option<f64>, SetError> {
        let Some(g) = &self.modulus else {
            return Ok(None);
        };
        let points = points.max(2);
        let times: Vec<f64> = (0..points).map(|i| self.horizon * i as f64 / (points - 1) as f64).collect();
        let gs: Vec<f64> = times.iter().map(|&t| g.eval_scalar(t)).collect();
        let mut worst = f64::NEG_INFINITY;
        for i in 0..points {
            for j in (i + 1)..points {
                let d = self.hausdorff_distance(times[i], times[j])?;
                worst = worst.max(d - (gs[i] - gs[j]).abs());
            }
        }
        Ok(Some(worst))
    }
}

/// `sup_{x ∈ A} d(x, B)` for boxes `A = [lo_a, hi_a]`, `B = [lo_b, hi_b]`.
/// The supremum of a convex function over `A` sits at a vertex and the
/// squared distance to a box separates by coordinate.
fn box_excess(lo_a: &[f64], hi_a: &[f64], lo_b: &[f64], hi_b: &[f64]) -> f64 {
    let gap = |y: f64, l: f64, h: f64| (l - y).max(y - h).max(0.0);
    (0..lo_a.len())
        .map(|i| {
            let d = gap(lo_a[i], lo_b[i], hi_b[i]).max(gap(hi_a[i], lo_b[i], hi_b[i]));
            d * d
        })
        .sum::<f64>()
        .sqrt()
}
