//! The sequence `x_k(t) = t² sin(1/t²)` on `(1/k, T]`, capped linearly by
//! `(t/k) sin(k²)` on `[0, 1/k]`. Each `x_k` is Lipschitz with `x_k(0) = 0`,
//! so it solves the problem with `A0 = A1 = 0`, `f = 0`, `C(t) = R`; the
//! sequence converges uniformly to a limit of unbounded variation, so the
//! solution set is not closed in `C⁰` while the `W^{1,1}` norms blow up.
//!
//! All integrals over `[1/k, T]` are taken in the variable `s = 1/t²`, where
//! `x = sin(s)/s`, `∫|ẋ| dt = ∫|d/ds (sin s / s)| ds` and
//! `∫|x| dt = ½ ∫ |sin s| s^{-5/2} ds`, using composite Gauss-Legendre panels
//! of width at most `π/8`.

use std::f64::consts::PI;

use serde::Serialize;

use super::AnalysisError;

/// The horizon of the demonstration.
pub const HORIZON: f64 = 1.0;

const PANEL_WIDTH: f64 = PI / 8.0;
const SUP_STEP: f64 = PI / 256.0;
const MAX_SUP_SAMPLES: usize = 100_000_000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NonclosednessRow {
    pub k: u64,
    /// Sampled `sup |x_k - x|`.
    pub c0_distance: f64,
    /// `2 / k²`
    pub c0_bound: f64,
    /// `∫₀ᵀ |x_k|`
    pub l1_norm: f64,
    /// `∫₀ᵀ |ẋ_k|`
    pub total_variation: f64,
    pub w11_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NonclosednessReport {
    pub horizon: f64,
    pub quad_points: usize,
    pub rows: Vec<NonclosednessRow>,
    pub c0_within_bound: bool,
    pub w11_strictly_increasing: bool,
    /// The uniform limit is not of bounded variation, hence not absolutely
    /// continuous and not a solution.
    pub limit_absolutely_continuous: bool,
    pub pass: bool,
}

impl NonclosednessReport {
    /// CSV with header `k,c0_distance,w11_norm`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,c0_distance,w11_norm\n");
        for r in &self.rows {
            out.push_str(&format!("{},{:.16e},{:.16e}\n", r.k, r.c0_distance, r.w11_norm));
        }
        out
    }
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // P_n(x) and P_n'(x) by the three-term recurrence
            let (mut p0, mut p1) = (1.0, x);
            for j in 2..=n {
                let p2 = ((2 * j - 1) as f64 * x * p1 - (j - 1) as f64 * p0) / j as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn composite(a: f64, b: f64, rule: &(Vec<f64>, Vec<f64>), f: impl Fn(f64) -> f64) -> f64 {
    let panels = ((b - a) / PANEL_WIDTH).ceil().max(1.0) as usize;
    let width = (b - a) / panels as f64;
    let mut total = 0.0;
    for p in 0..panels {
        let mid = a + (p as f64 + 0.5) * width;
        let half = 0.5 * width;
        let panel: f64 = rule.0.iter().zip(&rule.1).map(|(x, w)| w * f(mid + half * x)).sum();
        total += half * panel;
    }
    total
}

/// Like [`composite`] but with panel edges at every multiple of `π`, where
/// `|sin s|` has its kinks.
fn composite_split_at_pi(a: f64, b: f64, rule: &(Vec<f64>, Vec<f64>), f: impl Fn(f64) -> f64) -> f64 {
    let mut total = 0.0;
    let mut lo = a;
    let mut j = (a / PI).floor() + 1.0;
    while lo < b {
        let hi = (j * PI).min(b);
        total += composite(lo, hi, rule, &f);
        lo = hi;
        j += 1.0;
    }
    total
}

/// `x_k(t)`
pub fn x_k(k: u64, t: f64) -> f64 {
    let kf = k as f64;
    if t > 1.0 / kf { t * t * (1.0 / (t * t)).sin() } else { t / kf * (kf * kf).sin() }
}

/// The uniform limit `x(t)`.
pub fn x_limit(t: f64) -> f64 {
    if t > 0.0 { t * t * (1.0 / (t * t)).sin() } else { 0.0 }
}

fn sup_distance(k: u64) -> f64 {
    // on (0, 1/k], i.e. s ≥ k², |x_k - x| = |sin s / s - c / √s|
    let kf = k as f64;
    let s0 = kf * kf;
    let c = s0.sin() / kf;
    let mut best: f64 = 0.0;
    for i in 0..MAX_SUP_SAMPLES {
        let s = s0 + i as f64 * SUP_STEP;
        if 1.0 / s + c.abs() / s.sqrt() < best {
            break;
        }
        best = best.max((s.sin() / s - c / s.sqrt()).abs());
    }
    best
}

fn row(k: u64, rule: &(Vec<f64>, Vec<f64>)) -> NonclosednessRow {
    let kf = k as f64;
    let s_lo = 1.0 / (HORIZON * HORIZON);
    let s_hi = kf * kf;
    let cap = s_hi.sin().abs();
    let (tv, l1) = if s_hi > s_lo {
        (
            composite(s_lo, s_hi, rule, |s| (s.cos() / s - s.sin() / (s * s)).abs()),
            0.5 * composite_split_at_pi(s_lo, s_hi, rule, |s| s.sin().abs() * s.powf(-2.5)),
        )
    } else {
        (0.0, 0.0)
    };
    // linear cap on [0, 1/k]: slope sin(k²)/k
    let total_variation = tv + cap / (kf * kf);
    let l1_norm = l1 + cap / (2.0 * kf * kf * kf);
    NonclosednessRow {
        k,
        c0_distance: sup_distance(k),
        c0_bound: 2.0 / (kf * kf),
        l1_norm,
        total_variation,
        w11_norm: l1_norm + total_variation,
    }
}

/// Builds the table for `k_list` with `quad_points` Gauss-Legendre nodes per
/// panel.
pub fn nonclosedness_demo(k_list: &[u64], quad_points: usize) -> Result<NonclosednessReport, AnalysisError> {
    if k_list.is_empty() || k_list.contains(&0) {
        return Err(AnalysisError::InvalidInput("k_list must be nonempty with k ≥ 1".into()));
    }
    if quad_points == 0 {
        return Err(AnalysisError::InvalidInput("quad_points must be at least 1".into()));
    }
    let rule = gauss_legendre(quad_points);
    let rows: Vec<NonclosednessRow> = {
        use rayon::prelude::*;
        k_list.par_iter().map(|&k| row(k, &rule)).collect()
    };
    let c0_within_bound = rows.iter().all(|r| r.c0_distance <= r.c0_bound);
    let w11_strictly_increasing = rows.windows(2).all(|w| w[1].w11_norm > w[0].w11_norm);
    Ok(NonclosednessReport {
        horizon: HORIZON,
        quad_points,
        pass: c0_within_bound && w11_strictly_increasing,
        rows,
        c0_within_bound,
        w11_strictly_increasing,
        limit_absolutely_continuous: false,
    })
}
