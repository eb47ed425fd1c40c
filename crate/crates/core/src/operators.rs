//! Dense symmetric positive-semidefinite operators on `R^n`.
//!
//! An operator is validated at construction (square, finite, symmetric, PSD)
//! and its eigendecomposition is computed once by cyclic Jacobi rotations and
//! cached. [`OperatorSpectrum`] derives the operator norm, the modulus of
//! coercivity `max(0, λ_min)` and an orthonormal kernel basis from it.

use std::sync::OnceLock;

use thiserror::Error;

use crate::vector::dot;

/// Relative cutoff below which an eigenvalue is treated as zero.
pub const DEFAULT_KERNEL_TOL: f64 = 1e-10;

const SYMMETRY_TOL: f64 = 1e-12;
const PSD_TOL: f64 = 1e-10;
const JACOBI_MAX_SWEEPS: usize = 100;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OperatorError {
    #[error("operator must have positive dimension")]
    EmptyOperator,
    #[error("expected {expected} entries for a {dim}x{dim} operator, got {got}")]
    ShapeMismatch { dim: usize, expected: usize, got: usize },
    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("symmetry invariant violated at ({row}, {col}): {upper} vs {lower}")]
    NotSymmetric { row: usize, col: usize, upper: f64, lower: f64 },
    #[error("positive-semidefinite invariant violated: smallest eigenvalue {min_eigenvalue}")]
    NotPositiveSemidefinite { min_eigenvalue: f64 },
    #[error("vector of length {got} does not match operator dimension {dim}")]
    DimensionMismatch { dim: usize, got: usize },
    #[error("Jacobi eigen-iteration did not converge in {sweeps} sweeps")]
    NoConvergence { sweeps: usize },
}

/// Raw eigendecomposition with eigenvalues sorted nondecreasingly.
#[derive(Debug, Clone)]
struct Eigen {
    values: Vec<f64>,
    vectors: Vec<Vec<f64>>,
}

/// A dense symmetric positive-semidefinite matrix, stored row-major.
#[derive(Debug)]
pub struct SymmetricOperator {
    dim: usize,
    entries: Vec<f64>,
    eigen: OnceLock<Eigen>,
}

impl Clone for SymmetricOperator {
    fn clone(&self) -> Self {
        let eigen = OnceLock::new();
        if let Some(e) = self.eigen.get() {
            let _ = eigen.set(e.clone());
        }
        Self { dim: self.dim, entries: self.entries.clone(), eigen }
    }
}

impl PartialEq for SymmetricOperator {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.entries == other.entries
    }
}

impl SymmetricOperator {
    /// Builds an operator from row-major entries, enforcing symmetry and
    /// positive semidefiniteness.
    pub fn new(dim: usize, entries: Vec<f64>) -> Result<Self, OperatorError> {
        if dim == 0 {
            return Err(OperatorError::EmptyOperator);
        }
        if entries.len() != dim * dim {
            return Err(OperatorError::ShapeMismatch {
                dim,
                expected: dim * dim,
                got: entries.len(),
            });
        }
        for (idx, e) in entries.iter().enumerate() {
            if !e.is_finite() {
                return Err(OperatorError::NonFinite { row: idx / dim, col: idx % dim });
            }
        }
        for i in 0..dim {
            for j in (i + 1)..dim {
                let upper = entries[i * dim + j];
                let lower = entries[j * dim + i];
                if (upper - lower).abs() > SYMMETRY_TOL * (1.0 + upper.abs()) {
                    return Err(OperatorError::NotSymmetric { row: i, col: j, upper, lower });
                }
            }
        }
        let op = Self { dim, entries, eigen: OnceLock::new() };
        let eigen = op.eigen()?;
        let norm = eigen.values.last().copied().unwrap_or(0.0).max(0.0);
        let min = eigen.values[0];
        if min < -PSD_TOL * norm || (norm == 0.0 && min < 0.0) {
            return Err(OperatorError::NotPositiveSemidefinite { min_eigenvalue: min });
        }
        Ok(op)
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, OperatorError> {
        let dim = rows.len();
        let mut entries = Vec::with_capacity(dim * dim);
        for row in rows {
            if row.len() != dim {
                return Err(OperatorError::ShapeMismatch { dim, expected: dim, got: row.len() });
            }
            entries.extend_from_slice(row);
        }
        Self::new(dim, entries)
    }

    pub fn identity(dim: usize) -> Self {
        Self::diagonal(&vec![1.0; dim])
    }

    pub fn zeros(dim: usize) -> Self {
        Self::diagonal(&vec![0.0; dim])
    }

    /// Diagonal operator. Panics on negative or non-finite entries.
    pub fn diagonal(diag: &[f64]) -> Self {
        let dim = diag.len();
        let mut entries = vec![0.0; dim * dim];
        for (i, d) in diag.iter().enumerate() {
            entries[i * dim + i] = *d;
        }
        Self::new(dim, entries).expect("diagonal operator must be finite and nonnegative")
    }

    /// `a * self + b * other`; both coefficients must be nonnegative to keep
    /// the result PSD.
    pub fn combine(&self, a: f64, other: &SymmetricOperator, b: f64) -> Result<Self, OperatorError> {
        if other.dim != self.dim {
            return Err(OperatorError::DimensionMismatch { dim: self.dim, got: other.dim });
        }
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(x, y)| a * x + b * y)
            .collect();
        Self::new(self.dim, entries)
    }

    /// `self + eps * I`.
    pub fn shifted(&self, eps: f64) -> Result<Self, OperatorError> {
        let mut entries = self.entries.clone();
        for i in 0..self.dim {
            entries[i * self.dim + i] += eps;
        }
        Self::new(self.dim, entries)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.entries[row * self.dim + col]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.entries.chunks(self.dim).map(<[f64]>::to_vec).collect()
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>, OperatorError> {
        if x.len() != self.dim {
            return Err(OperatorError::DimensionMismatch { dim: self.dim, got: x.len() });
        }
        let mut out = vec![0.0; self.dim];
        self.apply_into(x, &mut out);
        Ok(out)
    }

    /// Matrix-vector product into a preallocated buffer. Lengths must match.
    pub fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.dim);
        debug_assert_eq!(out.len(), self.dim);
        for (o, row) in out.iter_mut().zip(self.entries.chunks_exact(self.dim)) {
            *o = dot(row, x);
        }
    }

    /// `⟨Ax, x⟩`
    pub fn quadratic_form(&self, x: &[f64]) -> Result<f64, OperatorError> {
        Ok(dot(&self.apply(x)?, x))
    }

    pub fn spectrum(&self, tol: f64) -> Result<OperatorSpectrum, OperatorError> {
        let eigen = self.eigen()?;
        let operator_norm = eigen.values.last().copied().unwrap_or(0.0).max(0.0);
        let cutoff = tol * operator_norm;
        let mut eigenvalues = Vec::with_capacity(self.dim);
        let mut kernel_basis = Vec::new();
        for (value, vector) in eigen.values.iter().zip(&eigen.vectors) {
            if *value <= cutoff {
                eigenvalues.push(0.0);
                kernel_basis.push(vector.clone());
            } else {
                eigenvalues.push(*value);
            }
        }
        let coercivity_modulus = eigenvalues[0].max(0.0);
        Ok(OperatorSpectrum {
            eigenvalues,
            eigenvectors: eigen.vectors.clone(),
            operator_norm,
            coercivity_modulus,
            kernel_basis,
        })
    }

    /// Spectral norm `‖A‖`.
    pub fn norm(&self) -> f64 {
        self.eigen()
            .map(|e| e.values.last().copied().unwrap_or(0.0).max(0.0))
            .unwrap_or(f64::NAN)
    }

    /// Modulus of coercivity at the default kernel tolerance.
    pub fn coercivity_modulus(&self) -> f64 {
        self.spectrum(DEFAULT_KERNEL_TOL)
            .map(|s| s.coercivity_modulus)
            .unwrap_or(f64::NAN)
    }

    fn eigen(&self) -> Result<&Eigen, OperatorError> {
        if let Some(e) = self.eigen.get() {
            return Ok(e);
        }
        let e = jacobi_eigen(self.dim, &self.entries)?;
        Ok(self.eigen.get_or_init(|| e))
    }
}

/// Spectral data of a [`SymmetricOperator`] at a given kernel tolerance.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorSpectrum {
    /// Nondecreasing; entries within the kernel cutoff are snapped to zero.
    pub eigenvalues: Vec<f64>,
    /// Orthonormal, `eigenvectors[i]` belongs to `eigenvalues[i]`.
    pub eigenvectors: Vec<Vec<f64>>,
    pub operator_norm: f64,
    pub coercivity_modulus: f64,
    pub kernel_basis: Vec<Vec<f64>>,
}

impl OperatorSpectrum {
    /// Orthogonal projection onto the kernel.
    pub fn kernel_project(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; x.len()];
        for b in &self.kernel_basis {
            let c = dot(x, b);
            for (o, bi) in out.iter_mut().zip(b) {
                *o += c * bi;
            }
        }
        out
    }

    pub fn is_coercive(&self) -> bool {
        self.coercivity_modulus > 0.0
    }
}

/// Cyclic Jacobi eigendecomposition of a symmetric row-major matrix.
fn jacobi_eigen(n: usize, entries: &[f64]) -> Result<Eigen, OperatorError> {
    let mut a = entries.to_vec();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let frob = a.iter().map(|x| x * x).sum::<f64>().sqrt();

    let mut converged = false;
    for _ in 0..JACOBI_MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
            .map(|(i, j)| a[i * n + j] * a[i * n + j])
            .sum();
        if off.sqrt() <= 1e-15 * frob || off == 0.0 {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                // negligible next to both diagonal entries
                if apq.abs() <= f64::EPSILON * 1e-2 * app.abs().min(aqq.abs()) {
                    a[p * n + q] = 0.0;
                    a[q * n + p] = 0.0;
                    continue;
                }
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    if !converged {
        return Err(OperatorError::NoConvergence { sweeps: JACOBI_MAX_SWEEPS });
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[i * n + i].total_cmp(&a[j * n + j]));
    let values = order.iter().map(|&i| a[i * n + i]).collect();
    let vectors = order
        .iter()
        .map(|&i| (0..n).map(|k| v[k * n + i]).collect())
        .collect();
    Ok(Eigen { values, vectors })
}
