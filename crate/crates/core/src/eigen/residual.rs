use serde::{Deserialize, Serialize};

use super::{tridiag_matvec, Spectrum};
use crate::error::{Error, Result};
use crate::model::{SymmetricMatrix, Tridiagonal};

/// Residual bound per pair, relative to `max(1, max|M|)`.
pub const RESIDUAL_TOL: f64 = 1e-11;
/// Bound on `|vᵢ·vⱼ - δᵢⱼ|` over retained vectors.
pub const ORTHONORMALITY_TOL: f64 = 1e-10;
const NORM_TOL: f64 = 1e-12;

/// A symmetric operator the residuals can be measured against.
pub trait SymmetricOperator {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[f64]) -> Vec<f64>;
    fn max_abs(&self) -> f64;
}

impl SymmetricOperator for SymmetricMatrix {
    fn dim(&self) -> usize {
        SymmetricMatrix::dim(self)
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.matvec(x)
    }

    fn max_abs(&self) -> f64 {
        SymmetricMatrix::max_abs(self)
    }
}

impl SymmetricOperator for Tridiagonal {
    fn dim(&self) -> usize {
        Tridiagonal::dim(self)
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        tridiag_matvec(self, x)
    }

    fn max_abs(&self) -> f64 {
        self.diag
            .iter()
            .chain(&self.offdiag)
            .fold(0.0_f64, |acc, x| acc.max(x.abs()))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub residuals: Vec<f64>,
    pub max_residual: f64,
    /// Largest `|vᵢ·vⱼ|`, `i ≠ j`.
    pub max_gram_defect: f64,
    /// Largest `|‖vᵢ‖₂ - 1|`.
    pub max_norm_defect: f64,
    pub residual_tol: f64,
    /// Indices of pairs that break the residual, norm or orthogonality
    /// tolerance.
    pub flagged: Vec<usize>,
}

impl ResidualReport {
    pub fn passed(&self) -> bool {
        self.flagged.is_empty()
    }
}

/// Recomputes residuals and orthonormality defects of `spectrum` against
/// the operator it was computed from.
pub fn residual_report<M: SymmetricOperator + ?Sized>(m: &M, spectrum: &Spectrum) -> Result<ResidualReport> {
    let dim = m.dim();
    if let Some(bad) = spectrum.eigenvectors.iter().find(|v| v.len() != dim) {
        return Err(Error::DimensionMismatch(format!(
            "eigenvector of length {} against a {dim}-dimensional operator",
            bad.len()
        )));
    }
    let residual_tol = RESIDUAL_TOL * m.max_abs().max(1.0);

    let residuals: Vec<f64> = spectrum
        .eigenvalues
        .iter()
        .zip(&spectrum.eigenvectors)
        .map(|(lam, v)| {
            m.apply(v)
                .iter()
                .zip(v)
                .map(|(a, b)| (a - lam * b).powi(2))
                .sum::<f64>()
                .sqrt()
        })
        .collect();

    let vs = &spectrum.eigenvectors;
    let mut flagged = Vec::new();
    let mut max_gram_defect = 0.0_f64;
    let mut max_norm_defect = 0.0_f64;
    for i in 0..vs.len() {
        let mut bad = residuals[i] > residual_tol;
        let norm_defect = (dot(&vs[i], &vs[i]).sqrt() - 1.0).abs();
        max_norm_defect = max_norm_defect.max(norm_defect);
        bad |= norm_defect > NORM_TOL;
        for j in 0..vs.len() {
            if i != j {
                let g = dot(&vs[i], &vs[j]).abs();
                max_gram_defect = max_gram_defect.max(g);
                bad |= g > ORTHONORMALITY_TOL;
            }
        }
        if bad {
            flagged.push(i);
        }
    }

    Ok(ResidualReport {
        max_residual: residuals.iter().cloned().fold(0.0, f64::max),
        residuals,
        max_gram_defect,
        max_norm_defect,
        residual_tol,
        flagged,
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
