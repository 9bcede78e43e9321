//! `A = ΞΞᵀ + σ²I_N` handled through the `r × r` capacitance `C = σ²I_r + ΞᵀΞ`.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};
use crate::linalg::{add_diagonal, chol_logdet, cholesky};

pub struct WoodburyFactor<'a> {
    pub xi: &'a DMatrix<f64>,
    pub sigma_sq: f64,
    chol: Cholesky<f64, Dyn>,
}

impl<'a> WoodburyFactor<'a> {
    pub fn new(xi: &'a DMatrix<f64>, sigma_sq: f64) -> Result<Self> {
        if !(sigma_sq > 0.0 && sigma_sq.is_finite()) {
            return Err(Error::invalid(format!("noise variance must be positive, got {sigma_sq}")));
        }
        let c = add_diagonal(xi.tr_mul(xi), sigma_sq);
        let chol = cholesky(c, "capacitance matrix")?;
        Ok(WoodburyFactor { xi, sigma_sq, chol })
    }

    pub fn n(&self) -> usize {
        self.xi.nrows()
    }

    pub fn rank(&self) -> usize {
        self.xi.ncols()
    }

    /// `C⁻¹ M` for an `r × k` matrix.
    pub fn capacitance_solve(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        self.chol.solve(m)
    }

    pub fn capacitance_inverse(&self) -> DMatrix<f64> {
        self.chol.inverse()
    }

    /// `A⁻¹V = σ⁻²(V - Ξ C⁻¹ ΞᵀV)`.
    pub fn solve(&self, v: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if v.nrows() != self.n() {
            return Err(Error::DimensionMismatch {
                context: "right-hand side",
                expected: self.n(),
                found: v.nrows(),
            });
        }
        let inner = self.chol.solve(&self.xi.tr_mul(v));
        Ok((v - self.xi * inner) / self.sigma_sq)
    }

    pub fn solve_vec(&self, v: &DVector<f64>) -> Result<DVector<f64>> {
        if v.len() != self.n() {
            return Err(Error::DimensionMismatch {
                context: "right-hand side",
                expected: self.n(),
                found: v.len(),
            });
        }
        let inner = self.chol.solve(&self.xi.tr_mul(v));
        Ok((v - self.xi * inner) / self.sigma_sq)
    }

    /// `log|A| = (N - r) log σ² + log|C|`.
    pub fn logdet(&self) -> f64 {
        (self.n() as f64 - self.rank() as f64) * self.sigma_sq.ln() + chol_logdet(&self.chol)
    }

    /// `Tr(A⁻¹) = (N - r)/σ² + Tr(C⁻¹)`.
    pub fn trace_inverse(&self) -> f64 {
        (self.n() as f64 - self.rank() as f64) / self.sigma_sq + self.chol.inverse().trace()
    }
}

/// `(ΞΞᵀ + σ²I)⁻¹ V`.
pub fn lowrank_solve(xi: &DMatrix<f64>, sigma_sq: f64, v: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    WoodburyFactor::new(xi, sigma_sq)?.solve(v)
}

/// `log|ΞΞᵀ + σ²I|`.
pub fn lowrank_logdet(xi: &DMatrix<f64>, sigma_sq: f64) -> Result<f64> {
    Ok(WoodburyFactor::new(xi, sigma_sq)?.logdet())
}
