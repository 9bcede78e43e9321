//! Low-rank factors from the eigendecomposition of a data kernel matrix, used for
//! kernels without a closed-form Mercer expansion.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{check_symmetric, sym_eigen_desc};

/// Eigenpairs of a symmetric kernel matrix, descending, negative values clamped to 0.
#[derive(Debug, Clone)]
pub struct EmpiricalEigen {
    pub values: Vec<f64>,
    pub vectors: DMatrix<f64>,
}

impl EmpiricalEigen {
    pub fn new(k: &DMatrix<f64>) -> Result<Self> {
        check_symmetric(k, "kernel matrix")?;
        let (values, vectors) = sym_eigen_desc(k);
        Ok(EmpiricalEigen {
            values: values.into_iter().map(|v| v.max(0.0)).collect(),
            vectors,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `V_r diag(√μ_1, …, √μ_r)`.
    pub fn factor(&self, r: usize) -> Result<DMatrix<f64>> {
        if r > self.len() {
            return Err(Error::invalid(format!("rank {r} exceeds matrix size {}", self.len())));
        }
        let mut out = self.vectors.columns(0, r).into_owned();
        for (t, mut col) in out.column_iter_mut().enumerate() {
            col *= self.values[t].sqrt();
        }
        Ok(out)
    }

    pub fn tail_sum(&self, r: usize) -> f64 {
        self.values.iter().skip(r).sum()
    }
}

/// Factor `Ξ` whose `ΞΞᵀ` is the best rank-`r` approximation of `k`.
pub fn empirical_truncation(k: &DMatrix<f64>, r: usize) -> Result<DMatrix<f64>> {
    EmpiricalEigen::new(k)?.factor(r)
}
