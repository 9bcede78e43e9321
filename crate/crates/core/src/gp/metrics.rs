use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Mean and covariance of test responses.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictiveDistribution {
    pub mean: DVector<f64>,
    pub covariance: DMatrix<f64>,
}

impl PredictiveDistribution {
    pub fn variances(&self) -> DVector<f64> {
        self.covariance.diagonal()
    }
}

/// Per-column affine map `x ↦ (x - mean) / scale`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardizer {
    pub fn identity(cols: usize) -> Self {
        Standardizer {
            mean: vec![0.0; cols],
            scale: vec![1.0; cols],
        }
    }

    /// Column means and population standard deviations; constant columns get scale 1.
    pub fn fit(x: &DMatrix<f64>) -> Self {
        let n = x.nrows().max(1) as f64;
        let mut mean = Vec::with_capacity(x.ncols());
        let mut scale = Vec::with_capacity(x.ncols());
        for col in x.column_iter() {
            let m = col.sum() / n;
            let var = col.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n;
            mean.push(m);
            scale.push(if var > 0.0 { var.sqrt() } else { 1.0 });
        }
        Standardizer { mean, scale }
    }

    pub fn fit_vector(y: &DVector<f64>) -> Self {
        Self::fit(&DMatrix::from_column_slice(y.len(), 1, y.as_slice()))
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn apply(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if x.ncols() != self.dim() {
            return Err(Error::DimensionMismatch {
                context: "standardizer columns",
                expected: self.dim(),
                found: x.ncols(),
            });
        }
        Ok(DMatrix::from_fn(x.nrows(), x.ncols(), |i, j| (x[(i, j)] - self.mean[j]) / self.scale[j]))
    }

    pub fn apply_vector(&self, y: &DVector<f64>) -> DVector<f64> {
        y.map(|v| (v - self.mean[0]) / self.scale[0])
    }

    pub fn invert_vector(&self, y: &DVector<f64>) -> DVector<f64> {
        y.map(|v| v * self.scale[0] + self.mean[0])
    }
}

/// Mean negative log density of each `y_i` under its marginal `N(mean_i, cov_ii)`.
pub fn nlpd(pred: &PredictiveDistribution, y: &DVector<f64>) -> Result<f64> {
    if y.len() != pred.mean.len() {
        return Err(Error::DimensionMismatch {
            context: "test responses",
            expected: pred.mean.len(),
            found: y.len(),
        });
    }
    if y.is_empty() {
        return Err(Error::invalid("no test points"));
    }
    let mut total = 0.0;
    for i in 0..y.len() {
        let var = pred.covariance[(i, i)];
        if !(var > 0.0) {
            return Err(Error::invalid(format!("predictive variance {var} at point {i} is not positive")));
        }
        let r = y[i] - pred.mean[i];
        total += 0.5 * ((2.0 * std::f64::consts::PI * var).ln() + r * r / var);
    }
    Ok(total / y.len() as f64)
}

pub fn rmse(pred_mean: &DVector<f64>, y: &DVector<f64>) -> Result<f64> {
    if y.len() != pred_mean.len() {
        return Err(Error::DimensionMismatch {
            context: "test responses",
            expected: pred_mean.len(),
            found: y.len(),
        });
    }
    if y.is_empty() {
        return Err(Error::invalid("no test points"));
    }
    Ok(((pred_mean - y).norm_squared() / y.len() as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn pred(mean: &[f64], var: f64) -> PredictiveDistribution {
        PredictiveDistribution {
            mean: DVector::from_column_slice(mean),
            covariance: DMatrix::from_diagonal_element(mean.len(), mean.len(), var),
        }
    }

    #[test]
    fn nlpd_examples() {
        let y = DVector::from_vec(vec![0.5, -1.0]);
        assert_relative_eq!(nlpd(&pred(&[0.5, -1.0], 1.0), &y).unwrap(), 0.918_938_533_204_672_7, max_relative = 1e-14);
        let e = std::f64::consts::E;
        assert_relative_eq!(nlpd(&pred(&[0.5, -1.0], e), &y).unwrap(), 1.418_938_533_204_672_7, max_relative = 1e-14);
        let near = nlpd(&pred(&[0.6, -1.0], 1.0), &y).unwrap();
        let far = nlpd(&pred(&[0.7, -1.0], 1.0), &y).unwrap();
        assert!(far > near);
        assert!(nlpd(&pred(&[0.0, 0.0], 0.0), &y).is_err());
        assert!(nlpd(&pred(&[0.0], 1.0), &y).is_err());
    }

    #[test]
    fn rmse_examples() {
        let a = DVector::from_vec(vec![1.0, 2.0, 3.0]);
        assert_eq!(rmse(&a, &a).unwrap(), 0.0);
        assert_relative_eq!(rmse(&a.add_scalar(-0.5), &a).unwrap(), 0.5, max_relative = 1e-14);
        let z = DVector::zeros(2);
        let t = DVector::from_vec(vec![3.0, 4.0]);
        assert_relative_eq!(rmse(&z, &t).unwrap(), 3.535_533_905_932_737_6, max_relative = 1e-14);
        assert!(rmse(&z, &a).is_err());
    }

    #[test]
    fn standardizer_round_trip() {
        let x = DMatrix::from_row_slice(3, 2, &[1.0, 5.0, 2.0, 5.0, 3.0, 5.0]);
        let s = Standardizer::fit(&x);
        assert_eq!(s.scale[1], 1.0);
        let z = s.apply(&x).unwrap();
        assert_relative_eq!(z.column(0).sum(), 0.0, epsilon = 1e-14);
        assert_relative_eq!(z.column(0).norm_squared() / 3.0, 1.0, max_relative = 1e-14);
        let y = DVector::from_vec(vec![2.0, 4.0, 9.0]);
        let sy = Standardizer::fit_vector(&y);
        assert!((sy.invert_vector(&sy.apply_vector(&y)) - y).abs().max() < 1e-14);
    }
}
