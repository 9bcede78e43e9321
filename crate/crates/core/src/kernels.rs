//! Stationary covariance functions and dense kernel matrices.
//!
//! Two families are supported:
//!
//! * Gaussian with automatic relevance determination,
//!   `k(x, x') = σ_f² exp(-Σ_j ε_j² (x_j - x'_j)²)`, parameterised by the
//!   inverse squared lengthscales `ε_j²`.
//! * Matérn with half-integer smoothness `ν ∈ {1/2, 3/2, 5/2}` and scale
//!   `α = ℓ / √(2ν)`, normalised so that `k(x, x) = 1`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MaternNu {
    Half,
    ThreeHalves,
    FiveHalves,
}

impl MaternNu {
    pub fn value(self) -> f64 {
        match self {
            MaternNu::Half => 0.5,
            MaternNu::ThreeHalves => 1.5,
            MaternNu::FiveHalves => 2.5,
        }
    }

    /// Closed forms only exist here for the three half-integer cases.
    pub fn from_value(nu: f64) -> Result<Self> {
        [MaternNu::Half, MaternNu::ThreeHalves, MaternNu::FiveHalves]
            .into_iter()
            .find(|v| v.value() == nu)
            .ok_or_else(|| Error::Unsupported(format!("Matérn smoothness {nu}; only 1/2, 3/2 and 5/2 are available")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum KernelSpec {
    GaussianArd {
        signal_variance: f64,
        inv_lengthscale_sq: Vec<f64>,
    },
    Matern {
        nu: MaternNu,
        alpha: f64,
    },
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("{name} must be positive and finite, got {v}")))
    }
}

impl KernelSpec {
    pub fn gaussian(signal_variance: f64, inv_lengthscale_sq: Vec<f64>) -> Result<Self> {
        positive("signal variance", signal_variance)?;
        if inv_lengthscale_sq.is_empty() {
            return Err(Error::invalid("Gaussian kernel needs at least one dimension"));
        }
        for &e in &inv_lengthscale_sq {
            positive("inverse squared lengthscale", e)?;
        }
        Ok(KernelSpec::GaussianArd {
            signal_variance,
            inv_lengthscale_sq,
        })
    }

    /// Isotropic Gaussian kernel in `dim` dimensions.
    pub fn gaussian_iso(signal_variance: f64, inv_lengthscale_sq: f64, dim: usize) -> Result<Self> {
        Self::gaussian(signal_variance, vec![inv_lengthscale_sq; dim])
    }

    pub fn matern(nu: MaternNu, alpha: f64) -> Result<Self> {
        positive("Matérn alpha", alpha)?;
        Ok(KernelSpec::Matern { nu, alpha })
    }

    /// Input dimension for the Gaussian family; Matérn kernels accept any dimension.
    pub fn dim(&self) -> Option<usize> {
        match self {
            KernelSpec::GaussianArd {
                inv_lengthscale_sq, ..
            } => Some(inv_lengthscale_sq.len()),
            KernelSpec::Matern { .. } => None,
        }
    }

    /// `k(x, x)`.
    pub fn diagonal_value(&self) -> f64 {
        match self {
            KernelSpec::GaussianArd {
                signal_variance, ..
            } => *signal_variance,
            KernelSpec::Matern { .. } => 1.0,
        }
    }

    pub fn eval(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        match self {
            KernelSpec::GaussianArd { .. } => gaussian_kernel_eval(x, y, self),
            KernelSpec::Matern { .. } => matern_kernel_eval(x, y, self),
        }
    }

    fn eval_unchecked(&self, x: impl Iterator<Item = f64>, y: impl Iterator<Item = f64>) -> f64 {
        match self {
            KernelSpec::GaussianArd {
                signal_variance,
                inv_lengthscale_sq,
            } => {
                let q: f64 = x
                    .zip(y)
                    .zip(inv_lengthscale_sq)
                    .map(|((a, b), e)| e * (a - b) * (a - b))
                    .sum();
                signal_variance * (-q).exp()
            }
            KernelSpec::Matern { nu, alpha } => {
                let d = x.zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
                matern_profile(*nu, d / alpha)
            }
        }
    }
}

/// Matérn correlation as a function of `s = d / α`.
fn matern_profile(nu: MaternNu, s: f64) -> f64 {
    match nu {
        MaternNu::Half => (-s).exp(),
        MaternNu::ThreeHalves => (1.0 + s) * (-s).exp(),
        MaternNu::FiveHalves => (1.0 + s + s * s / 3.0) * (-s).exp(),
    }
}

fn check_len(context: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            context,
            expected,
            found,
        })
    }
}

pub fn gaussian_kernel_eval(x: &[f64], y: &[f64], spec: &KernelSpec) -> Result<f64> {
    let KernelSpec::GaussianArd {
        inv_lengthscale_sq, ..
    } = spec
    else {
        return Err(Error::invalid("gaussian_kernel_eval called with a Matérn spec"));
    };
    check_len("gaussian kernel (x)", inv_lengthscale_sq.len(), x.len())?;
    check_len("gaussian kernel (x')", inv_lengthscale_sq.len(), y.len())?;
    Ok(spec.eval_unchecked(x.iter().copied(), y.iter().copied()))
}

pub fn matern_kernel_eval(x: &[f64], y: &[f64], spec: &KernelSpec) -> Result<f64> {
    if !matches!(spec, KernelSpec::Matern { .. }) {
        return Err(Error::invalid("matern_kernel_eval called with a Gaussian spec"));
    }
    check_len("matern kernel", x.len(), y.len())?;
    Ok(spec.eval_unchecked(x.iter().copied(), y.iter().copied()))
}

/// Kernel matrix between the rows of `x` and the rows of `x2` (or of `x` itself).
///
/// The square case is filled from the upper triangle so the result is exactly symmetric.
pub fn kernel_matrix(spec: &KernelSpec, x: &DMatrix<f64>, x2: Option<&DMatrix<f64>>) -> Result<DMatrix<f64>> {
    if let Some(d) = spec.dim() {
        check_len("kernel_matrix (X columns)", d, x.ncols())?;
    }
    match x2 {
        None => {
            let n = x.nrows();
            let mut k = DMatrix::zeros(n, n);
            for i in 0..n {
                for j in i..n {
                    let v = spec.eval_unchecked(x.row(i).iter().copied(), x.row(j).iter().copied());
                    k[(i, j)] = v;
                    k[(j, i)] = v;
                }
            }
            Ok(k)
        }
        Some(z) => {
            check_len("kernel_matrix (second input columns)", x.ncols(), z.ncols())?;
            Ok(DMatrix::from_fn(x.nrows(), z.nrows(), |i, j| {
                spec.eval_unchecked(x.row(i).iter().copied(), z.row(j).iter().copied())
            }))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::min_eigenvalue;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn gaussian_examples() {
        let unit = KernelSpec::gaussian_iso(1.0, 1.0, 3).unwrap();
        assert_eq!(unit.eval(&[0.3, -1.0, 2.0], &[0.3, -1.0, 2.0]).unwrap(), 1.0);

        let fig = KernelSpec::gaussian_iso(1.0, 2.0 * std::f64::consts::PI.powi(2), 1).unwrap();
        assert_relative_eq!(fig.eval(&[0.0], &[1.0]).unwrap(), 2.675_287_991_074_24e-9, max_relative = 1e-12);

        let ard = KernelSpec::gaussian(2.0, vec![1.0, 4.0]).unwrap();
        assert_relative_eq!(ard.eval(&[1.0, 0.5], &[0.0, 0.0]).unwrap(), 0.270_670_566_473_225_4, max_relative = 1e-14);
    }

    #[test]
    fn gaussian_dimension_mismatch() {
        let k = KernelSpec::gaussian_iso(1.0, 1.0, 2).unwrap();
        assert!(matches!(k.eval(&[1.0], &[1.0]), Err(Error::DimensionMismatch { .. })));
        assert!(matches!(k.eval(&[1.0, 2.0], &[1.0, 2.0, 3.0]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn matern_examples() {
        let k = KernelSpec::matern(MaternNu::Half, 0.7).unwrap();
        assert_eq!(k.eval(&[0.2, 0.1], &[0.2, 0.1]).unwrap(), 1.0);
        assert_relative_eq!(k.eval(&[0.0], &[0.7]).unwrap(), (-1.0f64).exp(), max_relative = 1e-15);
        let far: Vec<f64> = [1.0, 5.0, 50.0, 500.0].iter().map(|&d| k.eval(&[0.0], &[d]).unwrap()).collect();
        assert!(far.windows(2).all(|w| w[1] < w[0]));
        assert!(far[3] < 1e-300);
    }

    #[test]
    fn matern_higher_orders_match_lengthscale_form() {
        // ℓ = α√(2ν): (1 + √3 d/ℓ) e^{-√3 d/ℓ} for ν = 3/2.
        let alpha = 0.4;
        let d = 0.9;
        let ell = alpha * 3.0f64.sqrt();
        let k = KernelSpec::matern(MaternNu::ThreeHalves, alpha).unwrap();
        let s = 3.0f64.sqrt() * d / ell;
        assert_relative_eq!(k.eval(&[0.0], &[d]).unwrap(), (1.0 + s) * (-s).exp(), max_relative = 1e-14);

        let ell = alpha * 5.0f64.sqrt();
        let k = KernelSpec::matern(MaternNu::FiveHalves, alpha).unwrap();
        let s = 5.0f64.sqrt() * d / ell;
        assert_relative_eq!(
            k.eval(&[0.0], &[d]).unwrap(),
            (1.0 + s + s * s / 3.0) * (-s).exp(),
            max_relative = 1e-14
        );
    }

    #[test]
    fn unsupported_nu_is_rejected() {
        assert!(matches!(MaternNu::from_value(1.0), Err(Error::Unsupported(_))));
        assert_eq!(MaternNu::from_value(2.5).unwrap(), MaternNu::FiveHalves);
    }

    #[test]
    fn kernel_matrix_small_cases() {
        let k = KernelSpec::gaussian_iso(1.7, 1.0, 2).unwrap();
        let one = DMatrix::from_row_slice(1, 2, &[0.3, 0.4]);
        assert_eq!(kernel_matrix(&k, &one, None).unwrap(), DMatrix::from_element(1, 1, 1.7));

        let dup = DMatrix::from_row_slice(2, 2, &[0.3, 0.4, 0.3, 0.4]);
        let m = kernel_matrix(&k, &dup, None).unwrap();
        assert!(m.iter().all(|&v| v == 1.7));
        assert!(min_eigenvalue(&m).abs() < 1e-12);

        let bad = DMatrix::from_row_slice(1, 3, &[0.0, 0.0, 0.0]);
        assert!(kernel_matrix(&k, &bad, None).is_err());
        assert!(kernel_matrix(&k, &one, Some(&bad)).is_err());
    }

    #[test]
    fn kernel_matrix_random_is_psd() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = DMatrix::from_fn(50, 3, |_, _| rng.random_range(-2.0..2.0));
        let k = kernel_matrix(&KernelSpec::gaussian(1.0, vec![0.5, 1.0, 2.0]).unwrap(), &x, None).unwrap();
        assert_eq!(k, k.transpose());
        assert!(min_eigenvalue(&k) >= -1e-10);
    }
}
