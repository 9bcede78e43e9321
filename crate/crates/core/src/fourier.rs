//! Random Fourier features for the Gaussian-ARD kernel.
//!
//! With `η ~ N(0, 2Δ)`, `E[cos(ηᵀ(x - x'))] = exp(-(x - x')ᵀΔ(x - x'))`, so
//! `φ(x) = σ_f √(2/r) [cos ηᵢᵀx; sin ηᵢᵀx]` with `r = 2m` features satisfies
//! `E[φ(x)ᵀφ(x')] = k(x, x')`.

use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::KernelSpec;
use crate::rng::{stream_rng, Stream};

/// Frequencies `η_i` drawn once for a kernel.
///
/// The underlying standard normals are kept so the same draw can be rescaled when
/// the lengthscales change during training.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralSample {
    /// `m × d` standard normal draws `ω`.
    pub standard_normals: DMatrix<f64>,
    /// `m × d`, row `i` is `η_i = ω_i ⊙ √(2 ε²)`.
    pub frequencies: DMatrix<f64>,
    pub signal_variance: f64,
    pub seed: u64,
    pub kernel: KernelSpec,
}

/// Draws `m` frequencies from the `Spectral` stream of `seed`.
///
/// Draws are made row by row, so a sample of size `m` is a prefix of any larger
/// sample with the same seed.
pub fn sample_spectral_frequencies(spec: &KernelSpec, m: usize, seed: u64) -> Result<SpectralSample> {
    sample_spectral_frequencies_indexed(spec, m, seed, 0)
}

/// As [`sample_spectral_frequencies`], drawing from sub-stream `index` so that
/// repeated independent samples share one seed.
pub fn sample_spectral_frequencies_indexed(spec: &KernelSpec, m: usize, seed: u64, index: u32) -> Result<SpectralSample> {
    if m == 0 {
        return Err(Error::invalid("number of spectral frequencies must be at least 1"));
    }
    let d = gaussian_dim(spec)?;
    let mut rng = stream_rng(seed, Stream::Spectral, index);
    let draws: Vec<f64> = (0..m * d).map(|_| StandardNormal.sample(&mut rng)).collect();
    let omega = DMatrix::from_row_slice(m, d, &draws);
    SpectralSample::from_standard_normals(spec, omega, seed)
}

fn gaussian_dim(spec: &KernelSpec) -> Result<usize> {
    match spec {
        KernelSpec::GaussianArd { inv_lengthscale_sq, .. } => Ok(inv_lengthscale_sq.len()),
        KernelSpec::Matern { .. } => Err(Error::Unsupported(
            "random Fourier features are implemented for the Gaussian kernel only".into(),
        )),
    }
}

impl SpectralSample {
    pub fn from_standard_normals(spec: &KernelSpec, omega: DMatrix<f64>, seed: u64) -> Result<Self> {
        let d = gaussian_dim(spec)?;
        if omega.ncols() != d {
            return Err(Error::DimensionMismatch {
                context: "spectral draws",
                expected: d,
                found: omega.ncols(),
            });
        }
        let KernelSpec::GaussianArd {
            signal_variance,
            inv_lengthscale_sq,
        } = spec
        else {
            unreachable!()
        };
        let mut frequencies = omega.clone();
        for (j, mut col) in frequencies.column_iter_mut().enumerate() {
            col *= (2.0 * inv_lengthscale_sq[j]).sqrt();
        }
        Ok(SpectralSample {
            standard_normals: omega,
            frequencies,
            signal_variance: *signal_variance,
            seed,
            kernel: spec.clone(),
        })
    }

    /// Same draws, rescaled to another Gaussian-ARD kernel of the same dimension.
    pub fn rescaled(&self, spec: &KernelSpec) -> Result<Self> {
        Self::from_standard_normals(spec, self.standard_normals.clone(), self.seed)
    }

    /// The first `m` frequencies.
    pub fn prefix(&self, m: usize) -> Result<Self> {
        if m == 0 || m > self.num_frequencies() {
            return Err(Error::invalid(format!(
                "prefix size {m} outside 1..={}",
                self.num_frequencies()
            )));
        }
        Ok(SpectralSample {
            standard_normals: self.standard_normals.rows(0, m).into_owned(),
            frequencies: self.frequencies.rows(0, m).into_owned(),
            signal_variance: self.signal_variance,
            seed: self.seed,
            kernel: self.kernel.clone(),
        })
    }

    pub fn num_frequencies(&self) -> usize {
        self.frequencies.nrows()
    }

    /// Feature count `r = 2m`.
    pub fn rank(&self) -> usize {
        2 * self.num_frequencies()
    }

    pub fn dim(&self) -> usize {
        self.frequencies.ncols()
    }

    fn scale(&self) -> f64 {
        self.signal_variance.sqrt() * (2.0 / self.rank() as f64).sqrt()
    }
}

pub fn rff_feature_map(x: &[f64], s: &SpectralSample) -> Result<DVector<f64>> {
    if x.len() != s.dim() {
        return Err(Error::DimensionMismatch {
            context: "Fourier feature input",
            expected: s.dim(),
            found: x.len(),
        });
    }
    let m = s.num_frequencies();
    let scale = s.scale();
    let mut out = DVector::zeros(2 * m);
    for i in 0..m {
        let a: f64 = s.frequencies.row(i).iter().zip(x).map(|(e, xj)| e * xj).sum();
        out[i] = scale * a.cos();
        out[m + i] = scale * a.sin();
    }
    Ok(out)
}

/// Rows of `x` are points; row `i` of the result is `φ(x_i)`.
pub fn rff_feature_matrix(x: &DMatrix<f64>, s: &SpectralSample) -> Result<DMatrix<f64>> {
    if x.ncols() != s.dim() {
        return Err(Error::DimensionMismatch {
            context: "Fourier feature inputs",
            expected: s.dim(),
            found: x.ncols(),
        });
    }
    let m = s.num_frequencies();
    let scale = s.scale();
    let phases = x * s.frequencies.transpose();
    let mut out = DMatrix::zeros(x.nrows(), 2 * m);
    for i in 0..x.nrows() {
        for t in 0..m {
            let a = phases[(i, t)];
            out[(i, t)] = scale * a.cos();
            out[(i, m + t)] = scale * a.sin();
        }
    }
    Ok(out)
}
