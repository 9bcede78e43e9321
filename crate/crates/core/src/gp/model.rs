use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::metrics::{PredictiveDistribution, Standardizer};
use super::woodbury::WoodburyFactor;
use crate::error::{Error, Result};
use crate::fourier::{rff_feature_matrix, SpectralSample};
use crate::kernels::{kernel_matrix, KernelSpec};
use crate::linalg::{add_diagonal, chol_logdet, cholesky};
use crate::mercer::{EigenSystem, MercerBasis1D, OrderingMode, DEFAULT_ALPHA};
use crate::rng::{stream_rng, Stream};

const HALF_LOG_2PI: f64 = 0.918_938_533_204_672_8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Truncated Mercer expansion.
    Mgp,
    /// Random Fourier features.
    Fgp,
    /// Dense Gaussian-kernel GP.
    Exact,
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mgp" | "mercer" => Ok(Method::Mgp),
            "fgp" | "fourier" => Ok(Method::Fgp),
            "exact" | "exactgp" => Ok(Method::Exact),
            other => Err(Error::Usage(format!("unknown method '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelOptions {
    pub method: Method,
    /// Number of features; must be even for `Fgp` and is ignored by `Exact`.
    pub rank: usize,
    /// Learn a linear map from `D` inputs to this many features.
    pub projection_dim: Option<usize>,
    /// One lengthscale per feature coordinate instead of a shared one.
    pub ard: bool,
    /// Mercer measure scale `α` for every coordinate.
    pub measure_alpha: f64,
    pub ordering: OrderingMode,
    /// Lower bound added to the learned noise variance.
    pub min_noise_variance: f64,
}

impl Default for ModelOptions {
    fn default() -> Self {
        ModelOptions {
            method: Method::Mgp,
            rank: 20,
            projection_dim: None,
            ard: false,
            measure_alpha: DEFAULT_ALPHA,
            ordering: OrderingMode::TotalDegree,
            min_noise_variance: 1e-6,
        }
    }
}

/// GP regression model with log-parameterised hyperparameters.
///
/// `σ² = exp(log_noise_variance) + min_noise_variance`, `σ_f² = exp(log_signal_variance)`,
/// `ε_j² = exp(log_inv_lengthscale_sq[j])` (a single entry is shared by all coordinates).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LowRankGpModel {
    pub method: Method,
    pub rank: usize,
    pub input_dim: usize,
    pub log_inv_lengthscale_sq: Vec<f64>,
    pub log_signal_variance: f64,
    pub log_noise_variance: f64,
    pub min_noise_variance: f64,
    /// `D × d`.
    pub projection: Option<DMatrix<f64>>,
    pub measure_alpha: f64,
    pub ordering: OrderingMode,
    /// `(r/2) × d` standard normal draws behind the Fourier frequencies.
    pub spectral_normals: Option<DMatrix<f64>>,
    pub input_standardizer: Option<Standardizer>,
    pub output_standardizer: Option<Standardizer>,
}

/// Log marginal likelihood and its gradient in [`LowRankGpModel::params`] order.
#[derive(Debug, Clone)]
pub struct LmlGradient {
    pub value: f64,
    pub gradient: Vec<f64>,
}

struct Prepared {
    /// Inputs after the model's input standardizer.
    xs: DMatrix<f64>,
    /// `xs W` (or `xs`).
    u: DMatrix<f64>,
    /// Feature-space coordinates; `u` standardized by `z_stats` for projected Mercer models.
    z: DMatrix<f64>,
    z_stats: Option<Standardizer>,
}

impl LowRankGpModel {
    pub fn new(opts: &ModelOptions, input_dim: usize, seed: u64) -> Result<Self> {
        if input_dim == 0 {
            return Err(Error::invalid("input dimension must be at least 1"));
        }
        if opts.method != Method::Exact && opts.rank == 0 {
            return Err(Error::invalid("rank must be at least 1"));
        }
        if opts.method == Method::Fgp && !opts.rank.is_multiple_of(2) {
            return Err(Error::invalid(format!("Fourier features need an even rank, got {}", opts.rank)));
        }
        if let Some(d) = opts.projection_dim {
            if d == 0 || d > input_dim {
                return Err(Error::invalid(format!("projection dimension {d} must lie in 1..={input_dim}")));
            }
        }
        if !(opts.measure_alpha > 0.0) {
            return Err(Error::invalid("measure scale must be positive"));
        }
        if !(opts.min_noise_variance >= 0.0) {
            return Err(Error::invalid("noise floor must be non-negative"));
        }
        let feature_dim = opts.projection_dim.unwrap_or(input_dim);
        let mut model = LowRankGpModel {
            method: opts.method,
            rank: opts.rank,
            input_dim,
            log_inv_lengthscale_sq: vec![0.0; if opts.ard { feature_dim } else { 1 }],
            log_signal_variance: 0.0,
            log_noise_variance: 0.1f64.ln(),
            min_noise_variance: opts.min_noise_variance,
            projection: None,
            measure_alpha: opts.measure_alpha,
            ordering: opts.ordering,
            spectral_normals: None,
            input_standardizer: None,
            output_standardizer: None,
        };
        model.draw_random_parts(opts.projection_dim, seed);
        Ok(model)
    }

    /// Redraws the projection (orthonormal columns) and the Fourier base draws from `seed`.
    pub fn reseed(&mut self, seed: u64) {
        let d = self.projection.as_ref().map(|w| w.ncols());
        self.draw_random_parts(d, seed);
    }

    fn draw_random_parts(&mut self, projection_dim: Option<usize>, seed: u64) {
        if let Some(d) = projection_dim {
            let mut rng = stream_rng(seed, Stream::Init, 0);
            let g = DMatrix::from_fn(self.input_dim, d, |_, _| StandardNormal.sample(&mut rng));
            self.projection = Some(g.qr().q());
        }
        if self.method == Method::Fgp {
            let fd = self.feature_dim();
            let m = self.rank / 2;
            let mut rng = stream_rng(seed, Stream::Spectral, 0);
            let draws: Vec<f64> = (0..m * fd).map(|_| StandardNormal.sample(&mut rng)).collect();
            self.spectral_normals = Some(DMatrix::from_row_slice(m, fd, &draws));
        }
    }

    pub fn feature_dim(&self) -> usize {
        self.projection.as_ref().map_or(self.input_dim, |w| w.ncols())
    }

    pub fn noise_variance(&self) -> f64 {
        self.log_noise_variance.exp() + self.min_noise_variance
    }

    pub fn signal_variance(&self) -> f64 {
        self.log_signal_variance.exp()
    }

    /// `ε_j²` for every feature coordinate.
    pub fn inv_lengthscale_sq(&self) -> Vec<f64> {
        let d = self.feature_dim();
        (0..d).map(|j| self.log_inv_lengthscale_sq[self.eps_slot(j)].exp()).collect()
    }

    fn eps_slot(&self, j: usize) -> usize {
        if self.log_inv_lengthscale_sq.len() == 1 {
            0
        } else {
            j
        }
    }

    /// Sets `σ_f²`, `ε²` (one shared value or one per coordinate) and the total noise `σ²`.
    pub fn set_hyperparameters(&mut self, signal_variance: f64, inv_lengthscale_sq: &[f64], noise_variance: f64) -> Result<()> {
        if !(signal_variance > 0.0) || inv_lengthscale_sq.iter().any(|e| !(*e > 0.0)) {
            return Err(Error::invalid("hyperparameters must be positive"));
        }
        if inv_lengthscale_sq.len() != 1 && inv_lengthscale_sq.len() != self.feature_dim() {
            return Err(Error::DimensionMismatch {
                context: "inverse squared lengthscales",
                expected: self.feature_dim(),
                found: inv_lengthscale_sq.len(),
            });
        }
        if !(noise_variance > self.min_noise_variance) {
            return Err(Error::invalid(format!(
                "noise variance {noise_variance} must exceed the floor {}",
                self.min_noise_variance
            )));
        }
        self.log_signal_variance = signal_variance.ln();
        self.log_inv_lengthscale_sq = inv_lengthscale_sq.iter().map(|e| e.ln()).collect();
        self.log_noise_variance = (noise_variance - self.min_noise_variance).ln();
        Ok(())
    }

    /// Kernel on feature coordinates implied by the current hyperparameters.
    pub fn kernel(&self) -> KernelSpec {
        KernelSpec::GaussianArd {
            signal_variance: self.signal_variance(),
            inv_lengthscale_sq: self.inv_lengthscale_sq(),
        }
    }

    pub fn eigensystem(&self) -> Result<EigenSystem> {
        let bases = self
            .inv_lengthscale_sq()
            .into_iter()
            .map(|e| MercerBasis1D::new(self.measure_alpha, e))
            .collect::<Result<Vec<_>>>()?;
        Ok(EigenSystem::new(bases, self.signal_variance())?.with_ordering(self.ordering))
    }

    pub fn spectral_sample(&self) -> Result<SpectralSample> {
        let normals = self
            .spectral_normals
            .as_ref()
            .ok_or_else(|| Error::invalid("model has no spectral draws"))?;
        SpectralSample::from_standard_normals(&self.kernel(), normals.clone(), 0)
    }

    /// Trainable parameters: log `ε²` entries, log `σ_f²`, log noise, then `W` column-major.
    pub fn params(&self) -> Vec<f64> {
        let mut p = self.log_inv_lengthscale_sq.clone();
        p.push(self.log_signal_variance);
        p.push(self.log_noise_variance);
        if let Some(w) = &self.projection {
            p.extend(w.iter());
        }
        p
    }

    pub fn set_params(&mut self, p: &[f64]) -> Result<()> {
        let k = self.log_inv_lengthscale_sq.len();
        let expected = k + 2 + self.projection.as_ref().map_or(0, |w| w.len());
        if p.len() != expected {
            return Err(Error::DimensionMismatch {
                context: "parameter vector",
                expected,
                found: p.len(),
            });
        }
        self.log_inv_lengthscale_sq.copy_from_slice(&p[..k]);
        self.log_signal_variance = p[k];
        self.log_noise_variance = p[k + 1];
        if let Some(w) = &mut self.projection {
            w.as_mut_slice().copy_from_slice(&p[k + 2..]);
        }
        Ok(())
    }

    pub fn param_names(&self) -> Vec<String> {
        let mut names: Vec<String> = (0..self.log_inv_lengthscale_sq.len())
            .map(|j| format!("log_inv_lengthscale_sq[{j}]"))
            .collect();
        names.push("log_signal_variance".into());
        names.push("log_noise_variance".into());
        if let Some(w) = &self.projection {
            for c in 0..w.ncols() {
                for r in 0..w.nrows() {
                    names.push(format!("W[{r},{c}]"));
                }
            }
        }
        names
    }

    fn check_inputs(&self, x: &DMatrix<f64>) -> Result<()> {
        if x.ncols() != self.input_dim {
            return Err(Error::DimensionMismatch {
                context: "model inputs",
                expected: self.input_dim,
                found: x.ncols(),
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::data("inputs contain non-finite values"));
        }
        Ok(())
    }

    fn prepare(&self, x: &DMatrix<f64>, z_stats: Option<&Standardizer>) -> Result<Prepared> {
        self.check_inputs(x)?;
        let xs = match &self.input_standardizer {
            Some(s) => s.apply(x)?,
            None => x.clone(),
        };
        let u = match &self.projection {
            Some(w) => &xs * w,
            None => xs.clone(),
        };
        let (z, stats) = if self.method == Method::Mgp && self.projection.is_some() {
            let stats = z_stats.cloned().unwrap_or_else(|| Standardizer::fit(&u));
            (stats.apply(&u)?, Some(stats))
        } else {
            (u.clone(), None)
        };
        Ok(Prepared { xs, u, z, z_stats: stats })
    }

    fn standardized_targets(&self, y: &DVector<f64>, n: usize) -> Result<DVector<f64>> {
        if y.len() != n {
            return Err(Error::DimensionMismatch {
                context: "training responses",
                expected: n,
                found: y.len(),
            });
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::data("responses contain non-finite values"));
        }
        Ok(match &self.output_standardizer {
            Some(s) => s.apply_vector(y),
            None => y.clone(),
        })
    }

    fn features(&self, z: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        match self.method {
            Method::Mgp => {
                let sys = self.eigensystem()?;
                sys.feature_matrix(z, &sys.indices(self.rank))
            }
            Method::Fgp => rff_feature_matrix(z, &self.spectral_sample()?),
            Method::Exact => Err(Error::invalid("the exact GP has no finite feature map")),
        }
    }

    /// `Ξ` for the given training inputs (after the model's standardization and projection).
    pub fn feature_matrix(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let p = self.prepare(x, None)?;
        self.features(&p.z)
    }

    pub fn log_marginal_likelihood(&self, x: &DMatrix<f64>, y: &DVector<f64>) -> Result<f64> {
        let p = self.prepare(x, None)?;
        let y = self.standardized_targets(y, x.nrows())?;
        let n = y.len() as f64;
        let sigma_sq = self.noise_variance();
        let value = if self.method == Method::Exact {
            let k = kernel_matrix(&self.kernel(), &p.u, None)?;
            let chol = cholesky(add_diagonal(k, sigma_sq), "kernel matrix plus noise")?;
            let alpha = chol.solve(&y);
            -0.5 * y.dot(&alpha) - 0.5 * chol_logdet(&chol) - n * HALF_LOG_2PI
        } else {
            let xi = self.features(&p.z)?;
            let wf = WoodburyFactor::new(&xi, sigma_sq)?;
            let alpha = wf.solve_vec(&y)?;
            -0.5 * y.dot(&alpha) - 0.5 * wf.logdet() - n * HALF_LOG_2PI
        };
        if !value.is_finite() {
            return Err(Error::NonFinite("log marginal likelihood".into()));
        }
        Ok(value)
    }

    pub fn gradient_log_ml(&self, x: &DMatrix<f64>, y: &DVector<f64>) -> Result<LmlGradient> {
        let p = self.prepare(x, None)?;
        let y = self.standardized_targets(y, x.nrows())?;
        let n = y.len() as f64;
        let sigma_sq = self.noise_variance();
        let noise_jac = self.log_noise_variance.exp();
        let k = self.log_inv_lengthscale_sq.len();
        let mut grad = vec![0.0; self.params().len()];

        let (value, gu) = if self.method == Method::Exact {
            let kmat = kernel_matrix(&self.kernel(), &p.u, None)?;
            let chol = cholesky(add_diagonal(kmat.clone(), sigma_sq), "kernel matrix plus noise")?;
            let alpha = chol.solve(&y);
            let value = -0.5 * y.dot(&alpha) - 0.5 * chol_logdet(&chol) - n * HALF_LOG_2PI;
            let dl_dk = (&alpha * alpha.transpose() - chol.inverse()) * 0.5;
            grad[k] = dl_dk.component_mul(&kmat).sum();
            grad[k + 1] = dl_dk.trace() * noise_jac;
            let eps = self.inv_lengthscale_sq();
            let d = p.u.ncols();
            let mut gu = DMatrix::zeros(p.u.nrows(), d);
            for a in 0..p.u.nrows() {
                for b in 0..p.u.nrows() {
                    let w = dl_dk[(a, b)] * kmat[(a, b)];
                    if w == 0.0 {
                        continue;
                    }
                    for j in 0..d {
                        let diff = p.u[(a, j)] - p.u[(b, j)];
                        grad[self.eps_slot(j)] -= w * eps[j] * diff * diff;
                        gu[(a, j)] -= 4.0 * w * eps[j] * diff;
                    }
                }
            }
            (value, gu)
        } else {
            let xi = self.features(&p.z)?;
            let wf = WoodburyFactor::new(&xi, sigma_sq)?;
            let alpha = wf.solve_vec(&y)?;
            let value = -0.5 * y.dot(&alpha) - 0.5 * wf.logdet() - n * HALF_LOG_2PI;
            let g = &alpha * (alpha.transpose() * &xi) - wf.capacitance_solve(&xi.transpose()).transpose();
            grad[k] = 0.5 * g.component_mul(&xi).sum();
            grad[k + 1] = 0.5 * (alpha.norm_squared() - wf.trace_inverse()) * noise_jac;
            let gu = match self.method {
                Method::Mgp => {
                    let gz = self.mercer_backward(&p.z, &g, &xi, &mut grad)?;
                    match &p.z_stats {
                        Some(stats) => standardize_backward(&gz, &p.z, stats),
                        None => gz,
                    }
                }
                _ => self.fourier_backward(&p.u, &g, &xi, &mut grad)?,
            };
            (value, gu)
        };
        if !value.is_finite() {
            return Err(Error::NonFinite("log marginal likelihood".into()));
        }
        if self.projection.is_some() {
            let gw = p.xs.tr_mul(&gu);
            grad[k + 2..].copy_from_slice(gw.as_slice());
        }
        Ok(LmlGradient { value, gradient: grad })
    }

    /// Accumulates lengthscale gradients into `grad` and returns `∂L/∂z`.
    fn mercer_backward(
        &self,
        z: &DMatrix<f64>,
        g: &DMatrix<f64>,
        xi: &DMatrix<f64>,
        grad: &mut [f64],
    ) -> Result<DMatrix<f64>> {
        let sys = self.eigensystem()?;
        let idx = sys.indices(self.rank);
        let d = sys.dim();
        let n_max: Vec<usize> = (0..d).map(|j| idx.iter().map(|t| t.0[j]).max().unwrap_or(1)).collect();
        let sqrt_lambda: Vec<f64> = idx.iter().map(|t| sys.eigenvalue_unchecked(t.as_slice()).sqrt()).collect();
        let dlog_lambda: Vec<Vec<f64>> = idx
            .iter()
            .map(|t| (0..d).map(|j| sys.bases[j].dlog_eigenvalue_deps_sq(t.0[j])).collect())
            .collect();
        let mut d_eps = vec![0.0; d];
        let mut gz = DMatrix::zeros(z.nrows(), d);
        let mut prefix = vec![1.0; d + 1];
        let mut suffix = vec![1.0; d + 1];
        for i in 0..z.nrows() {
            let vals: Vec<_> = (0..d).map(|j| sys.bases[j].eval_with_derivatives(n_max[j], z[(i, j)])).collect();
            for (t, n) in idx.iter().enumerate() {
                let git = g[(i, t)];
                if git == 0.0 {
                    continue;
                }
                for j in 0..d {
                    prefix[j + 1] = prefix[j] * vals[j].values[n.0[j] - 1];
                }
                for j in (0..d).rev() {
                    suffix[j] = suffix[j + 1] * vals[j].values[n.0[j] - 1];
                }
                for j in 0..d {
                    let others = sqrt_lambda[t] * prefix[j] * suffix[j + 1];
                    let k_ = n.0[j] - 1;
                    d_eps[j] += git * (0.5 * dlog_lambda[t][j] * xi[(i, t)] + others * vals[j].d_deps_sq[k_]);
                    gz[(i, j)] += git * others * vals[j].d_dx[k_];
                }
            }
        }
        for (j, b) in sys.bases.iter().enumerate() {
            grad[self.eps_slot(j)] += d_eps[j] * b.epsilon_sq;
        }
        Ok(gz)
    }

    fn fourier_backward(
        &self,
        u: &DMatrix<f64>,
        g: &DMatrix<f64>,
        xi: &DMatrix<f64>,
        grad: &mut [f64],
    ) -> Result<DMatrix<f64>> {
        let s = self.spectral_sample()?;
        let m = s.num_frequencies();
        let ga = DMatrix::from_fn(u.nrows(), m, |i, t| -g[(i, t)] * xi[(i, m + t)] + g[(i, m + t)] * xi[(i, t)]);
        // a_it = η_tᵀu_i and ∂η_tj/∂log ε_j² = η_tj / 2.
        let m_eta = ga.tr_mul(u);
        for j in 0..s.dim() {
            let contrib: f64 = (0..m).map(|t| m_eta[(t, j)] * s.frequencies[(t, j)]).sum();
            grad[self.eps_slot(j)] += 0.5 * contrib;
        }
        Ok(ga * &s.frequencies)
    }

    pub fn predict(&self, x_train: &DMatrix<f64>, y_train: &DVector<f64>, x_test: &DMatrix<f64>) -> Result<PredictiveDistribution> {
        let train = self.prepare(x_train, None)?;
        let test = self.prepare(x_test, train.z_stats.as_ref())?;
        let y = self.standardized_targets(y_train, x_train.nrows())?;
        let sigma_sq = self.noise_variance();
        let (mean, cov) = if self.method == Method::Exact {
            let kern = self.kernel();
            let k = kernel_matrix(&kern, &train.u, None)?;
            let k_star = kernel_matrix(&kern, &test.u, Some(&train.u))?;
            let k_ss = kernel_matrix(&kern, &test.u, None)?;
            let chol = cholesky(add_diagonal(k, sigma_sq), "kernel matrix plus noise")?;
            let mean = &k_star * chol.solve(&y);
            let v = chol.solve(&k_star.transpose());
            let cov = add_diagonal(k_ss - &k_star * v, sigma_sq);
            (mean, cov)
        } else {
            let xi = self.features(&train.z)?;
            let xi_star = self.features(&test.z)?;
            let wf = WoodburyFactor::new(&xi, sigma_sq)?;
            let alpha = wf.solve_vec(&y)?;
            let mean = &xi_star * xi.tr_mul(&alpha);
            let cov = add_diagonal(&xi_star * wf.capacitance_solve(&xi_star.transpose()) * sigma_sq, sigma_sq);
            (mean, cov)
        };
        let cov = (&cov + cov.transpose()) * 0.5;
        Ok(match &self.output_standardizer {
            Some(s) => {
                let sc = s.scale[0];
                PredictiveDistribution {
                    mean: s.invert_vector(&mean),
                    covariance: cov * (sc * sc),
                }
            }
            None => PredictiveDistribution { mean, covariance: cov },
        })
    }
}

/// Backward pass of per-column standardization `z = (u - mean(u)) / std(u)`.
fn standardize_backward(gz: &DMatrix<f64>, z: &DMatrix<f64>, stats: &Standardizer) -> DMatrix<f64> {
    let n = z.nrows() as f64;
    let mut gu = gz.clone();
    for j in 0..z.ncols() {
        let mean_g = gz.column(j).sum() / n;
        let mean_gz = gz.column(j).dot(&z.column(j)) / n;
        for i in 0..z.nrows() {
            gu[(i, j)] = (gz[(i, j)] - mean_g - z[(i, j)] * mean_gz) / stats.scale[j];
        }
    }
    gu
}

pub fn log_marginal_likelihood(model: &LowRankGpModel, x: &DMatrix<f64>, y: &DVector<f64>) -> Result<f64> {
    model.log_marginal_likelihood(x, y)
}

pub fn gradient_log_ml(model: &LowRankGpModel, x: &DMatrix<f64>, y: &DVector<f64>) -> Result<LmlGradient> {
    model.gradient_log_ml(x, y)
}

pub fn predict(
    model: &LowRankGpModel,
    x_train: &DMatrix<f64>,
    y_train: &DVector<f64>,
    x_test: &DMatrix<f64>,
) -> Result<PredictiveDistribution> {
    model.predict(x_train, y_train, x_test)
}
