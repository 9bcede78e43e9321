use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::metrics::Standardizer;
use super::model::LowRankGpModel;
use crate::error::{Error, Result};

/// Adam in ascent form: `θ ← θ + lr · m̂ / (√v̂ + ε)`.
#[derive(Debug, Clone)]
pub struct Adam {
    pub step_size: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    pub fn new(n: usize, step_size: f64) -> Self {
        Adam {
            step_size,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }

    pub fn ascend(&mut self, params: &mut [f64], grad: &[f64]) {
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t);
        let c2 = 1.0 - self.beta2.powi(self.t);
        for i in 0..params.len() {
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * grad[i];
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * grad[i] * grad[i];
            params[i] += self.step_size * (self.m[i] / c1) / ((self.v[i] / c2).sqrt() + self.epsilon);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub epochs: usize,
    pub step_size: f64,
    /// Redraw the projection and Fourier base draws from this seed before training.
    pub seed: Option<u64>,
    /// Standardize inputs and responses with training statistics.
    pub standardize: bool,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            epochs: 300,
            step_size: 1e-2,
            seed: None,
            standardize: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct FitResult {
    pub model: LowRankGpModel,
    /// Objective before each update, then at the final parameters.
    pub trace: Vec<f64>,
    /// Noise variance before each update, then at the final parameters.
    pub noise_trace: Vec<f64>,
    /// Set when training stopped early because the objective left the finite range.
    pub stopped_early: bool,
}

/// Full-batch Adam ascent on the log marginal likelihood.
pub fn fit(model: &LowRankGpModel, x: &DMatrix<f64>, y: &DVector<f64>, opts: &FitOptions) -> Result<FitResult> {
    if opts.epochs == 0 {
        return Err(Error::invalid("epochs must be at least 1"));
    }
    let mut model = model.clone();
    if let Some(seed) = opts.seed {
        model.reseed(seed);
    }
    if opts.standardize {
        model.input_standardizer = Some(Standardizer::fit(x));
        model.output_standardizer = Some(Standardizer::fit_vector(y));
    } else {
        model.input_standardizer = None;
        model.output_standardizer = None;
    }
    let first = model.gradient_log_ml(x, y).map_err(|e| match e {
        Error::NonFinite(_) | Error::Factorization(_) => Error::NonFinite(format!(
            "objective is not finite at the initial parameters ({e}); check input scaling and the noise floor"
        )),
        other => other,
    })?;
    let mut params = model.params();
    let mut adam = Adam::new(params.len(), opts.step_size);
    let mut trace = Vec::with_capacity(opts.epochs + 1);
    let mut noise_trace = Vec::with_capacity(opts.epochs + 1);
    let mut current = first;
    let mut stopped_early = false;
    for _ in 0..opts.epochs {
        trace.push(current.value);
        noise_trace.push(model.noise_variance());
        let previous = params.clone();
        adam.ascend(&mut params, &current.gradient);
        model.set_params(&params)?;
        match model.gradient_log_ml(x, y) {
            Ok(g) if g.value.is_finite() && g.gradient.iter().all(|v| v.is_finite()) => current = g,
            _ => {
                model.set_params(&previous)?;
                stopped_early = true;
                break;
            }
        }
    }
    trace.push(current.value);
    noise_trace.push(model.noise_variance());
    Ok(FitResult {
        model,
        trace,
        noise_trace,
        stopped_early,
    })
}
