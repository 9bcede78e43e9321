use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::data::{KernelFamily, KL_INPUT_STD};
use crate::error::{Error, Result};
use crate::gp::Method;
use crate::mercer::OrderingMode;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    MinRank,
    KlCurve,
    Bench,
    SynthCurve,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::MinRank => "min_rank",
            Experiment::KlCurve => "kl_curve",
            Experiment::Bench => "bench",
            Experiment::SynthCurve => "synth_curve",
        }
    }
}

impl std::str::FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.replace('-', "_").as_str() {
            "min_rank" => Ok(Experiment::MinRank),
            "kl_curve" => Ok(Experiment::KlCurve),
            "bench" => Ok(Experiment::Bench),
            "synth_curve" => Ok(Experiment::SynthCurve),
            other => Err(Error::Usage(format!("unknown experiment '{other}'"))),
        }
    }
}

/// How the rank-`r` approximation `Σ = ΞΞᵀ` is built.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ApproxMethod {
    /// Closed-form Mercer truncation (Gaussian kernel).
    Mercer,
    /// Random Fourier features (Gaussian kernel); ranks are even.
    Fourier,
    /// Top eigenpairs of the data kernel matrix.
    MercerEmpirical,
    /// Full kernel; only meaningful for regression experiments.
    Exact,
}

impl ApproxMethod {
    pub fn name(self) -> &'static str {
        match self {
            ApproxMethod::Mercer => "mercer",
            ApproxMethod::Fourier => "fourier",
            ApproxMethod::MercerEmpirical => "mercer_empirical",
            ApproxMethod::Exact => "exact",
        }
    }

    /// Regression model backing this method.
    pub fn gp_method(self) -> Result<Method> {
        match self {
            ApproxMethod::Mercer => Ok(Method::Mgp),
            ApproxMethod::Fourier => Ok(Method::Fgp),
            ApproxMethod::Exact => Ok(Method::Exact),
            ApproxMethod::MercerEmpirical => Err(Error::Usage(
                "mercer_empirical has no regression model; use mercer, fourier or exact".into(),
            )),
        }
    }

    pub fn rank_step(self) -> usize {
        if self == ApproxMethod::Fourier {
            2
        } else {
            1
        }
    }
}

impl std::str::FromStr for ApproxMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "mercer" | "mgp" => Ok(ApproxMethod::Mercer),
            "fourier" | "fgp" | "rff" => Ok(ApproxMethod::Fourier),
            "mercer_empirical" | "empirical" => Ok(ApproxMethod::MercerEmpirical),
            "exact" | "exactgp" => Ok(ApproxMethod::Exact),
            other => Err(Error::Usage(format!("unknown method '{other}'"))),
        }
    }
}

/// Fully resolved settings of one harness run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub method: ApproxMethod,
    pub kernel: KernelFamily,
    /// Gaussian kernel `ε²`; the default `2π²` gives `exp(-2π²‖x - x'‖²)`.
    pub inv_lengthscale_sq: f64,
    pub signal_variance: f64,
    /// Matérn lengthscale `α`.
    pub matern_alpha: f64,
    /// Mercer measure scale; `None` matches the generated input distribution.
    pub measure_alpha: Option<f64>,
    pub ordering: OrderingMode,
    pub n: usize,
    pub dims: Vec<usize>,
    pub seed: u64,
    /// Number of consecutive seeds starting at `seed`.
    pub repeats: usize,
    /// KL budget per data point: the threshold is `eps · N`.
    pub eps: f64,
    pub sigma_sq: f64,
    pub ranks: Vec<usize>,
    /// Largest rank tried by the min-rank search; `None` means `N`.
    pub rmax: Option<usize>,
    /// Independent Fourier draws averaged per KL value.
    pub draws: usize,
    pub dataset: Option<PathBuf>,
    pub target_col: Option<String>,
    pub generator: String,
    pub noise_std: f64,
    pub splits: usize,
    pub test_fraction: f64,
    pub projection_dim: Option<usize>,
    pub ard: bool,
    pub epochs: usize,
    pub step_size: f64,
    pub out: Option<PathBuf>,
    pub record_time: bool,
    pub threads: Option<usize>,
}

impl ExperimentConfig {
    /// Desk-scale defaults for each experiment.
    pub fn for_experiment(experiment: Experiment) -> Self {
        let base = ExperimentConfig {
            experiment,
            method: ApproxMethod::Mercer,
            kernel: KernelFamily::Gaussian,
            inv_lengthscale_sq: 2.0 * std::f64::consts::PI.powi(2),
            signal_variance: 1.0,
            matern_alpha: 1.0,
            measure_alpha: None,
            ordering: OrderingMode::TotalDegree,
            n: 500,
            dims: vec![1],
            seed: 0,
            repeats: 1,
            eps: 1e-2,
            sigma_sq: 1.0,
            ranks: (1..=30).map(|k| 2 * k).collect(),
            rmax: None,
            draws: 1,
            dataset: None,
            target_col: None,
            generator: "synthetic".into(),
            noise_std: 0.1,
            splits: 5,
            test_fraction: 0.1,
            projection_dim: None,
            ard: false,
            epochs: 300,
            step_size: 1e-2,
            out: None,
            record_time: false,
            threads: None,
        };
        match experiment {
            Experiment::MinRank => ExperimentConfig {
                dims: vec![1, 2, 3],
                ..base
            },
            Experiment::KlCurve => base,
            Experiment::Bench => ExperimentConfig {
                n: 2000,
                dims: vec![8],
                ranks: vec![6, 10, 50],
                ..base
            },
            Experiment::SynthCurve => ExperimentConfig {
                n: 25,
                ranks: vec![34],
                epochs: 1000,
                step_size: 5e-2,
                ..base
            },
        }
    }

    pub fn seeds(&self) -> Vec<u64> {
        (0..self.repeats as u64).map(|k| self.seed + k).collect()
    }

    pub fn rmax(&self) -> usize {
        self.rmax.unwrap_or(self.n)
    }

    /// Mercer measure scale: explicit, or `1/(√2·s)` for inputs of standard deviation `s`.
    pub fn resolved_measure_alpha(&self) -> f64 {
        self.measure_alpha
            .unwrap_or(std::f64::consts::FRAC_1_SQRT_2 / KL_INPUT_STD)
    }

    pub fn validate(&self) -> Result<()> {
        let usage = |m: String| Err(Error::Usage(m));
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return usage(format!("eps must be positive, got {}", self.eps));
        }
        if !(self.sigma_sq > 0.0 && self.sigma_sq.is_finite()) {
            return usage(format!("sigma_sq must be positive, got {}", self.sigma_sq));
        }
        for (name, v) in [
            ("inv_lengthscale_sq", self.inv_lengthscale_sq),
            ("signal_variance", self.signal_variance),
            ("matern_alpha", self.matern_alpha),
            ("step_size", self.step_size),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return usage(format!("{name} must be positive, got {v}"));
            }
        }
        if let Some(a) = self.measure_alpha {
            if !(a > 0.0 && a.is_finite()) {
                return usage(format!("measure_alpha must be positive, got {a}"));
            }
        }
        if !(self.noise_std >= 0.0 && self.noise_std.is_finite()) {
            return usage(format!("noise_std must be non-negative, got {}", self.noise_std));
        }
        if self.n == 0 {
            return usage("n must be at least 1".into());
        }
        if self.dims.is_empty() || self.dims.contains(&0) {
            return usage("dims must be a non-empty list of positive integers".into());
        }
        if self.repeats == 0 || self.draws == 0 || self.splits == 0 || self.epochs == 0 {
            return usage("repeats, draws, splits and epochs must be at least 1".into());
        }
        if self.ranks.is_empty() || self.ranks.contains(&0) {
            return usage("ranks must be a non-empty list of positive integers".into());
        }
        if self.ranks.windows(2).any(|w| w[0] >= w[1]) {
            return usage("ranks must be strictly ascending".into());
        }
        if self.rmax == Some(0) {
            return usage("rmax must be at least 1".into());
        }
        if self.threads == Some(0) {
            return usage("threads must be at least 1".into());
        }
        Ok(())
    }

    /// Applies one `key = value` setting; keys are the field names, with `-` or `_`.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.trim().replace('-', "_");
        let v = value.trim();
        match key.as_str() {
            "experiment" => self.experiment = v.parse()?,
            "method" => self.method = v.parse()?,
            "kernel" => self.kernel = v.parse()?,
            "inv_lengthscale_sq" => self.inv_lengthscale_sq = num(&key, v)?,
            "signal_variance" => self.signal_variance = num(&key, v)?,
            "matern_alpha" => self.matern_alpha = num(&key, v)?,
            "measure_alpha" => self.measure_alpha = Some(num(&key, v)?),
            "ordering" => {
                self.ordering = match v {
                    "total_degree" | "total-degree" => OrderingMode::TotalDegree,
                    "eigenvalue" => OrderingMode::Eigenvalue,
                    other => return Err(Error::Usage(format!("unknown ordering '{other}'"))),
                }
            }
            "n" => self.n = num(&key, v)?,
            "d" | "dim" | "dims" => self.dims = list(&key, v)?,
            "seed" => self.seed = num(&key, v)?,
            "repeats" => self.repeats = num(&key, v)?,
            "eps" => self.eps = num(&key, v)?,
            "sigma_sq" => self.sigma_sq = num(&key, v)?,
            "ranks" => self.ranks = parse_ranks(v)?,
            "rmax" => self.rmax = Some(num(&key, v)?),
            "draws" => self.draws = num(&key, v)?,
            "dataset" => self.dataset = Some(PathBuf::from(v)),
            "target_col" => self.target_col = Some(v.to_string()),
            "generator" => self.generator = v.to_string(),
            "noise_std" => self.noise_std = num(&key, v)?,
            "splits" => self.splits = num(&key, v)?,
            "test_fraction" => self.test_fraction = num(&key, v)?,
            "projection_dim" => self.projection_dim = Some(num(&key, v)?),
            "ard" => self.ard = boolean(&key, v)?,
            "epochs" => self.epochs = num(&key, v)?,
            "step_size" | "lr" => self.step_size = num(&key, v)?,
            "out" => self.out = Some(PathBuf::from(v)),
            "record_time" => self.record_time = boolean(&key, v)?,
            "threads" => self.threads = Some(num(&key, v)?),
            other => return Err(Error::Usage(format!("unknown configuration key '{other}'"))),
        }
        Ok(())
    }

    /// Applies a `key = value` file; blank lines and `#` comments are skipped.
    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Usage(format!("cannot read config {}: {e}", path.display())))?;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Usage(format!("{}:{}: expected key = value", path.display(), i + 1)))?;
            self.set(k, v)
                .map_err(|e| Error::Usage(format!("{}:{}: {e}", path.display(), i + 1)))?;
        }
        Ok(())
    }
}

fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| Error::Usage(format!("invalid value '{v}' for {key}")))
}

fn boolean(key: &str, v: &str) -> Result<bool> {
    match v.to_ascii_lowercase().as_str() {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(Error::Usage(format!("invalid value '{v}' for {key}"))),
    }
}

fn list<T: std::str::FromStr>(key: &str, v: &str) -> Result<Vec<T>> {
    v.split(',').map(|s| num(key, s.trim())).collect()
}

/// Rank grid from `a,b,c` or an inclusive range `start:end[:step]`.
pub fn parse_ranks(v: &str) -> Result<Vec<usize>> {
    if v.contains(':') {
        let parts: Vec<usize> = v.split(':').map(|s| num("ranks", s.trim())).collect::<Result<_>>()?;
        let (start, end, step) = match parts.as_slice() {
            [a, b] => (*a, *b, 1),
            [a, b, s] => (*a, *b, *s),
            _ => return Err(Error::Usage(format!("invalid rank range '{v}'"))),
        };
        if step == 0 || start > end {
            return Err(Error::Usage(format!("invalid rank range '{v}'")));
        }
        Ok((start..=end).step_by(step).collect())
    } else {
        list("ranks", v)
    }
}
