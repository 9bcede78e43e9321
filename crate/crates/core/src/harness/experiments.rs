use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ApproxMethod, Experiment, ExperimentConfig};
use super::data::{load_csv, select_entries, select_rows, synthetic_regression, train_test_split, Dataset};
use super::kl::{min_rank_search, KlProblem};
use super::ResultRow;
use crate::error::{Error, Result};
use crate::gp::{fit, nlpd, rmse, FitOptions, LowRankGpModel, Method, ModelOptions, Standardizer};
use crate::rng::{stream_rng, Stream};

fn elapsed_ms(cfg: &ExperimentConfig, start: Instant) -> f64 {
    if cfg.record_time {
        start.elapsed().as_secs_f64() * 1e3
    } else {
        0.0
    }
}

fn cells(cfg: &ExperimentConfig) -> Vec<(u64, usize)> {
    cfg.seeds()
        .into_iter()
        .flat_map(|s| cfg.dims.iter().map(move |&d| (s, d)))
        .collect()
}

fn sort_rows(rows: &mut [ResultRow]) {
    rows.sort_by_key(|a| (a.seed, a.dim, a.r));
}

fn experiment_id(cfg: &ExperimentConfig) -> String {
    format!("{}:{}:{}", cfg.experiment.name(), cfg.method.name(), kernel_name(cfg))
}

fn kernel_name(cfg: &ExperimentConfig) -> &'static str {
    use super::data::KernelFamily::*;
    match cfg.kernel {
        Gaussian => "gaussian",
        Matern12 => "matern12",
        Matern32 => "matern32",
        Matern52 => "matern52",
    }
}

/// One row per `(seed, D)` holding the smallest rank with `KL ≤ eps · N`.
pub fn run_min_rank(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    cfg.validate()?;
    let id = experiment_id(cfg);
    let mut rows = cells(cfg)
        .into_par_iter()
        .map(|(seed, dim)| {
            let start = Instant::now();
            let found = min_rank_search(cfg, dim, seed)?;
            Ok(ResultRow {
                experiment: id.clone(),
                seed,
                dim,
                r: found.rank,
                value: found.rank as f64,
                wall_time_ms: elapsed_ms(cfg, start),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    sort_rows(&mut rows);
    Ok(rows)
}

/// Exact KL at every rank of the grid, one row per `(seed, D, r)`.
pub fn kl_curve(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    cfg.validate()?;
    if cfg.method == ApproxMethod::Fourier {
        if let Some(r) = cfg.ranks.iter().find(|r| *r % 2 != 0) {
            return Err(Error::Usage(format!("Fourier ranks must be even, got {r}")));
        }
    }
    let id = experiment_id(cfg);
    let per_cell = cells(cfg)
        .into_par_iter()
        .map(|(seed, dim)| {
            let problem = KlProblem::new(cfg, dim, seed)?;
            let mut out = Vec::with_capacity(cfg.ranks.len());
            for &r in &cfg.ranks {
                if r > problem.max_rank() {
                    return Err(Error::Usage(format!("rank {r} exceeds the largest available rank {}", problem.max_rank())));
                }
                let start = Instant::now();
                let value = problem.kl_at(r)?;
                out.push(ResultRow {
                    experiment: id.clone(),
                    seed,
                    dim,
                    r,
                    value,
                    wall_time_ms: elapsed_ms(cfg, start),
                });
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut rows: Vec<ResultRow> = per_cell.into_iter().flatten().collect();
    sort_rows(&mut rows);
    Ok(rows)
}

/// Dataset named by the config: a CSV file, or the built-in synthetic generator.
pub fn load_dataset(cfg: &ExperimentConfig) -> Result<Dataset> {
    if let Some(path) = &cfg.dataset {
        return load_csv(path, cfg.target_col.as_deref());
    }
    match cfg.generator.as_str() {
        "synthetic" => {
            let dim = cfg.dims[0];
            let (x, y) = synthetic_regression(cfg.n, dim, cfg.noise_std, cfg.seed);
            Ok(Dataset {
                x,
                y,
                feature_names: (0..dim).map(|j| format!("x{j}")).collect(),
                target_name: "y".into(),
            })
        }
        other => Err(Error::Usage(format!("unknown generator '{other}'"))),
    }
}

/// Test metrics of one fitted model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitScore {
    pub nlpd: f64,
    pub rmse: f64,
}

pub fn model_options(cfg: &ExperimentConfig, rank: usize) -> Result<ModelOptions> {
    Ok(ModelOptions {
        method: cfg.method.gp_method()?,
        rank,
        projection_dim: cfg.projection_dim,
        ard: cfg.ard,
        ordering: cfg.ordering,
        ..ModelOptions::default()
    })
}

pub fn fit_options(cfg: &ExperimentConfig) -> FitOptions {
    FitOptions {
        epochs: cfg.epochs,
        step_size: cfg.step_size,
        seed: None,
        standardize: true,
    }
}

/// Fits on one train/test split and scores the held-out part.
pub fn score_split(cfg: &ExperimentConfig, data: &Dataset, rank: usize, split: u32) -> Result<SplitScore> {
    let (train, test) = train_test_split(data.y.len(), cfg.test_fraction, cfg.seed, split)?;
    let (xtr, ytr) = (select_rows(&data.x, &train), select_entries(&data.y, &train));
    let (xte, yte) = (select_rows(&data.x, &test), select_entries(&data.y, &test));
    let model = LowRankGpModel::new(&model_options(cfg, rank)?, data.x.ncols(), cfg.seed)?;
    let fitted = fit(&model, &xtr, &ytr, &fit_options(cfg))?.model;
    let pred = fitted.predict(&xtr, &ytr, &xte)?;
    Ok(SplitScore {
        nlpd: nlpd(&pred, &yte)?,
        rmse: rmse(&pred.mean, &yte)?,
    })
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = if v.len() > 1 {
        v.iter().map(|a| (a - m).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (m, var.sqrt())
}

/// Per-split NLPD and RMSE for every rank of the grid, then their mean and standard deviation.
pub fn run_benchmark(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    cfg.validate()?;
    let data = load_dataset(cfg)?;
    let ranks: Vec<usize> = if cfg.method == ApproxMethod::Exact {
        vec![data.y.len()]
    } else {
        cfg.ranks.clone()
    };
    let dim = data.x.ncols();
    let method = cfg.method.name();
    let jobs: Vec<(usize, u32)> = ranks
        .iter()
        .flat_map(|&r| (0..cfg.splits as u32).map(move |s| (r, s)))
        .collect();
    let scores = jobs
        .par_iter()
        .map(|&(r, s)| {
            let start = Instant::now();
            score_split(cfg, &data, r, s).map(|score| (r, s, score, elapsed_ms(cfg, start)))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::new();
    for &r in &ranks {
        let mine: Vec<_> = scores.iter().filter(|x| x.0 == r).collect();
        for metric in ["nlpd", "rmse"] {
            let pick = |sc: &SplitScore| if metric == "nlpd" { sc.nlpd } else { sc.rmse };
            for (_, s, sc, t) in &mine {
                rows.push(ResultRow {
                    experiment: format!("bench:{method}:split{s}:{metric}"),
                    seed: cfg.seed,
                    dim,
                    r,
                    value: pick(sc),
                    wall_time_ms: *t,
                });
            }
            let vals: Vec<f64> = mine.iter().map(|x| pick(&x.2)).collect();
            let (m, sd) = mean_std(&vals);
            for (stat, v) in [("mean", m), ("std", sd)] {
                rows.push(ResultRow {
                    experiment: format!("bench:{method}:{stat}:{metric}"),
                    seed: cfg.seed,
                    dim,
                    r,
                    value: v,
                    wall_time_ms: 0.0,
                });
            }
        }
    }
    sort_rows(&mut rows);
    Ok(rows)
}

/// `½(3 sin 2x + cos 10x + x/4)`.
pub fn synth_function(x: f64) -> f64 {
    0.5 * (3.0 * (2.0 * x).sin() + (10.0 * x).cos() + x / 4.0)
}

pub const SYNTH_GRID: (f64, f64, usize) = (-2.5, 2.5, 201);

/// Posterior summary of one method at one grid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub method: String,
    pub x: f64,
    pub f: f64,
    pub mean: f64,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthCurveOutput {
    pub rows: Vec<ResultRow>,
    pub curves: Vec<CurvePoint>,
    pub x_train: DVector<f64>,
    pub y_train: DVector<f64>,
}

/// Starting point with the highest log marginal likelihood over a grid of
/// lengthscales and noise levels, evaluated on standardized data.
pub fn best_start(model: LowRankGpModel, x: &DMatrix<f64>, y: &DVector<f64>) -> Result<LowRankGpModel> {
    let mut probe = model.clone();
    probe.input_standardizer = Some(Standardizer::fit(x));
    probe.output_standardizer = Some(Standardizer::fit_vector(y));
    let mut best = (f64::NEG_INFINITY, model.clone());
    for log_eps_sq in [-1.0, 0.0, 1.0, 2.0, 3.0, 4.0] {
        for log_noise in [-2.0, -5.0, -8.0] {
            probe.log_inv_lengthscale_sq.iter_mut().for_each(|v| *v = log_eps_sq);
            probe.log_noise_variance = log_noise;
            if let Ok(v) = probe.log_marginal_likelihood(x, y) {
                if v > best.0 {
                    let mut m = model.clone();
                    m.log_inv_lengthscale_sq = probe.log_inv_lengthscale_sq.clone();
                    m.log_noise_variance = log_noise;
                    best = (v, m);
                }
            }
        }
    }
    Ok(best.1)
}

/// Fits exact, Mercer (rank `r`) and Fourier (rank `2r`) GPs to noiseless samples of
/// [`synth_function`] and evaluates them on a grid.
pub fn synth_curve(cfg: &ExperimentConfig) -> Result<SynthCurveOutput> {
    cfg.validate()?;
    let mut rng = stream_rng(cfg.seed, Stream::Data, 0);
    let x_train = DVector::from_fn(cfg.n, |_, _| Distribution::<f64>::sample(&StandardNormal, &mut rng));
    let y_train = x_train.map(synth_function);
    let xm = DMatrix::from_column_slice(cfg.n, 1, x_train.as_slice());
    let (lo, hi, g) = SYNTH_GRID;
    let grid = DVector::from_fn(g, |i, _| lo + (hi - lo) * i as f64 / (g - 1) as f64);
    let gm = DMatrix::from_column_slice(g, 1, grid.as_slice());
    let f_grid = grid.map(synth_function);
    let r = cfg.ranks[0];
    let runs = [(Method::Exact, "exact", cfg.n), (Method::Mgp, "mercer", r), (Method::Fgp, "fourier", 2 * r)];
    let results = runs
        .par_iter()
        .map(|&(method, name, rank)| {
            let start = Instant::now();
            let opts = ModelOptions {
                method,
                rank,
                ..ModelOptions::default()
            };
            let model = best_start(LowRankGpModel::new(&opts, 1, cfg.seed)?, &xm, &y_train)?;
            let fitted = fit(&model, &xm, &y_train, &fit_options(cfg))?.model;
            let pred = fitted.predict(&xm, &y_train, &gm)?;
            let train_pred = fitted.predict(&xm, &y_train, &xm)?;
            let t = elapsed_ms(cfg, start);
            let sd = pred.variances().map(|v| v.max(0.0).sqrt());
            let curve: Vec<CurvePoint> = (0..g)
                .map(|i| CurvePoint {
                    method: name.into(),
                    x: grid[i],
                    f: f_grid[i],
                    mean: pred.mean[i],
                    lower: pred.mean[i] - 1.96 * sd[i],
                    upper: pred.mean[i] + 1.96 * sd[i],
                })
                .collect();
            let row = |metric: &str, value: f64| ResultRow {
                experiment: format!("synth_curve:{name}:{metric}"),
                seed: cfg.seed,
                dim: 1,
                r: rank,
                value,
                wall_time_ms: t,
            };
            let rows = vec![
                row("grid_rmse", rmse(&pred.mean, &f_grid)?),
                row("train_rmse", rmse(&train_pred.mean, &y_train)?),
                row("noise_variance", fitted.noise_variance() * fitted.output_standardizer.as_ref().map_or(1.0, |s| s.scale[0].powi(2))),
            ];
            Ok((rows, curve))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::new();
    let mut curves = Vec::new();
    for (r, c) in results {
        rows.extend(r);
        curves.extend(c);
    }
    Ok(SynthCurveOutput {
        rows,
        curves,
        x_train,
        y_train,
    })
}

/// Runs the experiment named in the config.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    match cfg.experiment {
        Experiment::MinRank => run_min_rank(cfg),
        Experiment::KlCurve => kl_curve(cfg),
        Experiment::Bench => run_benchmark(cfg),
        Experiment::SynthCurve => Ok(synth_curve(cfg)?.rows),
    }
}
