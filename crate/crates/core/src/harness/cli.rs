//! Command-line front end. [`run`] maps every failure to an exit code:
//! 0 success, 1 usage, 2 data, 3 numerical.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::config::{Experiment, ExperimentConfig};
use super::data::{load_csv, Dataset};
use super::experiments::{fit_options, model_options, run_experiment, synth_curve};
use super::output::{sibling_path, write_curves, write_outputs, write_rows};
use crate::error::{Error, Result};
use crate::gp::{fit, nlpd, rmse, LowRankGpModel};

#[derive(Debug, Parser)]
#[command(name = "lowrank-gp", version, about = "Low-rank GP approximations: KL experiments, benchmarks and regression")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Results file; a manifest is written next to it as `<out>.manifest.json`.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// `key = value` file; flags given on the command line take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Record wall-clock times instead of writing zeros.
    #[arg(long, global = true)]
    pub record_time: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Smallest rank with KL at most eps·N, per dimension and seed.
    MinRank(ExperimentArgs),
    /// Exact KL over a rank grid.
    KlCurve(ExperimentArgs),
    /// Train/test benchmark of a regression model on a CSV or synthetic dataset.
    Bench(ExperimentArgs),
    /// Exact, Mercer and Fourier fits to a one-dimensional test function.
    SynthCurve(ExperimentArgs),
    /// Fit a regression model to a CSV and save it as JSON.
    Fit(ExperimentArgs),
    /// Predict test rows from a saved model and its training CSV.
    Predict(PredictArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct ExperimentArgs {
    /// mercer, fourier, mercer_empirical or exact.
    #[arg(long)]
    pub method: Option<String>,
    /// gaussian, matern12, matern32 or matern52.
    #[arg(long)]
    pub kernel: Option<String>,
    #[arg(long)]
    pub inv_lengthscale_sq: Option<String>,
    #[arg(long)]
    pub signal_variance: Option<String>,
    #[arg(long)]
    pub matern_alpha: Option<String>,
    #[arg(long)]
    pub measure_alpha: Option<String>,
    /// total_degree or eigenvalue.
    #[arg(long)]
    pub ordering: Option<String>,
    #[arg(short = 'n', long)]
    pub n: Option<String>,
    /// Comma-separated input dimensions.
    #[arg(short = 'd', long, alias = "dim")]
    pub dims: Option<String>,
    #[arg(long)]
    pub repeats: Option<String>,
    #[arg(long)]
    pub eps: Option<String>,
    #[arg(long)]
    pub sigma_sq: Option<String>,
    /// Comma list or inclusive range `start:end[:step]`.
    #[arg(long)]
    pub ranks: Option<String>,
    /// Single model rank (fit); same as a one-element `--ranks`.
    #[arg(long)]
    pub rank: Option<String>,
    #[arg(long)]
    pub rmax: Option<String>,
    #[arg(long)]
    pub draws: Option<String>,
    #[arg(long)]
    pub dataset: Option<String>,
    /// Target column name; defaults to the last column.
    #[arg(long)]
    pub target_col: Option<String>,
    #[arg(long)]
    pub generator: Option<String>,
    #[arg(long)]
    pub noise_std: Option<String>,
    #[arg(long)]
    pub splits: Option<String>,
    #[arg(long)]
    pub test_fraction: Option<String>,
    #[arg(long)]
    pub projection_dim: Option<String>,
    #[arg(long)]
    pub ard: bool,
    #[arg(long)]
    pub epochs: Option<String>,
    #[arg(long, alias = "lr")]
    pub step_size: Option<String>,
}

impl ExperimentArgs {
    fn pairs(&self) -> Vec<(&'static str, String)> {
        let mut out = Vec::new();
        let fields: [(&'static str, &Option<String>); 25] = [
            ("method", &self.method),
            ("kernel", &self.kernel),
            ("inv_lengthscale_sq", &self.inv_lengthscale_sq),
            ("signal_variance", &self.signal_variance),
            ("matern_alpha", &self.matern_alpha),
            ("measure_alpha", &self.measure_alpha),
            ("ordering", &self.ordering),
            ("n", &self.n),
            ("dims", &self.dims),
            ("repeats", &self.repeats),
            ("eps", &self.eps),
            ("sigma_sq", &self.sigma_sq),
            ("ranks", &self.ranks),
            ("ranks", &self.rank),
            ("rmax", &self.rmax),
            ("draws", &self.draws),
            ("dataset", &self.dataset),
            ("target_col", &self.target_col),
            ("generator", &self.generator),
            ("noise_std", &self.noise_std),
            ("splits", &self.splits),
            ("test_fraction", &self.test_fraction),
            ("projection_dim", &self.projection_dim),
            ("epochs", &self.epochs),
            ("step_size", &self.step_size),
        ];
        for (k, v) in fields {
            if let Some(v) = v {
                out.push((k, v.clone()));
            }
        }
        if self.ard {
            out.push(("ard", "true".into()));
        }
        out
    }
}

#[derive(Debug, Clone, Args)]
pub struct PredictArgs {
    /// Model JSON written by `fit`.
    #[arg(long)]
    pub model: PathBuf,
    /// Training CSV; defaults to the dataset recorded in the model file.
    #[arg(long)]
    pub train: Option<PathBuf>,
    #[arg(long)]
    pub test: PathBuf,
    #[arg(long)]
    pub target_col: Option<String>,
}

/// Model file written by `fit`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SavedModel {
    pub model: LowRankGpModel,
    pub dataset: Option<PathBuf>,
    pub target_col: String,
    pub feature_names: Vec<String>,
    pub trace: Vec<f64>,
    pub stopped_early: bool,
}

/// Defaults for the experiment, then the config file, then command-line flags.
pub fn resolve_config(cli: &Cli, experiment: Experiment, args: &ExperimentArgs) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::for_experiment(experiment);
    if let Some(path) = &cli.config {
        cfg.apply_file(path)?;
        cfg.experiment = experiment;
    }
    for (k, v) in args.pairs() {
        cfg.set(k, &v)?;
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(o) = &cli.out {
        cfg.out = Some(o.clone());
    }
    if let Some(t) = cli.threads {
        cfg.threads = Some(t);
    }
    if cli.record_time {
        cfg.record_time = true;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    match threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| Error::Usage(format!("cannot start {t} threads: {e}")))?
            .install(f),
        None => f(),
    }
}

fn command_name(cmd: &Command) -> &'static str {
    match cmd {
        Command::MinRank(_) => "min-rank",
        Command::KlCurve(_) => "kl-curve",
        Command::Bench(_) => "bench",
        Command::SynthCurve(_) => "synth-curve",
        Command::Fit(_) => "fit",
        Command::Predict(_) => "predict",
    }
}

/// Runs a parsed command.
pub fn execute(cli: &Cli) -> Result<()> {
    let name = command_name(&cli.command);
    let (experiment, args) = match &cli.command {
        Command::MinRank(a) => (Experiment::MinRank, a),
        Command::KlCurve(a) => (Experiment::KlCurve, a),
        Command::Bench(a) => (Experiment::Bench, a),
        Command::SynthCurve(a) => (Experiment::SynthCurve, a),
        Command::Fit(a) => return run_fit(cli, a),
        Command::Predict(a) => return run_predict(cli, a),
    };
    let cfg = resolve_config(cli, experiment, args)?;
    with_threads(cfg.threads, || {
        if experiment == Experiment::SynthCurve {
            let out = synth_curve(&cfg)?;
            match &cfg.out {
                Some(path) => {
                    let curves = sibling_path(path, ".curves.csv");
                    write_outputs(path, name, &cfg, &out.rows, std::slice::from_ref(&curves))?;
                    write_curves(std::fs::File::create(&curves)?, &out.curves)?;
                }
                None => write_rows(std::io::stdout().lock(), &out.rows)?,
            }
            return Ok(());
        }
        let rows = run_experiment(&cfg)?;
        match &cfg.out {
            Some(path) => {
                write_outputs(path, name, &cfg, &rows, &[])?;
            }
            None => write_rows(std::io::stdout().lock(), &rows)?,
        }
        Ok(())
    })
}

fn run_fit(cli: &Cli, args: &ExperimentArgs) -> Result<()> {
    let mut cfg = resolve_config(cli, Experiment::Bench, args)?;
    if args.ranks.is_none() && args.rank.is_none() {
        cfg.ranks = vec![20];
    }
    let path = cfg
        .dataset
        .clone()
        .ok_or_else(|| Error::Usage("fit needs --dataset <csv>".into()))?;
    let data = load_csv(&path, cfg.target_col.as_deref())?;
    let rank = if cfg.method.gp_method()? == crate::gp::Method::Exact {
        data.y.len()
    } else {
        cfg.ranks[0]
    };
    let model = LowRankGpModel::new(&model_options(&cfg, rank)?, data.x.ncols(), cfg.seed)?;
    let result = with_threads(cfg.threads, || fit(&model, &data.x, &data.y, &fit_options(&cfg)))?;
    let saved = SavedModel {
        model: result.model,
        dataset: Some(path),
        target_col: data.target_name.clone(),
        feature_names: data.feature_names.clone(),
        trace: result.trace,
        stopped_early: result.stopped_early,
    };
    let text = serde_json::to_string_pretty(&saved)? + "\n";
    match &cfg.out {
        Some(p) => std::fs::write(p, text)?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn load_with_target(path: &Path, target: &str, names: &[String]) -> Result<Dataset> {
    let d = load_csv(path, Some(target))?;
    if d.feature_names != names {
        return Err(Error::Data {
            message: format!("feature columns {:?} differ from the training columns {:?}", d.feature_names, names),
            line: Some(1),
            column: None,
        });
    }
    Ok(d)
}

fn run_predict(cli: &Cli, args: &PredictArgs) -> Result<()> {
    let text = std::fs::read_to_string(&args.model).map_err(|e| Error::Data {
        message: format!("cannot read model {}: {e}", args.model.display()),
        line: None,
        column: None,
    })?;
    let saved: SavedModel = serde_json::from_str(&text)?;
    let train_path = args
        .train
        .clone()
        .or_else(|| saved.dataset.clone())
        .ok_or_else(|| Error::Usage("predict needs --train <csv>".into()))?;
    let target = args.target_col.clone().unwrap_or_else(|| saved.target_col.clone());
    let train = load_with_target(&train_path, &target, &saved.feature_names)?;
    let test_file = std::fs::read_to_string(&args.test)?;
    let header: Vec<&str> = test_file.lines().next().unwrap_or("").split(',').map(str::trim).collect();
    let (x_test, y_test) = if header.contains(&target.as_str()) {
        let d = load_with_target(&args.test, &target, &saved.feature_names)?;
        (d.x, Some(d.y))
    } else {
        let mut names = saved.feature_names.clone();
        let last = names.pop().unwrap_or_default();
        let d = load_csv(&args.test, Some(&last))?;
        if d.feature_names != names {
            return Err(Error::data("test columns differ from the training features"));
        }
        let cols = d.x.ncols();
        let mut x = d.x.insert_column(cols, 0.0);
        x.set_column(x.ncols() - 1, &d.y);
        (x, None)
    };
    let pred = with_threads(cli.threads, || saved.model.predict(&train.x, &train.y, &x_test))?;
    let mut rows = Vec::with_capacity(x_test.nrows());
    for i in 0..x_test.nrows() {
        let v = pred.covariance[(i, i)];
        let sd = v.max(0.0).sqrt();
        rows.push(PredictionRow {
            index: i,
            mean: pred.mean[i],
            variance: v,
            lower: pred.mean[i] - 1.96 * sd,
            upper: pred.mean[i] + 1.96 * sd,
        });
    }
    let write = |w: &mut dyn Write| -> Result<()> {
        let mut c = csv::Writer::from_writer(w);
        for r in &rows {
            c.serialize(r).map_err(|e| Error::Io(e.into()))?;
        }
        c.flush()?;
        Ok(())
    };
    match &cli.out {
        Some(p) => write(&mut std::fs::File::create(p)?)?,
        None => write(&mut std::io::stdout().lock())?,
    }
    if let Some(y) = y_test {
        let y: DVector<f64> = y;
        eprintln!("nlpd {} rmse {}", nlpd(&pred, &y)?, rmse(&pred.mean, &y)?);
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct PredictionRow {
    index: usize,
    mean: f64,
    variance: f64,
    lower: f64,
    upper: f64,
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
