//! Experiment pipelines, dataset ingestion and result files behind the command-line tool.
//!
//! Every experiment is a pure function of an [`ExperimentConfig`]: data, spectral
//! draws and split shuffles come from separate named streams of the configured
//! seed, and rows are sorted before writing, so repeated runs produce identical
//! files regardless of thread count.

pub mod cli;
mod config;
mod data;
mod experiments;
mod kl;
mod output;

use serde::{Deserialize, Serialize};

pub use config::{parse_ranks, ApproxMethod, Experiment, ExperimentConfig};
pub use data::{
    generate_fig1_data, load_csv, read_csv, select_entries, select_rows, synthetic_regression, synthetic_target,
    train_test_split, Dataset, KernelFamily, KL_INPUT_STD,
};
pub use experiments::{
    fit_options, kl_curve, load_dataset, model_options, run_benchmark, run_experiment, run_min_rank, score_split,
    synth_curve, synth_function, CurvePoint, SplitScore, SynthCurveOutput, SYNTH_GRID,
};
pub use kl::{kernel_spec, min_rank_search, search_min_rank, KlEvaluator, KlProblem, MinRank};
pub use output::{sibling_path, write_curves, write_outputs, write_rows, RESULTS_HEADER};

/// One line of a results CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub experiment: String,
    pub seed: u64,
    #[serde(rename = "D")]
    pub dim: usize,
    pub r: usize,
    /// KL, NLPD, RMSE or a minimum rank, depending on the experiment.
    pub value: f64,
    /// Zero unless timing was requested, so that files stay reproducible.
    pub wall_time_ms: f64,
}
