//! Split-averaged NLPD and RMSE over a rank grid.
//!
//! `cargo run --release --example benchmark -- data.csv target` benchmarks a CSV;
//! without arguments a smaller synthetic dataset is used.

use lowrank_gp::harness::{run_benchmark, ApproxMethod, Experiment, ExperimentConfig};

fn main() -> lowrank_gp::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let base = ExperimentConfig {
        n: 600,
        dims: vec![4],
        epochs: 150,
        dataset: args.first().map(Into::into),
        target_col: args.get(1).cloned(),
        ..ExperimentConfig::for_experiment(Experiment::Bench)
    };
    for method in [ApproxMethod::Mercer, ApproxMethod::Fourier] {
        let rows = run_benchmark(&ExperimentConfig { method, ..base.clone() })?;
        for row in rows.iter().filter(|r| r.experiment.contains(":mean:") || r.experiment.contains(":std:")) {
            println!("{:<26} r={:<3} {:.4}", row.experiment, row.r, row.value);
        }
    }
    Ok(())
}
