//! Smallest rank meeting `KL ≤ εN` for Mercer, Fourier and empirical Matérn truncations.

use lowrank_gp::harness::{run_min_rank, ApproxMethod, Experiment, ExperimentConfig, KernelFamily};

fn main() -> lowrank_gp::Result<()> {
    let base = ExperimentConfig {
        repeats: 3,
        ..ExperimentConfig::for_experiment(Experiment::MinRank)
    };
    let runs = [
        ("gaussian mercer", ExperimentConfig { method: ApproxMethod::Mercer, ..base.clone() }),
        ("gaussian fourier", ExperimentConfig { method: ApproxMethod::Fourier, ..base.clone() }),
        (
            "matern-1/2 empirical",
            ExperimentConfig {
                method: ApproxMethod::MercerEmpirical,
                kernel: KernelFamily::Matern12,
                matern_alpha: 1.0 / (2.0 * std::f64::consts::PI),
                ..base.clone()
            },
        ),
    ];
    for (name, cfg) in runs {
        let rows = run_min_rank(&cfg)?;
        for d in &cfg.dims {
            let ranks: Vec<usize> = rows.iter().filter(|r| r.dim == *d).map(|r| r.r).collect();
            println!("{name:<22} D={d}: {ranks:?}");
        }
    }
    Ok(())
}
