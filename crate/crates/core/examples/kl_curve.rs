//! KL decay with rank for Mercer and Fourier truncations of the same kernel matrix.

use lowrank_gp::harness::{kl_curve, ApproxMethod, Experiment, ExperimentConfig};

fn main() -> lowrank_gp::Result<()> {
    let base = ExperimentConfig {
        ranks: vec![2, 4, 6, 8, 12, 16, 24, 32, 48, 60],
        ..ExperimentConfig::for_experiment(Experiment::KlCurve)
    };
    let mercer = kl_curve(&ExperimentConfig { method: ApproxMethod::Mercer, ..base.clone() })?;
    let fourier = kl_curve(&ExperimentConfig { method: ApproxMethod::Fourier, ..base.clone() })?;
    println!("threshold eps·N = {}", base.eps * base.n as f64);
    println!("{:>4} {:>14} {:>14}", "r", "mercer", "fourier");
    for (m, f) in mercer.iter().zip(&fourier) {
        println!("{:>4} {:>14.4e} {:>14.4e}", m.r, m.value, f.value);
    }
    Ok(())
}
