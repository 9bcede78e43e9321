//! Exact, Mercer and Fourier GP fits to a wiggly one-dimensional function from 25 points.

use lowrank_gp::harness::{synth_curve, Experiment, ExperimentConfig};

fn main() -> lowrank_gp::Result<()> {
    let out = synth_curve(&ExperimentConfig::for_experiment(Experiment::SynthCurve))?;
    for row in &out.rows {
        println!("{:<36} r={:<3} {:.4}", row.experiment, row.r, row.value);
    }
    println!("\n{:>6} {:>8} {:>8} {:>8} {:>8}", "x", "f", "exact", "mercer", "fourier");
    let per = out.curves.len() / 3;
    for i in (0..per).step_by(20) {
        let c = |k: usize| out.curves[k * per + i].mean;
        println!("{:>6.2} {:>8.3} {:>8.3} {:>8.3} {:>8.3}", out.curves[i].x, out.curves[i].f, c(0), c(1), c(2));
    }
    Ok(())
}
