//! Rank bounds as functions of the sample size, with all hidden constants left at 1.

use lowrank_gp::bounds::{rank_bound_fourier, rank_bound_mercer_gaussian, rank_bound_mercer_matern, BoundParams};

fn main() -> lowrank_gp::Result<()> {
    println!("{:>8} {:>3} {:>14} {:>14} {:>14}", "N", "D", "fourier", "mercer gauss", "mercer matern");
    for dim in [1, 2, 3] {
        for n in [1_000, 10_000, 100_000] {
            let p = BoundParams {
                n,
                dim,
                eps: 0.1,
                delta: 0.1,
                r: 0.5,
                nu: 2.5,
                ..BoundParams::default()
            };
            let show = |v: lowrank_gp::Result<u64>| v.map_or_else(|e| format!("({e})").chars().take(14).collect(), |r| r.to_string());
            println!(
                "{n:>8} {dim:>3} {:>14} {:>14} {:>14}",
                show(rank_bound_fourier(&p)),
                show(rank_bound_mercer_gaussian(&p, 0.5)),
                show(rank_bound_mercer_matern(&p))
            );
        }
    }
    Ok(())
}
