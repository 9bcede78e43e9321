//! Closed-form Mercer eigensystem of the Gaussian kernel: constants, eigenvalue
//! decay, tail sums and how fast the truncated feature map reconstructs `K`.

use lowrank_gp::kernels::kernel_matrix;
use lowrank_gp::mercer::{gaussian_tail_sum, mercer_constants, truncated_feature_matrix, EigenSystem, DEFAULT_TAIL_TOL};
use lowrank_gp::rng::{stream_rng, Stream};
use nalgebra::DMatrix;
use rand_distr::{Distribution, Normal};

fn main() -> lowrank_gp::Result<()> {
    let b = mercer_constants(1.0, 1.0)?;
    println!(
        "alpha=1 eps^2=1: beta={:.5} delta^2={:.5} lambda1={:.5} q={:.5}",
        b.beta, b.delta_sq, b.lambda1, b.ratio
    );

    let sys = EigenSystem::isotropic(2, 1.0, 1.0, 1.0)?;
    let normal = Normal::new(0.0, std::f64::consts::FRAC_1_SQRT_2).unwrap();
    let mut rng = stream_rng(0, Stream::Data, 2);
    let x = DMatrix::from_fn(200, 2, |_, _| normal.sample(&mut rng));
    let k = kernel_matrix(&sys.kernel(), &x, None)?;

    println!("{:>4} {:>14} {:>14} {:>14}", "r", "last index", "tail", "max |K - ΞΞᵀ|");
    for r in [1, 3, 6, 10, 15, 21, 28, 36] {
        let idx = sys.indices(r);
        let phi = truncated_feature_matrix(&x, &sys, r)?;
        let err = (&k - &phi * phi.transpose()).amax();
        let tail = gaussian_tail_sum(&sys, r, DEFAULT_TAIL_TOL)?;
        println!("{r:>4} {:>14} {tail:>14.3e} {err:>14.3e}", format!("{:?}", idx[r - 1].as_slice()));
    }
    Ok(())
}
