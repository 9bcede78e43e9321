//! Exact KL between the exact and truncated GP marginals, the trace-type upper
//! bounds on it, and the parameter closeness a small KL implies.

use lowrank_gp::divergence::{kl_bound_gamma_n, kl_bound_noise_trace, kl_to_param_bounds, kl_zero_mean, relative_eigenvalues};
use lowrank_gp::kernels::kernel_matrix;
use lowrank_gp::linalg::add_diagonal;
use lowrank_gp::mercer::{truncated_feature_matrix, EigenSystem};
use lowrank_gp::rng::{stream_rng, Stream};
use nalgebra::DMatrix;
use rand_distr::{Distribution, Normal};

fn main() -> lowrank_gp::Result<()> {
    let sigma_sq = 0.1;
    let sys = EigenSystem::isotropic(1, 1.0, 2.0, 1.0)?;
    let normal = Normal::new(0.0, std::f64::consts::FRAC_1_SQRT_2).unwrap();
    let mut rng = stream_rng(5, Stream::Data, 1);
    let x = DMatrix::from_fn(150, 1, |_, _| normal.sample(&mut rng));
    let k = kernel_matrix(&sys.kernel(), &x, None)?;
    let s1 = add_diagonal(k.clone(), sigma_sq);

    println!("{:>3} {:>12} {:>12} {:>12} {:>10} {:>10}", "r", "KL", "trace bnd", "γN bnd", "b", "t");
    for r in [2, 4, 6, 8, 12] {
        let phi = truncated_feature_matrix(&x, &sys, r)?;
        let sigma = &phi * phi.transpose();
        let s2 = add_diagonal(sigma.clone(), sigma_sq);
        let kl = kl_zero_mean(&s1, &s2)?;
        let mu = relative_eigenvalues(&s1, &s2)?;
        let gamma = (mu[mu.len() - 1] - 1.0).max(1.0 / mu[0] - 1.0);
        let trace = kl_bound_noise_trace(&k, &sigma, 0.0, sigma_sq)?;
        let sandwich = kl_to_param_bounds(kl)?;
        println!(
            "{r:>3} {kl:>12.4e} {trace:>12.4e} {:>12.4e} {:>10.3e} {:>10.4}",
            kl_bound_gamma_n(gamma, x.nrows()),
            sandwich.b_root,
            sandwich.t_root
        );
    }
    Ok(())
}
