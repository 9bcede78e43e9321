//! Random Fourier features: kernel approximation error against the number of features.

use lowrank_gp::fourier::{rff_feature_matrix, sample_spectral_frequencies};
use lowrank_gp::kernels::{kernel_matrix, KernelSpec};
use lowrank_gp::rng::{stream_rng, Stream};
use nalgebra::DMatrix;
use rand_distr::{Distribution, StandardNormal};

fn main() -> lowrank_gp::Result<()> {
    let spec = KernelSpec::gaussian(1.5, vec![0.5, 0.5, 0.5])?;
    let mut rng = stream_rng(1, Stream::Data, 0);
    let x = DMatrix::from_fn(300, 3, |_, _| StandardNormal.sample(&mut rng));
    let k = kernel_matrix(&spec, &x, None)?;
    let big = sample_spectral_frequencies(&spec, 4096, 7)?;
    println!("{:>6} {:>12} {:>12}", "r", "max err", "rel frob");
    for m in [8, 32, 128, 512, 2048] {
        let s = big.prefix(m)?;
        let phi = rff_feature_matrix(&x, &s)?;
        let diff = &k - &phi * phi.transpose();
        println!("{:>6} {:>12.4} {:>12.4}", s.rank(), diff.amax(), diff.norm() / k.norm());
    }
    Ok(())
}
