//! Gaussian ARD and Matérn kernel matrices on a handful of points.

use lowrank_gp::kernels::{kernel_matrix, KernelSpec, MaternNu};
use nalgebra::DMatrix;

fn main() -> lowrank_gp::Result<()> {
    let x = DMatrix::from_row_slice(4, 2, &[0.0, 0.0, 0.5, 0.0, 0.0, 1.0, 1.0, 1.0]);
    let specs = [
        ("gaussian ard", KernelSpec::gaussian(1.0, vec![2.0, 0.5])?),
        ("matern 1/2", KernelSpec::matern(MaternNu::Half, 0.7)?),
        ("matern 3/2", KernelSpec::matern(MaternNu::ThreeHalves, 0.7)?),
        ("matern 5/2", KernelSpec::matern(MaternNu::FiveHalves, 0.7)?),
    ];
    for (name, spec) in specs {
        let k = kernel_matrix(&spec, &x, None)?;
        println!("{name}:{k:.4}");
    }
    Ok(())
}
