//! Train Mercer and Fourier low-rank GPs on synthetic data and score them on held-out rows.

use lowrank_gp::gp::{fit, nlpd, rmse, FitOptions, LowRankGpModel, Method, ModelOptions};
use lowrank_gp::harness::{select_entries, select_rows, synthetic_regression, train_test_split};

fn main() -> lowrank_gp::Result<()> {
    let (x, y) = synthetic_regression(800, 3, 0.1, 0);
    let (train, test) = train_test_split(800, 0.2, 0, 0)?;
    let (xtr, ytr) = (select_rows(&x, &train), select_entries(&y, &train));
    let (xte, yte) = (select_rows(&x, &test), select_entries(&y, &test));

    for (method, rank) in [(Method::Mgp, 20), (Method::Fgp, 40), (Method::Exact, 0)] {
        let opts = ModelOptions {
            method,
            rank,
            ..ModelOptions::default()
        };
        let model = LowRankGpModel::new(&opts, 3, 0)?;
        let result = fit(&model, &xtr, &ytr, &FitOptions::default())?;
        let pred = result.model.predict(&xtr, &ytr, &xte)?;
        println!(
            "{method:?} r={rank}: lml {:.2} -> {:.2}, noise {:.4}, test nlpd {:.3}, rmse {:.4}",
            result.trace[0],
            result.trace[result.trace.len() - 1],
            result.model.noise_variance(),
            nlpd(&pred, &yte)?,
            rmse(&pred.mean, &yte)?
        );
    }
    Ok(())
}
