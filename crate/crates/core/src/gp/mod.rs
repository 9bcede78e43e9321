//! GP regression with exact, Mercer and Fourier covariance models.
//!
//! Low-rank models never form the `N × N` covariance: with `Σ = ΞΞᵀ` all solves,
//! determinants and traces go through the `r × r` matrix `σ²I + ΞᵀΞ`, so the
//! likelihood costs `O(Nr²)`.

mod metrics;
mod model;
mod optim;
mod woodbury;

use nalgebra::{DMatrix, DVector};

pub use metrics::{nlpd, rmse, PredictiveDistribution, Standardizer};
pub use model::{gradient_log_ml, log_marginal_likelihood, predict, LmlGradient, LowRankGpModel, Method, ModelOptions};
pub use optim::{fit, Adam, FitOptions, FitResult};
pub use woodbury::{lowrank_logdet, lowrank_solve, WoodburyFactor};

use crate::error::{Error, Result};

/// `log N(y; 0, ΞΞᵀ + σ²I)` for a fixed factor.
pub fn lowrank_log_marginal_likelihood(xi: &DMatrix<f64>, sigma_sq: f64, y: &DVector<f64>) -> Result<f64> {
    if y.len() != xi.nrows() {
        return Err(Error::DimensionMismatch {
            context: "responses",
            expected: xi.nrows(),
            found: y.len(),
        });
    }
    let wf = WoodburyFactor::new(xi, sigma_sq)?;
    let alpha = wf.solve_vec(y)?;
    Ok(-0.5 * y.dot(&alpha) - 0.5 * wf.logdet() - 0.5 * y.len() as f64 * (2.0 * std::f64::consts::PI).ln())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::kernel_matrix;
    use crate::linalg::{add_diagonal, chol_logdet, min_eigenvalue};
    use crate::mercer::OrderingMode;
    use crate::rng::{stream_rng, Stream};
    use approx::assert_relative_eq;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn random(n: usize, d: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = stream_rng(seed, Stream::Data, 0);
        DMatrix::from_fn(n, d, |_, _| rng.sample::<f64, _>(StandardNormal))
    }

    fn toy_targets(x: &DMatrix<f64>, seed: u64) -> DVector<f64> {
        let mut rng = stream_rng(seed, Stream::Noise, 0);
        DVector::from_fn(x.nrows(), |i, _| {
            (1.5 * x[(i, 0)]).sin() + 0.3 * x.row(i).sum() + 0.1 * rng.sample::<f64, _>(StandardNormal)
        })
    }

    fn dense_lml(k: &DMatrix<f64>, s: f64, y: &DVector<f64>) -> f64 {
        let chol = add_diagonal(k.clone(), s).cholesky().unwrap();
        -0.5 * y.dot(&chol.solve(y)) - 0.5 * chol_logdet(&chol) - 0.5 * y.len() as f64 * (2.0 * std::f64::consts::PI).ln()
    }

    #[test]
    fn scalar_likelihood_examples() {
        let xi = DMatrix::zeros(1, 1);
        let v0 = lowrank_log_marginal_likelihood(&xi, 1.0, &DVector::from_element(1, 0.0)).unwrap();
        assert_relative_eq!(v0, -0.918_938_533_204_672_7, max_relative = 1e-14);
        let v2 = lowrank_log_marginal_likelihood(&xi, 1.0, &DVector::from_element(1, 2.0)).unwrap();
        assert_relative_eq!(v2, -2.918_938_533_204_672_7, max_relative = 1e-14);
    }

    #[test]
    fn lowrank_likelihood_matches_dense() {
        let xi = random(200, 10, 1);
        let y = random(200, 1, 2).column(0).into_owned();
        let lr = lowrank_log_marginal_likelihood(&xi, 0.3, &y).unwrap();
        let dn = dense_lml(&(&xi * xi.transpose()), 0.3, &y);
        assert!((lr - dn).abs() <= 1e-8 * dn.abs());
    }

    fn model(method: Method, rank: usize, d_in: usize, proj: Option<usize>, ard: bool, seed: u64) -> LowRankGpModel {
        let opts = ModelOptions {
            method,
            rank,
            projection_dim: proj,
            ard,
            ..ModelOptions::default()
        };
        LowRankGpModel::new(&opts, d_in, seed).unwrap()
    }

    #[test]
    fn model_likelihood_and_prediction_match_dense_with_features() {
        let x = random(200, 2, 3);
        let y = toy_targets(&x, 4);
        let xt = random(15, 2, 5);
        for method in [Method::Mgp, Method::Fgp] {
            let mut m = model(method, 10, 2, None, true, 6);
            m.set_hyperparameters(1.3, &[0.7, 1.4], 0.2).unwrap();
            let xi = m.feature_matrix(&x).unwrap();
            let xs = m.feature_matrix(&xt).unwrap();
            let s = m.noise_variance();
            let k = &xi * xi.transpose();
            let lml = m.log_marginal_likelihood(&x, &y).unwrap();
            let dn = dense_lml(&k, s, &y);
            assert!((lml - dn).abs() <= 1e-8 * dn.abs(), "{method:?}");

            let pred = m.predict(&x, &y, &xt).unwrap();
            let chol = add_diagonal(k, s).cholesky().unwrap();
            let k_star = &xs * xi.transpose();
            let mean = &k_star * chol.solve(&y);
            let cov = add_diagonal(&xs * xs.transpose() - &k_star * chol.solve(&k_star.transpose()), s);
            assert!((pred.mean - mean).abs().max() <= 1e-8);
            assert!((&pred.covariance - cov).abs().max() <= 1e-8);
            assert!(min_eigenvalue(&pred.covariance) >= s - 1e-8);
        }
    }

    #[test]
    fn exact_model_matches_dense_kernel() {
        let x = random(40, 3, 7);
        let y = toy_targets(&x, 8);
        let mut m = model(Method::Exact, 0, 3, None, true, 0);
        m.set_hyperparameters(0.9, &[0.5, 1.0, 2.0], 0.05).unwrap();
        let k = kernel_matrix(&m.kernel(), &x, None).unwrap();
        let lml = m.log_marginal_likelihood(&x, &y).unwrap();
        assert_relative_eq!(lml, dense_lml(&k, m.noise_variance(), &y), max_relative = 1e-10);
        let pred = m.predict(&x, &y, &x).unwrap();
        assert!(min_eigenvalue(&pred.covariance) >= m.noise_variance() - 1e-8);
    }

    #[test]
    fn exact_interpolates_in_the_noiseless_limit() {
        let x = DMatrix::from_fn(9, 1, |i, _| -2.0 + 0.5 * i as f64);
        let y = toy_targets(&x, 10);
        let opts = ModelOptions {
            method: Method::Exact,
            min_noise_variance: 0.0,
            ..ModelOptions::default()
        };
        let mut m = LowRankGpModel::new(&opts, 1, 0).unwrap();
        m.set_hyperparameters(1.0, &[4.0], 1e-12).unwrap();
        let pred = m.predict(&x, &y, &x).unwrap();
        let err = (pred.mean - &y).abs().max();
        assert!(err < 1e-4, "{err}");
    }

    #[test]
    fn far_test_point_gets_prior() {
        let x = random(20, 1, 11);
        let y = toy_targets(&x, 12);
        let mut m = model(Method::Mgp, 8, 1, None, false, 0);
        m.set_hyperparameters(1.0, &[1.0], 0.1).unwrap();
        let pred = m.predict(&x, &y, &DMatrix::from_element(1, 1, 60.0)).unwrap();
        assert!(pred.mean[0].abs() < 1e-12);
        assert_relative_eq!(pred.covariance[(0, 0)], m.noise_variance(), max_relative = 1e-10);
    }

    #[test]
    fn noise_gradient_on_null_covariance() {
        let opts = ModelOptions {
            method: Method::Mgp,
            rank: 1,
            min_noise_variance: 0.0,
            ..ModelOptions::default()
        };
        let mut m = LowRankGpModel::new(&opts, 1, 0).unwrap();
        m.set_hyperparameters(1e-300, &[1.0], 0.5).unwrap();
        let x = DMatrix::from_element(1, 1, 0.0);
        let y = DVector::from_element(1, 1.5);
        let g = m.gradient_log_ml(&x, &y).unwrap();
        assert_relative_eq!(g.gradient[2], 0.5 * (1.5 * 1.5 / 0.5 - 1.0), max_relative = 1e-10);
    }

    #[test]
    fn gradient_vanishes_at_one_parameter_optimum() {
        let opts = ModelOptions {
            method: Method::Mgp,
            rank: 1,
            min_noise_variance: 0.0,
            ..ModelOptions::default()
        };
        let mut m = LowRankGpModel::new(&opts, 1, 0).unwrap();
        let x = DMatrix::zeros(12, 1);
        let y = random(12, 1, 13).column(0).into_owned();
        let objective = |m: &mut LowRankGpModel, t: f64| {
            m.set_hyperparameters(1e-300, &[1.0], t.exp()).unwrap();
            m.log_marginal_likelihood(&x, &y).unwrap()
        };
        let grid: Vec<f64> = (0..=400).map(|i| -4.0 + 0.02 * i as f64).collect();
        let best = grid
            .iter()
            .copied()
            .max_by(|a, b| objective(&mut m, *a).total_cmp(&objective(&mut m, *b)))
            .unwrap();
        let (mut lo, mut hi) = (best - 0.02, best + 0.02);
        for _ in 0..200 {
            let a = lo + (hi - lo) / 3.0;
            let b = hi - (hi - lo) / 3.0;
            if objective(&mut m, a) < objective(&mut m, b) {
                lo = a;
            } else {
                hi = b;
            }
        }
        objective(&mut m, 0.5 * (lo + hi));
        let g = m.gradient_log_ml(&x, &y).unwrap();
        assert!(g.gradient[2].abs() < 1e-6, "{}", g.gradient[2]);
        assert_relative_eq!(m.noise_variance(), y.norm_squared() / 12.0, max_relative = 1e-6);
    }

    fn check_gradient(m: &LowRankGpModel, x: &DMatrix<f64>, y: &DVector<f64>) {
        let g = m.gradient_log_ml(x, y).unwrap();
        let p0 = m.params();
        let h = 1e-5;
        let names = m.param_names();
        for i in 0..p0.len() {
            let mut mp = m.clone();
            let mut p = p0.clone();
            p[i] += h;
            mp.set_params(&p).unwrap();
            let fp = mp.log_marginal_likelihood(x, y).unwrap();
            p[i] -= 2.0 * h;
            mp.set_params(&p).unwrap();
            let fm = mp.log_marginal_likelihood(x, y).unwrap();
            let fd = (fp - fm) / (2.0 * h);
            assert!(
                (g.gradient[i] - fd).abs() <= 1e-4 * fd.abs().max(1.0),
                "{:?} {}: analytic {} vs fd {}",
                m.method,
                names[i],
                g.gradient[i],
                fd
            );
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = stream_rng(21, Stream::Split, 0);
        let configs = [
            (Method::Mgp, 12, None, false),
            (Method::Mgp, 15, None, true),
            (Method::Mgp, 20, Some(2), false),
            (Method::Mgp, 10, Some(3), true),
            (Method::Fgp, 12, None, true),
            (Method::Fgp, 16, Some(2), false),
            (Method::Exact, 0, None, true),
            (Method::Exact, 0, Some(2), false),
        ];
        for k in 0..20u64 {
            let (method, rank, proj, ard) = configs[k as usize % configs.len()];
            let d_in = 4;
            let x = random(60, d_in, 100 + k);
            let y = toy_targets(&x, 200 + k);
            let mut m = model(method, rank, d_in, proj, ard, 300 + k);
            let fd = m.feature_dim();
            let eps: Vec<f64> = (0..if ard { fd } else { 1 }).map(|_| rng.random_range(0.3..1.5)).collect();
            m.set_hyperparameters(rng.random_range(0.5..2.0), &eps, rng.random_range(0.05..0.5)).unwrap();
            if k % 2 == 0 {
                m.input_standardizer = Some(Standardizer::fit(&x));
                m.output_standardizer = Some(Standardizer::fit_vector(&y));
            }
            check_gradient(&m, &x, &y);
        }
    }

    #[test]
    fn eigenvalue_ordering_gradient_on_isotropic_model() {
        let x = random(60, 2, 31);
        let y = toy_targets(&x, 32);
        let opts = ModelOptions {
            method: Method::Mgp,
            rank: 10,
            ordering: OrderingMode::Eigenvalue,
            ..ModelOptions::default()
        };
        let m = LowRankGpModel::new(&opts, 2, 0).unwrap();
        check_gradient(&m, &x, &y);
    }

    #[test]
    fn fit_is_deterministic_and_improves() {
        let x = random(80, 3, 41);
        let y = toy_targets(&x, 42);
        let m = model(Method::Mgp, 20, 3, Some(2), false, 43);
        let opts = FitOptions {
            epochs: 60,
            seed: Some(5),
            ..FitOptions::default()
        };
        let a = fit(&m, &x, &y, &opts).unwrap();
        let b = fit(&m, &x, &y, &opts).unwrap();
        assert_eq!(a.model.params(), b.model.params());
        assert_eq!(a.trace, b.trace);
        assert!(a.trace.last().unwrap() > a.trace.first().unwrap());
        assert_eq!(a.trace.len(), 61);
    }

    #[test]
    fn zero_variance_targets_shrink_noise() {
        let x = random(30, 1, 51);
        let y = DVector::zeros(30);
        let mut m = model(Method::Fgp, 10, 1, None, false, 52);
        m.set_hyperparameters(1.0, &[1.0], 5.0).unwrap();
        let r = fit(&m, &x, &y, &FitOptions { epochs: 100, ..FitOptions::default() }).unwrap();
        let decreasing = r.noise_trace.windows(2).filter(|w| w[1] < w[0]).count();
        assert!(decreasing * 2 > r.noise_trace.len() - 1);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(LowRankGpModel::new(&ModelOptions { method: Method::Fgp, rank: 3, ..ModelOptions::default() }, 2, 0).is_err());
        assert!(LowRankGpModel::new(&ModelOptions { projection_dim: Some(4), ..ModelOptions::default() }, 2, 0).is_err());
        let m = model(Method::Mgp, 5, 2, None, false, 0);
        let mut x = random(5, 2, 1);
        let y = DVector::zeros(5);
        assert!(m.log_marginal_likelihood(&random(5, 3, 1), &y).is_err());
        x[(0, 0)] = f64::NAN;
        assert!(matches!(m.log_marginal_likelihood(&x, &y), Err(Error::Data { .. })));
        assert!(fit(&m, &random(5, 2, 1), &y, &FitOptions { epochs: 0, ..FitOptions::default() }).is_err());
    }

    #[test]
    fn method_parsing() {
        assert_eq!("mercer".parse::<Method>().unwrap(), Method::Mgp);
        assert_eq!("FGP".parse::<Method>().unwrap(), Method::Fgp);
        assert!("svgp".parse::<Method>().is_err());
    }
}
