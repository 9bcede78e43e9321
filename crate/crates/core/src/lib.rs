//! Low-rank Gaussian-process regression and the exact KL diagnostics used to judge it.
//!
//! Two rank-`r` feature maps approximate the Gaussian ARD kernel: the truncated
//! Mercer expansion under a Gaussian input measure ([`mercer`]) and random Fourier
//! features ([`fourier`]). Either map turns `σ²I + K` into `σ²I + ΞΞᵀ`, which
//! [`gp`] solves through the Woodbury identity in `O(N r²)` and trains by Adam
//! ascent on the log marginal likelihood.
//!
//! [`divergence`] computes the KL divergence between the exact and approximate
//! marginals together with its trace-type upper bounds, and [`bounds`] evaluates
//! the asymptotic rank bounds with every hidden constant exposed. [`harness`]
//! drives the experiments behind the `lowrank-gp` binary.
//!
//! ```
//! use lowrank_gp::gp::{fit, FitOptions, LowRankGpModel, ModelOptions};
//! use lowrank_gp::harness::synthetic_regression;
//!
//! let (x, y) = synthetic_regression(200, 2, 0.1, 0);
//! let model = LowRankGpModel::new(&ModelOptions::default(), 2, 0).unwrap();
//! let opts = FitOptions { epochs: 50, ..FitOptions::default() };
//! let fitted = fit(&model, &x, &y, &opts).unwrap().model;
//! let pred = fitted.predict(&x, &y, &x.rows(0, 5).into_owned()).unwrap();
//! assert_eq!(pred.mean.len(), 5);
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod divergence;
pub mod error;
pub mod fourier;
pub mod gp;
pub mod harness;
pub mod kernels;
pub mod linalg;
pub mod mercer;
pub mod rng;

pub use error::{Error, Result};
