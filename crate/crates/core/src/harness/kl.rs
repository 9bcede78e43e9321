use std::collections::BTreeMap;

use nalgebra::DMatrix;

use super::config::{ApproxMethod, ExperimentConfig};
use super::data::{generate_fig1_data, KernelFamily};
use crate::error::{Error, Result};
use crate::fourier::{rff_feature_matrix, sample_spectral_frequencies_indexed, SpectralSample};
use crate::gp::WoodburyFactor;
use crate::kernels::{kernel_matrix, KernelSpec, MaternNu};
use crate::linalg::{add_diagonal, chol_logdet, cholesky};
use crate::mercer::{truncated_feature_matrix, EigenSystem, EmpiricalEigen};

/// `KL(N(0, σ²I + K) ‖ N(0, σ²I + ΞΞᵀ))` for many factors `Ξ` against one `K`.
///
/// The factorization of `σ²I + K` is done once; each evaluation costs `O(N²r)`.
#[derive(Debug, Clone)]
pub struct KlEvaluator {
    s1: DMatrix<f64>,
    logdet_s1: f64,
    trace_s1: f64,
    sigma_sq: f64,
}

impl KlEvaluator {
    pub fn new(k: &DMatrix<f64>, sigma_sq: f64) -> Result<Self> {
        if !(sigma_sq > 0.0) {
            return Err(Error::invalid(format!("noise variance must be positive, got {sigma_sq}")));
        }
        let s1 = add_diagonal(k.clone(), sigma_sq);
        let chol = cholesky(s1.clone(), "kernel matrix plus noise")?;
        Ok(KlEvaluator {
            logdet_s1: chol_logdet(&chol),
            trace_s1: s1.trace(),
            s1,
            sigma_sq,
        })
    }

    pub fn n(&self) -> usize {
        self.s1.nrows()
    }

    pub fn kl(&self, xi: &DMatrix<f64>) -> Result<f64> {
        if xi.nrows() != self.n() {
            return Err(Error::DimensionMismatch {
                context: "low-rank factor rows",
                expected: self.n(),
                found: xi.nrows(),
            });
        }
        let n = self.n() as f64;
        let wf = WoodburyFactor::new(xi, self.sigma_sq)?;
        let proj = xi.tr_mul(&(&self.s1 * xi));
        let trace_term = (self.trace_s1 - wf.capacitance_solve(&proj).trace()) / self.sigma_sq;
        let kl = 0.5 * (trace_term - n + wf.logdet() - self.logdet_s1);
        if !kl.is_finite() {
            return Err(Error::NonFinite(format!("KL evaluated to {kl}")));
        }
        Ok(kl)
    }
}

pub fn kernel_spec(cfg: &ExperimentConfig, dim: usize) -> Result<KernelSpec> {
    match cfg.kernel {
        KernelFamily::Gaussian => KernelSpec::gaussian_iso(cfg.signal_variance, cfg.inv_lengthscale_sq, dim),
        KernelFamily::Matern12 => KernelSpec::matern(MaternNu::Half, cfg.matern_alpha),
        KernelFamily::Matern32 => KernelSpec::matern(MaternNu::ThreeHalves, cfg.matern_alpha),
        KernelFamily::Matern52 => KernelSpec::matern(MaternNu::FiveHalves, cfg.matern_alpha),
    }
}

enum Source {
    Mercer(EigenSystem),
    Empirical(EmpiricalEigen),
    Fourier(Vec<SpectralSample>),
}

/// Inputs, exact KL evaluator and low-rank factor generator for one `(D, seed)` cell.
pub struct KlProblem {
    pub x: DMatrix<f64>,
    pub evaluator: KlEvaluator,
    pub method: ApproxMethod,
    source: Source,
}

impl KlProblem {
    pub fn new(cfg: &ExperimentConfig, dim: usize, seed: u64) -> Result<Self> {
        let spec = kernel_spec(cfg, dim)?;
        let x = generate_fig1_data(dim, cfg.n, cfg.kernel, seed);
        let k = kernel_matrix(&spec, &x, None)?;
        let evaluator = KlEvaluator::new(&k, cfg.sigma_sq)?;
        let gaussian_only = |what: &str| -> Result<()> {
            if cfg.kernel.is_gaussian() {
                Ok(())
            } else {
                Err(Error::Usage(format!("{what} needs the gaussian kernel; use mercer_empirical for Matérn")))
            }
        };
        let source = match cfg.method {
            ApproxMethod::Mercer => {
                gaussian_only("mercer")?;
                let sys = EigenSystem::from_kernel(&spec, &vec![cfg.resolved_measure_alpha(); dim])?.with_ordering(cfg.ordering);
                Source::Mercer(sys)
            }
            ApproxMethod::MercerEmpirical => Source::Empirical(EmpiricalEigen::new(&k)?),
            ApproxMethod::Fourier => {
                gaussian_only("fourier")?;
                let m = (cfg.rmax().max(cfg.ranks.last().copied().unwrap_or(2)) / 2).max(1);
                let samples = (0..cfg.draws as u32)
                    .map(|i| sample_spectral_frequencies_indexed(&spec, m, seed, i))
                    .collect::<Result<Vec<_>>>()?;
                Source::Fourier(samples)
            }
            ApproxMethod::Exact => {
                return Err(Error::Usage("exact is not a low-rank method; choose mercer, fourier or mercer_empirical".into()))
            }
        };
        Ok(KlProblem {
            x,
            evaluator,
            method: cfg.method,
            source,
        })
    }

    /// Largest rank this problem can produce.
    pub fn max_rank(&self) -> usize {
        match &self.source {
            Source::Mercer(_) => usize::MAX,
            Source::Empirical(e) => e.len(),
            Source::Fourier(s) => s[0].rank(),
        }
    }

    /// Exact KL at rank `r`, averaged over the Fourier draws.
    pub fn kl_at(&self, r: usize) -> Result<f64> {
        if r == 0 || r > self.max_rank() {
            return Err(Error::invalid(format!("rank {r} outside 1..={}", self.max_rank())));
        }
        match &self.source {
            Source::Mercer(sys) => self.evaluator.kl(&truncated_feature_matrix(&self.x, sys, r)?),
            Source::Empirical(e) => self.evaluator.kl(&e.factor(r)?),
            Source::Fourier(samples) => {
                if !r.is_multiple_of(2) {
                    return Err(Error::Usage(format!("Fourier ranks must be even, got {r}")));
                }
                let mut total = 0.0;
                for s in samples {
                    total += self.evaluator.kl(&rff_feature_matrix(&self.x, &s.prefix(r / 2)?)?)?;
                }
                Ok(total / samples.len() as f64)
            }
        }
    }
}

/// Result of a minimum-rank search.
#[derive(Debug, Clone, PartialEq)]
pub struct MinRank {
    /// Smallest passing rank, or `rmax + 1` when none passes.
    pub rank: usize,
    /// KL at `rank`, when it passed.
    pub kl: Option<f64>,
    pub evaluations: usize,
}

/// Smallest `r` in `{step, 2·step, …} ∩ [1, rmax]` with `kl(r) ≤ threshold`.
///
/// Doubles the rank until the threshold is met, bisects the last bracket, then
/// walks down while the next smaller rank also passes. Assumes the KL is
/// decreasing in `r`; the downward walk catches small violations near the answer.
pub fn search_min_rank<F>(step: usize, rmax: usize, threshold: f64, mut kl: F) -> Result<MinRank>
where
    F: FnMut(usize) -> Result<f64>,
{
    if step == 0 {
        return Err(Error::invalid("rank step must be at least 1"));
    }
    let kmax = rmax / step;
    let sentinel = MinRank {
        rank: rmax + 1,
        kl: None,
        evaluations: 0,
    };
    if kmax == 0 {
        return Ok(sentinel);
    }
    let mut memo: BTreeMap<usize, f64> = BTreeMap::new();
    let mut eval = |k: usize, memo: &mut BTreeMap<usize, f64>| -> Result<f64> {
        if let Some(v) = memo.get(&k) {
            return Ok(*v);
        }
        let v = kl(k * step)?;
        memo.insert(k, v);
        Ok(v)
    };
    let mut lo = 0;
    let mut hi = 1;
    loop {
        if eval(hi, &mut memo)? <= threshold {
            break;
        }
        if hi == kmax {
            return Ok(MinRank {
                evaluations: memo.len(),
                ..sentinel
            });
        }
        lo = hi;
        hi = (hi * 2).min(kmax);
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if eval(mid, &mut memo)? <= threshold {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    while hi > 1 && eval(hi - 1, &mut memo)? <= threshold {
        hi -= 1;
    }
    let value = eval(hi, &mut memo)?;
    Ok(MinRank {
        rank: hi * step,
        kl: Some(value),
        evaluations: memo.len(),
    })
}

/// Smallest rank meeting `KL ≤ eps · N` for one `(D, seed)` cell.
pub fn min_rank_search(cfg: &ExperimentConfig, dim: usize, seed: u64) -> Result<MinRank> {
    let problem = KlProblem::new(cfg, dim, seed)?;
    let step = cfg.method.rank_step();
    let rmax = cfg.rmax().min(problem.max_rank());
    let threshold = cfg.eps * cfg.n as f64;
    let mut found = search_min_rank(step, rmax, threshold, |r| problem.kl_at(r))?;
    if found.kl.is_none() {
        found.rank = cfg.rmax() + 1;
    }
    Ok(found)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::divergence::kl_zero_mean;
    use crate::harness::config::Experiment;
    use crate::rng::{stream_rng, Stream};
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn fast_kl_matches_dense() {
        let mut rng = stream_rng(3, Stream::Data, 0);
        for (n, r) in [(5, 1), (20, 4), (40, 40), (60, 70)] {
            let g = DMatrix::from_fn(n, n, |_, _| Distribution::<f64>::sample(&StandardNormal, &mut rng));
            let k = &g * g.transpose() / n as f64;
            let xi = DMatrix::from_fn(n, r, |_, _| 0.3 * Distribution::<f64>::sample(&StandardNormal, &mut rng));
            for s in [0.05, 1.0] {
                let fast = KlEvaluator::new(&k, s).unwrap().kl(&xi).unwrap();
                let dense = kl_zero_mean(&add_diagonal(k.clone(), s), &add_diagonal(&xi * xi.transpose(), s)).unwrap();
                assert!((fast - dense).abs() <= 1e-9 * dense.abs().max(1.0), "{fast} {dense}");
            }
        }
    }

    #[test]
    fn search_finds_first_passing_rank() {
        for target in 1..=40usize {
            let f = |r: usize| Ok(if r >= target { 0.0 } else { 1.0 });
            let got = search_min_rank(1, 40, 0.5, f).unwrap();
            assert_eq!(got.rank, target);
            let got = search_min_rank(2, 80, 0.5, |r: usize| Ok(if r >= 2 * target { 0.0 } else { 1.0 })).unwrap();
            assert_eq!(got.rank, 2 * target);
        }
        let never = search_min_rank(1, 17, 0.5, |_| Ok(1.0)).unwrap();
        assert_eq!(never.rank, 18);
        assert_eq!(never.kl, None);
        assert_eq!(search_min_rank(2, 1, 0.5, |_| Ok(0.0)).unwrap().rank, 2);
    }

    #[test]
    fn search_walks_down_past_non_monotone_bisection() {
        let values = [9.0, 9.0, 0.0, 9.0, 0.0, 0.0, 0.0, 0.0];
        let got = search_min_rank(1, 8, 1.0, |r| Ok(values[r - 1])).unwrap();
        assert!(values[got.rank - 1] <= 1.0);
        assert!(values[got.rank - 2] > 1.0);
    }

    fn small_cfg(method: ApproxMethod, kernel: KernelFamily) -> ExperimentConfig {
        ExperimentConfig {
            method,
            kernel,
            n: 80,
            ..ExperimentConfig::for_experiment(Experiment::MinRank)
        }
    }

    #[test]
    fn min_rank_results_verify() {
        for (method, kernel) in [
            (ApproxMethod::Mercer, KernelFamily::Gaussian),
            (ApproxMethod::Fourier, KernelFamily::Gaussian),
            (ApproxMethod::MercerEmpirical, KernelFamily::Matern12),
        ] {
            let cfg = small_cfg(method, kernel);
            let problem = KlProblem::new(&cfg, 2, 4).unwrap();
            let found = min_rank_search(&cfg, 2, 4).unwrap();
            let thr = cfg.eps * cfg.n as f64;
            assert!(found.rank <= cfg.n, "{method:?}");
            assert!(problem.kl_at(found.rank).unwrap() <= thr);
            let step = method.rank_step();
            if found.rank > step {
                assert!(problem.kl_at(found.rank - step).unwrap() > thr);
            }
        }
    }

    #[test]
    fn min_rank_edge_cases() {
        let mut cfg = small_cfg(ApproxMethod::Mercer, KernelFamily::Gaussian);
        cfg.eps = 1e6;
        assert_eq!(min_rank_search(&cfg, 1, 0).unwrap().rank, 1);
        cfg.method = ApproxMethod::Fourier;
        assert_eq!(min_rank_search(&cfg, 1, 0).unwrap().rank, 2);
        cfg.method = ApproxMethod::Mercer;
        cfg.eps = 1e-12;
        cfg.rmax = Some(1);
        assert_eq!(min_rank_search(&cfg, 1, 0).unwrap().rank, 2);
    }

    #[test]
    fn method_kernel_mismatch_is_usage_error() {
        let cfg = small_cfg(ApproxMethod::Mercer, KernelFamily::Matern12);
        assert!(matches!(KlProblem::new(&cfg, 1, 0), Err(Error::Usage(_))));
        let cfg = small_cfg(ApproxMethod::Exact, KernelFamily::Gaussian);
        assert!(matches!(KlProblem::new(&cfg, 1, 0), Err(Error::Usage(_))));
    }
}
