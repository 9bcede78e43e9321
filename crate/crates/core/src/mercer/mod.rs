//! Closed-form Mercer expansion of the Gaussian kernel under a Gaussian input
//! measure, plus an eigendecomposition fallback for kernels without one.
//!
//! The kernel `σ_f² exp(-Σ_j ε_j²(x_j - x'_j)²)` factorises over coordinates, so
//! its eigenpairs are tensor products of one-dimensional ones indexed by a
//! [`MultiIndex`]. [`EigenSystem`] fixes the per-coordinate bases and the order in
//! which multi-indices are kept when truncating to rank `r`.

mod basis;
mod empirical;
mod index;
mod tail;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::KernelSpec;

pub use basis::{hermite_eval, BasisValues, MercerBasis1D};
pub use empirical::{empirical_truncation, EmpiricalEigen};
pub use index::{level_indices, level_set_size, multi_index_sequence, MultiIndex};
pub use tail::{gaussian_tail_sum, level_set_tail_sum, tail_sum_excluding, DEFAULT_TAIL_TOL};

/// Measure scale that makes `ρ` the standard Gaussian in every coordinate.
pub const DEFAULT_ALPHA: f64 = std::f64::consts::FRAC_1_SQRT_2;

pub fn mercer_constants(alpha: f64, epsilon_sq: f64) -> Result<MercerBasis1D> {
    MercerBasis1D::new(alpha, epsilon_sq)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrderingMode {
    /// Total degree `𝟙ᵀn` first, lexicographic second.
    #[default]
    TotalDegree,
    /// Descending eigenvalue, ties broken by total degree then lexicographically.
    Eigenvalue,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenSystem {
    pub bases: Vec<MercerBasis1D>,
    pub signal_variance: f64,
    pub ordering: OrderingMode,
}

impl EigenSystem {
    pub fn new(bases: Vec<MercerBasis1D>, signal_variance: f64) -> Result<Self> {
        if bases.is_empty() {
            return Err(Error::invalid("eigensystem needs at least one dimension"));
        }
        if !(signal_variance > 0.0 && signal_variance.is_finite()) {
            return Err(Error::invalid(format!("signal variance must be positive, got {signal_variance}")));
        }
        Ok(EigenSystem {
            bases,
            signal_variance,
            ordering: OrderingMode::TotalDegree,
        })
    }

    pub fn isotropic(d: usize, alpha: f64, epsilon_sq: f64, signal_variance: f64) -> Result<Self> {
        let b = MercerBasis1D::new(alpha, epsilon_sq)?;
        Self::new(vec![b; d], signal_variance)
    }

    /// Eigensystem of a Gaussian-ARD kernel with per-coordinate measure scales `alphas`
    /// (a single entry is broadcast to every coordinate).
    pub fn from_kernel(spec: &KernelSpec, alphas: &[f64]) -> Result<Self> {
        match spec {
            KernelSpec::GaussianArd {
                signal_variance,
                inv_lengthscale_sq,
            } => {
                let d = inv_lengthscale_sq.len();
                if alphas.len() != 1 && alphas.len() != d {
                    return Err(Error::DimensionMismatch {
                        context: "measure scales",
                        expected: d,
                        found: alphas.len(),
                    });
                }
                let bases = inv_lengthscale_sq
                    .iter()
                    .enumerate()
                    .map(|(j, &e)| MercerBasis1D::new(alphas[if alphas.len() == 1 { 0 } else { j }], e))
                    .collect::<Result<Vec<_>>>()?;
                Self::new(bases, *signal_variance)
            }
            KernelSpec::Matern { .. } => Err(Error::Unsupported(
                "closed-form Mercer expansion exists only for the Gaussian kernel; use empirical_truncation".into(),
            )),
        }
    }

    pub fn with_ordering(mut self, ordering: OrderingMode) -> Self {
        self.ordering = ordering;
        self
    }

    pub fn dim(&self) -> usize {
        self.bases.len()
    }

    /// Equivalent Gaussian-ARD kernel.
    pub fn kernel(&self) -> KernelSpec {
        KernelSpec::GaussianArd {
            signal_variance: self.signal_variance,
            inv_lengthscale_sq: self.bases.iter().map(|b| b.epsilon_sq).collect(),
        }
    }

    fn check_index(&self, n: &MultiIndex) -> Result<()> {
        if n.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                context: "multi-index",
                expected: self.dim(),
                found: n.dim(),
            });
        }
        if n.0.contains(&0) {
            return Err(Error::invalid(format!("multi-index {n} has an entry below 1")));
        }
        Ok(())
    }

    /// `σ_f² Π_j λ₁⁽ʲ⁾ q_j^{n_j-1}`. Exponents of coordinates sharing the same `q`
    /// are pooled before powering, so indices that are mathematically tied (for
    /// instance everything on one level of an isotropic system) compare equal.
    pub fn eigenvalue(&self, n: &MultiIndex) -> Result<f64> {
        self.check_index(n)?;
        Ok(self.eigenvalue_unchecked(n.as_slice()))
    }

    pub(crate) fn eigenvalue_unchecked(&self, n: &[usize]) -> f64 {
        let mut powers: Vec<(f64, i32)> = self.bases.iter().zip(n).map(|(b, &k)| (b.ratio, k as i32 - 1)).collect();
        powers.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut q_part = 1.0;
        let mut i = 0;
        while i < powers.len() {
            let (q, mut e) = powers[i];
            i += 1;
            while i < powers.len() && powers[i].0 == q {
                e += powers[i].1;
                i += 1;
            }
            q_part *= q.powi(e);
        }
        self.lambda_product() * q_part
    }

    /// `σ_f² Π_j λ₁⁽ʲ⁾`, the leading eigenvalue.
    pub fn lambda_product(&self) -> f64 {
        let mut l1: Vec<f64> = self.bases.iter().map(|b| b.lambda1).collect();
        l1.sort_by(f64::total_cmp);
        self.signal_variance * l1.iter().product::<f64>()
    }

    /// Sum of every eigenvalue, `σ_f² Π_j λ₁⁽ʲ⁾ / (1 - q_j)`.
    pub fn total_eigenvalue_sum(&self) -> f64 {
        self.signal_variance * self.bases.iter().map(|b| b.eigenvalue_sum()).product::<f64>()
    }

    pub fn eigenfunction_eval(&self, n: &MultiIndex, x: &[f64]) -> Result<f64> {
        self.check_index(n)?;
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                context: "eigenfunction input",
                expected: self.dim(),
                found: x.len(),
            });
        }
        Ok(self
            .bases
            .iter()
            .zip(n.as_slice())
            .zip(x)
            .map(|((b, &k), &xj)| b.eval_all(k, xj)[k - 1])
            .product())
    }

    /// The first `r` multi-indices under this system's ordering.
    pub fn indices(&self, r: usize) -> Vec<MultiIndex> {
        match self.ordering {
            OrderingMode::TotalDegree => multi_index_sequence(self.dim(), r),
            OrderingMode::Eigenvalue => self.eigenvalue_sorted(r),
        }
    }

    fn eigenvalue_sorted(&self, r: usize) -> Vec<MultiIndex> {
        if r == 0 {
            return Vec::new();
        }
        let d = self.dim();
        let base = self.lambda_product();
        let q_max = self.bases.iter().map(|b| b.ratio).fold(0.0, f64::max);
        let mut candidates: Vec<(f64, MultiIndex)> = Vec::new();
        let mut level = d;
        loop {
            for idx in level_indices(d, level) {
                candidates.push((self.eigenvalue_unchecked(idx.as_slice()), idx));
            }
            if candidates.len() >= r {
                let mut values: Vec<f64> = candidates.iter().map(|c| c.0).collect();
                values.sort_by(|a, b| b.total_cmp(a));
                let threshold = values[r - 1];
                let next_level_max = base * q_max.powi((level + 1 - d) as i32);
                if next_level_max < threshold {
                    break;
                }
            }
            level += 1;
        }
        candidates.sort_by(|(va, a), (vb, b)| {
            vb.total_cmp(va)
                .then(a.total_degree().cmp(&b.total_degree()))
                .then(a.cmp(b))
        });
        candidates.truncate(r);
        candidates.into_iter().map(|c| c.1).collect()
    }

    /// `N × k` matrix of `√λ_t e_t(z_i)` for the given multi-indices.
    pub fn feature_matrix(&self, z: &DMatrix<f64>, indices: &[MultiIndex]) -> Result<DMatrix<f64>> {
        if z.ncols() != self.dim() {
            return Err(Error::DimensionMismatch {
                context: "projected inputs",
                expected: self.dim(),
                found: z.ncols(),
            });
        }
        for n in indices {
            self.check_index(n)?;
        }
        let d = self.dim();
        let n_max: Vec<usize> = (0..d)
            .map(|j| indices.iter().map(|n| n.0[j]).max().unwrap_or(0))
            .collect();
        let scales: Vec<f64> = indices.iter().map(|n| self.eigenvalue_unchecked(n.as_slice()).sqrt()).collect();
        let mut out = DMatrix::zeros(z.nrows(), indices.len());
        for i in 0..z.nrows() {
            let per_dim: Vec<Vec<f64>> = (0..d).map(|j| self.bases[j].eval_all(n_max[j], z[(i, j)])).collect();
            for (t, n) in indices.iter().enumerate() {
                let e: f64 = n.0.iter().enumerate().map(|(j, &k)| per_dim[j][k - 1]).product();
                out[(i, t)] = scales[t] * e;
            }
        }
        Ok(out)
    }
}

/// Rank-`r` factor `Ξ` with `ΞΞᵀ = Σ_{t≤r} λ_t e_t(Z) e_t(Z)ᵀ`; rows of `z` are points.
pub fn truncated_feature_matrix(z: &DMatrix<f64>, sys: &EigenSystem, r: usize) -> Result<DMatrix<f64>> {
    if r == 0 {
        return Err(Error::invalid("truncation rank must be at least 1"));
    }
    sys.feature_matrix(z, &sys.indices(r))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::kernel_matrix;
    use crate::linalg::min_eigenvalue;
    use crate::rng::{stream_rng, Stream};
    use approx::assert_relative_eq;
    use rand_distr::{Distribution, Normal};

    fn golden() -> EigenSystem {
        EigenSystem::isotropic(1, 1.0, 1.0, 1.0).unwrap()
    }

    fn sample_measure(n: usize, d: usize, alpha: f64, seed: u64) -> DMatrix<f64> {
        let mut rng = stream_rng(seed, Stream::Data, 0);
        let normal = Normal::new(0.0, 1.0 / (std::f64::consts::SQRT_2 * alpha)).unwrap();
        DMatrix::from_fn(n, d, |_, _| normal.sample(&mut rng))
    }

    #[test]
    fn eigenvalue_examples() {
        let sys = golden();
        assert_relative_eq!(sys.eigenvalue(&MultiIndex(vec![1])).unwrap(), 0.618_033_988_749_894_8, max_relative = 1e-14);
        assert_relative_eq!(sys.eigenvalue(&MultiIndex(vec![3])).unwrap(), 0.090_169_943_749_474_24, max_relative = 1e-13);
        let sys2 = EigenSystem::isotropic(2, 0.7, 1.3, 2.0).unwrap();
        assert_eq!(
            sys2.eigenvalue(&MultiIndex(vec![2, 1])).unwrap(),
            sys2.eigenvalue(&MultiIndex(vec![1, 2])).unwrap()
        );
        assert!(sys2.eigenvalue(&MultiIndex(vec![1])).is_err());
        assert!(sys2.eigenvalue(&MultiIndex(vec![0, 1])).is_err());
    }

    #[test]
    fn eigenfunction_examples() {
        let sys = golden();
        assert_relative_eq!(
            sys.eigenfunction_eval(&MultiIndex(vec![1]), &[0.0]).unwrap(),
            1.222_844_544_993_851_8,
            max_relative = 1e-14
        );
        assert_eq!(sys.eigenfunction_eval(&MultiIndex(vec![2]), &[0.0]).unwrap(), 0.0);
        let sys2 = EigenSystem::isotropic(2, 1.0, 1.0, 1.0).unwrap();
        let v = sys2.eigenfunction_eval(&MultiIndex(vec![1, 1]), &[0.0, 0.0]).unwrap();
        assert_relative_eq!(v, 1.222_844_544_993_851_8f64.powi(2), max_relative = 1e-14);
        assert!(sys2.eigenfunction_eval(&MultiIndex(vec![1, 1]), &[0.0]).is_err());
    }

    #[test]
    fn truncated_feature_example() {
        let z = DMatrix::from_element(1, 1, 0.0);
        let xi = truncated_feature_matrix(&z, &golden(), 1).unwrap();
        assert_relative_eq!(xi[(0, 0)], 0.961_340_923_830_066, max_relative = 1e-13);
        assert!(truncated_feature_matrix(&z, &golden(), 0).is_err());
    }

    #[test]
    fn duplicate_rows_give_duplicate_features() {
        let sys = EigenSystem::isotropic(2, DEFAULT_ALPHA, 0.8, 1.0).unwrap();
        let z = DMatrix::from_row_slice(3, 2, &[0.3, -0.2, 0.3, -0.2, 1.0, 0.5]);
        let xi = truncated_feature_matrix(&z, &sys, 10).unwrap();
        assert_eq!(xi.row(0), xi.row(1));
    }

    fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
        let jacobi = DMatrix::from_fn(n, n, |i, j| {
            if i + 1 == j || j + 1 == i {
                (i.max(j) as f64 / 2.0).sqrt()
            } else {
                0.0
            }
        });
        let mut nodes: Vec<f64> = nalgebra::SymmetricEigen::new(jacobi).eigenvalues.iter().copied().collect();
        nodes.sort_by(f64::total_cmp);
        let normalized = |k_max: usize, v: f64| -> Vec<f64> {
            let mut h = vec![1.0 / std::f64::consts::PI.powf(0.25); k_max + 1];
            if k_max >= 1 {
                h[1] = std::f64::consts::SQRT_2 * v * h[0];
            }
            for k in 1..k_max {
                let kf = k as f64;
                h[k + 1] = (2.0 / (kf + 1.0)).sqrt() * v * h[k] - (kf / (kf + 1.0)).sqrt() * h[k - 1];
            }
            h
        };
        let mut weights = Vec::with_capacity(n);
        for v in nodes.iter_mut() {
            for _ in 0..3 {
                let h = normalized(n, *v);
                *v -= h[n] / ((2.0 * n as f64).sqrt() * h[n - 1]);
            }
            let h = normalized(n - 1, *v);
            weights.push(1.0 / h.iter().map(|x| x * x).sum::<f64>());
        }
        (nodes, weights)
    }

    #[test]
    fn gauss_hermite_rule_is_exact_for_moments() {
        let (x, w) = gauss_hermite(64);
        assert_relative_eq!(w.iter().sum::<f64>(), std::f64::consts::PI.sqrt(), max_relative = 1e-12);
        let m2: f64 = x.iter().zip(&w).map(|(x, w)| w * x * x).sum();
        assert_relative_eq!(m2, std::f64::consts::PI.sqrt() / 2.0, max_relative = 1e-12);
    }

    #[test]
    fn eigenfunctions_are_orthonormal_under_the_measure() {
        let (v, w) = gauss_hermite(64);
        let two_pi_sq = 2.0 * std::f64::consts::PI * std::f64::consts::PI;
        for &alpha in &[DEFAULT_ALPHA, 1.0] {
            for &eps_sq in &[0.5, 1.0, two_pi_sq] {
                let b = MercerBasis1D::new(alpha, eps_sq).unwrap();
                let ab = alpha * b.beta;
                let vals: Vec<Vec<f64>> = v.iter().map(|&vi| b.eval_all(10, vi / ab)).collect();
                for m in 0..10 {
                    for n in 0..10 {
                        let integral: f64 = v
                            .iter()
                            .zip(&w)
                            .zip(&vals)
                            .map(|((&vi, &wi), e)| {
                                let x = vi / ab;
                                let rho = alpha / std::f64::consts::PI.sqrt() * (-alpha * alpha * x * x).exp();
                                wi * (vi * vi).exp() * e[m] * e[n] * rho / ab
                            })
                            .sum();
                        let expected = if m == n { 1.0 } else { 0.0 };
                        assert!(
                            (integral - expected).abs() < 1e-8,
                            "alpha={alpha} eps²={eps_sq} m={m} n={n}: {integral}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn reconstruction_at_rank_sixty() {
        let sys = golden();
        let z = sample_measure(100, 1, 1.0, 11);
        let xi = truncated_feature_matrix(&z, &sys, 60).unwrap();
        let k = kernel_matrix(&sys.kernel(), &z, None).unwrap();
        let err = (&k - &xi * xi.transpose()).abs().max();
        assert!(err <= 1e-8, "max entrywise error {err}");
    }

    #[test]
    fn truncation_residual_is_psd() {
        for (d, r) in [(1usize, 3usize), (2, 6), (3, 10)] {
            let sys = EigenSystem::isotropic(d, DEFAULT_ALPHA, 0.7, 1.5).unwrap();
            let z = sample_measure(60, d, DEFAULT_ALPHA, 3 + d as u64);
            let xi = truncated_feature_matrix(&z, &sys, r).unwrap();
            let k = kernel_matrix(&sys.kernel(), &z, None).unwrap();
            let resid = k - &xi * xi.transpose();
            assert!(min_eigenvalue(&resid) >= -1e-8, "d={d} r={r}");
        }
    }

    #[test]
    fn isotropic_orderings_agree_and_are_monotone() {
        let sys = EigenSystem::isotropic(3, DEFAULT_ALPHA, 1.2, 1.0).unwrap();
        let by_degree = sys.indices(80);
        let by_value = sys.clone().with_ordering(OrderingMode::Eigenvalue).indices(80);
        assert_eq!(by_degree, by_value);
        let vals: Vec<f64> = by_degree.iter().map(|n| sys.eigenvalue(n).unwrap()).collect();
        assert!(vals.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn anisotropic_eigenvalue_ordering_is_sorted() {
        let bases = vec![
            MercerBasis1D::new(DEFAULT_ALPHA, 2.0).unwrap(),
            MercerBasis1D::new(DEFAULT_ALPHA, 0.1).unwrap(),
        ];
        let sys = EigenSystem::new(bases, 1.0).unwrap().with_ordering(OrderingMode::Eigenvalue);
        let idx = sys.indices(30);
        let vals: Vec<f64> = idx.iter().map(|n| sys.eigenvalue(n).unwrap()).collect();
        assert!(vals.windows(2).all(|w| w[0] >= w[1]));
        let all: Vec<f64> = (2..30)
            .flat_map(|l| level_indices(2, l))
            .map(|n| sys.eigenvalue(&n).unwrap())
            .collect();
        let mut sorted = all.clone();
        sorted.sort_by(|a, b| b.total_cmp(a));
        for (a, b) in vals.iter().zip(&sorted) {
            assert_relative_eq!(*a, *b, max_relative = 1e-14);
        }
    }

    #[test]
    fn matern_has_no_closed_form_system() {
        let spec = KernelSpec::matern(crate::kernels::MaternNu::Half, 1.0).unwrap();
        assert!(matches!(EigenSystem::from_kernel(&spec, &[DEFAULT_ALPHA]), Err(Error::Unsupported(_))));
        let g = KernelSpec::gaussian(1.0, vec![1.0, 2.0]).unwrap();
        let sys = EigenSystem::from_kernel(&g, &[DEFAULT_ALPHA]).unwrap();
        assert_eq!(sys.dim(), 2);
        assert!(EigenSystem::from_kernel(&g, &[1.0, 1.0, 1.0]).is_err());
    }
}
