//! KL divergences between multivariate Gaussians, upper bounds on them, and the
//! parameter closeness implied by a small divergence.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{add_diagonal, check_symmetric, chol_logdet, cholesky, min_eigenvalue, spectral_norm_sym};

/// Relative tolerance for the PSD preconditions of the bounds, scaled by the spectral norm.
pub const PSD_RTOL: f64 = 1e-8;

/// Two Gaussians `N(μ₁, S₁)` and `N(μ₂, S₂)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianPair {
    pub mu1: DVector<f64>,
    pub s1: DMatrix<f64>,
    pub mu2: DVector<f64>,
    pub s2: DMatrix<f64>,
}

impl GaussianPair {
    pub fn new(mu1: DVector<f64>, s1: DMatrix<f64>, mu2: DVector<f64>, s2: DMatrix<f64>) -> Result<Self> {
        check_symmetric(&s1, "first covariance")?;
        check_symmetric(&s2, "second covariance")?;
        let n = s1.nrows();
        for (len, ctx) in [(s2.nrows(), "second covariance"), (mu1.len(), "first mean"), (mu2.len(), "second mean")] {
            if len != n {
                return Err(Error::DimensionMismatch {
                    context: ctx,
                    expected: n,
                    found: len,
                });
            }
        }
        Ok(GaussianPair { mu1, s1, mu2, s2 })
    }

    pub fn zero_mean(s1: DMatrix<f64>, s2: DMatrix<f64>) -> Result<Self> {
        let n = s1.nrows();
        Self::new(DVector::zeros(n), s1, DVector::zeros(n), s2)
    }

    pub fn dim(&self) -> usize {
        self.s1.nrows()
    }

    pub fn kl(&self) -> Result<f64> {
        kl_full(&self.mu1, &self.s1, &self.mu2, &self.s2)
    }
}

fn same_shape(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(Error::DimensionMismatch {
            context: "covariance pair",
            expected: a.nrows(),
            found: b.nrows(),
        });
    }
    Ok(())
}

/// `KL(N(0, S₁) ‖ N(0, S₂)) = ½(Tr(S₂⁻¹S₁) - N + ln|S₂|/|S₁|)`.
pub fn kl_zero_mean(s1: &DMatrix<f64>, s2: &DMatrix<f64>) -> Result<f64> {
    let n = s1.nrows();
    kl_full(&DVector::zeros(n), s1, &DVector::zeros(n), s2)
}

pub fn kl_full(mu1: &DVector<f64>, s1: &DMatrix<f64>, mu2: &DVector<f64>, s2: &DMatrix<f64>) -> Result<f64> {
    check_symmetric(s1, "first covariance")?;
    check_symmetric(s2, "second covariance")?;
    same_shape(s1, s2)?;
    if mu1.len() != s1.nrows() || mu2.len() != s1.nrows() {
        return Err(Error::DimensionMismatch {
            context: "mean vectors",
            expected: s1.nrows(),
            found: mu1.len().max(mu2.len()),
        });
    }
    let c1 = cholesky(s1.clone(), "first covariance")?;
    let c2 = cholesky(s2.clone(), "second covariance")?;
    let l2 = c2.l();
    let m = l2
        .solve_lower_triangular(&c1.l())
        .ok_or_else(|| Error::Factorization("second covariance: singular factor".into()))?;
    let diff = mu2 - mu1;
    let w = l2
        .solve_lower_triangular(&diff)
        .ok_or_else(|| Error::Factorization("second covariance: singular factor".into()))?;
    let n = s1.nrows() as f64;
    Ok(0.5 * (m.norm_squared() - n + chol_logdet(&c2) - chol_logdet(&c1) + w.norm_squared()))
}

/// Outcome of testing `A ⪰ B`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Domination {
    pub dominates: bool,
    pub min_eig: f64,
}

/// Whether `A - B` has smallest eigenvalue at least `-tol`.
pub fn check_psd_domination(a: &DMatrix<f64>, b: &DMatrix<f64>, tol: f64) -> Result<Domination> {
    check_symmetric(a, "dominating matrix")?;
    check_symmetric(b, "dominated matrix")?;
    same_shape(a, b)?;
    let min_eig = min_eigenvalue(&(a - b));
    Ok(Domination {
        dominates: min_eig >= -tol,
        min_eig,
    })
}

fn require_domination(a: &DMatrix<f64>, b: &DMatrix<f64>, what: &str) -> Result<()> {
    let tol = PSD_RTOL * spectral_norm_sym(a).max(spectral_norm_sym(b)).max(f64::MIN_POSITIVE);
    let d = check_psd_domination(a, b, tol)?;
    if !d.dominates {
        return Err(Error::Precondition {
            what: what.to_string(),
            min_eigenvalue: d.min_eig,
        });
    }
    Ok(())
}

fn check_gamma(gamma: f64) -> Result<()> {
    if !(gamma >= 0.0 && gamma.is_finite()) {
        return Err(Error::invalid(format!("gamma must be a non-negative number, got {gamma}")));
    }
    Ok(())
}

/// `½ Tr(S₂^{-1/2}(S₁ - (1-γ)S₂)S₂^{-1/2})`, valid when `(1+γ)S₁ ⪰ S₂`.
pub fn kl_bound_trace(s1: &DMatrix<f64>, s2: &DMatrix<f64>, gamma: f64) -> Result<f64> {
    check_gamma(gamma)?;
    check_symmetric(s1, "first covariance")?;
    check_symmetric(s2, "second covariance")?;
    same_shape(s1, s2)?;
    require_domination(&(s1 * (1.0 + gamma)), s2, "(1+γ)S₁ - S₂ must be positive semi-definite")?;
    let c2 = cholesky(s2.clone(), "second covariance")?;
    let trace = c2.solve(s1).trace();
    Ok(0.5 * (trace - (1.0 - gamma) * s1.nrows() as f64))
}

/// `γN`, valid when `(1+γ)⁻¹S₁ ⪯ S₂ ⪯ (1+γ)S₁`.
pub fn kl_bound_gamma_n(gamma: f64, n: usize) -> f64 {
    gamma * n as f64
}

/// `(2σ²)⁻¹ Tr(K₁ - (1-γ)K₂ + γσ²I)`, valid when `(1+γ)(σ²I + K₁) ⪰ σ²I + K₂`.
pub fn kl_bound_noise_trace(k1: &DMatrix<f64>, k2: &DMatrix<f64>, gamma: f64, sigma_sq: f64) -> Result<f64> {
    check_gamma(gamma)?;
    if !(sigma_sq > 0.0) {
        return Err(Error::invalid(format!("noise variance must be positive, got {sigma_sq}")));
    }
    check_symmetric(k1, "first kernel matrix")?;
    check_symmetric(k2, "second kernel matrix")?;
    same_shape(k1, k2)?;
    let a = add_diagonal(k1.clone(), sigma_sq) * (1.0 + gamma);
    let b = add_diagonal(k2.clone(), sigma_sq);
    require_domination(&a, &b, "(1+γ)(σ²I + K₁) - (σ²I + K₂) must be positive semi-definite")?;
    let n = k1.nrows() as f64;
    Ok((k1.trace() - (1.0 - gamma) * k2.trace() + gamma * sigma_sq * n) / (2.0 * sigma_sq))
}

/// Eigenvalues of `S₂^{-1/2} S₁ S₂^{-1/2}`, ascending.
pub fn relative_eigenvalues(s1: &DMatrix<f64>, s2: &DMatrix<f64>) -> Result<Vec<f64>> {
    check_symmetric(s1, "first covariance")?;
    check_symmetric(s2, "second covariance")?;
    same_shape(s1, s2)?;
    let l2 = cholesky(s2.clone(), "second covariance")?.l();
    let a = l2
        .solve_lower_triangular(s1)
        .ok_or_else(|| Error::Factorization("second covariance: singular factor".into()))?;
    let m = l2
        .solve_lower_triangular(&a.transpose())
        .ok_or_else(|| Error::Factorization("second covariance: singular factor".into()))?;
    let mut vals: Vec<f64> = nalgebra::SymmetricEigen::new((&m + m.transpose()) * 0.5)
        .eigenvalues
        .iter()
        .copied()
        .collect();
    vals.sort_by(f64::total_cmp);
    Ok(vals)
}

/// Parameter closeness implied by `KL(N(μ₁,S₁) ‖ N(μ₂,S₂)) ≤ γ`:
/// `b·S₂ ⪯ S₁ ⪯ t·S₂` and `(μ₂-μ₁)ᵀS₂⁻¹(μ₂-μ₁) ≤ 2γ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamSandwich {
    pub gamma: f64,
    /// Smaller root of `x - 1 - ln x = 2γ`.
    pub b_root: f64,
    /// `ln b_root`, finite even when `b_root` underflows.
    pub log_b_root: f64,
    /// Larger root of `x - 1 - ln x = 2γ`.
    pub t_root: f64,
    /// `√(2γ)`.
    pub mahalanobis_bound: f64,
}

impl ParamSandwich {
    /// Closed-form bounds `b ≥ max(1 - 2√γ, e^{-1-2γ})` and `t ≤ 1 + max(√(8γ), 8γ)`.
    pub fn explicit_bounds(&self) -> (f64, f64) {
        let g = self.gamma;
        ((1.0 - 2.0 * g.sqrt()).max((-1.0 - 2.0 * g).exp()), 1.0 + (8.0 * g).sqrt().max(8.0 * g))
    }
}

/// `x - 1 - ln x - c`.
pub fn root_residual(x: f64, c: f64) -> f64 {
    x - 1.0 - x.ln() - c
}

/// Roots of `x - 1 - ln x = 2γ` by bisection on each monotone branch.
pub fn kl_to_param_bounds(gamma: f64) -> Result<ParamSandwich> {
    check_gamma(gamma)?;
    let c = 2.0 * gamma;
    if c == 0.0 {
        return Ok(ParamSandwich {
            gamma,
            b_root: 1.0,
            log_b_root: 0.0,
            t_root: 1.0,
            mahalanobis_bound: 0.0,
        });
    }
    // Left branch in s = ln x: g(s) = e^s - 1 - s - c decreases on (-∞, 0].
    let g = |s: f64| s.exp() - 1.0 - s - c;
    let (mut lo, mut hi) = ((1e-300f64).ln().min(-2.0 - c), 0.0);
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let log_b = if g(lo).abs() < g(hi).abs() { lo } else { hi };

    // Right branch: f(x) = x - 1 - ln x - c increases on [1, ∞).
    let (mut lo, mut hi) = (1.0, 2.0 + 4.0 * c + (4.0 * c).sqrt());
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if root_residual(mid, c) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let t = if root_residual(lo, c).abs() < root_residual(hi, c).abs() { lo } else { hi };
    Ok(ParamSandwich {
        gamma,
        b_root: log_b.exp(),
        log_b_root: log_b,
        t_root: t,
        mahalanobis_bound: c.sqrt(),
    })
}

/// Chain-rule split of a joint KL into the first block's marginal KL and the
/// expected KL between conditionals of the remaining block.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KlDecomposition {
    pub marginal_kl: f64,
    pub expected_conditional_kl: f64,
}

impl KlDecomposition {
    pub fn total(&self) -> f64 {
        self.marginal_kl + self.expected_conditional_kl
    }
}

/// Splits `KL(P ‖ Q)` for joints over `(train, test)`, with the first `n_train`
/// coordinates forming the training block, into
/// `KL(P_train ‖ Q_train) + E_{P_train}[KL(P_test|train ‖ Q_test|train)]`.
pub fn predictive_kl_decomposition(pair: &GaussianPair, n_train: usize) -> Result<KlDecomposition> {
    let n = pair.dim();
    if n_train == 0 || n_train >= n {
        return Err(Error::invalid(format!("training block size {n_train} must lie in 1..{n}")));
    }
    let nt = n - n_train;
    let block = |s: &DMatrix<f64>| {
        (
            s.view((0, 0), (n_train, n_train)).into_owned(),
            s.view((n_train, 0), (nt, n_train)).into_owned(),
            s.view((n_train, n_train), (nt, nt)).into_owned(),
        )
    };
    let (a1, ta1, t1) = block(&pair.s1);
    let (a2, ta2, t2) = block(&pair.s2);
    let mu1a = pair.mu1.rows(0, n_train).into_owned();
    let mu2a = pair.mu2.rows(0, n_train).into_owned();
    let mu1t = pair.mu1.rows(n_train, nt).into_owned();
    let mu2t = pair.mu2.rows(n_train, nt).into_owned();

    let marginal_kl = kl_full(&mu1a, &a1, &mu2a, &a2)?;

    let ca1 = cholesky(a1.clone(), "first training block")?;
    let ca2 = cholesky(a2.clone(), "second training block")?;
    let b1 = ca1.solve(&ta1.transpose()).transpose();
    let b2 = ca2.solve(&ta2.transpose()).transpose();
    let sym = |m: DMatrix<f64>| (&m + m.transpose()) * 0.5;
    let c1 = sym(&t1 - &b1 * ta1.transpose());
    let c2 = sym(&t2 - &b2 * ta2.transpose());
    let cov_kl = kl_zero_mean(&c1, &c2)?;

    let offset = &mu2t - &mu1t + &b2 * (&mu1a - &mu2a);
    let db = &b2 - &b1;
    let cc2 = cholesky(c2, "second conditional covariance")?;
    let quad = offset.dot(&cc2.solve(&offset));
    let spread = cc2.solve(&(&db * &a1 * db.transpose())).trace();
    Ok(KlDecomposition {
        marginal_kl,
        expected_conditional_kl: cov_kl + 0.5 * (quad + spread),
    })
}
