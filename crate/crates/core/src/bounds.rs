//! Closed-form rank and KL bounds for low-rank GP approximations.
//!
//! The formulas hold up to unspecified constants. Each one is a field of
//! [`BoundConstants`] and defaults to 1.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{check_square, check_symmetric, sym_eigenvalues_desc};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundConstants {
    /// Multiplier of the random Fourier feature rank.
    pub c0: f64,
    /// Multiplier of `m` for the Gaussian kernel when `R ≥ c`.
    pub c1: f64,
    /// Multiplier of `m` for the Gaussian kernel when `R < c`.
    pub c2: f64,
    /// Matérn rank prefactor `A`.
    pub a: f64,
    /// Matérn exponent constant: the rank grows as `(1/(εσδ))^{c·D/ν}`.
    pub c_exp: f64,
    /// Matérn eigenvalue envelope `λ_m ≤ C m^{-(2ν+D)/D}`.
    pub matern_c: f64,
    /// Index from which the Matérn envelope holds.
    pub s0: f64,
}

impl Default for BoundConstants {
    fn default() -> Self {
        BoundConstants {
            c0: 1.0,
            c1: 1.0,
            c2: 1.0,
            a: 1.0,
            c_exp: 1.0,
            matern_c: 1.0,
            s0: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundParams {
    pub n: usize,
    pub sigma_sq: f64,
    pub eps: f64,
    pub delta: f64,
    /// Data diameter, or the scale of the input measure.
    pub r: f64,
    pub dim: usize,
    /// Upper bound on the kernel diagonal.
    pub b: f64,
    pub nu: f64,
    pub alpha: f64,
    pub constants: BoundConstants,
}

impl Default for BoundParams {
    fn default() -> Self {
        BoundParams {
            n: 1000,
            sigma_sq: 1.0,
            eps: 0.1,
            delta: 0.1,
            r: 1.0,
            dim: 1,
            b: 1.0,
            nu: 0.5,
            alpha: 1.0,
            constants: BoundConstants::default(),
        }
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("{name} must be positive and finite, got {v}")))
    }
}

impl BoundParams {
    /// Checks the ranges shared by every rank formula.
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::invalid("N must be at least 1"));
        }
        if self.dim == 0 {
            return Err(Error::invalid("D must be at least 1"));
        }
        positive("sigma_sq", self.sigma_sq)?;
        positive("R", self.r)?;
        positive("B", self.b)?;
        if !(self.eps > 0.0 && self.eps <= 0.5) {
            return Err(Error::invalid(format!("eps must lie in (0, 0.5], got {}", self.eps)));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::invalid(format!("delta must lie in (0, 1), got {}", self.delta)));
        }
        let c = &self.constants;
        for (name, v) in [
            ("c0", c.c0),
            ("c1", c.c1),
            ("c2", c.c2),
            ("A", c.a),
            ("c_exp", c.c_exp),
            ("C", c.matern_c),
            ("s0", c.s0),
        ] {
            positive(name, v)?;
        }
        Ok(())
    }

    fn log_inv_esd(&self) -> f64 {
        -(self.eps * self.sigma_sq.sqrt() * self.delta).ln()
    }
}

fn to_rank(v: f64) -> Result<u64> {
    let c = v.ceil();
    if !c.is_finite() || c >= u64::MAX as f64 {
        return Err(Error::invalid(format!("rank bound {v:e} does not fit in an integer")));
    }
    Ok(c.max(0.0) as u64)
}

/// Random Fourier feature rank for KL at most `εN` with the isotropic Gaussian kernel.
pub fn rank_bound_fourier(p: &BoundParams) -> Result<u64> {
    p.validate()?;
    let n = p.n as f64;
    let log_ns = (n / p.sigma_sq).ln();
    let log_nd = (n / p.delta).ln();
    if !(log_ns > 0.0) || !(log_nd > 0.0) {
        return Err(Error::invalid(format!(
            "N/σ² = {} and N/δ = {} must both exceed 1",
            n / p.sigma_sq,
            n / p.delta
        )));
    }
    let d = p.dim as f64;
    if d > 5.0 * log_ns + 1.0 {
        return Err(Error::invalid(format!("D = {} exceeds 5·log(N/σ²) + 1 = {}", p.dim, 5.0 * log_ns + 1.0)));
    }
    let v = p.constants.c0 * p.r.powf(d) / (p.eps * p.eps) * log_ns.powf(2.0 * d) * log_nd;
    to_rank(v)
}

fn check_tail(n: usize, delta: f64, b: f64, tail: f64) -> Result<()> {
    if n == 0 {
        return Err(Error::invalid("N must be at least 1"));
    }
    if !(tail >= 0.0 && tail.is_finite()) {
        return Err(Error::invalid(format!("eigenvalue tail must be non-negative, got {tail}")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::invalid(format!("delta must lie in (0, 1), got {delta}")));
    }
    positive("B", b)
}

/// `N(Λ + √(BΛ/(Nδ)))`, a high-probability bound on `Tr(K - Σ_r)`.
pub fn braun_trace_bound(n: usize, b: f64, delta: f64, tail: f64) -> Result<f64> {
    check_tail(n, delta, b, tail)?;
    let nf = n as f64;
    Ok(nf * (tail + (b * tail / (nf * delta)).sqrt()))
}

/// KL bound for Mercer truncation given the eigenvalue tail `Λ_{>r}`.
pub fn kl_bound_mercer(n: usize, sigma_sq: f64, b: f64, delta: f64, tail: f64) -> Result<f64> {
    positive("sigma_sq", sigma_sq)?;
    Ok(braun_trace_bound(n, b, delta, tail)? / (2.0 * sigma_sq))
}

/// Level count `m` for the Gaussian kernel under a Gaussian measure of scale `R`.
///
/// For `R ≥ c` this is `c₁(RD·log(max(RD, e)) + R·log(1/(εσδ)))`. Below the
/// threshold the `log(1/R)`-scaled form applies:
/// `c₂(D/log(1/R)·max(log(D/log(1/R)), log(2/R²)) + log(1/(εσδ))/log(1/R))`.
pub fn mercer_gaussian_levels(p: &BoundParams, c_threshold: f64) -> Result<f64> {
    p.validate()?;
    if !(c_threshold > 0.0 && c_threshold < 1.0) {
        return Err(Error::invalid(format!("regime threshold c must lie in (0, 1), got {c_threshold}")));
    }
    let d = p.dim as f64;
    let r = p.r;
    let l = p.log_inv_esd();
    if r >= c_threshold {
        let rd = r * d;
        Ok(p.constants.c1 * (rd * rd.max(std::f64::consts::E).ln() + r * l))
    } else {
        let lr = (1.0 / r).ln();
        let inner = (d / lr).ln().max((2.0 / (r * r)).ln());
        Ok(p.constants.c2 * (d / lr * inner + l / lr))
    }
}

/// Mercer truncation rank `m^D` for the Gaussian kernel.
pub fn rank_bound_mercer_gaussian(p: &BoundParams, c_threshold: f64) -> Result<u64> {
    let m = mercer_gaussian_levels(p, c_threshold)?;
    to_rank(m.powi(p.dim as i32))
}

/// Mercer truncation rank `max(s₀, A(1/(εσδ))^{c·D/ν})` for a Matérn kernel.
pub fn rank_bound_mercer_matern(p: &BoundParams) -> Result<u64> {
    p.validate()?;
    positive("nu", p.nu)?;
    positive("alpha", p.alpha)?;
    let c = &p.constants;
    let exponent = c.c_exp * p.dim as f64 / p.nu;
    let v = c.a * (1.0 / (p.eps * p.sigma_sq.sqrt() * p.delta)).powf(exponent);
    to_rank(v.max(c.s0))
}

/// Integral bound `C·(D/2ν)·r^{-2ν/D}` on the Matérn eigenvalue tail.
pub fn matern_tail_bound(r: usize, c: f64, nu: f64, dim: usize, s0: f64) -> Result<f64> {
    positive("C", c)?;
    positive("nu", nu)?;
    if dim == 0 {
        return Err(Error::invalid("D must be at least 1"));
    }
    if !((r as f64) >= s0) {
        return Err(Error::invalid(format!("rank {r} is below the envelope start s0 = {s0}")));
    }
    let d = dim as f64;
    Ok(c * d / (2.0 * nu) * (r as f64).powf(-2.0 * nu / d))
}

/// `Tr((σ²I + K)⁻¹ K)`.
pub fn effective_dimension(k: &DMatrix<f64>, sigma_sq: f64) -> Result<f64> {
    positive("sigma_sq", sigma_sq)?;
    check_square(k, "kernel matrix")?;
    check_symmetric(k, "kernel matrix")?;
    Ok(sym_eigenvalues_desc(k)
        .into_iter()
        .map(|l| {
            let l = l.max(0.0);
            l / (sigma_sq + l)
        })
        .sum())
}
