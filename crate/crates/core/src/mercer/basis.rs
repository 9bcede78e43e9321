//! One-dimensional Mercer eigensystem of `exp(-ε²(x - x')²)` under the
//! Gaussian measure `ρ(x) = α π^{-1/2} exp(-α² x²)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MercerBasis1D {
    pub alpha: f64,
    pub epsilon_sq: f64,
    pub beta: f64,
    pub delta_sq: f64,
    pub lambda1: f64,
    pub ratio: f64,
}

/// Eigenfunction values of one coordinate, with first derivatives.
#[derive(Debug, Clone, Default)]
pub struct BasisValues {
    /// `values[n - 1] = e_n(x)`.
    pub values: Vec<f64>,
    pub d_dx: Vec<f64>,
    /// Derivative with respect to `ε²`, with `α` held fixed.
    pub d_deps_sq: Vec<f64>,
}

impl MercerBasis1D {
    pub fn new(alpha: f64, epsilon_sq: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::invalid(format!("measure scale alpha must be positive, got {alpha}")));
        }
        if !(epsilon_sq > 0.0 && epsilon_sq.is_finite()) {
            return Err(Error::invalid(format!("epsilon² must be positive, got {epsilon_sq}")));
        }
        let a2 = alpha * alpha;
        let beta_sq = (1.0 + 4.0 * epsilon_sq / a2).sqrt();
        let beta = beta_sq.sqrt();
        let delta_sq = a2 * (beta_sq - 1.0) / 2.0;
        let den = a2 + delta_sq + epsilon_sq;
        Ok(MercerBasis1D {
            alpha,
            epsilon_sq,
            beta,
            delta_sq,
            lambda1: (a2 / den).sqrt(),
            ratio: epsilon_sq / den,
        })
    }

    /// `λ_n = λ₁ q^{n-1}` for `n ≥ 1`.
    pub fn eigenvalue(&self, n: usize) -> f64 {
        debug_assert!(n >= 1);
        self.lambda1 * self.ratio.powi(n as i32 - 1)
    }

    /// Sum of all one-dimensional eigenvalues, `λ₁ / (1 - q)`.
    pub fn eigenvalue_sum(&self) -> f64 {
        self.lambda1 / (1.0 - self.ratio)
    }

    /// `d log λ_n / d ε²`.
    pub fn dlog_eigenvalue_deps_sq(&self, n: usize) -> f64 {
        let a2 = self.alpha * self.alpha;
        let den = a2 + self.delta_sq + self.epsilon_sq;
        let dden = 1.0 / (self.beta * self.beta) + 1.0;
        let dlog_l1 = -0.5 * dden / den;
        let dlog_q = 1.0 / self.epsilon_sq - dden / den;
        dlog_l1 + (n as f64 - 1.0) * dlog_q
    }

    /// `e_n(x) = √β exp(-δ²x²) h_{n-1}(αβx)` for `n = 1..=n_max`, where `h_k` is the
    /// Hermite polynomial normalised by `√(2^k k!)`. The Gaussian envelope is carried
    /// through the recurrence so neither factor overflows on its own.
    pub fn eval_all(&self, n_max: usize, x: f64) -> Vec<f64> {
        let y = self.alpha * self.beta * x;
        let envelope = self.beta.sqrt() * (-self.delta_sq * x * x).exp();
        let mut out = Vec::with_capacity(n_max);
        if n_max == 0 {
            return out;
        }
        let mut prev = envelope;
        out.push(prev);
        if n_max == 1 {
            return out;
        }
        let mut cur = std::f64::consts::SQRT_2 * y * envelope;
        out.push(cur);
        for k in 1..(n_max - 1) {
            let kf = k as f64;
            let next = (2.0 / (kf + 1.0)).sqrt() * y * cur - (kf / (kf + 1.0)).sqrt() * prev;
            prev = cur;
            cur = next;
            out.push(cur);
        }
        out
    }

    pub fn eval(&self, n: usize, x: f64) -> Result<f64> {
        if n == 0 {
            return Err(Error::invalid("eigenfunction index must be ≥ 1"));
        }
        Ok(self.eval_all(n, x)[n - 1])
    }

    pub fn eval_with_derivatives(&self, n_max: usize, x: f64) -> BasisValues {
        let values = self.eval_all(n_max, x);
        let a2 = self.alpha * self.alpha;
        let b = self.beta;
        let ab = self.alpha * b;
        // Uses h'_k = √(2k) h_{k-1}, so the derivative of e_{n} involves e_{n-1}.
        let dlog_sqrt_beta = 1.0 / (2.0 * a2 * b.powi(4));
        let ddelta_sq = 1.0 / (b * b);
        let dbeta = 1.0 / (a2 * b.powi(3));
        let mut d_dx = Vec::with_capacity(n_max);
        let mut d_deps = Vec::with_capacity(n_max);
        for n in 1..=n_max {
            let k = n - 1;
            let e = values[k];
            let lower = if k == 0 {
                0.0
            } else {
                (2.0 * k as f64).sqrt() * values[k - 1]
            };
            d_dx.push(-2.0 * self.delta_sq * x * e + ab * lower);
            d_deps.push(e * (dlog_sqrt_beta - x * x * ddelta_sq) + lower * self.alpha * x * dbeta);
        }
        BasisValues {
            values,
            d_dx,
            d_deps_sq: d_deps,
        }
    }
}

/// Physicists' Hermite polynomial `H_n(x)` by the three-term recurrence.
pub fn hermite_eval(n: usize, x: f64) -> f64 {
    let mut prev = 1.0;
    if n == 0 {
        return prev;
    }
    let mut cur = 2.0 * x;
    for k in 1..n {
        let next = 2.0 * x * cur - 2.0 * k as f64 * prev;
        prev = cur;
        cur = next;
    }
    cur
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn constants_golden_ratio_case() {
        let b = MercerBasis1D::new(1.0, 1.0).unwrap();
        assert_relative_eq!(b.beta, 1.495_348_781_221_220_5, max_relative = 1e-14);
        assert_relative_eq!(b.delta_sq, 0.618_033_988_749_894_8, max_relative = 1e-14);
        assert_relative_eq!(b.lambda1, 0.618_033_988_749_894_8, max_relative = 1e-14);
        assert_relative_eq!(b.ratio, 0.381_966_011_250_105_2, max_relative = 1e-14);
        assert_relative_eq!(b.eigenvalue_sum(), 1.0, max_relative = 1e-14);
    }

    #[test]
    fn constants_standard_measure_case() {
        let b = MercerBasis1D::new(std::f64::consts::FRAC_1_SQRT_2, 1.0).unwrap();
        assert_relative_eq!(b.beta, 3.0f64.sqrt(), max_relative = 1e-14);
        assert_relative_eq!(b.delta_sq, 0.5, max_relative = 1e-14);
        assert_relative_eq!(b.lambda1, 0.5, max_relative = 1e-14);
        assert_relative_eq!(b.ratio, 0.5, max_relative = 1e-14);
    }

    #[test]
    fn flat_kernel_limit() {
        let b = MercerBasis1D::new(1.0, 1e-12).unwrap();
        assert!(b.ratio < 1e-11);
        assert_relative_eq!(b.lambda1, 1.0, max_relative = 1e-10);
    }

    #[test]
    fn rejects_non_positive() {
        assert!(MercerBasis1D::new(0.0, 1.0).is_err());
        assert!(MercerBasis1D::new(1.0, -1.0).is_err());
        assert!(MercerBasis1D::new(f64::NAN, 1.0).is_err());
    }

    #[test]
    fn hermite_values() {
        assert_eq!(hermite_eval(0, 3.7), 1.0);
        assert_eq!(hermite_eval(1, 1.25), 2.5);
        assert_eq!(hermite_eval(2, 1.5), 7.0);
        // H_3(x) = 8x³ - 12x
        assert_relative_eq!(hermite_eval(3, 0.7), 8.0 * 0.343 - 12.0 * 0.7, max_relative = 1e-14);
    }

    #[test]
    fn eigenfunction_matches_unnormalised_formula() {
        // γ_n exp(-δ²x²) H_{n-1}(αβx) with γ_n = β^{1/2} 2^{(1-n)/2} Γ(n)^{-1/2}
        let b = MercerBasis1D::new(0.8, 1.3).unwrap();
        let x = 0.37;
        let vals = b.eval_all(8, x);
        let mut fact = 1.0;
        for n in 1..=8usize {
            if n > 1 {
                fact *= (n - 1) as f64;
            }
            let gamma = b.beta.sqrt() * 2f64.powf((1.0 - n as f64) / 2.0) / fact.sqrt();
            let direct = gamma * (-b.delta_sq * x * x).exp() * hermite_eval(n - 1, b.alpha * b.beta * x);
            assert_relative_eq!(vals[n - 1], direct, max_relative = 1e-12, epsilon = 1e-15);
        }
    }

    #[test]
    fn first_eigenfunction_at_origin() {
        let b = MercerBasis1D::new(1.0, 1.0).unwrap();
        assert_relative_eq!(b.eval(1, 0.0).unwrap(), 1.222_844_544_993_851_8, max_relative = 1e-14);
        assert_eq!(b.eval(2, 0.0).unwrap(), 0.0);
        assert!(b.eval(0, 0.0).is_err());
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let b = MercerBasis1D::new(0.9, 0.7).unwrap();
        let x = 0.43;
        let h = 1e-6;
        let d = b.eval_with_derivatives(12, x);
        let xp = b.eval_all(12, x + h);
        let xm = b.eval_all(12, x - h);
        let bp = MercerBasis1D::new(0.9, 0.7 + h).unwrap().eval_all(12, x);
        let bm = MercerBasis1D::new(0.9, 0.7 - h).unwrap().eval_all(12, x);
        for n in 0..12 {
            assert_relative_eq!(d.d_dx[n], (xp[n] - xm[n]) / (2.0 * h), epsilon = 1e-7, max_relative = 1e-6);
            assert_relative_eq!(d.d_deps_sq[n], (bp[n] - bm[n]) / (2.0 * h), epsilon = 1e-7, max_relative = 1e-6);
        }
        let lp = MercerBasis1D::new(0.9, 0.7 + h).unwrap();
        let lm = MercerBasis1D::new(0.9, 0.7 - h).unwrap();
        for n in 1..6 {
            let fd = (lp.eigenvalue(n).ln() - lm.eigenvalue(n).ln()) / (2.0 * h);
            assert_relative_eq!(b.dlog_eigenvalue_deps_sq(n), fd, max_relative = 1e-6);
        }
    }
}
