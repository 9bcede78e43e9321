//! Eigenvalue tail sums `Λ_{>r} = Σ_{t>r} λ_t` for the closed-form system.

use std::collections::HashSet;

use super::index::{binomial, level_indices, MultiIndex};
use super::EigenSystem;
use crate::error::{Error, Result};

pub const DEFAULT_TAIL_TOL: f64 = 1e-12;

/// Tail after keeping the first `r` indices of `sys`'s ordering.
pub fn gaussian_tail_sum(sys: &EigenSystem, r: usize, tol: f64) -> Result<f64> {
    tail_sum_excluding(sys, &sys.indices(r), tol)
}

/// Tail after keeping the level set `{n : 𝟙ᵀn < m}`.
pub fn level_set_tail_sum(sys: &EigenSystem, m: usize, tol: f64) -> Result<f64> {
    check_tol(tol)?;
    Ok(closed_form_levels_from(sys, m.max(sys.dim()), tol))
}

/// Sum of every eigenvalue whose multi-index is not in `kept`.
///
/// Levels touched by `kept` are summed term by term. Every higher level is summed
/// in closed form, `σ_f² Π λ₁ · h_{ℓ-d}(q)` with `h_k` the complete homogeneous
/// symmetric polynomial, until a geometric bound on the remaining levels drops
/// below `tol`; that bound is then added so the result never underestimates.
pub fn tail_sum_excluding(sys: &EigenSystem, kept: &[MultiIndex], tol: f64) -> Result<f64> {
    check_tol(tol)?;
    let d = sys.dim();
    let mut set: HashSet<&[usize]> = HashSet::with_capacity(kept.len());
    for n in kept {
        sys.check_index(n)?;
        set.insert(n.as_slice());
    }
    let max_level = kept.iter().map(|n| n.total_degree()).max().unwrap_or(d - 1);
    let mut partial = 0.0;
    for level in d..=max_level {
        for n in level_indices(d, level) {
            if !set.contains(n.as_slice()) {
                partial += sys.eigenvalue_unchecked(n.as_slice());
            }
        }
    }
    Ok(partial + closed_form_levels_from(sys, max_level + 1, tol))
}

fn check_tol(tol: f64) -> Result<()> {
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Error::invalid(format!("tail tolerance must be positive, got {tol}")));
    }
    Ok(())
}

/// `Σ_{ℓ ≥ first_level} Σ_{𝟙ᵀn = ℓ} λ_n` plus a remainder bound below `tol`.
fn closed_form_levels_from(sys: &EigenSystem, first_level: usize, tol: f64) -> f64 {
    let d = sys.dim();
    let q: Vec<f64> = sys.bases.iter().map(|b| b.ratio).collect();
    let q_max = q.iter().copied().fold(0.0, f64::max);
    let base = sys.lambda_product();

    // h[j] holds h_k(q_1, …, q_j) for the current k; h[0] = [k == 0].
    let mut h = vec![1.0; d + 1];
    let mut k = 0usize;
    let advance = |h: &mut Vec<f64>| {
        h[0] = 0.0;
        for j in 1..=d {
            h[j] = h[j - 1] + q[j - 1] * h[j];
        }
    };
    while k + d < first_level {
        advance(&mut h);
        k += 1;
    }

    let mut total = 0.0;
    loop {
        total += base * h[d];
        let next = (k + d + 1) as f64;
        let ratio = next / (next - d as f64 + 1.0) * q_max;
        if ratio < 1.0 {
            let lead = binomial(k + d, d - 1) * q_max.powi(k as i32 + 1);
            let remainder = base * lead / (1.0 - ratio);
            if remainder < tol {
                return total + remainder;
            }
        }
        advance(&mut h);
        k += 1;
    }
}
