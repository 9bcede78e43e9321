//! Tensor-product multi-indices and their orderings.

use std::fmt;

use serde::{Deserialize, Serialize};

/// Per-dimension eigenfunction orders `(n_1, …, n_d)`, each `≥ 1`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MultiIndex(pub Vec<usize>);

impl MultiIndex {
    pub fn ones(d: usize) -> Self {
        MultiIndex(vec![1; d])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// `𝟙ᵀn`.
    pub fn total_degree(&self) -> usize {
        self.0.iter().sum()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, n) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{n}")?;
        }
        write!(f, ")")
    }
}

/// All multi-indices of dimension `d` with total degree `level`, lexicographically ascending.
pub fn level_indices(d: usize, level: usize) -> Vec<MultiIndex> {
    let mut out = Vec::new();
    if d == 0 || level < d {
        return out;
    }
    let mut current = Vec::with_capacity(d);
    fill_level(d, level, &mut current, &mut out);
    out
}

fn fill_level(remaining_dims: usize, remaining: usize, current: &mut Vec<usize>, out: &mut Vec<MultiIndex>) {
    if remaining_dims == 1 {
        current.push(remaining);
        out.push(MultiIndex(current.clone()));
        current.pop();
        return;
    }
    for first in 1..=(remaining - (remaining_dims - 1)) {
        current.push(first);
        fill_level(remaining_dims - 1, remaining - first, current, out);
        current.pop();
    }
}

/// First `r` multi-indices ordered by total degree, ties broken lexicographically.
pub fn multi_index_sequence(d: usize, r: usize) -> Vec<MultiIndex> {
    let mut out = Vec::with_capacity(r);
    if d == 0 {
        return out;
    }
    let mut level = d;
    while out.len() < r {
        for idx in level_indices(d, level) {
            if out.len() == r {
                break;
            }
            out.push(idx);
        }
        level += 1;
    }
    out
}

/// `C(n, k)` as a float.
pub(crate) fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (1..=k).fold(1.0, |acc, i| acc * (n - k + i) as f64 / i as f64)
}

/// Number of indices in the level set `{n ∈ ℕ^d : 𝟙ᵀn < m}`, which is `C(m-1, d)`.
pub fn level_set_size(d: usize, m: usize) -> usize {
    if m == 0 || m - 1 < d {
        return 0;
    }
    binomial(m - 1, d).round() as usize
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mi(v: &[usize]) -> MultiIndex {
        MultiIndex(v.to_vec())
    }

    #[test]
    fn sequence_examples() {
        assert_eq!(multi_index_sequence(1, 4), vec![mi(&[1]), mi(&[2]), mi(&[3]), mi(&[4])]);
        assert_eq!(
            multi_index_sequence(2, 6),
            vec![mi(&[1, 1]), mi(&[1, 2]), mi(&[2, 1]), mi(&[1, 3]), mi(&[2, 2]), mi(&[3, 1])]
        );
        assert_eq!(
            multi_index_sequence(3, 4),
            vec![mi(&[1, 1, 1]), mi(&[1, 1, 2]), mi(&[1, 2, 1]), mi(&[2, 1, 1])]
        );
    }

    #[test]
    fn sequence_has_no_duplicates_and_degrees_are_sorted() {
        let seq = multi_index_sequence(3, 200);
        let set: std::collections::HashSet<_> = seq.iter().collect();
        assert_eq!(set.len(), seq.len());
        assert!(seq.windows(2).all(|w| w[0].total_degree() <= w[1].total_degree()));
        assert!(seq.windows(2).all(|w| w[0].total_degree() < w[1].total_degree() || w[0] < w[1]));
    }

    #[test]
    fn level_counts() {
        for d in 1..5 {
            for level in d..(d + 6) {
                assert_eq!(level_indices(d, level).len() as f64, binomial(level - 1, d - 1));
            }
        }
        assert_eq!(level_set_size(1, 5), 4);
        assert_eq!(level_set_size(2, 4), 3);
        assert_eq!(level_set_size(3, 3), 0);
        let total: usize = (3..7).map(|l| level_indices(3, l).len()).sum();
        assert_eq!(level_set_size(3, 7), total);
    }

    #[test]
    fn display() {
        assert_eq!(mi(&[1, 2, 3]).to_string(), "(1,2,3)");
    }
}
