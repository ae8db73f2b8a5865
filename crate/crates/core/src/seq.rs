//! Categorical observation sequences and their cumulative count tables.

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// A sequence of `n` categorical observations with labels in `{1,…,r}`.
///
/// The underlying indicator matrix (column `i` is the unit vector of label
/// `Y_i`) is never materialized; segment statistics are answered in `O(r)`
/// through [`PrefixCounts`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CategorySequence {
    values: Vec<u32>,
    r: usize,
}

impl CategorySequence {
    /// Builds a sequence from 1-based labels, validating `2 <= r` and that
    /// every label lies in `{1,…,r}`.
    pub fn new(values: Vec<u32>, r: usize) -> Result<Self> {
        if r < 2 {
            return Err(Error::invalid(format!("alphabet size must be >= 2, got {r}")));
        }
        if values.is_empty() {
            return Err(Error::invalid("sequence must contain at least one observation"));
        }
        if values.len() > u32::MAX as usize {
            return Err(Error::ResourceLimit("sequence length exceeds u32 range".into()));
        }
        if let Some(&bad) = values.iter().find(|&&v| v < 1 || v as usize > r) {
            return Err(Error::invalid(format!(
                "label {bad} outside alphabet 1..={r}"
            )));
        }
        Ok(CategorySequence { values, r })
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn r(&self) -> usize {
        self.r
    }

    /// 1-based labels.
    pub fn values(&self) -> &[u32] {
        &self.values
    }

    /// Number of dyadic levels `N` with `n = 2^N`, or an error when the
    /// length is not a power of two.
    pub fn dyadic_levels(&self) -> Result<u32> {
        dyadic_levels(self.n())
    }

    /// Materializes the `r x n` indicator matrix whose column `i` is the
    /// unit vector of `Y_i`. Intended for small-n checks; the estimators
    /// never build it.
    pub fn indicator_matrix(&self) -> Matrix {
        let mut m = Matrix::zeros(self.r, self.n());
        for (i, &v) in self.values.iter().enumerate() {
            m.set(v as usize - 1, i, 1.0);
        }
        m
    }
}

pub(crate) fn dyadic_levels(n: usize) -> Result<u32> {
    if n == 0 || !n.is_power_of_two() {
        return Err(Error::invalid(format!("length {n} is not a power of two")));
    }
    Ok(n.trailing_zeros())
}

/// Cumulative per-category counts: row `i` holds `#{k <= i : Y_k = l}` for
/// each label `l`, with row 0 all zeros.
#[derive(Debug, Clone)]
pub struct PrefixCounts {
    table: Vec<u32>,
    n: usize,
    r: usize,
}

/// Tabulates the cumulative counts of a sequence in one pass.
pub fn prefix_counts(seq: &CategorySequence) -> PrefixCounts {
    let n = seq.n();
    let r = seq.r();
    let mut table = vec![0u32; (n + 1) * r];
    for (i, &v) in seq.values().iter().enumerate() {
        let (prev, cur) = table[i * r..(i + 2) * r].split_at_mut(r);
        cur.copy_from_slice(prev);
        cur[v as usize - 1] += 1;
    }
    PrefixCounts { table, n, r }
}

impl PrefixCounts {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn r(&self) -> usize {
        self.r
    }

    /// Row `i` of the table, `0 <= i <= n`.
    pub fn row(&self, i: usize) -> &[u32] {
        &self.table[i * self.r..(i + 1) * self.r]
    }

    fn check_segment(&self, i: usize, j: usize) -> Result<()> {
        if i < 1 || i >= j || j > self.n + 1 {
            return Err(Error::invalid(format!(
                "segment [{i}, {j}) is not a valid non-empty segment of 1..={}",
                self.n
            )));
        }
        Ok(())
    }

    /// Per-category counts over the segment `[i, j)`, 1-based half-open.
    pub fn segment_counts(&self, i: usize, j: usize) -> Result<Vec<u32>> {
        self.check_segment(i, j)?;
        let hi = self.row(j - 1);
        let lo = self.row(i - 1);
        Ok(hi.iter().zip(lo).map(|(&h, &l)| h - l).collect())
    }

    /// Mean of the indicator columns over `[i, j)`: the empirical category
    /// frequencies of the segment. Entries sum to 1.
    pub fn segment_mean(&self, i: usize, j: usize) -> Result<Vec<f64>> {
        let counts = self.segment_counts(i, j)?;
        let len = (j - i) as f64;
        Ok(counts.into_iter().map(|c| c as f64 / len).collect())
    }

    /// Least-squares cost of fitting the segment `[i, j)` by its mean
    /// column. Each indicator column has unit squared norm, so the cost
    /// collapses to `(j - i) - |c|^2 / (j - i)` where `c` is the count
    /// vector; it is always >= 0.
    pub fn segment_cost(&self, i: usize, j: usize) -> Result<f64> {
        self.check_segment(i, j)?;
        Ok(self.cost_unchecked(i, j))
    }

    #[inline]
    pub(crate) fn cost_unchecked(&self, i: usize, j: usize) -> f64 {
        let hi = &self.table[(j - 1) * self.r..(j - 1) * self.r + self.r];
        let lo = &self.table[(i - 1) * self.r..(i - 1) * self.r + self.r];
        let mut sq: u64 = 0;
        for (&h, &l) in hi.iter().zip(lo) {
            let c = (h - l) as u64;
            sq += c * c;
        }
        let len = (j - i) as f64;
        len - sq as f64 / len
    }
}
