//! Interval algebra: dyadic intervals, partitions, and the exhaustive
//! enumeration of dyadic partitions used as a test oracle.

use crate::error::{Error, Result};
use crate::seq::dyadic_levels;

/// A dyadic interval, addressed by its level `j` and position `k` in the
/// binary tree over `{1,…,n}`. At level `j` the tree has `2^j` nodes and
/// each covers `2^(N-j)` indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DyadicInterval {
    level: u32,
    position: usize,
}

impl DyadicInterval {
    pub fn new(level: u32, position: usize) -> Result<Self> {
        if level >= usize::BITS || position >= (1usize << level) {
            return Err(Error::invalid(format!(
                "position {position} out of range at level {level}"
            )));
        }
        Ok(DyadicInterval { level, position })
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn position(&self) -> usize {
        self.position
    }

    /// The 1-based half-open index range `[a, b)` covered inside `{1,…,n}`,
    /// i.e. the index set `{k·2^(N-j)+1, …, (k+1)·2^(N-j)}`.
    pub fn index_range(&self, n: usize) -> Result<(usize, usize)> {
        let levels = dyadic_levels(n)?;
        if self.level > levels {
            return Err(Error::invalid(format!(
                "level {} exceeds tree depth {levels}",
                self.level
            )));
        }
        let len = n >> self.level;
        let a = self.position * len + 1;
        Ok((a, a + len))
    }

    /// Interval length `2^(N-j)`.
    pub fn len(&self, n: usize) -> Result<usize> {
        let levels = dyadic_levels(n)?;
        if self.level > levels {
            return Err(Error::invalid(format!(
                "level {} exceeds tree depth {levels}",
                self.level
            )));
        }
        Ok(n >> self.level)
    }
}

/// An ordered partition of `{1,…,n}` into intervals, stored as strictly
/// increasing breakpoints `1 = i_1 < … < i_{D+1} = n + 1`. The number of
/// segments `D` is its dimension.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    breakpoints: Vec<usize>,
}

impl Partition {
    pub fn new(breakpoints: Vec<usize>) -> Result<Self> {
        if breakpoints.len() < 2 {
            return Err(Error::invalid("a partition needs at least two breakpoints"));
        }
        if breakpoints[0] != 1 {
            return Err(Error::invalid("first breakpoint must be 1"));
        }
        if !breakpoints.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::invalid("breakpoints must be strictly increasing"));
        }
        Ok(Partition { breakpoints })
    }

    /// The one-segment partition of `{1,…,n}`.
    pub fn single(n: usize) -> Self {
        Partition { breakpoints: vec![1, n + 1] }
    }

    /// The all-singletons partition of `{1,…,n}`.
    pub fn singletons(n: usize) -> Self {
        Partition { breakpoints: (1..=n + 1).collect() }
    }

    pub fn n(&self) -> usize {
        self.breakpoints[self.breakpoints.len() - 1] - 1
    }

    /// Number of segments.
    pub fn dimension(&self) -> usize {
        self.breakpoints.len() - 1
    }

    pub fn breakpoints(&self) -> &[usize] {
        &self.breakpoints
    }

    /// Iterates the segments as 1-based half-open pairs `(i_k, i_{k+1})`.
    pub fn segments(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.breakpoints.windows(2).map(|w| (w[0], w[1]))
    }

    /// True when every segment is a dyadic interval of `{1,…,n}`.
    pub fn is_dyadic(&self) -> bool {
        let n = self.n();
        if !n.is_power_of_two() {
            return false;
        }
        self.segments().all(|(a, b)| {
            let len = b - a;
            len.is_power_of_two() && (a - 1) % len == 0
        })
    }

    /// True when every breakpoint of `other` is also a breakpoint of
    /// `self`, i.e. `self` refines `other`.
    pub fn refines(&self, other: &Partition) -> bool {
        other
            .breakpoints
            .iter()
            .all(|b| self.breakpoints.binary_search(b).is_ok())
    }
}

/// Maximal length for the exhaustive enumeration below.
const ENUMERATION_LIMIT: usize = 1 << 12;

/// Enumerates every partition of `{1,…,n}` into dyadic intervals, each
/// exactly once. The count grows doubly exponentially (`T(n) = 1 +
/// T(n/2)^2`), so this is a small-n oracle; lengths above `2^12` are
/// rejected outright and anything beyond `n = 64` is impractical anyway.
pub fn enumerate_dyadic_partitions(n: usize) -> Result<Vec<Partition>> {
    dyadic_levels(n)?;
    if n > ENUMERATION_LIMIT {
        return Err(Error::ResourceLimit(format!(
            "dyadic partition enumeration is limited to n <= {ENUMERATION_LIMIT}, got {n}"
        )));
    }
    Ok(enumerate_block(1, n)
        .into_iter()
        .map(|bps| Partition { breakpoints: bps })
        .collect())
}

/// All breakpoint lists partitioning the block `[start, start + len)` into
/// dyadic intervals: the block itself, or any combination of left and
/// right half partitions.
fn enumerate_block(start: usize, len: usize) -> Vec<Vec<usize>> {
    if len == 1 {
        return vec![vec![start, start + 1]];
    }
    let half = len / 2;
    let mut out = vec![vec![start, start + len]];
    let left = enumerate_block(start, half);
    let right = enumerate_block(start + half, half);
    for l in &left {
        for r in &right {
            let mut combined = l.clone();
            combined.extend_from_slice(&r[1..]);
            out.push(combined);
        }
    }
    out
}
