//! Dynamic programming over partitions built on a fixed breakpoint set:
//! the best partition for each number of segments, and penalized selection
//! on top of that table. This is the engine behind the second stage of the
//! hybrid estimator, where the base breakpoints come from a first-stage
//! fit and the collection of candidates is all of its coarsenings.

use crate::error::{Error, Result};
use crate::partition::Partition;

/// Best cost and partition for one segment count.
#[derive(Debug, Clone, PartialEq)]
pub struct DimensionEntry {
    pub dimension: usize,
    pub cost: f64,
    pub partition: Partition,
}

/// The per-dimension optima over partitions drawn from a base breakpoint
/// set, indexed by dimension `1..=d_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct PerDimension {
    entries: Vec<DimensionEntry>,
}

impl PerDimension {
    pub fn entries(&self) -> &[DimensionEntry] {
        &self.entries
    }

    /// Entry for exactly `d` segments, if within the computed range.
    pub fn entry(&self, d: usize) -> Option<&DimensionEntry> {
        if d >= 1 && d <= self.entries.len() {
            Some(&self.entries[d - 1])
        } else {
            None
        }
    }

    pub fn max_dimension(&self) -> usize {
        self.entries.len()
    }
}

fn validate_base(base: &[usize]) -> Result<()> {
    if base.len() < 2 {
        return Err(Error::invalid("base must contain at least two breakpoints"));
    }
    if !base.windows(2).all(|w| w[0] < w[1]) {
        return Err(Error::invalid("base breakpoints must be strictly increasing"));
    }
    Ok(())
}

/// Bellman recursion over the base breakpoints `b_0 < … < b_K`: for every
/// dimension `D` in `1..=min(K, d_max)`, the cheapest partition of
/// `[b_0, b_K)` into exactly `D` segments whose breakpoints are drawn from
/// the base. `cost(a, b)` is called with breakpoint values and must be
/// additive over segments. Runs in `O(K^2 d_max)`.
pub fn best_per_dimension(
    base: &[usize],
    mut cost: impl FnMut(usize, usize) -> f64,
    d_max: usize,
) -> Result<PerDimension> {
    validate_base(base)?;
    if d_max < 1 {
        return Err(Error::invalid("d_max must be at least 1"));
    }
    let k = base.len() - 1;
    let dims = d_max.min(k);

    // cost_table[q][t - q - 1] = cost(base[q], base[t]) for q < t.
    let cost_table: Vec<Vec<f64>> = (0..k)
        .map(|q| (q + 1..=k).map(|t| cost(base[q], base[t])).collect())
        .collect();
    let seg_cost = |q: usize, t: usize| cost_table[q][t - q - 1];

    // best[d][t]: optimal cost of splitting [b_0, b_t) into d+1 segments;
    // arg[d][t]: index of the last interior breakpoint in that optimum.
    let mut best = vec![vec![f64::INFINITY; k + 1]; dims];
    let mut arg = vec![vec![0usize; k + 1]; dims];
    for t in 1..=k {
        best[0][t] = seg_cost(0, t);
    }
    for d in 1..dims {
        for t in (d + 1)..=k {
            let mut best_cost = f64::INFINITY;
            let mut best_q = d;
            for q in d..t {
                let c = best[d - 1][q] + seg_cost(q, t);
                if c < best_cost {
                    best_cost = c;
                    best_q = q;
                }
            }
            best[d][t] = best_cost;
            arg[d][t] = best_q;
        }
    }

    let entries = (1..=dims)
        .map(|dim| {
            let mut cut_indices = vec![k];
            let mut t = k;
            for d in (1..dim).rev() {
                t = arg[d][t];
                cut_indices.push(t);
            }
            cut_indices.push(0);
            cut_indices.reverse();
            let breakpoints: Vec<usize> = cut_indices.iter().map(|&q| base[q]).collect();
            let partition = Partition::new(breakpoints).expect("cuts are increasing");
            DimensionEntry { dimension: dim, cost: best[dim - 1][k], partition }
        })
        .collect();
    Ok(PerDimension { entries })
}

/// Minimizes `cost(D) + penalty(D)` over the per-dimension table, breaking
/// ties toward the smaller dimension. Returns the winning partition and
/// criterion value.
pub fn select_with_penalty(
    per_dim: &PerDimension,
    mut penalty: impl FnMut(usize) -> f64,
) -> (Partition, f64) {
    let mut best: Option<(&DimensionEntry, f64)> = None;
    for e in &per_dim.entries {
        let crit = e.cost + penalty(e.dimension);
        match &best {
            Some((_, b)) if crit >= *b => {}
            _ => best = Some((e, crit)),
        }
    }
    let (entry, crit) = best.expect("per-dimension table is non-empty");
    (entry.partition.clone(), crit)
}

/// Selection under the linear penalty `beta * D` by a single shortest-path
/// pass over the base-breakpoint DAG, without tabulating dimensions.
/// Agrees with [`best_per_dimension`] + [`select_with_penalty`] under the
/// same penalty.
pub fn linear_penalty_path(
    base: &[usize],
    mut cost: impl FnMut(usize, usize) -> f64,
    beta: f64,
) -> Result<(Partition, f64)> {
    validate_base(base)?;
    if !(beta > 0.0) {
        return Err(Error::invalid(format!("beta must be > 0, got {beta}")));
    }
    let k = base.len() - 1;
    let mut dist = vec![f64::INFINITY; k + 1];
    let mut pred = vec![usize::MAX; k + 1];
    dist[0] = 0.0;
    for q in 0..k {
        let from = dist[q];
        for t in (q + 1)..=k {
            let d = from + beta + cost(base[q], base[t]);
            if dist[t] > d {
                dist[t] = d;
                pred[t] = q;
            }
        }
    }
    let mut cuts = vec![k];
    let mut t = k;
    while pred[t] != usize::MAX {
        t = pred[t];
        cuts.push(t);
    }
    cuts.reverse();
    let breakpoints: Vec<usize> = cuts.iter().map(|&q| base[q]).collect();
    Ok((Partition::new(breakpoints)?, dist[k]))
}
