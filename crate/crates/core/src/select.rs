//! Penalized least-squares selection over dyadic partitions.
//!
//! The candidate partitions of `{1,…,n}` into dyadic intervals are in
//! one-to-one correspondence with paths from vertex 1 to vertex `n + 1`
//! in a DAG whose edges `(i, j)` are the dyadic intervals `[i, j)`. With a
//! penalty linear in the number of segments the criterion is additive over
//! edges, so the minimizer is a shortest path, found by one relaxation
//! sweep in vertex order over the `2n - 1` edges.

use crate::error::{Error, Result};
use crate::matrix::{DistributionMatrix, Matrix, MatrixPrefix};
use crate::partition::Partition;
use crate::seq::{dyadic_levels, prefix_counts, CategorySequence, PrefixCounts};

/// A fitted piecewise-constant estimate: the selected partition, the
/// per-segment category frequencies, the achieved penalized criterion and
/// the penalty constant that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub partition: Partition,
    /// One probability vector per segment, equal to the empirical
    /// frequencies on that segment.
    pub segment_probs: Vec<Vec<f64>>,
    /// Value of `|X - estimate|^2 + c0 * D` at the selected partition.
    pub criterion: f64,
    pub penalty_constant: f64,
}

impl FitResult {
    /// Number of segments of the selected partition.
    pub fn dimension(&self) -> usize {
        self.partition.dimension()
    }

    /// Expands the per-segment probabilities into an `r x n` matrix whose
    /// columns are constant on each segment.
    pub fn to_matrix(&self) -> DistributionMatrix {
        let r = self.segment_probs[0].len();
        let mut m = Matrix::zeros(r, self.partition.n());
        for ((a, b), probs) in self.partition.segments().zip(&self.segment_probs) {
            for i in (a - 1)..(b - 1) {
                m.column_mut(i).copy_from_slice(probs);
            }
        }
        DistributionMatrix::new(m).expect("segment frequencies are stochastic")
    }
}

/// The weighted DAG over vertices `{1,…,n+1}` whose edges are the dyadic
/// intervals of `{1,…,n}`, with edge weight `c0 + segment cost`. Weights
/// are computed on demand during relaxation; each of the `2n - 1` edges is
/// needed exactly once.
#[derive(Debug)]
pub struct DyadicGraph<'a> {
    pc: &'a PrefixCounts,
    c0: f64,
}

/// Builds the selection graph for a penalty constant `c0 > 0`.
pub fn build_graph(pc: &PrefixCounts, c0: f64) -> Result<DyadicGraph<'_>> {
    dyadic_levels(pc.n())?;
    if !(c0 > 0.0) {
        return Err(Error::invalid(format!("penalty constant must be > 0, got {c0}")));
    }
    Ok(DyadicGraph { pc, c0 })
}

impl DyadicGraph<'_> {
    pub fn n(&self) -> usize {
        self.pc.n()
    }

    pub fn c0(&self) -> f64 {
        self.c0
    }

    /// Successors of vertex `i`: every `j` such that `[i, j)` is a dyadic
    /// interval, in increasing length order.
    pub fn successors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        let n = self.n();
        std::iter::successors(Some(1usize), move |len| Some(len * 2))
            .take_while(move |&len| i >= 1 && (i - 1) % len == 0 && i - 1 + len <= n)
            .map(move |len| {
                debug_assert!(i + len > i);
                i + len
            })
    }

    /// Weight of the edge `(i, j)`: `c0 + segment_cost(i, j)`.
    pub fn weight(&self, i: usize, j: usize) -> Result<f64> {
        if !self.successors(i).any(|s| s == j) {
            return Err(Error::invalid(format!("({i}, {j}) is not a dyadic edge")));
        }
        Ok(self.c0 + self.pc.segment_cost(i, j)?)
    }

    /// Total number of edges, `2n - 1`.
    pub fn edge_count(&self) -> usize {
        (1..=self.n()).map(|i| self.successors(i).count()).sum()
    }
}

/// One relaxation sweep in vertex order, then backtracking. Predecessors
/// are updated on strict improvement only, so among equal-length paths the
/// first one found under the fixed processing order is kept. Returns the
/// selected partition and the achieved path length.
pub fn shortest_path_select(g: &DyadicGraph<'_>) -> (Partition, f64) {
    dyadic_shortest_path(g.n(), |i, j| g.c0 + g.pc.cost_unchecked(i, j))
}

/// Shortest path over the dyadic-interval DAG for an arbitrary additive
/// edge weight.
pub(crate) fn dyadic_shortest_path(
    n: usize,
    mut weight: impl FnMut(usize, usize) -> f64,
) -> (Partition, f64) {
    let mut dist = vec![f64::INFINITY; n + 2];
    let mut pred = vec![0usize; n + 2];
    dist[1] = 0.0;
    for i in 1..=n {
        let base = dist[i];
        let mut len = 1usize;
        while (i - 1) % len == 0 && i - 1 + len <= n {
            let j = i + len;
            let d = base + weight(i, j);
            if dist[j] > d {
                dist[j] = d;
                pred[j] = i;
            }
            len *= 2;
        }
    }
    let mut breakpoints = vec![n + 1];
    let mut v = pred[n + 1];
    while v != 0 {
        breakpoints.push(v);
        v = pred[v];
    }
    breakpoints.reverse();
    let partition = Partition::new(breakpoints).expect("backtracked path is a partition");
    (partition, dist[n + 1])
}

/// Selection with zero penalty allowed; used by the calibration sweep,
/// which starts its grid at 0.
pub(crate) fn select_dyadic(pc: &PrefixCounts, c0: f64) -> (Partition, f64) {
    dyadic_shortest_path(pc.n(), |i, j| c0 + pc.cost_unchecked(i, j))
}

/// Fits the piecewise-constant estimator selected by minimizing
/// `|X - estimate|^2 + c0 * D` over all partitions into dyadic intervals.
/// Requires `n` to be a power of two and `c0 > 0`; runs in `O(n r)`.
pub fn fit_preliminary(seq: &CategorySequence, c0: f64) -> Result<FitResult> {
    let pc = prefix_counts(seq);
    let g = build_graph(&pc, c0)?;
    let (partition, criterion) = shortest_path_select(&g);
    let segment_probs = partition
        .segments()
        .map(|(a, b)| pc.segment_mean(a, b))
        .collect::<Result<Vec<_>>>()?;
    Ok(FitResult { partition, segment_probs, criterion, penalty_constant: c0 })
}

/// Per-segment contribution to the exact risk: squared projection bias
/// plus the summed column variances divided by the segment length.
#[inline]
fn segment_risk(prefix: &MatrixPrefix, a: usize, b: usize, scratch: &mut [f64]) -> f64 {
    let len = (b - a) as f64;
    let bias = prefix.bias_sq(a, b, scratch);
    let variance = 1.0 - prefix.sq_norm(a, b) / len;
    bias + variance
}

/// Exact expected squared risk of the segment-means estimator on the
/// partition `m` when the observations follow `s`:
/// `|s - proj_m(s)|^2 + sum_I (1/|I|) sum_{i in I} sum_l s_i_l (1 - s_i_l)`.
///
/// The identity is validated against a Monte Carlo oracle in the tests
/// before anything downstream relies on it.
pub fn exact_model_risk(s: &DistributionMatrix, m: &Partition) -> Result<f64> {
    if m.n() != s.n() {
        return Err(Error::invalid(format!(
            "partition covers {} indices but the distribution has {} columns",
            m.n(),
            s.n()
        )));
    }
    let prefix = MatrixPrefix::new(s);
    let mut scratch = vec![0.0; s.r()];
    Ok(m
        .segments()
        .map(|(a, b)| segment_risk(&prefix, a, b, &mut scratch))
        .sum())
}

/// The dyadic partition minimizing the exact expected risk under `s`,
/// found by shortest path with the per-segment risk as edge weight, plus
/// `c_unit` per segment. `c_unit = 0` gives the pure risk oracle. Returns
/// the partition and its exact risk.
pub fn oracle_partition(s: &DistributionMatrix, c_unit: f64) -> Result<(Partition, f64)> {
    dyadic_levels(s.n())?;
    if c_unit < 0.0 {
        return Err(Error::invalid(format!("c_unit must be >= 0, got {c_unit}")));
    }
    let prefix = MatrixPrefix::new(s);
    let mut scratch = vec![0.0; s.r()];
    let (partition, _) = dyadic_shortest_path(s.n(), |a, b| {
        c_unit + segment_risk(&prefix, a, b, &mut scratch)
    });
    let risk = exact_model_risk(s, &partition)?;
    Ok((partition, risk))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::partition::enumerate_dyadic_partitions;

    fn seq(values: &[u32], r: usize) -> CategorySequence {
        CategorySequence::new(values.to_vec(), r).unwrap()
    }

    fn pseudo_random_seq(n: usize, r: usize, salt: u64) -> CategorySequence {
        let values: Vec<u32> = (0..n as u64)
            .map(|i| {
                let x = (i ^ salt)
                    .wrapping_mul(0x9e3779b97f4a7c15)
                    .rotate_left(29)
                    .wrapping_mul(0xbf58476d1ce4e5b9);
                (x % r as u64) as u32 + 1
            })
            .collect();
        seq(&values, r)
    }

    /// Exhaustive criterion minimization over all dyadic partitions.
    fn brute_force_min(pc: &PrefixCounts, c0: f64) -> f64 {
        enumerate_dyadic_partitions(pc.n())
            .unwrap()
            .iter()
            .map(|m| {
                let cost: f64 = m
                    .segments()
                    .map(|(a, b)| pc.segment_cost(a, b).unwrap())
                    .sum();
                cost + c0 * m.dimension() as f64
            })
            .fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn graph_edges_for_n4() {
        let pc = prefix_counts(&seq(&[1, 1, 2, 2], 2));
        let g = build_graph(&pc, 1.0).unwrap();
        let mut edges = Vec::new();
        for i in 1..=4 {
            for j in g.successors(i) {
                edges.push((i, j));
            }
        }
        edges.sort();
        assert_eq!(
            edges,
            vec![(1, 2), (1, 3), (1, 5), (2, 3), (3, 4), (3, 5), (4, 5)]
        );
        assert_eq!(g.edge_count(), 7);
        assert!((g.weight(1, 5).unwrap() - 3.0).abs() < 1e-12);
        assert!((g.weight(1, 3).unwrap() - 1.0).abs() < 1e-12);
        assert!((g.weight(3, 5).unwrap() - 1.0).abs() < 1e-12);
        assert!(g.weight(2, 4).is_err());
    }

    #[test]
    fn edge_count_is_2n_minus_1() {
        let s = pseudo_random_seq(1 << 10, 2, 7);
        let pc = prefix_counts(&s);
        let g = build_graph(&pc, 1.0).unwrap();
        assert_eq!(g.edge_count(), 2 * (1 << 10) - 1);
    }

    #[test]
    fn rejects_nonpositive_penalty_and_bad_length() {
        let pc = prefix_counts(&seq(&[1, 2, 1, 2], 2));
        assert!(build_graph(&pc, 0.0).is_err());
        assert!(build_graph(&pc, -1.0).is_err());
        let pc3 = prefix_counts(&seq(&[1, 2, 1], 2));
        assert!(build_graph(&pc3, 1.0).is_err());
    }

    #[test]
    fn shortest_path_examples() {
        let pc = prefix_counts(&seq(&[1, 1, 2, 2], 2));
        let g = build_graph(&pc, 1.0).unwrap();
        let (m, crit) = shortest_path_select(&g);
        assert_eq!(m.breakpoints(), &[1, 3, 5]);
        assert!((crit - 2.0).abs() < 1e-12);
        assert!((crit - brute_force_min(&pc, 1.0)).abs() < 1e-9);

        let g = build_graph(&pc, 3.0).unwrap();
        let (m, crit) = shortest_path_select(&g);
        assert_eq!(m.breakpoints(), &[1, 5]);
        assert!((crit - 5.0).abs() < 1e-12);
        assert!((crit - brute_force_min(&pc, 3.0)).abs() < 1e-9);
    }

    #[test]
    fn constant_sequence_selects_single_segment() {
        for c0 in [0.01, 1.0, 100.0] {
            let fit = fit_preliminary(&seq(&[2; 16], 2), c0).unwrap();
            assert_eq!(fit.partition.breakpoints(), &[1, 17]);
        }
    }

    #[test]
    fn fit_recovers_pure_segments() {
        let fit = fit_preliminary(&seq(&[1, 1, 2, 2], 2), 1.0).unwrap();
        assert_eq!(fit.segment_probs, vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
        assert_eq!(fit.dimension(), 2);
    }

    #[test]
    fn heavy_penalty_forces_single_segment() {
        let s = pseudo_random_seq(16, 3, 3);
        let pc = prefix_counts(&s);
        let fit = fit_preliminary(&s, 16.0).unwrap();
        assert_eq!(fit.partition.breakpoints(), &[1, 17]);
        assert_eq!(fit.segment_probs[0], pc.segment_mean(1, 17).unwrap());
        assert!((fit.criterion - brute_force_min(&pc, 16.0)).abs() < 1e-9);
    }

    #[test]
    fn matches_enumeration_oracle_at_n32() {
        let s = pseudo_random_seq(32, 2, 11);
        let pc = prefix_counts(&s);
        let fit = fit_preliminary(&s, 2.0).unwrap();
        assert!((fit.criterion - brute_force_min(&pc, 2.0)).abs() < 1e-9);
    }

    #[test]
    fn criterion_matches_segment_sum_and_probs_are_stochastic() {
        let s = pseudo_random_seq(64, 4, 17);
        let pc = prefix_counts(&s);
        let fit = fit_preliminary(&s, 0.7).unwrap();
        let recomputed: f64 = fit
            .partition
            .segments()
            .map(|(a, b)| 0.7 + pc.segment_cost(a, b).unwrap())
            .sum();
        assert!((fit.criterion - recomputed).abs() < 1e-9);
        for probs in &fit.segment_probs {
            let sum: f64 = probs.iter().sum();
            assert!((sum - 1.0).abs() < 1e-12);
            assert!(probs.iter().all(|&p| (0.0..=1.0).contains(&p)));
        }
    }

    #[test]
    fn selected_dimension_monotone_in_penalty() {
        let s = pseudo_random_seq(64, 2, 23);
        let mut last = usize::MAX;
        for k in 0..30 {
            let c0 = 0.05 + 0.15 * k as f64;
            let d = fit_preliminary(&s, c0).unwrap().dimension();
            assert!(d <= last, "dimension rose from {last} to {d} at c0={c0}");
            last = d;
        }
    }

    #[test]
    fn cost_additivity_matches_naive_matrix_residual() {
        let s = pseudo_random_seq(256, 3, 31);
        let pc = prefix_counts(&s);
        let fit = fit_preliminary(&s, 1.5).unwrap();
        let x = s.indicator_matrix();
        let est = fit.to_matrix();
        let residual = x.dist_sq(&est).unwrap();
        let segment_sum: f64 = fit
            .partition
            .segments()
            .map(|(a, b)| pc.segment_cost(a, b).unwrap())
            .sum();
        assert!((residual - segment_sum).abs() < 1e-9);
    }

    #[test]
    fn projection_is_identity_on_fit_output() {
        let s = pseudo_random_seq(32, 3, 41);
        let fit = fit_preliminary(&s, 1.0).unwrap();
        let est = fit.to_matrix();
        let projected = crate::matrix::project_to_simplex(&est);
        for i in 0..est.n() {
            for l in 0..est.r() {
                assert!((est.get(l, i) - projected.get(l, i)).abs() < 1e-12);
            }
        }
    }

    fn uniform_distribution(r: usize, n: usize) -> DistributionMatrix {
        let col = vec![1.0 / r as f64; r];
        DistributionMatrix::new(Matrix::from_columns(&vec![col; n]).unwrap()).unwrap()
    }

    #[test]
    fn uniform_single_segment_risk_is_half() {
        for n in [4, 16, 64] {
            let s = uniform_distribution(2, n);
            let risk = exact_model_risk(&s, &Partition::single(n)).unwrap();
            assert!((risk - 0.5).abs() < 1e-12, "n={n}: {risk}");
        }
    }

    #[test]
    fn piecewise_constant_risk_is_pure_variance() {
        // s constant on each segment of m: zero bias, so the risk is the
        // per-segment averaged variance sum.
        let cols: Vec<Vec<f64>> = (0..8)
            .map(|i| if i < 4 { vec![0.9, 0.1] } else { vec![0.3, 0.7] })
            .collect();
        let s = DistributionMatrix::new(Matrix::from_columns(&cols).unwrap()).unwrap();
        let m = Partition::new(vec![1, 5, 9]).unwrap();
        let risk = exact_model_risk(&s, &m).unwrap();
        let var1 = 2.0 * 0.9 * 0.1;
        let var2 = 2.0 * 0.3 * 0.7;
        assert!((risk - (var1 + var2)).abs() < 1e-12);
    }

    #[test]
    fn deterministic_distribution_has_zero_risk() {
        let cols: Vec<Vec<f64>> = (0..8)
            .map(|i| if i < 2 { vec![1.0, 0.0] } else { vec![0.0, 1.0] })
            .collect();
        let s = DistributionMatrix::new(Matrix::from_columns(&cols).unwrap()).unwrap();
        let m = Partition::new(vec![1, 2, 3, 5, 9]).unwrap();
        assert_eq!(exact_model_risk(&s, &m).unwrap(), 0.0);
    }

    #[test]
    fn risk_respects_displayed_bounds() {
        let cols: Vec<Vec<f64>> = (0..16)
            .map(|i| {
                let p = 0.2 + 0.6 * (i as f64 / 15.0);
                vec![p, 1.0 - p]
            })
            .collect();
        let s = DistributionMatrix::new(Matrix::from_columns(&cols).unwrap()).unwrap();
        let sup = (0..16)
            .flat_map(|i| s.column(i).iter().cloned())
            .fold(0.0, f64::max);
        for m in enumerate_dyadic_partitions(16).unwrap() {
            let d = m.dimension() as f64;
            let prefix = MatrixPrefix::new(&s);
            let mut scratch = [0.0; 2];
            let bias: f64 = m
                .segments()
                .map(|(a, b)| prefix.bias_sq(a, b, &mut scratch))
                .sum();
            let risk = exact_model_risk(&s, &m).unwrap();
            assert!(risk >= bias + (1.0 - sup) * d - 1e-9);
            assert!(risk <= bias + 0.5 * d + 1e-9);
        }
    }

    #[test]
    fn risk_rejects_dimension_mismatch() {
        let s = uniform_distribution(2, 8);
        assert!(exact_model_risk(&s, &Partition::single(4)).is_err());
    }

    #[test]
    fn oracle_on_constant_distribution_is_single_segment() {
        let s = uniform_distribution(3, 32);
        let (m, risk) = oracle_partition(&s, 0.0).unwrap();
        assert_eq!(m.breakpoints(), &[1, 33]);
        let direct = exact_model_risk(&s, &Partition::single(32)).unwrap();
        assert!((risk - direct).abs() < 1e-12);
    }

    #[test]
    fn oracle_beats_true_partition() {
        let cols: Vec<Vec<f64>> = (0..64)
            .map(|i| if i < 32 { vec![0.85, 0.15] } else { vec![0.25, 0.75] })
            .collect();
        let s = DistributionMatrix::new(Matrix::from_columns(&cols).unwrap()).unwrap();
        let true_m = Partition::new(vec![1, 33, 65]).unwrap();
        let (_, risk) = oracle_partition(&s, 0.0).unwrap();
        assert!(risk <= exact_model_risk(&s, &true_m).unwrap() + 1e-12);
    }

    #[test]
    fn oracle_matches_enumeration_at_n16() {
        let cols: Vec<Vec<f64>> = (0..16)
            .map(|i| {
                let p = match i {
                    0..=4 => 0.8,
                    5..=9 => 0.35,
                    _ => 0.6,
                };
                vec![p, 1.0 - p]
            })
            .collect();
        let s = DistributionMatrix::new(Matrix::from_columns(&cols).unwrap()).unwrap();
        let best = enumerate_dyadic_partitions(16)
            .unwrap()
            .iter()
            .map(|m| exact_model_risk(&s, m).unwrap())
            .fold(f64::INFINITY, f64::min);
        let (m, risk) = oracle_partition(&s, 0.0).unwrap();
        assert!((risk - best).abs() < 1e-9);
        assert!((exact_model_risk(&s, &m).unwrap() - best).abs() < 1e-9);
    }
}
