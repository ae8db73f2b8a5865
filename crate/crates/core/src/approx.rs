//! Greedy adaptive approximation over the dyadic tree: split any interval
//! whose constant-fit error exceeds a threshold, recursively. Sweeping the
//! threshold yields the best greedy error achievable with a bounded number
//! of segments, which is the quantity controlled by the approximation
//! bound over Besov bodies checked in [`besov_bound_check`].

use crate::error::{Error, Result};
use crate::haar::besov_seminorm;
use crate::matrix::{DistributionMatrix, Matrix};
use crate::partition::{DyadicInterval, Partition};
use crate::seq::dyadic_levels;

/// Result of one greedy refinement run at threshold `eps`: every segment
/// of `partition` has constant-fit error at most `eps`, and `error` is the
/// total squared error `sum of E2^2` of the projection onto the partition.
#[derive(Debug, Clone, PartialEq)]
pub struct ApproxRun {
    pub threshold: f64,
    pub partition: Partition,
    pub error: f64,
}

/// Order in which oversized segments are split. The surviving partition is
/// the same either way (a segment splits iff its error exceeds the
/// threshold, recursively); the schedule only changes the visit order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitSchedule {
    BreadthFirst,
    DepthFirst,
}

/// Constant-fit error of `t` on the 1-based half-open column range
/// `[a, b)`: the Euclidean norm of the deviation from the columnwise mean,
/// which attains the infimum over constant approximants. Exactly zero for
/// segments whose columns are all equal.
fn e2_on_range(t: &Matrix, a: usize, b: usize) -> f64 {
    let r = t.r();
    let first = t.column(a - 1);
    if (a..b - 1).all(|i| t.column(i) == first) {
        return 0.0;
    }
    let len = (b - a) as f64;
    let mut mean = vec![0.0; r];
    for i in (a - 1)..(b - 1) {
        let col = t.column(i);
        for l in 0..r {
            mean[l] += col[l];
        }
    }
    for m in mean.iter_mut() {
        *m /= len;
    }
    let mut sq = 0.0;
    for i in (a - 1)..(b - 1) {
        let col = t.column(i);
        for l in 0..r {
            let d = col[l] - mean[l];
            sq += d * d;
        }
    }
    sq.sqrt()
}

/// Constant-fit error of `t` on a dyadic interval.
pub fn e2_error(t: &Matrix, interval: &DyadicInterval) -> Result<f64> {
    let (a, b) = interval.index_range(t.n())?;
    Ok(e2_on_range(t, a, b))
}

/// Greedy refinement at threshold `eps > 0`: starting from the whole
/// range, replace any segment whose error exceeds `eps` by its two halves
/// until all segments comply. Terminates because singletons have zero
/// error. Splits are scheduled breadth-first.
pub fn adaptive_partition(t: &Matrix, eps: f64) -> Result<ApproxRun> {
    if !(eps > 0.0) {
        return Err(Error::invalid(format!("threshold must be > 0, got {eps}")));
    }
    adaptive_partition_with_schedule(t, eps, SplitSchedule::BreadthFirst)
}

/// Same as [`adaptive_partition`] with an explicit split schedule.
pub fn adaptive_partition_with_schedule(
    t: &Matrix,
    eps: f64,
    schedule: SplitSchedule,
) -> Result<ApproxRun> {
    if !(eps > 0.0) {
        return Err(Error::invalid(format!("threshold must be > 0, got {eps}")));
    }
    dyadic_levels(t.n())?;
    Ok(greedy_run(t, eps, schedule))
}

/// The refinement loop, with `eps = 0` allowed: at zero threshold it
/// produces the coarsest partition whose segments are exactly constant.
fn greedy_run(t: &Matrix, eps: f64, schedule: SplitSchedule) -> ApproxRun {
    let n = t.n();
    let mut pending: std::collections::VecDeque<(usize, usize)> =
        std::collections::VecDeque::new();
    pending.push_back((1, n + 1));
    let mut kept: Vec<(usize, usize, f64)> = Vec::new();
    while let Some((a, b)) = match schedule {
        SplitSchedule::BreadthFirst => pending.pop_front(),
        SplitSchedule::DepthFirst => pending.pop_back(),
    } {
        let err = e2_on_range(t, a, b);
        if err > eps && b - a > 1 {
            let mid = a + (b - a) / 2;
            match schedule {
                SplitSchedule::BreadthFirst => {
                    pending.push_back((a, mid));
                    pending.push_back((mid, b));
                }
                SplitSchedule::DepthFirst => {
                    pending.push_back((mid, b));
                    pending.push_back((a, mid));
                }
            }
        } else {
            kept.push((a, b, err));
        }
    }
    kept.sort_unstable_by_key(|&(a, _, _)| a);
    let mut breakpoints: Vec<usize> = kept.iter().map(|&(a, _, _)| a).collect();
    breakpoints.push(n + 1);
    let error = kept.iter().map(|&(_, _, e)| e * e).sum();
    let partition = Partition::new(breakpoints).expect("greedy segments tile the range");
    debug_assert!(partition.is_dyadic());
    ApproxRun { threshold: eps, partition, error }
}

/// Every attained positive segment error, one per dyadic interval, sorted
/// decreasingly.
fn positive_error_candidates(t: &Matrix) -> Vec<f64> {
    let n = t.n();
    let levels = n.trailing_zeros();
    let mut out = Vec::new();
    for j in 0..=levels {
        let len = n >> j;
        for k in 0..(1usize << j) {
            let a = k * len + 1;
            let e = e2_on_range(t, a, a + len);
            if e > 0.0 {
                out.push(e);
            }
        }
    }
    out.sort_unstable_by(|x, y| y.partial_cmp(x).unwrap());
    out.dedup();
    out
}

/// Best greedy approximation error with at most `d` segments: the minimum
/// of `|partition| * eps^2` over thresholds that keep the greedy partition
/// within `d` segments. The greedy partition only changes when `eps`
/// crosses an attained segment error, so sweeping those candidates (plus
/// the zero-threshold limit, which settles exactly-constant segments)
/// attains the infimum.
pub fn e_d(t: &Matrix, d: usize) -> Result<f64> {
    dyadic_levels(t.n())?;
    if d < 1 || d > t.n() {
        return Err(Error::invalid(format!(
            "segment budget must lie in 1..={}, got {d}",
            t.n()
        )));
    }
    let mut candidates = positive_error_candidates(t);
    candidates.push(0.0);
    let mut best = f64::INFINITY;
    for eps in candidates {
        let run = greedy_run(t, eps, SplitSchedule::BreadthFirst);
        let count = run.partition.dimension();
        if count > d {
            // Smaller thresholds only refine further.
            break;
        }
        best = best.min(count as f64 * eps * eps);
    }
    Ok(best)
}

/// One row of the approximation-bound report.
#[derive(Debug, Clone, PartialEq)]
pub struct BesovEntry {
    pub dimension: usize,
    pub e_d: f64,
    /// `e_d * D^(2 alpha) / seminorm^2`, the quantity the bound keeps
    /// below a constant.
    pub ratio: f64,
}

/// Empirical check of the approximation bound over a Besov body.
#[derive(Debug, Clone, PartialEq)]
pub struct BesovReport {
    pub alpha: f64,
    pub p: f64,
    pub seminorm: f64,
    pub entries: Vec<BesovEntry>,
    pub max_ratio: f64,
    /// Log-log regression slope of `e_d` against `D` over the entries with
    /// positive error; absent when fewer than two qualify.
    pub slope: Option<f64>,
    pub pass: bool,
}

/// Evaluates the greedy approximation error across `dims` and rates it
/// against the decay the coefficient seminorm predicts: bounded ratios and
/// a log-log slope of at most `-2 alpha + 0.5`. The slope allowance leaves
/// room above the ideal `-2 alpha` for the greedy overshoot.
pub fn besov_bound_check(
    t: &DistributionMatrix,
    alpha: f64,
    p: f64,
    dims: &[usize],
) -> Result<BesovReport> {
    if dims.is_empty() {
        return Err(Error::invalid("no dimensions supplied"));
    }
    let seminorm = besov_seminorm(t, alpha, p)?;
    if seminorm <= 0.0 {
        return Err(Error::DegenerateInput(
            "zero coefficient seminorm: every ratio would divide by zero".into(),
        ));
    }
    let denom = seminorm * seminorm;
    let mut entries = Vec::with_capacity(dims.len());
    for &d in dims {
        let e = e_d(t, d)?;
        let ratio = e * (d as f64).powf(2.0 * alpha) / denom;
        entries.push(BesovEntry { dimension: d, e_d: e, ratio });
    }
    let max_ratio = entries.iter().map(|e| e.ratio).fold(0.0, f64::max);
    let positive: Vec<(f64, f64)> = entries
        .iter()
        .filter(|e| e.e_d > 0.0)
        .map(|e| ((e.dimension as f64).ln(), e.e_d.ln()))
        .collect();
    let slope = regression_slope(&positive);
    let slope_ok = slope.map_or(true, |s| s <= -2.0 * alpha + 0.5);
    let pass = max_ratio.is_finite() && slope_ok;
    Ok(BesovReport { alpha, p, seminorm, entries, max_ratio, slope, pass })
}

fn regression_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return None;
    }
    Some(sxy / sxx)
}
