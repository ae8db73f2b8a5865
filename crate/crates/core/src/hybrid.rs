//! Two-stage hybrid estimator. The even-indexed half of the data drives a
//! dyadic preselection; the odd-indexed half then picks the best
//! coarsening of that partition under a penalty that may depend on the
//! preselected dimension. The final estimate duplicates the stage-two fit
//! onto both halves, which tends to drop the spurious breakpoints the
//! dyadic stage keeps around.

use crate::dp::{best_per_dimension, select_with_penalty};
use crate::error::{Error, Result};
use crate::matrix::{DistributionMatrix, Matrix};
use crate::partition::Partition;
use crate::select::{fit_preliminary, FitResult};
use crate::seq::{prefix_counts, CategorySequence};

/// Stage-two penalty shape. `d_hat` is the stage-one dimension.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PenaltyForm {
    /// `(c1 + c2 ln(d_hat / D)) D`
    Log { c1: f64, c2: f64 },
    /// `beta (2.5 + ln(d_hat / D)) D`
    LogPractical { beta: f64 },
    /// `beta D`
    Linear { beta: f64 },
}

impl PenaltyForm {
    /// Penalty assigned to every coarsening with `d` segments.
    pub fn eval(&self, d_hat: usize, d: usize) -> f64 {
        let dd = d as f64;
        let ratio = (d_hat as f64 / dd).ln();
        match *self {
            PenaltyForm::Log { c1, c2 } => (c1 + c2 * ratio) * dd,
            PenaltyForm::LogPractical { beta } => beta * (2.5 + ratio) * dd,
            PenaltyForm::Linear { beta } => beta * dd,
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            PenaltyForm::Log { c1, c2 } => c1 > 0.0 && c2 > 0.0,
            PenaltyForm::LogPractical { beta } | PenaltyForm::Linear { beta } => beta > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::invalid("penalty constants must be > 0"))
        }
    }
}

/// Configuration of the two-stage fit: stage-one penalty constant,
/// stage-two penalty shape, and the cap on the stage-two dimension.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HybridConfig {
    pub c0: f64,
    pub penalty: PenaltyForm,
    pub d_max: usize,
}

/// Output of the two-stage fit.
#[derive(Debug, Clone, PartialEq)]
pub struct HybridResult {
    /// Dyadic preselection on the even-indexed columns.
    pub stage1: FitResult,
    /// Selected coarsening, as a partition of `{1,…,n/2}`. Its
    /// breakpoints are a subset of the stage-one breakpoints.
    pub stage2_partition: Partition,
    /// Per-segment frequencies estimated on the odd-indexed columns.
    pub segment_probs: Vec<Vec<f64>>,
    /// Penalized stage-two criterion (data cost alone when the stage-one
    /// partition is a single segment and no selection takes place).
    pub stage2_criterion: f64,
    /// Full-width estimate: columns `2i-1` and `2i` both carry the
    /// stage-two column `i`.
    pub assembled: DistributionMatrix,
}

/// Splits a sequence of even length into the subsequence of even-indexed
/// observations (2, 4, …, n) and odd-indexed ones (1, 3, …, n-1).
pub fn split_even_odd(
    seq: &CategorySequence,
) -> Result<(CategorySequence, CategorySequence)> {
    let n = seq.n();
    if n % 2 != 0 {
        return Err(Error::invalid(format!("length {n} is odd, cannot split")));
    }
    let values = seq.values();
    let even: Vec<u32> = values.iter().skip(1).step_by(2).copied().collect();
    let odd: Vec<u32> = values.iter().step_by(2).copied().collect();
    Ok((
        CategorySequence::new(even, seq.r())?,
        CategorySequence::new(odd, seq.r())?,
    ))
}

/// Maps a partition of `{1,…,n/2}` back to the original index scale:
/// breakpoint `b` becomes `2b - 1`, so segment starts land on the odd
/// member of each duplicated column pair.
pub fn map_to_full_indices(p: &Partition) -> Partition {
    let breakpoints = p.breakpoints().iter().map(|&b| 2 * b - 1).collect();
    Partition::new(breakpoints).expect("affine map preserves monotonicity")
}

/// Runs the full two-stage fit. Requires `n = 2^N` with `N >= 1` and
/// `c0 > 0`; the stage-two penalty constants must be positive whenever the
/// stage-one partition has more than one segment (with a single segment
/// there is nothing to select and the penalty is never evaluated).
pub fn fit_hybrid(seq: &CategorySequence, cfg: &HybridConfig) -> Result<HybridResult> {
    let n = seq.n();
    if n < 2 {
        return Err(Error::invalid("hybrid fit needs at least two observations"));
    }
    seq.dyadic_levels()?;
    if cfg.d_max < 1 {
        return Err(Error::invalid("d_max must be at least 1"));
    }
    let (even, odd) = split_even_odd(seq)?;
    let stage1 = fit_preliminary(&even, cfg.c0)?;
    let d_hat = stage1.dimension();
    let odd_pc = prefix_counts(&odd);
    let half = n / 2;

    let (stage2_partition, stage2_criterion) = if d_hat == 1 {
        (Partition::single(half), odd_pc.segment_cost(1, half + 1)?)
    } else {
        cfg.penalty.validate()?;
        let cap = d_hat.min(cfg.d_max);
        let table = best_per_dimension(
            stage1.partition.breakpoints(),
            |a, b| odd_pc.cost_unchecked(a, b),
            cap,
        )?;
        select_with_penalty(&table, |d| cfg.penalty.eval(d_hat, d))
    };
    debug_assert!(stage1.partition.refines(&stage2_partition));

    let segment_probs = stage2_partition
        .segments()
        .map(|(a, b)| odd_pc.segment_mean(a, b))
        .collect::<Result<Vec<_>>>()?;

    let mut assembled = Matrix::zeros(seq.r(), n);
    for ((a, b), probs) in stage2_partition.segments().zip(&segment_probs) {
        for i in (a - 1)..(b - 1) {
            assembled.column_mut(2 * i).copy_from_slice(probs);
            assembled.column_mut(2 * i + 1).copy_from_slice(probs);
        }
    }
    let assembled = DistributionMatrix::new(assembled)?;

    Ok(HybridResult {
        stage1,
        stage2_partition,
        segment_probs,
        stage2_criterion,
        assembled,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dp::linear_penalty_path;

    fn seq(values: &[u32], r: usize) -> CategorySequence {
        CategorySequence::new(values.to_vec(), r).unwrap()
    }

    fn cfg_linear(c0: f64, beta: f64, d_max: usize) -> HybridConfig {
        HybridConfig { c0, penalty: PenaltyForm::Linear { beta }, d_max }
    }

    #[test]
    fn split_examples() {
        let (even, odd) = split_even_odd(&seq(&[1, 2, 3, 4], 4)).unwrap();
        assert_eq!(even.values(), &[2, 4]);
        assert_eq!(odd.values(), &[1, 3]);

        let (even, odd) = split_even_odd(&seq(&[3, 3, 3, 3, 3, 3], 3)).unwrap();
        assert_eq!(even.values(), &[3, 3, 3]);
        assert_eq!(odd.values(), &[3, 3, 3]);

        let (even, odd) = split_even_odd(&seq(&[1, 2], 2)).unwrap();
        assert_eq!(even.values(), &[2]);
        assert_eq!(odd.values(), &[1]);

        assert!(split_even_odd(&seq(&[1, 2, 1], 2)).is_err());
    }

    #[test]
    fn map_to_full_scale() {
        let p = Partition::new(vec![1, 3, 5]).unwrap();
        assert_eq!(map_to_full_indices(&p).breakpoints(), &[1, 5, 9]);
        let single = Partition::single(4);
        assert_eq!(map_to_full_indices(&single).breakpoints(), &[1, 9]);
        let full = Partition::singletons(4);
        assert_eq!(map_to_full_indices(&full).breakpoints(), &[1, 3, 5, 7, 9]);
    }

    #[test]
    fn constant_sequence_collapses_to_one_segment() {
        let result = fit_hybrid(&seq(&[2; 16], 2), &cfg_linear(1.0, 0.5, 8)).unwrap();
        assert_eq!(result.stage2_partition.breakpoints(), &[1, 9]);
        assert_eq!(result.segment_probs, vec![vec![0.0, 1.0]]);
        for i in 0..16 {
            assert_eq!(result.assembled.column(i), &[0.0, 1.0]);
        }
    }

    #[test]
    fn two_halves_keep_the_midpoint() {
        // Disjoint supports on the two halves; a small linear penalty must
        // keep exactly the midpoint breakpoint. Cross-checked against a
        // brute force over all coarsenings of the stage-one partition.
        let mut values = vec![1u32; 8];
        values.extend(vec![2u32; 8]);
        let s = seq(&values, 2);
        let result = fit_hybrid(&s, &cfg_linear(1.0, 0.1, 8)).unwrap();
        assert_eq!(result.stage2_partition.breakpoints(), &[1, 5, 9]);
        assert_eq!(result.segment_probs, vec![vec![1.0, 0.0], vec![0.0, 1.0]]);

        let (_, odd) = split_even_odd(&s).unwrap();
        let odd_pc = prefix_counts(&odd);
        let base = result.stage1.partition.breakpoints();
        let interior = base.len() - 2;
        let mut brute = f64::INFINITY;
        for mask in 0u32..(1 << interior) {
            let mut bps = vec![base[0]];
            for b in 0..interior {
                if mask & (1 << b) != 0 {
                    bps.push(base[b + 1]);
                }
            }
            bps.push(*base.last().unwrap());
            let d = bps.len() - 1;
            let cost: f64 = bps
                .windows(2)
                .map(|w| odd_pc.segment_cost(w[0], w[1]).unwrap())
                .sum();
            brute = brute.min(cost + 0.1 * d as f64);
        }
        assert!((result.stage2_criterion - brute).abs() < 1e-9);
    }

    #[test]
    fn stage2_breakpoints_subset_of_stage1() {
        let values: Vec<u32> = (0..64u64)
            .map(|i| {
                let x = i.wrapping_mul(0x9e3779b97f4a7c15).rotate_left(31);
                if i < 20 || (40..52).contains(&i) {
                    (x % 2) as u32 + 1
                } else {
                    2
                }
            })
            .collect();
        let s = seq(&values, 2);
        for beta in [0.05, 0.4, 2.0] {
            let result = fit_hybrid(&s, &cfg_linear(0.8, beta, 16)).unwrap();
            assert!(result.stage1.partition.refines(&result.stage2_partition));
        }
    }

    #[test]
    fn assembled_duplicates_columns_and_decomposes_risk() {
        let values: Vec<u32> = (0..32u64)
            .map(|i| if i < 12 { 1 } else { ((i * 7) % 2) as u32 + 1 })
            .collect();
        let s = seq(&values, 2);
        let result = fit_hybrid(&s, &cfg_linear(1.0, 0.3, 16)).unwrap();
        let est = &result.assembled;
        for i in 0..16 {
            assert_eq!(est.column(2 * i), est.column(2 * i + 1));
        }

        // |truth - assembled|^2 splits exactly into the even-half and
        // odd-half residuals against the stage-two estimate.
        let cols: Vec<Vec<f64>> = (0..32)
            .map(|i| if i < 12 { vec![0.8, 0.2] } else { vec![0.4, 0.6] })
            .collect();
        let truth = Matrix::from_columns(&cols).unwrap();
        let total = truth.dist_sq(est).unwrap();
        let mut even_half = 0.0;
        let mut odd_half = 0.0;
        for i in 0..16 {
            let stage2_col = est.column(2 * i);
            for l in 0..2 {
                let de = truth.get(l, 2 * i + 1) - stage2_col[l];
                let do_ = truth.get(l, 2 * i) - stage2_col[l];
                even_half += de * de;
                odd_half += do_ * do_;
            }
        }
        assert!((total - (even_half + odd_half)).abs() < 1e-9);
    }

    #[test]
    fn linear_selection_agrees_with_path_route() {
        let values: Vec<u32> = (0..64u64)
            .map(|i| {
                let x = i.wrapping_mul(0xbf58476d1ce4e5b9).rotate_left(17);
                if i < 24 {
                    (x % 2) as u32 + 1
                } else if i < 44 {
                    1
                } else {
                    (x % 3 == 0) as u32 + 1
                }
            })
            .collect();
        let s = seq(&values, 2);
        let (_, odd) = split_even_odd(&s).unwrap();
        let odd_pc = prefix_counts(&odd);
        for beta in [0.1, 0.5, 1.5] {
            let result = fit_hybrid(&s, &cfg_linear(0.8, beta, 32)).unwrap();
            let d_hat = result.stage1.dimension();
            if d_hat == 1 {
                continue;
            }
            let (_, crit) = linear_penalty_path(
                result.stage1.partition.breakpoints(),
                |a, b| odd_pc.segment_cost(a, b).unwrap(),
                beta,
            )
            .unwrap();
            assert!(
                (result.stage2_criterion - crit).abs() < 1e-9,
                "beta={beta}: {} vs {crit}",
                result.stage2_criterion
            );
        }
    }

    #[test]
    fn stage2_criterion_bounded_by_finest_coarsening() {
        let values: Vec<u32> = (0..32u64).map(|i| ((i / 3) % 2) as u32 + 1).collect();
        let s = seq(&values, 2);
        let cfg = cfg_linear(0.6, 0.25, 32);
        let result = fit_hybrid(&s, &cfg).unwrap();
        let d_hat = result.stage1.dimension();
        let (_, odd) = split_even_odd(&s).unwrap();
        let odd_pc = prefix_counts(&odd);
        let finest_cost: f64 = result
            .stage1
            .partition
            .segments()
            .map(|(a, b)| odd_pc.segment_cost(a, b).unwrap())
            .sum();
        let finest_criterion = finest_cost + cfg.penalty.eval(d_hat, d_hat);
        assert!(result.stage2_criterion <= finest_criterion + 1e-9);
    }

    #[test]
    fn penalty_constants_validated_when_selection_runs() {
        let mut values = vec![1u32; 8];
        values.extend(vec![2u32; 8]);
        let s = seq(&values, 2);
        let bad = cfg_linear(1.0, 0.0, 8);
        assert!(fit_hybrid(&s, &bad).is_err());
        // With a one-segment preselection the penalty is never touched.
        let constant = seq(&[1; 8], 2);
        assert!(fit_hybrid(&constant, &bad).is_ok());
    }

    #[test]
    fn rejects_bad_inputs() {
        let s = seq(&[1, 2, 1, 2], 2);
        assert!(fit_hybrid(&s, &cfg_linear(0.0, 0.5, 4)).is_err());
        assert!(fit_hybrid(&s, &cfg_linear(1.0, 0.5, 0)).is_err());
        let odd_len = seq(&[1, 2, 1], 2);
        assert!(fit_hybrid(&odd_len, &cfg_linear(1.0, 0.5, 4)).is_err());
        let tiny = seq(&[1], 2);
        assert!(fit_hybrid(&tiny, &cfg_linear(1.0, 0.5, 4)).is_err());
        // n = 2 is the smallest valid input.
        assert!(fit_hybrid(&seq(&[1, 2], 2), &cfg_linear(1.0, 0.5, 4)).is_ok());
    }

    #[test]
    fn penalty_forms_evaluate_as_documented() {
        let log = PenaltyForm::Log { c1: 1.2, c2: 0.7 };
        let d_hat = 8;
        let expected = (1.2 + 0.7 * (8.0f64 / 2.0).ln()) * 2.0;
        assert!((log.eval(d_hat, 2) - expected).abs() < 1e-12);
        let logp = PenaltyForm::LogPractical { beta: 0.5 };
        let expected = 0.5 * (2.5 + (8.0f64 / 4.0).ln()) * 4.0;
        assert!((logp.eval(d_hat, 4) - expected).abs() < 1e-12);
        let lin = PenaltyForm::Linear { beta: 0.3 };
        assert!((lin.eval(d_hat, 5) - 1.5).abs() < 1e-12);
    }
}
