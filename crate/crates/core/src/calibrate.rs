//! Data-driven penalty calibration by the dimension-jump heuristic: sweep
//! the penalty constant over a grid, watch the selected dimension collapse,
//! retain the constant sitting right after the biggest drop, and double it.

use crate::dp::{best_per_dimension, select_with_penalty, PerDimension};
use crate::error::{Error, Result};
use crate::hybrid::{fit_hybrid, split_even_odd, HybridConfig, HybridResult, PenaltyForm};
use crate::partition::Partition;
use crate::select::select_dyadic;
use crate::seq::{prefix_counts, CategorySequence};

/// The calibration grid: 0 to 3 in steps of 0.1.
pub fn calibration_grid() -> Vec<f64> {
    (0..=30).map(|k| k as f64 * 0.1).collect()
}

/// The wider grid used when estimating the risk-minimizing fixed constant:
/// 0 to 4 in steps of 0.1, then 4.5 to 6 in steps of 0.5.
pub fn cstar_grid() -> Vec<f64> {
    let mut grid: Vec<f64> = (0..=40).map(|k| k as f64 * 0.1).collect();
    grid.extend((1..=4).map(|k| 4.0 + k as f64 * 0.5));
    grid
}

/// Default cap on the selected dimension, of order `n / (ln n)^2` with the
/// reference values 30, 100 and 175 pinned at `n = 2^10`, `2^12`, `2^13`.
pub fn default_d_max(n: usize) -> usize {
    match n {
        1024 => 30,
        4096 => 100,
        8192 => 175,
        _ => {
            let nf = n as f64;
            ((nf / nf.ln().powi(2)).floor() as usize).max(1)
        }
    }
}

/// Runs the selector at every grid constant and records the selected
/// dimension. The selector must be penalty-monotone (a constant times a
/// dimension-increasing penalty), which makes the recorded dimensions
/// non-increasing; this is asserted.
pub fn dimension_path(
    grid: &[f64],
    mut fitter: impl FnMut(f64) -> Result<usize>,
) -> Result<Vec<(f64, usize)>> {
    if grid.is_empty() {
        return Err(Error::invalid("calibration grid is empty"));
    }
    if grid.iter().any(|c| !(*c >= 0.0)) || !grid.windows(2).all(|w| w[0] < w[1]) {
        return Err(Error::invalid(
            "calibration grid must be strictly increasing and non-negative",
        ));
    }
    let mut path = Vec::with_capacity(grid.len());
    for &c in grid {
        let d = fitter(c)?;
        if let Some(&(prev_c, prev_d)) = path.last() {
            assert!(
                d <= prev_d,
                "selected dimension rose from {prev_d} at {prev_c} to {d} at {c}"
            );
        }
        path.push((c, d));
    }
    Ok(path)
}

/// The constant right after the biggest drop in dimension between
/// consecutive grid points, restricted to points whose dimension is at
/// most `d_max`. Equal drops resolve to the smallest constant. Fails when
/// no grid point satisfies the dimension constraint.
pub fn dimension_jump(path: &[(f64, usize)], d_max: usize) -> Result<f64> {
    Ok(feasible_max_jump(path, d_max)?.0)
}

/// Jump location together with the size of the drop.
fn feasible_max_jump(path: &[(f64, usize)], d_max: usize) -> Result<(f64, usize)> {
    if path.is_empty() {
        return Err(Error::invalid("dimension path is empty"));
    }
    let mut best: Option<(f64, usize)> = None;
    for w in path.windows(2) {
        let (_, d_prev) = w[0];
        let (c, d) = w[1];
        if d > d_max {
            continue;
        }
        let jump = d_prev.saturating_sub(d);
        if best.map_or(true, |(_, j)| jump > j) {
            best = Some((c, jump));
        }
    }
    best.ok_or_else(|| {
        Error::CalibrationFailure(format!(
            "no grid point selects a dimension <= {d_max}"
        ))
    })
}

/// Calibrates the stage-one penalty constant on the grid 0..3 with the
/// dyadic selector, returning twice the jump location. A flat dimension
/// path carries no jump information; the fixed constants 2 (two
/// categories) and 2.5 (more) are used instead.
pub fn calibrate_c0(seq: &CategorySequence, d_max: usize) -> Result<f64> {
    seq.dyadic_levels()?;
    let pc = prefix_counts(seq);
    let grid = calibration_grid();
    let path = dimension_path(&grid, |c| Ok(select_dyadic(&pc, c).0.dimension()))?;
    let (c_hat, jump) = feasible_max_jump(&path, d_max)?;
    if jump == 0 {
        return Ok(if seq.r() == 2 { 2.0 } else { 2.5 });
    }
    Ok(2.0 * c_hat)
}

/// Stage-two penalty shapes that take a single calibrated constant.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage2Form {
    LogPractical,
    Linear,
}

impl Stage2Form {
    fn penalty(self, constant: f64) -> PenaltyForm {
        match self {
            Stage2Form::LogPractical => PenaltyForm::LogPractical { beta: constant },
            Stage2Form::Linear => PenaltyForm::Linear { beta: constant },
        }
    }
}

/// Calibrates the stage-two constant by the same dimension-jump sweep, run
/// against the coarsening selector over `base` with costs taken on the
/// odd-half data. A one-segment base makes the selection trivial and
/// returns twice the grid minimum by convention.
pub fn calibrate_stage2(
    odd: &CategorySequence,
    base: &Partition,
    form: Stage2Form,
    d_max: usize,
) -> Result<f64> {
    if base.n() != odd.n() {
        return Err(Error::invalid(format!(
            "base partition covers {} indices but the odd half has {}",
            base.n(),
            odd.n()
        )));
    }
    let grid = calibration_grid();
    let d_hat = base.dimension();
    if d_hat == 1 {
        return Ok(2.0 * grid[0]);
    }
    let odd_pc = prefix_counts(odd);
    let cap = d_hat.min(d_max.max(1));
    let table = best_per_dimension(
        base.breakpoints(),
        |a, b| odd_pc.cost_unchecked(a, b),
        cap,
    )?;
    let path = dimension_path(&grid, |c| {
        Ok(select_stage2(&table, form, c, d_hat).0.dimension())
    })?;
    let c_hat = dimension_jump(&path, d_max)?;
    Ok(2.0 * c_hat)
}

fn select_stage2(
    table: &PerDimension,
    form: Stage2Form,
    constant: f64,
    d_hat: usize,
) -> (Partition, f64) {
    let penalty = form.penalty(constant);
    select_with_penalty(table, |d| penalty.eval(d_hat, d))
}

/// A fully data-driven two-stage fit: stage-one constant from
/// [`calibrate_c0`] on the even half, stage-two constant from
/// [`calibrate_stage2`] on the odd half, then the fit itself. The same
/// `d_max` caps both calibrations and the stage-two dimension.
#[derive(Debug, Clone)]
pub struct CalibratedHybrid {
    pub result: HybridResult,
    pub c0: f64,
    pub stage2_constant: f64,
}

pub fn fit_hybrid_calibrated(
    seq: &CategorySequence,
    form: Stage2Form,
    d_max: usize,
) -> Result<CalibratedHybrid> {
    seq.dyadic_levels()?;
    if seq.n() < 2 {
        return Err(Error::invalid("hybrid fit needs at least two observations"));
    }
    let (even, odd) = split_even_odd(seq)?;
    let c0 = calibrate_c0(&even, d_max)?;
    let stage1 = crate::select::fit_preliminary(&even, c0)?;
    let beta = calibrate_stage2(&odd, &stage1.partition, form, d_max)?;
    // A one-segment stage-one partition reports the conventional constant
    // 0; the fit never evaluates the penalty in that case, but the config
    // still wants a positive placeholder.
    let penalty = form.penalty(if beta > 0.0 { beta } else { 1.0 });
    let cfg = HybridConfig { c0, penalty, d_max };
    let result = fit_hybrid(seq, &cfg)?;
    Ok(CalibratedHybrid { result, c0, stage2_constant: beta })
}
