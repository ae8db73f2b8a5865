//! Change-point detection for sequences of categorical observations.
//!
//! The estimators in this crate are piecewise constant on a partition of
//! `{1,…,n}` and are selected by minimizing a penalized least-squares
//! criterion. The workhorse is a selector restricted to partitions into
//! dyadic intervals, which runs in time linear in `n` via a shortest-path
//! search on a sparse DAG. On top of it sit a two-stage hybrid estimator
//! that prunes irrelevant breakpoints, a data-driven penalty calibration
//! based on the dimension-jump heuristic, greedy adaptive-approximation
//! diagnostics, and a reproducible simulation harness.
//!
//! Index conventions: observations are numbered `1..=n`, category labels
//! `1..=r`, and segments are half-open `[i, j)` with breakpoints
//! `1 = i_1 < … < i_{D+1} = n + 1`.

#![forbid(unsafe_code)]

mod error;

pub mod approx;
pub mod calibrate;
pub mod dp;
pub mod haar;
pub mod hybrid;
pub mod matrix;
pub mod partition;
pub mod select;
pub mod seq;
pub mod sim;

pub use error::{Error, Result};
pub use matrix::{project_to_simplex, DistributionMatrix, Matrix};
pub use partition::{enumerate_dyadic_partitions, DyadicInterval, Partition};
pub use select::{fit_preliminary, FitResult};
pub use seq::{prefix_counts, CategorySequence, PrefixCounts};
