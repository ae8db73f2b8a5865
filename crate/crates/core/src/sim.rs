//! Simulation harness: declarative piecewise distributions, seeded
//! sampling, Monte Carlo risk estimation against the exact-risk oracle,
//! and the estimator comparison table. Every report is a pure function of
//! (spec, replicate count, master seed), independent of thread count.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calibrate::{calibrate_c0, default_d_max, fit_hybrid_calibrated, Stage2Form};
use crate::error::{Error, Result};
use crate::matrix::{DistributionMatrix, Matrix};
use crate::partition::Partition;
use crate::select::{fit_preliminary, oracle_partition, select_dyadic};
use crate::seq::{prefix_counts, CategorySequence};

/// Declarative description of a true distribution: segments laid out left
/// to right, each either a constant probability vector or an affine sweep
/// between two probability vectors (columns renormalized after the
/// interpolation).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseSpec {
    pub n: usize,
    pub r: usize,
    pub segments: Vec<SegmentSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentSpec {
    pub len: usize,
    #[serde(flatten)]
    pub kind: SegmentKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SegmentKind {
    Constant { p: Vec<f64> },
    Affine { from: Vec<f64>, to: Vec<f64> },
}

impl PiecewiseSpec {
    pub fn validate(&self) -> Result<()> {
        if self.r < 2 {
            return Err(Error::invalid("alphabet size must be >= 2"));
        }
        if self.segments.is_empty() {
            return Err(Error::invalid("spec needs at least one segment"));
        }
        let total: usize = self.segments.iter().map(|s| s.len).sum();
        if total != self.n {
            return Err(Error::invalid(format!(
                "segment lengths sum to {total}, expected n = {}",
                self.n
            )));
        }
        for seg in &self.segments {
            if seg.len == 0 {
                return Err(Error::invalid("segment lengths must be positive"));
            }
            let vectors: &[&Vec<f64>] = match &seg.kind {
                SegmentKind::Constant { p } => &[p],
                SegmentKind::Affine { from, to } => &[from, to],
            };
            for v in vectors {
                if v.len() != self.r {
                    return Err(Error::invalid(format!(
                        "probability vector has length {}, expected r = {}",
                        v.len(),
                        self.r
                    )));
                }
                if v.iter().any(|&x| !(0.0..=1.0).contains(&x)) {
                    return Err(Error::invalid("probabilities must lie in [0, 1]"));
                }
                let sum: f64 = v.iter().sum();
                if (sum - 1.0).abs() > crate::matrix::COLUMN_SUM_TOL {
                    return Err(Error::invalid(format!(
                        "probability vector sums to {sum}, not 1"
                    )));
                }
            }
        }
        Ok(())
    }

    /// The partition whose segments are the spec's segments.
    pub fn true_partition(&self) -> Partition {
        let mut breakpoints = vec![1usize];
        let mut at = 1;
        for seg in &self.segments {
            at += seg.len;
            breakpoints.push(at);
        }
        Partition::new(breakpoints).expect("positive segment lengths")
    }

    /// Number of segments the distribution is built on.
    pub fn true_dimension(&self) -> usize {
        self.segments.len()
    }

    pub fn is_piecewise_constant(&self) -> bool {
        self.segments
            .iter()
            .all(|s| matches!(s.kind, SegmentKind::Constant { .. }))
    }

    pub fn from_json(json: &str) -> Result<Self> {
        let spec: PiecewiseSpec = serde_json::from_str(json)
            .map_err(|e| Error::invalid(format!("malformed spec: {e}")))?;
        spec.validate()?;
        Ok(spec)
    }
}

/// Materializes the distribution matrix column by column.
pub fn build_distribution(spec: &PiecewiseSpec) -> Result<DistributionMatrix> {
    spec.validate()?;
    let mut m = Matrix::zeros(spec.r, spec.n);
    let mut at = 0usize;
    for seg in &spec.segments {
        for i in 0..seg.len {
            let col = m.column_mut(at + i);
            match &seg.kind {
                SegmentKind::Constant { p } => col.copy_from_slice(p),
                SegmentKind::Affine { from, to } => {
                    let t = if seg.len == 1 {
                        0.0
                    } else {
                        i as f64 / (seg.len - 1) as f64
                    };
                    let mut sum = 0.0;
                    for l in 0..spec.r {
                        col[l] = from[l] + t * (to[l] - from[l]);
                        sum += col[l];
                    }
                    for v in col.iter_mut() {
                        *v /= sum;
                    }
                }
            }
        }
        at += seg.len;
    }
    DistributionMatrix::new(m)
}

/// Draws one observation per column, independently, by inverse CDF on a
/// ChaCha stream. Identical seeds give identical sequences on any
/// platform or thread count.
pub fn sample_sequence(s: &DistributionMatrix, seed: u64) -> CategorySequence {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r = s.r();
    let values: Vec<u32> = (0..s.n())
        .map(|i| {
            let u: f64 = rng.random();
            let col = s.column(i);
            let mut acc = 0.0;
            for (l, &p) in col.iter().enumerate().take(r - 1) {
                acc += p;
                if u < acc {
                    return l as u32 + 1;
                }
            }
            r as u32
        })
        .collect();
    CategorySequence::new(values, r).expect("sampled labels are in range")
}

/// Seed for replicate `rep`, derived from the master seed by a splitmix
/// step so replicates are independent of execution order.
pub fn replicate_seed(master: u64, rep: u64) -> u64 {
    let mut z = master ^ rep.wrapping_add(1).wrapping_mul(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// An estimate of the full distribution matrix together with the number
/// of segments the estimator settled on.
#[derive(Debug, Clone)]
pub struct EstimateOutcome {
    pub estimate: Matrix,
    pub dimension: usize,
}

/// A procedure mapping an observed sequence to a distribution estimate.
pub trait Estimator: Sync {
    fn name(&self) -> &str;
    fn fit(&self, seq: &CategorySequence) -> Result<EstimateOutcome>;
}

/// Empirical segment means on a fixed partition.
pub struct SegmentMeansEstimator {
    pub partition: Partition,
}

impl Estimator for SegmentMeansEstimator {
    fn name(&self) -> &str {
        "segment-means"
    }

    fn fit(&self, seq: &CategorySequence) -> Result<EstimateOutcome> {
        if self.partition.n() != seq.n() {
            return Err(Error::invalid("partition does not match sequence length"));
        }
        let pc = prefix_counts(seq);
        let mut m = Matrix::zeros(seq.r(), seq.n());
        for (a, b) in self.partition.segments() {
            let mean = pc.segment_mean(a, b)?;
            for i in (a - 1)..(b - 1) {
                m.column_mut(i).copy_from_slice(&mean);
            }
        }
        Ok(EstimateOutcome { estimate: m, dimension: self.partition.dimension() })
    }
}

/// Dyadic selection with the penalty constant calibrated per sequence by
/// the dimension jump.
pub struct CalibratedPreliminary {
    pub d_max: usize,
}

impl Estimator for CalibratedPreliminary {
    fn name(&self) -> &str {
        "preliminary"
    }

    fn fit(&self, seq: &CategorySequence) -> Result<EstimateOutcome> {
        let c0 = calibrate_c0(seq, self.d_max)?;
        let fit = fit_preliminary(seq, c0)?;
        Ok(EstimateOutcome {
            estimate: fit.to_matrix().into_matrix(),
            dimension: fit.dimension(),
        })
    }
}

/// Two-stage fit with both constants calibrated per sequence.
pub struct CalibratedHybrid {
    pub form: Stage2Form,
    pub d_max: usize,
}

impl Estimator for CalibratedHybrid {
    fn name(&self) -> &str {
        match self.form {
            Stage2Form::LogPractical => "hybrid-logp",
            Stage2Form::Linear => "hybrid-linear",
        }
    }

    fn fit(&self, seq: &CategorySequence) -> Result<EstimateOutcome> {
        let fit = fit_hybrid_calibrated(seq, self.form, self.d_max)?;
        Ok(EstimateOutcome {
            estimate: fit.result.assembled.clone().into_matrix(),
            dimension: fit.result.stage2_partition.dimension(),
        })
    }
}

/// Monte Carlo summary of an estimator against the exact-risk oracle.
#[derive(Debug, Clone, PartialEq)]
pub struct RiskReport {
    pub estimator: String,
    pub mean_risk: f64,
    pub std_error: f64,
    pub replicates: usize,
    pub oracle_risk: f64,
    /// Mean risk over oracle risk.
    pub q: f64,
    pub mean_dimension: f64,
    pub dimension_std_error: f64,
}

impl RiskReport {
    pub fn csv_header() -> &'static str {
        "estimator,mean_risk,std_error,replicates,oracle_risk,q_oracle,mean_dimension,dimension_std_error"
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            self.estimator,
            self.mean_risk,
            self.std_error,
            self.replicates,
            self.oracle_risk,
            self.q,
            self.mean_dimension,
            self.dimension_std_error
        )
    }
}

fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Runs `estimator` on `reps` independently sampled sequences and averages
/// the squared distance to `s`. Replicates run in parallel; per-replicate
/// seeds come from [`replicate_seed`] and the aggregation is in replicate
/// order, so the report does not depend on scheduling.
pub fn monte_carlo_risk(
    s: &DistributionMatrix,
    estimator: &dyn Estimator,
    reps: usize,
    seed: u64,
) -> Result<RiskReport> {
    if reps < 2 {
        return Err(Error::invalid("at least two replicates required"));
    }
    let (_, oracle_risk) = oracle_partition(s, 0.0)?;
    let outcomes: Vec<(f64, f64)> = (0..reps as u64)
        .into_par_iter()
        .map(|rep| -> Result<(f64, f64)> {
            let seq = sample_sequence(s, replicate_seed(seed, rep));
            let outcome = estimator.fit(&seq)?;
            let risk = s.dist_sq(&outcome.estimate)?;
            Ok((risk, outcome.dimension as f64))
        })
        .collect::<Result<Vec<_>>>()?;
    let risks: Vec<f64> = outcomes.iter().map(|o| o.0).collect();
    let dims: Vec<f64> = outcomes.iter().map(|o| o.1).collect();
    let (mean_risk, std_error) = mean_and_se(&risks);
    let (mean_dimension, dimension_std_error) = mean_and_se(&dims);
    Ok(RiskReport {
        estimator: estimator.name().to_string(),
        mean_risk,
        std_error,
        replicates: reps,
        oracle_risk,
        q: mean_risk / oracle_risk,
        mean_dimension,
        dimension_std_error,
    })
}

/// One row of the estimator comparison: a risk report extended with the
/// spec's segment count and the risk ratio against the first row.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub report: RiskReport,
    pub true_dimension: usize,
    pub ratio_vs_preliminary: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonTable {
    pub rows: Vec<ComparisonRow>,
}

impl ComparisonTable {
    pub fn csv_header() -> String {
        format!("{},true_dimension,ratio_vs_preliminary", RiskReport::csv_header())
    }

    pub fn to_csv(&self) -> String {
        let mut out = Self::csv_header();
        out.push('\n');
        for row in &self.rows {
            out.push_str(&format!(
                "{},{},{}\n",
                row.report.csv_row(),
                row.true_dimension,
                row.ratio_vs_preliminary
            ));
        }
        out
    }
}

/// Compares the calibrated dyadic estimator with both calibrated hybrid
/// variants on `reps` shared replicates of `spec`. Row order: preliminary,
/// hybrid with the log-form penalty, hybrid with the linear penalty.
pub fn comparison_table(spec: &PiecewiseSpec, reps: usize, seed: u64) -> Result<ComparisonTable> {
    if reps < 2 {
        return Err(Error::invalid("at least two replicates required"));
    }
    let s = build_distribution(spec)?;
    let d_max = default_d_max(spec.n);
    let estimators: Vec<Box<dyn Estimator>> = vec![
        Box::new(CalibratedPreliminary { d_max }),
        Box::new(CalibratedHybrid { form: Stage2Form::LogPractical, d_max }),
        Box::new(CalibratedHybrid { form: Stage2Form::Linear, d_max }),
    ];
    let (_, oracle_risk) = oracle_partition(&s, 0.0)?;

    // Same sampled sequences for every estimator, so the ratios compare
    // like with like.
    let per_rep: Vec<(Vec<f64>, Vec<f64>)> = (0..reps as u64)
        .into_par_iter()
        .map(|rep| -> Result<(Vec<f64>, Vec<f64>)> {
            let seq = sample_sequence(&s, replicate_seed(seed, rep));
            let mut risks = Vec::with_capacity(estimators.len());
            let mut dims = Vec::with_capacity(estimators.len());
            for est in &estimators {
                let outcome = est.fit(&seq)?;
                risks.push(s.dist_sq(&outcome.estimate)?);
                dims.push(outcome.dimension as f64);
            }
            Ok((risks, dims))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut rows = Vec::with_capacity(estimators.len());
    let mut preliminary_mean = 0.0;
    for (idx, est) in estimators.iter().enumerate() {
        let risks: Vec<f64> = per_rep.iter().map(|r| r.0[idx]).collect();
        let dims: Vec<f64> = per_rep.iter().map(|r| r.1[idx]).collect();
        let (mean_risk, std_error) = mean_and_se(&risks);
        let (mean_dimension, dimension_std_error) = mean_and_se(&dims);
        if idx == 0 {
            preliminary_mean = mean_risk;
        }
        rows.push(ComparisonRow {
            report: RiskReport {
                estimator: est.name().to_string(),
                mean_risk,
                std_error,
                replicates: reps,
                oracle_risk,
                q: mean_risk / oracle_risk,
                mean_dimension,
                dimension_std_error,
            },
            true_dimension: spec.true_dimension(),
            ratio_vs_preliminary: mean_risk / preliminary_mean,
        });
    }
    Ok(ComparisonTable { rows })
}

/// Estimates the fixed penalty constant minimizing the Monte Carlo risk of
/// the dyadic selector over the wide grid, using the same replicates for
/// every constant. Returns the best constant and its estimated risk.
pub fn estimate_cstar(
    s: &DistributionMatrix,
    reps: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    if reps < 2 {
        return Err(Error::invalid("at least two replicates required"));
    }
    let grid = crate::calibrate::cstar_grid();
    let risks: Vec<f64> = (0..reps as u64)
        .into_par_iter()
        .map(|rep| -> Result<Vec<f64>> {
            let seq = sample_sequence(s, replicate_seed(seed, rep));
            let pc = prefix_counts(&seq);
            grid.iter()
                .map(|&c| {
                    let (partition, _) = select_dyadic(&pc, c);
                    let est = SegmentMeansEstimator { partition };
                    let outcome = est.fit(&seq)?;
                    s.dist_sq(&outcome.estimate)
                })
                .collect()
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(vec![0.0; grid.len()], |mut acc, per_c| {
            for (a, v) in acc.iter_mut().zip(per_c) {
                *a += v;
            }
            acc
        });
    let (best_idx, best_total) = risks
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .expect("non-empty grid");
    Ok((grid[best_idx], best_total / reps as f64))
}

/// Named spec collection shipped with the crate, version-pinned.
#[derive(Debug, Clone, Deserialize)]
struct SpecFile {
    version: u32,
    specs: Vec<NamedSpec>,
}

#[derive(Debug, Clone, Deserialize)]
struct NamedSpec {
    name: String,
    spec: PiecewiseSpec,
}

/// The eight bundled distributions mirroring the shapes of the simulation
/// study: piecewise-constant (3 and 8 segments, binary and quaternary
/// alphabets, one near-degenerate), piecewise-affine with jumps, and
/// smooth ramps.
pub fn paper_analogue_specs() -> Vec<(String, PiecewiseSpec)> {
    let raw = include_str!("../data/paper_analogues.json");
    let file: SpecFile = serde_json::from_str(raw).expect("bundled spec file parses");
    assert_eq!(file.version, 1, "unexpected bundled spec version");
    file.specs
        .into_iter()
        .map(|named| {
            named.spec.validate().expect("bundled spec is valid");
            (named.name, named.spec)
        })
        .collect()
}
