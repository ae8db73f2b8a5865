//! Real `r x n` matrices, column-stochastic matrices, and the Euclidean
//! projection of columns onto the probability simplex.

use crate::error::{Error, Result};

/// Tolerance for column sums of a distribution matrix.
pub const COLUMN_SUM_TOL: f64 = 1e-9;

/// A dense `r x n` real matrix stored column-major: column `i` holds the
/// values attached to observation `i + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    r: usize,
    n: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(r: usize, n: usize) -> Self {
        Matrix { r, n, data: vec![0.0; r * n] }
    }

    pub fn from_columns(columns: &[Vec<f64>]) -> Result<Self> {
        if columns.is_empty() {
            return Err(Error::invalid("matrix needs at least one column"));
        }
        let r = columns[0].len();
        if r == 0 || columns.iter().any(|c| c.len() != r) {
            return Err(Error::invalid("columns must share a positive length"));
        }
        let mut data = Vec::with_capacity(r * columns.len());
        for c in columns {
            data.extend_from_slice(c);
        }
        Ok(Matrix { r, n: columns.len(), data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::invalid("matrix needs at least one row"));
        }
        let n = rows[0].len();
        if n == 0 || rows.iter().any(|row| row.len() != n) {
            return Err(Error::invalid("rows must share a positive length"));
        }
        let mut m = Matrix::zeros(rows.len(), n);
        for (l, row) in rows.iter().enumerate() {
            for (i, &v) in row.iter().enumerate() {
                m.set(l, i, v);
            }
        }
        Ok(m)
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Entry at row `l`, column `i` (both 0-based).
    #[inline]
    pub fn get(&self, l: usize, i: usize) -> f64 {
        self.data[i * self.r + l]
    }

    #[inline]
    pub fn set(&mut self, l: usize, i: usize, v: f64) {
        self.data[i * self.r + l] = v;
    }

    /// Column `i` (0-based) as a slice of length `r`.
    #[inline]
    pub fn column(&self, i: usize) -> &[f64] {
        &self.data[i * self.r..(i + 1) * self.r]
    }

    pub fn column_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.r..(i + 1) * self.r]
    }

    /// Row `l` gathered into a fresh vector.
    pub fn row(&self, l: usize) -> Vec<f64> {
        (0..self.n).map(|i| self.get(l, i)).collect()
    }

    /// Squared Frobenius norm.
    pub fn norm_sq(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    /// Squared Frobenius distance to another matrix of the same shape.
    pub fn dist_sq(&self, other: &Matrix) -> Result<f64> {
        if self.r != other.r || self.n != other.n {
            return Err(Error::invalid(format!(
                "shape mismatch: {}x{} vs {}x{}",
                self.r, self.n, other.r, other.n
            )));
        }
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b) * (a - b))
            .sum())
    }
}

/// An `r x n` matrix whose columns are probability vectors: entries in
/// `[0, 1]` and column sums within [`COLUMN_SUM_TOL`] of 1.
#[derive(Debug, Clone, PartialEq)]
pub struct DistributionMatrix(Matrix);

impl DistributionMatrix {
    pub fn new(m: Matrix) -> Result<Self> {
        for i in 0..m.n() {
            let col = m.column(i);
            if col.iter().any(|&v| !(0.0..=1.0).contains(&v)) {
                return Err(Error::invalid(format!(
                    "column {} has entries outside [0, 1]",
                    i + 1
                )));
            }
            let sum: f64 = col.iter().sum();
            if (sum - 1.0).abs() > COLUMN_SUM_TOL {
                return Err(Error::invalid(format!(
                    "column {} sums to {sum}, not 1",
                    i + 1
                )));
            }
        }
        Ok(DistributionMatrix(m))
    }

    pub fn into_matrix(self) -> Matrix {
        self.0
    }
}

impl std::ops::Deref for DistributionMatrix {
    type Target = Matrix;

    fn deref(&self) -> &Matrix {
        &self.0
    }
}

impl AsRef<Matrix> for DistributionMatrix {
    fn as_ref(&self) -> &Matrix {
        &self.0
    }
}

/// Euclidean projection of a vector onto the probability simplex by the
/// sort-and-threshold rule: with entries sorted decreasingly, find the
/// largest `k` with `u_k > (sum of first k - 1) / k` and clip at that
/// threshold.
pub fn project_column_to_simplex(v: &[f64]) -> Vec<f64> {
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).expect("non-finite entry"));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (k, &u) in sorted.iter().enumerate() {
        cumsum += u;
        let candidate = (cumsum - 1.0) / (k + 1) as f64;
        if u - candidate > 0.0 {
            theta = candidate;
        }
    }
    // The threshold keeps every entry in [0, 1]; the final clamp only
    // absorbs last-ulp rounding of theta.
    v.iter().map(|&x| (x - theta).clamp(0.0, 1.0)).collect()
}

/// Projects every column of `t` onto the probability simplex. Idempotent
/// up to rounding, and the identity on matrices that are already
/// column-stochastic.
pub fn project_to_simplex(t: &Matrix) -> DistributionMatrix {
    let mut out = Matrix::zeros(t.r(), t.n());
    for i in 0..t.n() {
        let p = project_column_to_simplex(t.column(i));
        out.column_mut(i).copy_from_slice(&p);
    }
    DistributionMatrix::new(out).expect("projection produced a stochastic matrix")
}

/// Cumulative column statistics of a matrix: per-row prefix sums and the
/// prefix of squared column norms. Segment means, squared biases and
/// variance terms all come out in `O(r)` per query.
#[derive(Debug, Clone)]
pub(crate) struct MatrixPrefix {
    sums: Vec<f64>,
    sq: Vec<f64>,
    r: usize,
}

impl MatrixPrefix {
    pub(crate) fn new(t: &Matrix) -> Self {
        let (r, n) = (t.r(), t.n());
        let mut sums = vec![0.0; (n + 1) * r];
        let mut sq = vec![0.0; n + 1];
        for i in 0..n {
            let col = t.column(i);
            let mut csq = 0.0;
            for l in 0..r {
                sums[(i + 1) * r + l] = sums[i * r + l] + col[l];
                csq += col[l] * col[l];
            }
            sq[i + 1] = sq[i] + csq;
        }
        MatrixPrefix { sums, sq, r }
    }

    /// Sum of squared column norms over the 1-based segment `[a, b)`.
    #[inline]
    pub(crate) fn sq_norm(&self, a: usize, b: usize) -> f64 {
        self.sq[b - 1] - self.sq[a - 1]
    }

    /// Per-row sums over `[a, b)` written into `out`.
    #[inline]
    pub(crate) fn row_sums(&self, a: usize, b: usize, out: &mut [f64]) {
        let hi = &self.sums[(b - 1) * self.r..b * self.r];
        let lo = &self.sums[(a - 1) * self.r..a * self.r];
        for l in 0..self.r {
            out[l] = hi[l] - lo[l];
        }
    }

    /// Squared distance of the segment `[a, b)` to its best constant
    /// column, `sum |t_i|^2 - len * |mean|^2`, clamped at zero.
    #[inline]
    pub(crate) fn bias_sq(&self, a: usize, b: usize, scratch: &mut [f64]) -> f64 {
        let len = (b - a) as f64;
        self.row_sums(a, b, scratch);
        let mean_sq: f64 = scratch.iter().map(|s| (s / len) * (s / len)).sum();
        (self.sq_norm(a, b) - len * mean_sq).max(0.0)
    }
}
