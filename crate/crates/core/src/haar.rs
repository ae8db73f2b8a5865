//! Orthonormal Haar analysis of `r x n` matrices and the level-weighted
//! coefficient seminorm that defines Besov bodies.

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::seq::dyadic_levels;

const FRAC_1_SQRT_2: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Haar coefficients of an `r x n` matrix, one length-`r` vector per basis
/// index: the scaling index `(-1, 0)` plus detail indices `(j, k)` for
/// `0 <= j < N`, `0 <= k < 2^j` — exactly `n` vectors in total.
///
/// The detail vector at `(j, k)` equals `(sum over the left half - sum
/// over the right half) / sqrt(len)` of the columns covered by the dyadic
/// interval at tree level `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct HaarCoefficients {
    r: usize,
    n: usize,
    /// Column-major over slots: slot 0 is the scaling vector, slot
    /// `2^j + k` the detail vector at `(j, k)`.
    data: Vec<f64>,
}

impl HaarCoefficients {
    fn zeros(r: usize, n: usize) -> Self {
        HaarCoefficients { r, n, data: vec![0.0; r * n] }
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of detail levels `N` (`n = 2^N`).
    pub fn levels(&self) -> u32 {
        self.n.trailing_zeros()
    }

    fn slot(&self, s: usize) -> &[f64] {
        &self.data[s * self.r..(s + 1) * self.r]
    }

    fn slot_mut(&mut self, s: usize) -> &mut [f64] {
        &mut self.data[s * self.r..(s + 1) * self.r]
    }

    /// Coefficient vector on the constant basis function (index `(-1, 0)`).
    pub fn scaling(&self) -> &[f64] {
        self.slot(0)
    }

    /// Detail coefficient vector at level `j`, position `k`.
    pub fn detail(&self, j: u32, k: usize) -> Result<&[f64]> {
        if j >= self.levels() || k >= (1usize << j) {
            return Err(Error::invalid(format!(
                "no detail coefficient at level {j}, position {k}"
            )));
        }
        Ok(self.slot((1usize << j) + k))
    }

    /// Sum of squared norms of all coefficient vectors.
    pub fn norm_sq(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }
}

/// Computes the Haar coefficients of every row of `t` by the in-place
/// butterfly recursion, `O(n)` per row. Requires `n` to be a power of two.
pub fn haar_transform(t: &Matrix) -> Result<HaarCoefficients> {
    let n = t.n();
    dyadic_levels(n)?;
    let mut out = HaarCoefficients::zeros(t.r(), n);
    let mut buf = vec![0.0; n];
    for l in 0..t.r() {
        for i in 0..n {
            buf[i] = t.get(l, i);
        }
        let mut m = n;
        while m > 1 {
            // After this pass buf[0..half] holds the rescaled pair sums;
            // the detail at tree level j = log2(half), position q lands in
            // slot half + q = 2^j + q.
            let half = m / 2;
            for q in 0..half {
                let a = buf[2 * q];
                let b = buf[2 * q + 1];
                out.slot_mut(half + q)[l] = (a - b) * FRAC_1_SQRT_2;
                buf[q] = (a + b) * FRAC_1_SQRT_2;
            }
            m = half;
        }
        out.slot_mut(0)[l] = buf[0];
    }
    Ok(out)
}

/// Reconstructs the matrix from its Haar coefficients; the exact inverse
/// of [`haar_transform`] up to rounding.
pub fn inverse_haar(h: &HaarCoefficients) -> Matrix {
    let (r, n) = (h.r(), h.n());
    let mut t = Matrix::zeros(r, n);
    let mut buf = vec![0.0; n];
    for l in 0..r {
        buf[0] = h.scaling()[l];
        let mut m = 1;
        while m < n {
            // Expand from m sums to 2m, consuming details at this level.
            for q in (0..m).rev() {
                let s = buf[q];
                let d = h.slot(m + q)[l];
                buf[2 * q] = (s + d) * FRAC_1_SQRT_2;
                buf[2 * q + 1] = (s - d) * FRAC_1_SQRT_2;
            }
            m *= 2;
        }
        for i in 0..n {
            t.set(l, i, buf[i]);
        }
    }
    t
}

/// Level-weighted coefficient seminorm
/// `(sum_j 2^(j p (alpha + 1/2 - 1/p)) sum_k |beta_(j,k)|^p)^(1/p)`,
/// detail levels only. A matrix lies in the Besov body of radius `R` iff
/// this value is at most `sqrt(n) * R`.
pub fn besov_seminorm(t: &Matrix, alpha: f64, p: f64) -> Result<f64> {
    if !(alpha > 0.0) {
        return Err(Error::invalid(format!("alpha must be > 0, got {alpha}")));
    }
    if !(p > 0.0 && p <= 2.0) {
        return Err(Error::invalid(format!("p must lie in (0, 2], got {p}")));
    }
    let h = haar_transform(t)?;
    let exponent = p * (alpha + 0.5 - 1.0 / p);
    let mut total = 0.0;
    for j in 0..h.levels() {
        let weight = 2f64.powf(j as f64 * exponent);
        let mut level_sum = 0.0;
        for k in 0..(1usize << j) {
            let beta = h.detail(j, k)?;
            let norm = beta.iter().map(|v| v * v).sum::<f64>().sqrt();
            level_sum += norm.powf(p);
        }
        total += weight * level_sum;
    }
    Ok(total.powf(1.0 / p))
}
