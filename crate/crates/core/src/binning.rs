//! Discretization of numeric features onto an equally spaced grid, and the
//! accumulator kernels that assemble `Z'WZ` and `Z'Wr` from the reduced
//! design matrix without expanding it to `n` rows.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::math;
use crate::{Error, Result};

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct RowMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl RowMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        RowMatrix { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Kernel(format!(
                "{} values cannot form a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(RowMatrix { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            if r.len() != cols {
                return Err(Error::Kernel(format!("ragged row of length {} (expected {cols})", r.len())));
            }
            data.extend_from_slice(r);
        }
        Ok(RowMatrix { rows: rows.len(), cols, data })
    }

    pub fn identity(n: usize) -> Self {
        let mut m = RowMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// `self * v`.
    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        debug_assert_eq!(v.len(), self.cols);
        (0..self.rows).map(|i| dot(self.row(i), v)).collect()
    }

    /// `self' * u`.
    pub fn tr_mul_vec(&self, u: &[f64]) -> Vec<f64> {
        debug_assert_eq!(u.len(), self.rows);
        let mut out = vec![0.0; self.cols];
        for (i, &ui) in u.iter().enumerate() {
            if ui != 0.0 {
                axpy(ui, self.row(i), &mut out);
            }
        }
        out
    }
}

impl core::ops::Index<(usize, usize)> for RowMatrix {
    type Output = f64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl core::ops::IndexMut<(usize, usize)> for RowMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub(crate) fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Number of design points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BinConfig {
    /// `ceil(sqrt(n))`.
    #[default]
    SqrtN,
    /// `ceil(n^(1/4))`.
    FourthRootN,
    Fixed(usize),
    /// No binning.
    None,
}

impl BinConfig {
    /// Effective number of design points for a feature with `n` rows and
    /// `distinct` distinct values, or `None` when binning is off or the feature
    /// has fewer than two distinct values.
    pub fn effective(self, n: usize, distinct: usize) -> Option<usize> {
        let wanted = match self {
            BinConfig::SqrtN => math::ceil(math::sqrt(n as f64)) as usize,
            BinConfig::FourthRootN => math::ceil(math::sqrt(math::sqrt(n as f64))) as usize,
            BinConfig::Fixed(k) => k,
            BinConfig::None => return None,
        };
        let k = wanted.min(distinct);
        (k >= 2).then_some(k)
    }
}

/// Count distinct values of a numeric feature.
pub fn count_distinct(x: &[f64]) -> usize {
    let mut v: Vec<f64> = x.to_vec();
    v.sort_unstable_by(f64::total_cmp);
    v.dedup();
    v.len()
}

/// A binned feature: the grid, the row-to-grid index and the basis evaluated on
/// the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct BinnedDesign {
    pub design_points: Vec<f64>,
    /// 0-based grid position of every observation.
    pub index: Vec<u32>,
    /// `n* x d`, row `l` is the basis at `design_points[l]`.
    pub reduced_design: RowMatrix,
}

impl BinnedDesign {
    pub fn n_star(&self) -> usize {
        self.design_points.len()
    }

    /// The discretized feature values.
    pub fn discretized(&self) -> Vec<f64> {
        self.index.iter().map(|&k| self.design_points[k as usize]).collect()
    }
}

/// Equally spaced grid between `min(x)` and `max(x)`; every observation goes to
/// its nearest design point, and a value exactly half-way between two points
/// goes to the lower one.
pub fn build_bins(x: &[f64], n_star: usize) -> Result<(Vec<f64>, Vec<u32>)> {
    if x.len() < 2 {
        return Err(Error::Config(format!("binning needs at least 2 values, got {}", x.len())));
    }
    if n_star < 2 {
        return Err(Error::Config(format!("binning needs at least 2 design points, got {n_star}")));
    }
    let (lo, hi) = x
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    if !(lo < hi) {
        return Err(Error::DegenerateFeature { min: lo, max: hi });
    }
    let span = hi - lo;
    let last = n_star - 1;
    let mut points: Vec<f64> = (0..n_star).map(|i| lo + (i as f64) / (last as f64) * span).collect();
    points[last] = hi;
    let step = span / last as f64;

    let index = x
        .iter()
        .map(|&v| {
            let guess = math::ceil((v - lo) / step - 0.5).clamp(0.0, last as f64) as usize;
            let mut best = guess;
            // the guess is off by at most one when the division rounds
            let lower = guess.saturating_sub(1);
            let upper = (guess + 1).min(last);
            for cand in lower..=upper {
                let d_cand = (v - points[cand]).abs();
                let d_best = (v - points[best]).abs();
                if d_cand < d_best || (d_cand == d_best && cand < best) {
                    best = cand;
                }
            }
            best as u32
        })
        .collect();
    Ok((points, index))
}

/// Work done by a kernel call.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OpCount {
    /// Observations visited by the accumulator loop.
    pub row_visits: usize,
    /// Multiply-adds in the final product on the reduced matrix.
    pub product_flops: usize,
}

fn check_kernel(reduced: &RowMatrix, len: usize, weights: &[f64], index: &[u32]) -> Result<()> {
    if weights.len() != len || index.len() != len {
        return Err(Error::Kernel(format!(
            "length mismatch: {len} values, {} weights, {} indices",
            weights.len(),
            index.len()
        )));
    }
    if let Some(&bad) = index.iter().find(|&&k| k as usize >= reduced.rows()) {
        return Err(Error::Kernel(format!(
            "index {bad} out of range for {} design points",
            reduced.rows()
        )));
    }
    Ok(())
}

/// `Z'WZ` for the expanded discretized design `Z` (row `i` = `reduced[index[i]]`).
pub fn bin_mat_mat(reduced: &RowMatrix, weights: &[f64], index: &[u32]) -> Result<RowMatrix> {
    bin_mat_mat_counted(reduced, weights, index, &mut OpCount::default())
}

pub fn bin_mat_mat_counted(
    reduced: &RowMatrix,
    weights: &[f64],
    index: &[u32],
    ops: &mut OpCount,
) -> Result<RowMatrix> {
    check_kernel(reduced, weights.len(), weights, index)?;
    let d = reduced.cols();
    // U = Z_b' diag(per-bin weight sums); only the weight sums depend on n
    let mut bin_weight = vec![0.0; reduced.rows()];
    for (&k, &w) in index.iter().zip(weights) {
        bin_weight[k as usize] += w;
    }
    ops.row_visits += index.len();

    let mut out = RowMatrix::zeros(d, d);
    for (l, &wl) in bin_weight.iter().enumerate() {
        if wl == 0.0 {
            continue;
        }
        let z = reduced.row(l);
        for a in 0..d {
            let ua = wl * z[a];
            if ua == 0.0 {
                continue;
            }
            let row = out.row_mut(a);
            for b in a..d {
                row[b] += ua * z[b];
            }
        }
    }
    ops.product_flops += reduced.rows() * d * d;
    for a in 0..d {
        for b in 0..a {
            out[(a, b)] = out[(b, a)];
        }
    }
    Ok(out)
}

/// `Z'Wr` for the expanded discretized design.
pub fn bin_mat_vec(reduced: &RowMatrix, r: &[f64], weights: &[f64], index: &[u32]) -> Result<Vec<f64>> {
    bin_mat_vec_counted(reduced, r, weights, index, &mut OpCount::default())
}

pub fn bin_mat_vec_counted(
    reduced: &RowMatrix,
    r: &[f64],
    weights: &[f64],
    index: &[u32],
    ops: &mut OpCount,
) -> Result<Vec<f64>> {
    check_kernel(reduced, r.len(), weights, index)?;
    let mut u = vec![0.0; reduced.rows()];
    for ((&k, &w), &ri) in index.iter().zip(weights).zip(r) {
        u[k as usize] += w * ri;
    }
    ops.row_visits += index.len();
    ops.product_flops += reduced.rows() * reduced.cols();
    Ok(reduced.tr_mul_vec(&u))
}

/// Unweighted `Z'v` used on pre-weighted residuals; skips validation.
#[inline]
pub(crate) fn bin_tr_mul(reduced: &RowMatrix, v: &[f64], index: &[u32], scratch: &mut Vec<f64>) -> Vec<f64> {
    scratch.clear();
    scratch.resize(reduced.rows(), 0.0);
    for (&k, &vi) in index.iter().zip(v) {
        scratch[k as usize] += vi;
    }
    reduced.tr_mul_vec(scratch)
}
