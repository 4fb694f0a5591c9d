//! Basis representations and penalty matrices of the univariate base learners.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::binning::RowMatrix;
use crate::data::{ColumnKind, FeatureColumn};
use crate::math;
use crate::{Error, Result};

pub const DEFAULT_DEGREE: usize = 3;
pub const DEFAULT_KNOTS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasisKind {
    /// Intercept and slope, unpenalized.
    Linear,
    /// B-splines of `degree` on `n_knots` equal segments of the training range,
    /// with a second-order difference penalty. Dimension `n_knots + degree`.
    PSpline { degree: usize, n_knots: usize },
    /// One-hot encoding of all classes with a ridge penalty.
    CategoricalRidge,
    /// Indicator of a single class (1-based code), unpenalized.
    CategoricalBinary { class: u32 },
}

impl BasisKind {
    pub fn pspline() -> Self {
        BasisKind::PSpline { degree: DEFAULT_DEGREE, n_knots: DEFAULT_KNOTS }
    }

    pub fn is_categorical(&self) -> bool {
        matches!(self, BasisKind::CategoricalRidge | BasisKind::CategoricalBinary { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BasisSpec {
    pub kind: BasisKind,
    pub feature: String,
}

impl BasisSpec {
    pub fn new(feature: impl Into<String>, kind: BasisKind) -> Self {
        BasisSpec { kind, feature: feature.into() }
    }
}

/// Equidistant B-spline basis. Knots extend `degree` steps beyond each end of
/// `[lower, upper]`, so the basis is a partition of unity on that interval.
#[derive(Debug, Clone, PartialEq)]
pub struct BSpline {
    degree: usize,
    segments: usize,
    lower: f64,
    upper: f64,
    knots: Vec<f64>,
}

impl BSpline {
    pub fn equidistant(lower: f64, upper: f64, segments: usize, degree: usize) -> Result<Self> {
        if degree < 1 || segments < 2 {
            return Err(Error::Config(format!(
                "B-spline needs degree >= 1 and >= 2 segments (got degree {degree}, {segments} segments)"
            )));
        }
        if !(lower < upper) || !lower.is_finite() || !upper.is_finite() {
            return Err(Error::DegenerateFeature { min: lower, max: upper });
        }
        let h = (upper - lower) / segments as f64;
        let knots = (0..=segments + 2 * degree)
            .map(|j| lower + (j as f64 - degree as f64) * h)
            .collect();
        Ok(BSpline { degree, segments, lower, upper, knots })
    }

    pub fn dim(&self) -> usize {
        self.segments + self.degree
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn segments(&self) -> usize {
        self.segments
    }

    pub fn range(&self) -> (f64, f64) {
        (self.lower, self.upper)
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    /// Writes the `degree + 1` non-zero basis values at `x` (clamped to the
    /// range) into `out` and returns the column of the first one.
    pub fn eval_local(&self, x: f64, out: &mut [f64]) -> usize {
        let p = self.degree;
        debug_assert_eq!(out.len(), p + 1);
        let x = x.clamp(self.lower, self.upper);
        let t = &self.knots;
        let h = (self.upper - self.lower) / self.segments as f64;
        let last_span = p + self.segments - 1;
        let mut span = p + math::floor((x - self.lower) / h).max(0.0) as usize;
        span = span.min(last_span);
        while span > p && x < t[span] {
            span -= 1;
        }
        while span < last_span && x >= t[span + 1] {
            span += 1;
        }

        // Cox-de Boor on the non-zero functions only
        let mut left = [0.0f64; 16];
        let mut right = [0.0f64; 16];
        debug_assert!(p < 16);
        out[0] = 1.0;
        for j in 1..=p {
            left[j] = x - t[span + 1 - j];
            right[j] = t[span + j] - x;
            let mut saved = 0.0;
            for r in 0..j {
                let temp = out[r] / (right[r + 1] + left[j - r]);
                out[r] = saved + right[r + 1] * temp;
                saved = left[j - r] * temp;
            }
            out[j] = saved;
        }
        span - p
    }

    /// Dense `m x d` basis matrix.
    pub fn eval(&self, x: &[f64]) -> RowMatrix {
        let d = self.dim();
        let mut m = RowMatrix::zeros(x.len(), d);
        let mut local = vec![0.0; self.degree + 1];
        for (i, &xi) in x.iter().enumerate() {
            let start = self.eval_local(xi, &mut local);
            m.row_mut(i)[start..start + local.len()].copy_from_slice(&local);
        }
        m
    }
}

/// A basis fitted to its training column: knots for splines, level labels for
/// categorical effects.
#[derive(Debug, Clone, PartialEq)]
pub enum Basis {
    Linear,
    PSpline(BSpline),
    CategoricalRidge { levels: Vec<String> },
    CategoricalBinary { levels: Vec<String>, class: u32 },
}

impl Basis {
    /// Derives knots or levels from the training column.
    pub fn fit(kind: BasisKind, column: &FeatureColumn) -> Result<Self> {
        match (kind, &column.kind) {
            (BasisKind::Linear, ColumnKind::Numeric(_)) => Ok(Basis::Linear),
            (BasisKind::PSpline { degree, n_knots }, ColumnKind::Numeric(x)) => {
                let (lo, hi) = min_max(x);
                Ok(Basis::PSpline(BSpline::equidistant(lo, hi, n_knots, degree)?))
            }
            (BasisKind::CategoricalRidge, ColumnKind::Categorical { levels, .. }) => {
                Ok(Basis::CategoricalRidge { levels: levels.clone() })
            }
            (BasisKind::CategoricalBinary { class }, ColumnKind::Categorical { levels, .. }) => {
                if class == 0 || class as usize > levels.len() {
                    return Err(Error::Config(format!(
                        "class {class} out of range for '{}' with {} levels",
                        column.name,
                        levels.len()
                    )));
                }
                Ok(Basis::CategoricalBinary { levels: levels.clone(), class })
            }
            (kind, _) => Err(Error::Config(format!(
                "basis {kind:?} does not match the type of column '{}'",
                column.name
            ))),
        }
    }

    pub fn kind(&self) -> BasisKind {
        match self {
            Basis::Linear => BasisKind::Linear,
            Basis::PSpline(s) => BasisKind::PSpline { degree: s.degree, n_knots: s.segments },
            Basis::CategoricalRidge { .. } => BasisKind::CategoricalRidge,
            Basis::CategoricalBinary { class, .. } => BasisKind::CategoricalBinary { class: *class },
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Basis::Linear => 2,
            Basis::PSpline(s) => s.dim(),
            Basis::CategoricalRidge { levels } => levels.len(),
            Basis::CategoricalBinary { .. } => 1,
        }
    }

    pub fn is_categorical(&self) -> bool {
        self.kind().is_categorical()
    }

    /// Basis rows for numeric values. Categorical bases interpret the values as
    /// 1-based codes of this basis' own levels; codes that are not a valid level
    /// produce all-zero rows.
    pub fn eval_values(&self, x: &[f64]) -> RowMatrix {
        match self {
            Basis::Linear => {
                let mut m = RowMatrix::zeros(x.len(), 2);
                for (i, &xi) in x.iter().enumerate() {
                    m[(i, 0)] = 1.0;
                    m[(i, 1)] = xi;
                }
                m
            }
            Basis::PSpline(s) => s.eval(x),
            Basis::CategoricalRidge { levels } => {
                let mut m = RowMatrix::zeros(x.len(), levels.len());
                for (i, &xi) in x.iter().enumerate() {
                    if let Some(k) = code_of(xi, levels.len()) {
                        m[(i, k)] = 1.0;
                    }
                }
                m
            }
            Basis::CategoricalBinary { levels, class } => {
                let mut m = RowMatrix::zeros(x.len(), 1);
                for (i, &xi) in x.iter().enumerate() {
                    if code_of(xi, levels.len()) == Some(*class as usize - 1) {
                        m[(i, 0)] = 1.0;
                    }
                }
                m
            }
        }
    }

    /// Basis rows for a data column. Categorical columns are matched by level
    /// label, so the column may use a different level order than training.
    pub fn eval_column(&self, column: &FeatureColumn) -> Result<RowMatrix> {
        match (&column.kind, self) {
            (ColumnKind::Numeric(x), Basis::Linear | Basis::PSpline(_)) => Ok(self.eval_values(x)),
            (ColumnKind::Categorical { levels, codes }, Basis::CategoricalRidge { .. } | Basis::CategoricalBinary { .. }) => {
                let map = self.level_map(levels);
                let mapped: Vec<f64> = codes
                    .iter()
                    .map(|&c| map[c as usize - 1].map_or(0.0, |k| (k + 1) as f64))
                    .collect();
                Ok(self.eval_values(&mapped))
            }
            _ => Err(Error::Predict(format!("column '{}' does not match basis type", column.name))),
        }
    }

    /// For every level of a data column, the 0-based position of the same label
    /// among this basis' training levels.
    pub(crate) fn level_map(&self, data_levels: &[String]) -> Vec<Option<usize>> {
        let own = match self {
            Basis::CategoricalRidge { levels } | Basis::CategoricalBinary { levels, .. } => levels,
            _ => return vec![None; data_levels.len()],
        };
        data_levels.iter().map(|l| own.iter().position(|o| o == l)).collect()
    }
}

fn code_of(x: f64, n_levels: usize) -> Option<usize> {
    if x >= 1.0 && x <= n_levels as f64 && x == math::floor(x) {
        Some(x as usize - 1)
    } else {
        None
    }
}

pub(crate) fn min_max(x: &[f64]) -> (f64, f64) {
    x.iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
}

/// Evaluates `spec` on a training column (see [`Basis::fit`] and [`Basis::eval_column`]).
pub fn eval_basis(spec: &BasisSpec, column: &FeatureColumn) -> Result<RowMatrix> {
    Basis::fit(spec.kind, column)?.eval_column(column)
}

/// Symmetric positive semidefinite penalty with the dimension of its null space.
#[derive(Debug, Clone, PartialEq)]
pub struct PenaltyMatrix {
    pub dense: RowMatrix,
    pub nullspace_dim: usize,
}

impl PenaltyMatrix {
    pub fn dim(&self) -> usize {
        self.dense.rows()
    }

    pub fn is_zero(&self) -> bool {
        self.dense.as_slice().iter().all(|&v| v == 0.0)
    }
}

/// `D'D` for the `(d - order) x d` difference matrix of the given order.
pub fn difference_penalty(d: usize, order: usize) -> RowMatrix {
    // rows of the difference matrix via repeated differencing of the identity
    let mut delta: Vec<Vec<f64>> = (0..d)
        .map(|i| {
            let mut e = vec![0.0; d];
            e[i] = 1.0;
            e
        })
        .collect();
    for _ in 0..order {
        delta = delta.windows(2).map(|w| w[1].iter().zip(&w[0]).map(|(b, a)| b - a).collect()).collect();
    }
    let mut out = RowMatrix::zeros(d, d);
    for row in &delta {
        for a in 0..d {
            if row[a] == 0.0 {
                continue;
            }
            for b in 0..d {
                out[(a, b)] += row[a] * row[b];
            }
        }
    }
    out
}

pub fn penalty(kind: BasisKind, dim: usize) -> PenaltyMatrix {
    match kind {
        BasisKind::PSpline { .. } => PenaltyMatrix { dense: difference_penalty(dim, 2), nullspace_dim: 2 },
        BasisKind::CategoricalRidge => PenaltyMatrix { dense: RowMatrix::identity(dim), nullspace_dim: 0 },
        BasisKind::Linear | BasisKind::CategoricalBinary { .. } => {
            PenaltyMatrix { dense: RowMatrix::zeros(dim, dim), nullspace_dim: dim }
        }
    }
}
