//! Penalized least-squares base learners.
//!
//! A [`BaseLearner`] owns its design (binned, banded spline rows, dense or
//! categorical codes), the cross product `Z'WZ`, the penalty, the smoothing
//! parameter calibrated to a target degrees of freedom and the Cholesky factor
//! of `Z'WZ + lambda D`. Everything expensive is computed once; fitting the
//! pseudo residuals of an iteration costs one `Z'Wr` plus a triangular solve.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};

use crate::basis::{penalty, Basis, BasisKind, BasisSpec, PenaltyMatrix};
use crate::binning::{self, axpy, bin_mat_mat, build_bins, count_distinct, dot, BinConfig, BinnedDesign, RowMatrix};
use crate::data::{ColumnKind, FeatureColumn};
use crate::{Error, Result};

/// Trace-based flexibility measure of a penalized smoother.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DfKind {
    /// `tr(H)`.
    #[default]
    Df1,
    /// `tr(2H - H H)`.
    Df2,
}

impl DfKind {
    /// Contribution of one eigen-direction with Demmler-Reinsch value `s`.
    /// Unpenalized directions (`s = inf`) contribute exactly 1, directions
    /// without data (`s = 0`) nothing.
    #[inline]
    fn term(self, s: f64, lambda: f64) -> f64 {
        if s == 0.0 {
            return 0.0;
        }
        if s.is_infinite() || lambda == 0.0 {
            return 1.0;
        }
        match self {
            DfKind::Df1 => s / (s + lambda),
            DfKind::Df2 => s * (s + 2.0 * lambda) / ((s + lambda) * (s + lambda)),
        }
    }

    pub fn evaluate(self, s: &[f64], lambda: f64) -> f64 {
        s.iter().map(|&si| self.term(si, lambda)).sum()
    }
}

/// Result of the Demmler-Reinsch reparameterization.
#[derive(Debug, Clone, PartialEq)]
pub struct DemmlerReinsch {
    /// `s_i` such that `df1(lambda) = sum s_i / (s_i + lambda)`; infinite for
    /// penalty null-space directions.
    pub values: Vec<f64>,
    /// Ridge added to the diagonal of `Z'WZ` when it was not positive definite.
    pub jitter: f64,
}

fn to_dmatrix(m: &RowMatrix) -> DMatrix<f64> {
    DMatrix::from_row_slice(m.rows(), m.cols(), m.as_slice())
}

fn trace(m: &RowMatrix) -> f64 {
    (0..m.rows()).map(|i| m[(i, i)]).sum()
}

/// Cholesky factor of `a`, adding `1e-10 * trace / d` to the diagonal if `a`
/// is not numerically positive definite.
fn cholesky_with_jitter(a: &RowMatrix) -> Result<(Cholesky<f64, Dyn>, f64)> {
    let d = a.rows();
    let dense = to_dmatrix(a);
    if let Some(c) = Cholesky::new(dense.clone()) {
        return Ok((c, 0.0));
    }
    let base = (trace(a) / d as f64).abs().max(f64::MIN_POSITIVE);
    let mut jitter = 1e-10 * base;
    for _ in 0..12 {
        let mut m = dense.clone();
        for i in 0..d {
            m[(i, i)] += jitter;
        }
        if let Some(c) = Cholesky::new(m) {
            return Ok((c, jitter));
        }
        jitter *= 100.0;
    }
    Err(Error::Fit("matrix is not positive semidefinite".into()))
}

/// Generalized eigenvalues `s_i` of the pencil `(xtwx, D)`, so that
/// `df1(lambda) = sum s_i / (s_i + lambda)`.
///
/// With `B = xtwx + c D` (`c` balances the traces) and `B = L L'`, the
/// eigenvalues `a_i` of `L^-1 xtwx L^-T` lie in `[0, 1]` and
/// `s_i = c a_i / (1 - a_i)`. This stays well defined when `xtwx` is singular
/// (e.g. B-splines without data): such directions get `s_i = 0` and add
/// nothing to the degrees of freedom. The `nullspace_dim` largest `a_i` are
/// the unpenalized directions and map to `s_i = inf`.
pub fn dro_eigenvalues(xtwx: &RowMatrix, penalty: &PenaltyMatrix) -> Result<DemmlerReinsch> {
    let d = xtwx.rows();
    if xtwx.cols() != d || penalty.dim() != d {
        return Err(Error::Calibration(format!(
            "dimension mismatch: Z'WZ is {}x{}, penalty is {}x{}",
            xtwx.rows(),
            xtwx.cols(),
            penalty.dim(),
            penalty.dim()
        )));
    }
    let trace_pen = trace(&penalty.dense);
    if trace_pen <= 0.0 {
        return Ok(DemmlerReinsch { values: vec![f64::INFINITY; d], jitter: 0.0 });
    }
    let c = trace(xtwx) / trace_pen;
    if !(c > 0.0) || !c.is_finite() {
        return Err(Error::Calibration("Z'WZ has no positive diagonal".into()));
    }
    let mut b = xtwx.clone();
    for i in 0..d {
        for j in 0..d {
            b[(i, j)] += c * penalty.dense[(i, j)];
        }
    }
    let (chol, jitter) = cholesky_with_jitter(&b)?;
    let l = chol.l();
    let x = l
        .solve_lower_triangular(&to_dmatrix(xtwx))
        .ok_or_else(|| Error::Calibration("singular Cholesky factor".into()))?;
    let m = l
        .solve_lower_triangular(&x.transpose())
        .ok_or_else(|| Error::Calibration("singular Cholesky factor".into()))?;
    let sym = (&m + m.transpose()) * 0.5;
    let mut a: Vec<f64> = SymmetricEigen::new(sym).eigenvalues.iter().copied().collect();
    a.sort_unstable_by(|u, v| v.total_cmp(u));
    let null = penalty.nullspace_dim.min(d);
    let values = a
        .iter()
        .enumerate()
        .map(|(i, &ai)| {
            if i < null || ai >= 1.0 {
                f64::INFINITY
            } else if ai <= ZERO_EIGEN {
                0.0
            } else {
                c * ai / (1.0 - ai)
            }
        })
        .collect();
    Ok(DemmlerReinsch { values, jitter })
}

/// Whitened eigenvalues below this are directions without data.
const ZERO_EIGEN: f64 = 1e-12;

/// Smallest `lambda >= 0` with `df(lambda) = target`, by bracketing and bisection
/// on the strictly decreasing map `lambda -> df(lambda)`.
fn solve_lambda(df: impl Fn(f64) -> f64, target: f64, lower_df: f64, upper_df: f64) -> Result<f64> {
    if !(target > lower_df && target <= upper_df + 1e-12) {
        return Err(Error::Calibration(format!(
            "df target {target} outside ({lower_df}, {upper_df}]"
        )));
    }
    if target >= upper_df - 1e-12 || df(0.0) <= target {
        return Ok(0.0);
    }
    let mut hi = 1.0;
    let mut doublings = 0;
    while df(hi) >= target {
        hi *= 2.0;
        doublings += 1;
        if doublings > 2000 || !hi.is_finite() {
            return Err(Error::Calibration(format!("could not bracket df target {target}")));
        }
    }
    let mut lo = 0.0;
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if df(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-13 * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Degrees of freedom at `lambda = 0`: the number of directions with data.
pub fn max_df(s: &[f64]) -> f64 {
    s.iter().filter(|&&v| v > 0.0).count() as f64
}

/// Penalty `lambda` that gives `df_target` degrees of freedom.
pub fn df_to_lambda(s: &[f64], df_target: f64, kind: DfKind) -> Result<f64> {
    let null = s.iter().filter(|v| v.is_infinite()).count() as f64;
    solve_lambda(|l| kind.evaluate(s, l), df_target, null, max_df(s))
}

/// Closed-form degrees of freedom of a ridge-penalized one-hot learner with
/// class sizes `counts`.
pub fn categorical_df(counts: &[f64], lambda: f64, kind: DfKind) -> Result<f64> {
    if lambda < 0.0 || lambda.is_nan() {
        return Err(Error::Calibration(format!("lambda must be >= 0, got {lambda}")));
    }
    Ok(counts
        .iter()
        .map(|&n| {
            if n + lambda == 0.0 {
                0.0
            } else {
                match kind {
                    DfKind::Df1 => n / (n + lambda),
                    DfKind::Df2 => n * (n + 2.0 * lambda) / ((n + lambda) * (n + lambda)),
                }
            }
        })
        .sum())
}

/// Row representation of a learner's design matrix.
#[derive(Debug, Clone)]
pub(crate) enum Design {
    /// Full `n x d` rows.
    Dense(RowMatrix),
    /// Spline rows: `width` non-zeros starting at column `start[i]`.
    Banded { width: usize, start: Vec<u32>, values: Vec<f64> },
    Binned(BinnedDesign),
    /// 0-based class of every row; `u32::MAX` for classes unknown to the basis.
    Categorical { codes: Vec<u32> },
    /// Rows belonging to a single class.
    Indicator { rows: Vec<u32>, n: usize },
}

impl Design {
    /// Unbinned design of `basis` on a column.
    pub(crate) fn exact(basis: &Basis, column: &FeatureColumn) -> Result<Design> {
        match (basis, &column.kind) {
            (Basis::Linear, ColumnKind::Numeric(x)) => Ok(Design::Dense(basis.eval_values(x))),
            (Basis::PSpline(s), ColumnKind::Numeric(x)) => {
                let width = s.degree() + 1;
                let mut start = Vec::with_capacity(x.len());
                let mut values = vec![0.0; x.len() * width];
                for (i, &xi) in x.iter().enumerate() {
                    start.push(s.eval_local(xi, &mut values[i * width..(i + 1) * width]) as u32);
                }
                Ok(Design::Banded { width, start, values })
            }
            (Basis::CategoricalRidge { .. }, ColumnKind::Categorical { levels: dl, codes }) => {
                let map = basis.level_map(dl);
                let codes = codes
                    .iter()
                    .map(|&c| map[c as usize - 1].map_or(u32::MAX, |k| k as u32))
                    .collect();
                Ok(Design::Categorical { codes })
            }
            (Basis::CategoricalBinary { class, .. }, ColumnKind::Categorical { levels: dl, codes }) => {
                let map = basis.level_map(dl);
                let target = Some(*class as usize - 1);
                let rows = codes
                    .iter()
                    .enumerate()
                    .filter(|(_, &c)| map[c as usize - 1] == target)
                    .map(|(i, _)| i as u32)
                    .collect();
                Ok(Design::Indicator { rows, n: codes.len() })
            }
            _ => Err(Error::Config(format!("column '{}' does not match basis type", column.name))),
        }
    }

    pub(crate) fn n_rows(&self) -> usize {
        match self {
            Design::Dense(m) => m.rows(),
            Design::Banded { start, .. } => start.len(),
            Design::Binned(b) => b.index.len(),
            Design::Categorical { codes, .. } => codes.len(),
            Design::Indicator { n, .. } => *n,
        }
    }

    fn cross_product(&self, d: usize, weights: Option<&[f64]>) -> Result<RowMatrix> {
        let w = |i: usize| weights.map_or(1.0, |w| w[i]);
        let mut out = RowMatrix::zeros(d, d);
        match self {
            Design::Dense(m) => {
                for i in 0..m.rows() {
                    let row = m.row(i);
                    let wi = w(i);
                    for a in 0..d {
                        let ua = wi * row[a];
                        axpy(ua, row, out.row_mut(a));
                    }
                }
            }
            Design::Banded { width, start, values } => {
                for (i, &s) in start.iter().enumerate() {
                    let s = s as usize;
                    let row = &values[i * width..(i + 1) * width];
                    let wi = w(i);
                    for a in 0..*width {
                        let ua = wi * row[a];
                        let target = &mut out.row_mut(s + a)[s..s + width];
                        axpy(ua, row, target);
                    }
                }
            }
            Design::Binned(b) => {
                let ones;
                let weights = match weights {
                    Some(w) => w,
                    None => {
                        ones = vec![1.0; b.index.len()];
                        &ones
                    }
                };
                out = bin_mat_mat(&b.reduced_design, weights, &b.index)?;
            }
            Design::Categorical { codes, .. } => {
                for (i, &c) in codes.iter().enumerate() {
                    if c != u32::MAX {
                        out[(c as usize, c as usize)] += w(i);
                    }
                }
            }
            Design::Indicator { rows, .. } => {
                out[(0, 0)] = rows.iter().map(|&i| w(i as usize)).sum();
            }
        }
        Ok(out)
    }

    /// `Z'v`.
    fn tr_mul(&self, v: &[f64], d: usize, scratch: &mut Vec<f64>) -> Vec<f64> {
        match self {
            Design::Dense(m) => m.tr_mul_vec(v),
            Design::Banded { width, start, values } => {
                let mut out = vec![0.0; d];
                for (i, (&s, &vi)) in start.iter().zip(v).enumerate() {
                    let s = s as usize;
                    axpy(vi, &values[i * width..(i + 1) * width], &mut out[s..s + width]);
                }
                out
            }
            Design::Binned(b) => binning::bin_tr_mul(&b.reduced_design, v, &b.index, scratch),
            Design::Categorical { codes, .. } => {
                let mut out = vec![0.0; d];
                for (&c, &vi) in codes.iter().zip(v) {
                    if c != u32::MAX {
                        out[c as usize] += vi;
                    }
                }
                out
            }
            Design::Indicator { rows, .. } => vec![rows.iter().map(|&i| v[i as usize]).sum()],
        }
    }

    /// `f += scale * Z theta`.
    pub(crate) fn add_scaled(&self, theta: &[f64], scale: f64, f: &mut [f64]) {
        match self {
            Design::Dense(m) => {
                for (i, fi) in f.iter_mut().enumerate() {
                    *fi += scale * dot(m.row(i), theta);
                }
            }
            Design::Banded { width, start, values } => {
                for (i, (fi, &s)) in f.iter_mut().zip(start).enumerate() {
                    let s = s as usize;
                    *fi += scale * dot(&values[i * width..(i + 1) * width], &theta[s..s + width]);
                }
            }
            Design::Binned(b) => {
                let per_bin = b.reduced_design.mul_vec(theta);
                for (fi, &k) in f.iter_mut().zip(&b.index) {
                    *fi += scale * per_bin[k as usize];
                }
            }
            Design::Categorical { codes, .. } => {
                for (fi, &c) in f.iter_mut().zip(codes) {
                    if c != u32::MAX {
                        *fi += scale * theta[c as usize];
                    }
                }
            }
            Design::Indicator { rows, .. } => {
                for &i in rows {
                    f[i as usize] += scale * theta[0];
                }
            }
        }
    }
}

/// Settings shared by all learners of a pool.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LearnerOptions {
    pub bins: BinConfig,
    pub df: f64,
    pub df_kind: DfKind,
}

impl Default for LearnerOptions {
    fn default() -> Self {
        LearnerOptions { bins: BinConfig::None, df: 5.0, df_kind: DfKind::Df1 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub theta: Vec<f64>,
    pub sse: f64,
}

/// Weighted pseudo residuals prepared once per iteration and shared by all
/// learners: `w * r` and `sum w r^2`.
#[derive(Debug, Clone, Default)]
pub struct Target {
    weighted: Vec<f64>,
    rss: f64,
}

impl Target {
    pub fn new(r: &[f64], weights: Option<&[f64]>) -> Result<Self> {
        let mut t = Target::default();
        t.reset(r, weights)?;
        Ok(t)
    }

    pub(crate) fn reset(&mut self, r: &[f64], weights: Option<&[f64]>) -> Result<()> {
        if let Some(i) = r.iter().position(|v| !v.is_finite()) {
            return Err(Error::Fit(format!("non-finite pseudo residual at row {i}")));
        }
        self.weighted.clear();
        self.rss = 0.0;
        match weights {
            Some(w) => {
                if w.len() != r.len() {
                    return Err(Error::Fit(format!("{} residuals but {} weights", r.len(), w.len())));
                }
                for (&ri, &wi) in r.iter().zip(w) {
                    self.weighted.push(wi * ri);
                    self.rss += wi * ri * ri;
                }
            }
            None => {
                self.weighted.extend_from_slice(r);
                self.rss = r.iter().map(|v| v * v).sum();
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.weighted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weighted.is_empty()
    }
}

#[derive(Debug, Clone)]
enum Solver {
    Cholesky(Cholesky<f64, Dyn>),
    /// Diagonal inverse of `Z'WZ + lambda I`.
    Diagonal(Vec<f64>),
}

/// A calibrated, factorized base learner. Immutable after construction.
#[derive(Debug, Clone)]
pub struct BaseLearner {
    spec: BasisSpec,
    basis: Basis,
    design: Design,
    penalty: PenaltyMatrix,
    xtwx: RowMatrix,
    lambda: f64,
    df_target: f64,
    df: f64,
    jitter: f64,
    n_star_requested: Option<usize>,
    solver: Solver,
}

impl BaseLearner {
    pub fn new(
        spec: BasisSpec,
        column: &FeatureColumn,
        weights: Option<&[f64]>,
        options: &LearnerOptions,
    ) -> Result<Self> {
        if column.name != spec.feature {
            return Err(Error::Config(format!(
                "learner for '{}' given column '{}'",
                spec.feature, column.name
            )));
        }
        if let Some(w) = weights {
            if w.len() != column.len() {
                return Err(Error::Config(format!("{} weights for {} rows", w.len(), column.len())));
            }
        }
        let basis = Basis::fit(spec.kind, column)?;
        Self::with_basis(spec, basis, column, weights, options)
    }

    /// Builds a learner around an already fitted basis, e.g. to continue
    /// training on rows the basis was not fitted on.
    pub fn with_basis(
        spec: BasisSpec,
        basis: Basis,
        column: &FeatureColumn,
        weights: Option<&[f64]>,
        options: &LearnerOptions,
    ) -> Result<Self> {
        if basis.kind() != spec.kind {
            return Err(Error::Config(format!("basis of '{}' does not match its spec", spec.feature)));
        }
        if let Some(w) = weights {
            if w.len() != column.len() {
                return Err(Error::Config(format!("{} weights for {} rows", w.len(), column.len())));
            }
        }
        let d = basis.dim();

        let mut n_star_requested = None;
        let design = match (&basis, &column.kind) {
            (Basis::Linear | Basis::PSpline(_), ColumnKind::Numeric(x)) => {
                let distinct = count_distinct(x);
                let wanted = match options.bins {
                    BinConfig::Fixed(k) => Some(k),
                    other => other.effective(x.len(), usize::MAX),
                };
                n_star_requested = wanted;
                match options.bins.effective(x.len(), distinct) {
                    Some(k) => match build_bins(x, k) {
                        Ok((design_points, index)) => {
                            let reduced_design = basis.eval_values(&design_points);
                            Design::Binned(BinnedDesign { design_points, index, reduced_design })
                        }
                        Err(Error::DegenerateFeature { .. }) => Design::exact(&basis, column)?,
                        Err(e) => return Err(e),
                    },
                    None => Design::exact(&basis, column)?,
                }
            }
            _ => Design::exact(&basis, column)?,
        };

        let xtwx = design.cross_product(d, weights)?;
        let penalty = penalty(spec.kind, d);
        let requested = options.df;
        let mut df_target = requested.min(d as f64);

        let (lambda, df, jitter) = match spec.kind {
            BasisKind::Linear | BasisKind::CategoricalBinary { .. } => (0.0, d as f64, 0.0),
            BasisKind::CategoricalRidge => {
                let counts: Vec<f64> = (0..d).map(|k| xtwx[(k, k)]).collect();
                let lambda = solve_lambda(
                    |l| categorical_df(&counts, l, options.df_kind).unwrap_or(f64::NAN),
                    df_target,
                    0.0,
                    d as f64,
                )?;
                (lambda, categorical_df(&counts, lambda, options.df_kind)?, 0.0)
            }
            BasisKind::PSpline { .. } => {
                let dro = dro_eigenvalues(&xtwx, &penalty)?;
                df_target = df_target.min(max_df(&dro.values));
                let lambda = df_to_lambda(&dro.values, df_target, options.df_kind)?;
                (lambda, options.df_kind.evaluate(&dro.values, lambda), dro.jitter)
            }
        };

        let (solver, jitter) = match spec.kind {
            BasisKind::CategoricalRidge | BasisKind::CategoricalBinary { .. } => {
                let diag = (0..d)
                    .map(|k| {
                        let v = xtwx[(k, k)] + lambda;
                        if v == 0.0 { 0.0 } else { 1.0 / v }
                    })
                    .collect();
                (Solver::Diagonal(diag), jitter)
            }
            _ => {
                let mut system = xtwx.clone();
                for a in 0..d {
                    for b in 0..d {
                        system[(a, b)] += lambda * penalty.dense[(a, b)];
                    }
                }
                let (chol, j) = cholesky_with_jitter(&system)?;
                (Solver::Cholesky(chol), jitter.max(j))
            }
        };

        Ok(BaseLearner {
            spec,
            basis,
            design,
            penalty,
            xtwx,
            lambda,
            df_target,
            df,
            jitter,
            n_star_requested,
            solver,
        })
    }

    pub fn spec(&self) -> &BasisSpec {
        &self.spec
    }

    pub fn basis(&self) -> &Basis {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Degrees of freedom the learner was calibrated to, clamped to its dimension
    /// and to the number of basis directions the data can identify.
    pub fn df_target(&self) -> f64 {
        self.df_target
    }

    /// Degrees of freedom achieved with the calibrated `lambda`.
    pub fn df(&self) -> f64 {
        self.df
    }

    /// Diagonal ridge added to make a factorization succeed (0 when none).
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub fn penalty(&self) -> &PenaltyMatrix {
        &self.penalty
    }

    pub fn xtwx(&self) -> &RowMatrix {
        &self.xtwx
    }

    pub fn binned(&self) -> Option<&BinnedDesign> {
        match &self.design {
            Design::Binned(b) => Some(b),
            _ => None,
        }
    }

    /// Requested design points before clamping to the distinct-value count.
    pub fn n_star_requested(&self) -> Option<usize> {
        self.n_star_requested
    }

    /// `Z'WZ + lambda D`.
    pub fn system_matrix(&self) -> RowMatrix {
        let d = self.dim();
        let mut m = self.xtwx.clone();
        for a in 0..d {
            for b in 0..d {
                m[(a, b)] += self.lambda * self.penalty.dense[(a, b)];
            }
        }
        m
    }

    /// Lower Cholesky factor of the system matrix, when one is used.
    pub fn cholesky_factor(&self) -> Option<RowMatrix> {
        match &self.solver {
            Solver::Cholesky(c) => {
                let l = c.l();
                let d = l.nrows();
                let mut out = RowMatrix::zeros(d, d);
                for a in 0..d {
                    for b in 0..d {
                        out[(a, b)] = l[(a, b)];
                    }
                }
                Some(out)
            }
            Solver::Diagonal(_) => None,
        }
    }

    /// Closed-form diagonal inverse used by categorical learners.
    pub fn closed_form(&self) -> Option<&[f64]> {
        match &self.solver {
            Solver::Diagonal(d) => Some(d),
            Solver::Cholesky(_) => None,
        }
    }

    /// Fits pseudo residuals `r` with observation weights.
    pub fn fit(&self, r: &[f64], weights: Option<&[f64]>) -> Result<FitResult> {
        if r.len() != self.design.n_rows() {
            return Err(Error::Fit(format!(
                "{} residuals for a learner on {} rows",
                r.len(),
                self.design.n_rows()
            )));
        }
        let target = Target::new(r, weights)?;
        Ok(self.fit_target(&target, &mut Vec::new()))
    }

    /// Fit against prepared residuals. The SSE is `r'Wr - (2 theta'b - theta' Z'WZ theta)`
    /// with `b = Z'Wr`, which equals the weighted residual sum of squares.
    pub fn fit_target(&self, target: &Target, scratch: &mut Vec<f64>) -> FitResult {
        let d = self.dim();
        let b = self.design.tr_mul(&target.weighted, d, scratch);
        let theta: Vec<f64> = match &self.solver {
            Solver::Cholesky(c) => c.solve(&DVector::from_vec(b.clone())).iter().copied().collect(),
            Solver::Diagonal(inv) => b.iter().zip(inv).map(|(bi, ii)| bi * ii).collect(),
        };
        let quad = match &self.solver {
            Solver::Diagonal(_) => (0..d).map(|k| theta[k] * theta[k] * self.xtwx[(k, k)]).sum(),
            Solver::Cholesky(_) => dot(&theta, &self.xtwx.mul_vec(&theta)),
        };
        let reduction = 2.0 * dot(&theta, &b) - quad;
        FitResult { theta, sse: (target.rss - reduction).max(0.0) }
    }

    /// Adds `scale * Z theta` to training-row predictions `f`.
    pub fn add_contribution(&self, theta: &[f64], scale: f64, f: &mut [f64]) {
        self.design.add_scaled(theta, scale, f);
    }

    /// `Z theta` on the training rows.
    pub fn fitted(&self, theta: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.design.n_rows()];
        self.design.add_scaled(theta, 1.0, &mut out);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::String;

    fn lin_learner(x: &[f64]) -> BaseLearner {
        let col = FeatureColumn::numeric("x", x.to_vec());
        BaseLearner::new(BasisSpec::new("x", BasisKind::Linear), &col, None, &LearnerOptions::default()).unwrap()
    }

    #[test]
    fn linear_least_squares() {
        let l = lin_learner(&[1.0, 2.0, 3.0]);
        let fit = l.fit(&[-1.0, 0.0, 1.0], None).unwrap();
        assert!((fit.theta[0] + 2.0).abs() < 1e-12 && (fit.theta[1] - 1.0).abs() < 1e-12);
        assert!(fit.sse.abs() < 1e-12);
    }

    #[test]
    fn binary_class_mean() {
        let col = FeatureColumn::from_labels("c", &["A", "A", "B"]);
        let l = BaseLearner::new(
            BasisSpec::new("c", BasisKind::CategoricalBinary { class: 1 }),
            &col,
            None,
            &LearnerOptions::default(),
        )
        .unwrap();
        let fit = l.fit(&[1.0, 3.0, 5.0], None).unwrap();
        assert_eq!(fit.theta, vec![2.0]);
        // residuals of A around the mean plus the untouched B row
        assert!((fit.sse - (1.0 + 1.0 + 25.0)).abs() < 1e-12);
    }

    #[test]
    fn ridge_closed_form() {
        let col = FeatureColumn::from_labels("c", &["A", "A", "B", "B", "B"]);
        let opts = LearnerOptions { df: 17.0 / 12.0, ..Default::default() };
        // counts (2, 3): lambda = 1 reaches df1 = 2/3 + 3/4
        let l = BaseLearner::new(BasisSpec::new("c", BasisKind::CategoricalRidge), &col, None, &opts).unwrap();
        assert!((l.lambda() - 1.0).abs() < 1e-8);
        let fit = l.fit(&[1.0, 1.0, 2.0, 2.0, 2.0], None).unwrap();
        assert!((fit.theta[0] - 2.0 / 3.0).abs() < 1e-8);
        assert!((fit.theta[1] - 1.5).abs() < 1e-8);
        let cf = l.closed_form().unwrap();
        assert!((cf[0] - 1.0 / 3.0).abs() < 1e-8 && (cf[1] - 0.25).abs() < 1e-8);
    }

    #[test]
    fn dro_on_diagonal_problem() {
        let xtwx = RowMatrix::from_rows(&[vec![2.0, 0.0], vec![0.0, 3.0]]).unwrap();
        let pen = PenaltyMatrix { dense: RowMatrix::identity(2), nullspace_dim: 0 };
        let dro = dro_eigenvalues(&xtwx, &pen).unwrap();
        let mut s = dro.values.clone();
        s.sort_unstable_by(f64::total_cmp);
        assert!((s[0] - 2.0).abs() < 1e-12 && (s[1] - 3.0).abs() < 1e-12);
        assert!((DfKind::Df1.evaluate(&s, 1.0) - (2.0 / 3.0 + 0.75)).abs() < 1e-12);
        assert_eq!(DfKind::Df1.evaluate(&s, 0.0), 2.0);
        assert_eq!(dro.jitter, 0.0);
    }

    #[test]
    fn df_limits_with_nullspace() {
        let s = [f64::INFINITY, f64::INFINITY, 4.0, 1.0];
        assert!((DfKind::Df1.evaluate(&s, 1e12) - 2.0).abs() < 1e-9);
    }

    #[test]
    fn lambda_search() {
        assert_eq!(df_to_lambda(&[2.0, 3.0], 2.0, DfKind::Df1).unwrap(), 0.0);
        let l = df_to_lambda(&[2.0, 3.0], 17.0 / 12.0, DfKind::Df1).unwrap();
        assert!((l - 1.0).abs() < 1e-8);
        let s = [f64::INFINITY, 2.0, 3.0];
        assert!(matches!(df_to_lambda(&s, 0.5, DfKind::Df1), Err(Error::Calibration(_))));
        assert!(matches!(df_to_lambda(&s, 3.5, DfKind::Df1), Err(Error::Calibration(_))));
    }

    #[test]
    fn categorical_df_closed_forms() {
        let c = [2.0, 3.0];
        assert!((categorical_df(&c, 1.0, DfKind::Df1).unwrap() - 17.0 / 12.0).abs() < 1e-15);
        assert!((categorical_df(&c, 1.0, DfKind::Df2).unwrap() - (8.0 / 9.0 + 15.0 / 16.0)).abs() < 1e-15);
        assert_eq!(categorical_df(&c, 0.0, DfKind::Df1).unwrap(), 2.0);
        assert!(categorical_df(&c, -1.0, DfKind::Df1).is_err());
    }

    #[test]
    fn fit_rejects_non_finite() {
        let l = lin_learner(&[1.0, 2.0, 3.0]);
        assert!(matches!(l.fit(&[0.0, f64::INFINITY, 1.0], None), Err(Error::Fit(_))));
    }

    #[test]
    fn spline_calibrates_and_factorizes() {
        let x: Vec<f64> = (0..500).map(|i| (i as f64 * 0.37).sin() * 10.0).collect();
        let col = FeatureColumn::numeric("x", x);
        let l = BaseLearner::new(
            BasisSpec::new("x", BasisKind::pspline()),
            &col,
            None,
            &LearnerOptions { df: 5.0, ..Default::default() },
        )
        .unwrap();
        assert!((l.df() - 5.0).abs() < 1e-6);
        let chol = l.cholesky_factor().unwrap();
        let sys = l.system_matrix();
        let d = l.dim();
        for a in 0..d {
            for b in 0..d {
                let llt: f64 = (0..d).map(|k| chol[(a, k)] * chol[(b, k)]).sum();
                assert!((llt - sys[(a, b)]).abs() < 1e-10 * (1.0 + sys[(a, b)].abs()));
            }
        }
    }

    #[test]
    fn spline_with_empty_segments() {
        // data only at the two ends of the range: most B-splines see no rows
        let x: Vec<f64> = (0..200).map(|i| if i % 2 == 0 { (i % 7) as f64 * 0.1 } else { 100.0 - (i % 5) as f64 * 0.1 }).collect();
        let col = FeatureColumn::numeric("x", x);
        let l = BaseLearner::new(BasisSpec::new("x", BasisKind::pspline()), &col, None, &LearnerOptions::default()).unwrap();
        let dro = dro_eigenvalues(l.xtwx(), l.penalty()).unwrap();
        assert!(dro.values.contains(&0.0));
        assert!((l.df() - 5.0).abs() < 1e-6);
        // dense oracle: tr((A + lambda D)^-1 A)
        let a = to_dmatrix(l.xtwx());
        let sys = to_dmatrix(&l.system_matrix());
        let h = sys.lu().solve(&a).unwrap();
        assert!((h.trace() - l.df()).abs() < 1e-6, "{} vs {}", h.trace(), l.df());
    }

    #[test]
    fn column_name_must_match() {
        let col = FeatureColumn::numeric("x", vec![1.0, 2.0]);
        let err = BaseLearner::new(BasisSpec::new(String::from("z"), BasisKind::Linear), &col, None, &LearnerOptions::default());
        assert!(matches!(err, Err(Error::Config(_))));
    }
}
