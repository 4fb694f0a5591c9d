use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::basis::{BasisKind, BasisSpec};
use crate::binning::count_distinct;
use crate::data::{ColumnKind, Dataset};
use crate::learner::{BaseLearner, Design, FitResult, LearnerOptions, Target};
use crate::{Error, Result};

/// How categorical features enter the pool.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CategoricalEncoding {
    /// One ridge-penalized learner per feature.
    #[default]
    Ridge,
    /// One unpenalized indicator learner per class.
    Binary,
}

/// One P-spline learner per non-constant numeric feature and one or more
/// categorical learners per categorical feature. The response column is never
/// part of `data.columns()`.
pub fn default_specs(data: &Dataset, spline: BasisKind, encoding: CategoricalEncoding) -> Vec<BasisSpec> {
    let mut specs = Vec::new();
    for col in data.columns() {
        match &col.kind {
            ColumnKind::Numeric(x) => {
                if count_distinct(x) >= 2 {
                    specs.push(BasisSpec::new(col.name.clone(), spline));
                }
            }
            ColumnKind::Categorical { levels, .. } => match encoding {
                CategoricalEncoding::Ridge => {
                    specs.push(BasisSpec::new(col.name.clone(), BasisKind::CategoricalRidge))
                }
                CategoricalEncoding::Binary => {
                    for class in 1..=levels.len() as u32 {
                        specs.push(BasisSpec::new(col.name.clone(), BasisKind::CategoricalBinary { class }));
                    }
                }
            },
        }
    }
    specs
}

/// The set of candidate base learners, all built on the same training rows.
#[derive(Debug, Clone)]
pub struct Pool {
    learners: Vec<BaseLearner>,
    weights: Option<Vec<f64>>,
    options: LearnerOptions,
    n_rows: usize,
}

impl Pool {
    pub fn build(
        data: &Dataset,
        specs: &[BasisSpec],
        weights: Option<Vec<f64>>,
        options: LearnerOptions,
    ) -> Result<Self> {
        if specs.is_empty() {
            return Err(Error::Config("empty base-learner pool".into()));
        }
        if let Some(w) = &weights {
            if w.len() != data.n_rows() {
                return Err(Error::Config(format!("{} weights for {} rows", w.len(), data.n_rows())));
            }
        }
        let build_one = |spec: &BasisSpec| -> Result<BaseLearner> {
            let col = data
                .column(&spec.feature)
                .ok_or_else(|| Error::Config(format!("no column named '{}'", spec.feature)))?;
            BaseLearner::new(spec.clone(), col, weights.as_deref(), &options)
        };
        #[cfg(feature = "std")]
        let learners: Result<Vec<BaseLearner>> = {
            use rayon::prelude::*;
            specs.par_iter().map(build_one).collect()
        };
        #[cfg(not(feature = "std"))]
        let learners: Result<Vec<BaseLearner>> = specs.iter().map(build_one).collect();
        Ok(Pool { learners: learners?, weights, options, n_rows: data.n_rows() })
    }

    /// Same learners (same bases and parameter layout) rebuilt on other rows,
    /// recalibrated to the pool's df target. Observation weights are dropped.
    pub fn rebuild_on(&self, data: &Dataset) -> Result<Pool> {
        let build_one = |l: &BaseLearner| -> Result<BaseLearner> {
            let col = data
                .column(&l.spec().feature)
                .ok_or_else(|| Error::Config(format!("no column named '{}'", l.spec().feature)))?;
            BaseLearner::with_basis(l.spec().clone(), l.basis().clone(), col, None, &self.options)
        };
        #[cfg(feature = "std")]
        let learners: Result<Vec<BaseLearner>> = {
            use rayon::prelude::*;
            self.learners.par_iter().map(build_one).collect()
        };
        #[cfg(not(feature = "std"))]
        let learners: Result<Vec<BaseLearner>> = self.learners.iter().map(build_one).collect();
        Ok(Pool { learners: learners?, weights: None, options: self.options, n_rows: data.n_rows() })
    }

    pub fn learners(&self) -> &[BaseLearner] {
        &self.learners
    }

    pub fn len(&self) -> usize {
        self.learners.len()
    }

    pub fn is_empty(&self) -> bool {
        self.learners.is_empty()
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn options(&self) -> &LearnerOptions {
        &self.options
    }

    pub fn weights(&self) -> Option<&[f64]> {
        self.weights.as_deref()
    }

    pub fn specs(&self) -> Vec<BasisSpec> {
        self.learners.iter().map(|l| l.spec().clone()).collect()
    }

    /// Training-row predictions of the additive parameters `theta` (one vector
    /// per learner, zero offset), through the same designs the trainer uses.
    pub fn predict_train(&self, theta: &[Vec<f64>]) -> Vec<f64> {
        let mut f = vec![0.0; self.n_rows];
        for (l, t) in self.learners.iter().zip(theta) {
            if t.iter().any(|&v| v != 0.0) {
                l.add_contribution(t, 1.0, &mut f);
            }
        }
        f
    }

    /// Exact (unbinned) designs of every learner on another dataset.
    pub(crate) fn designs_for(&self, data: &Dataset) -> Result<Vec<Design>> {
        self.learners
            .iter()
            .map(|l| {
                let col = data
                    .column(&l.spec().feature)
                    .ok_or_else(|| Error::Config(format!("validation data lacks column '{}'", l.spec().feature)))?;
                Design::exact(l.basis(), col)
            })
            .collect()
    }

    /// Fits every learner; index-ordered regardless of `parallel`.
    pub(crate) fn fit_all(&self, target: &Target, parallel: bool) -> Vec<FitResult> {
        #[cfg(feature = "std")]
        if parallel {
            use rayon::prelude::*;
            return self
                .learners
                .par_iter()
                .map_init(Vec::new, |scratch, l| l.fit_target(target, scratch))
                .collect();
        }
        let _ = parallel;
        let mut scratch = Vec::new();
        self.learners.iter().map(|l| l.fit_target(target, &mut scratch)).collect()
    }
}
