//! The boosting trainers and their shared machinery.

mod early_stop;
mod pool;
mod trainer;

use alloc::vec::Vec;

pub use early_stop::{early_stop_check, EarlyStop, PatienceCounter};
pub use pool::{default_specs, CategoricalEncoding, Pool};
pub use trainer::{train, train_acwb, train_cwb, train_hcwb, TrainOutput};

use crate::learner::{LearnerOptions, Target};
use crate::loss::Loss;
use crate::{Error, Result};

/// Default learning rate.
pub const DEFAULT_LEARNING_RATE: f64 = 0.05;
/// Default momentum for the accelerated trainer.
pub const DEFAULT_MOMENTUM_ACWB: f64 = 0.0034;
/// Default momentum for the hybrid trainer.
pub const DEFAULT_MOMENTUM_HCWB: f64 = 0.037;
pub const DEFAULT_PATIENCE: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    Cwb,
    Acwb,
    Hcwb,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Cwb => "cwb",
            Algorithm::Acwb => "acwb",
            Algorithm::Hcwb => "hcwb",
        }
    }

    pub fn default_momentum(self) -> f64 {
        match self {
            Algorithm::Cwb => 0.0,
            Algorithm::Acwb => DEFAULT_MOMENTUM_ACWB,
            Algorithm::Hcwb => DEFAULT_MOMENTUM_HCWB,
        }
    }
}

/// What the hybrid trainer does once the momentum phase runs out of patience.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum HybridFinish {
    /// Keep the train/validation split; validation risk may stop training again.
    #[default]
    SameSplit,
    /// Continue vanilla boosting on training and validation rows together,
    /// up to the iteration budget.
    FullData,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub loss: Loss,
    pub learning_rate: f64,
    pub momentum: f64,
    pub max_iters: usize,
    pub patience: usize,
    /// Stop on validation risk (needs a validation set) and return the
    /// best-validation iterate.
    pub early_stopping: bool,
    pub learner: LearnerOptions,
    pub validation_fraction: f64,
    pub seed: u64,
    pub hybrid_finish: HybridFinish,
    /// Blend primary and momentum model before taking pseudo residuals in the
    /// accelerated update. Turning it off (with zero momentum) reduces the
    /// accelerated update to the vanilla one.
    pub momentum_blend: bool,
    /// Fit candidates concurrently (rayon, `std` only). Results are identical
    /// either way.
    pub parallel: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            loss: Loss::SquaredError,
            learning_rate: DEFAULT_LEARNING_RATE,
            momentum: DEFAULT_MOMENTUM_ACWB,
            max_iters: 100,
            patience: DEFAULT_PATIENCE,
            early_stopping: true,
            learner: LearnerOptions::default(),
            validation_fraction: 0.0,
            seed: 0,
            hybrid_finish: HybridFinish::SameSplit,
            momentum_blend: true,
            parallel: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate >= 0.0 && self.learning_rate <= 1.0) {
            return Err(Error::Config(alloc::format!("learning rate {} not in [0, 1]", self.learning_rate)));
        }
        if !(self.momentum >= 0.0) || !self.momentum.is_finite() {
            return Err(Error::Config(alloc::format!("momentum {} must be >= 0", self.momentum)));
        }
        if self.max_iters == 0 {
            return Err(Error::Config("at least one iteration is required".into()));
        }
        if self.patience == 0 {
            return Err(Error::Config("patience must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Vanilla,
    Accelerated,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    pub selected: usize,
    /// Learner fitted to the error-corrected residuals (accelerated phase).
    pub selected_cor: Option<usize>,
    pub sse: f64,
    pub train_risk: f64,
    pub val_risk: Option<f64>,
    /// Blend weight `2 / (m + 1)` of the accelerated update.
    pub blend: Option<f64>,
    /// Momentum step size `gamma * nu / blend`.
    pub eta: Option<f64>,
    pub phase: Phase,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainLog {
    pub records: Vec<IterationRecord>,
    pub initial_train_risk: f64,
    pub initial_val_risk: Option<f64>,
    /// Iteration at which validation patience ran out, if it did.
    pub stop_iteration: Option<usize>,
    /// Iteration whose state the model holds.
    pub best_iteration: usize,
    /// Last accelerated iteration of the hybrid trainer.
    pub switch_iteration: Option<usize>,
}

impl TrainLog {
    pub fn iterations(&self) -> usize {
        self.records.len()
    }

    pub fn selections(&self) -> Vec<usize> {
        self.records.iter().map(|r| r.selected).collect()
    }

    pub fn val_risks(&self) -> Vec<f64> {
        self.records.iter().filter_map(|r| r.val_risk).collect()
    }

    /// Selection counts per learner, counting correction learners too.
    pub fn histogram(&self, n_learners: usize) -> Vec<usize> {
        let mut h = alloc::vec![0; n_learners];
        for r in &self.records {
            h[r.selected] += 1;
            if let Some(c) = r.selected_cor {
                h[c] += 1;
            }
        }
        h
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BestFit {
    pub theta: Vec<f64>,
    pub index: usize,
    pub sse: f64,
}

/// Fits every learner to `r` and returns the one with the smallest SSE;
/// ties go to the lowest index.
pub fn find_best_baselearner(r: &[f64], pool: &Pool) -> Result<BestFit> {
    if pool.is_empty() {
        return Err(Error::Config("empty base-learner pool".into()));
    }
    if r.len() != pool.n_rows() {
        return Err(Error::Fit(alloc::format!("{} residuals for a pool on {} rows", r.len(), pool.n_rows())));
    }
    let target = Target::new(r, pool.weights())?;
    Ok(select(pool, &target, false))
}

pub(crate) fn select(pool: &Pool, target: &Target, parallel: bool) -> BestFit {
    let fits = pool.fit_all(target, parallel);
    let mut best = 0;
    for (k, fit) in fits.iter().enumerate() {
        if fit.sse < fits[best].sse {
            best = k;
        }
    }
    let mut fits = fits;
    let fit = fits.swap_remove(best);
    BestFit { theta: fit.theta, index: best, sse: fit.sse }
}
