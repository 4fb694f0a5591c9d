//! Machine-readable summaries of CLI runs.

use cwboost_core::boosting::{Pool, TrainLog};
use serde::{Deserialize, Serialize};

pub const REPORT_VERSION: &str = "1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    /// Building and calibrating the learner pool.
    pub init_seconds: f64,
    pub iterations_seconds: f64,
    pub per_iteration_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramEntry {
    pub learner: usize,
    pub feature: String,
    pub kind: String,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinningNote {
    pub feature: String,
    pub requested: usize,
    pub used: usize,
    pub clamped: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub version: String,
    pub algorithm: String,
    pub n_train: usize,
    pub n_validation: usize,
    pub timing: Timing,
    /// Peak heap bytes above the pre-training baseline (allocator accounting).
    pub peak_alloc_bytes: usize,
    pub iterations: usize,
    pub best_iteration: usize,
    pub switch_iteration: Option<usize>,
    pub stop_iteration: Option<usize>,
    pub final_train_risk: f64,
    pub final_val_risk: Option<f64>,
    /// Selections per learner, correction learners included.
    pub histogram: Vec<HistogramEntry>,
    pub binning: Vec<BinningNote>,
    /// Selected learner of every iteration.
    pub selections: Vec<usize>,
}

pub fn kind_name(kind: cwboost_core::basis::BasisKind) -> String {
    use cwboost_core::basis::BasisKind as K;
    match kind {
        K::Linear => "linear".into(),
        K::PSpline { .. } => "pspline".into(),
        K::CategoricalRidge => "categorical_ridge".into(),
        K::CategoricalBinary { class } => format!("categorical_binary[{class}]"),
    }
}

pub fn histogram(pool: &Pool, log: &TrainLog) -> Vec<HistogramEntry> {
    log.histogram(pool.len())
        .into_iter()
        .zip(pool.learners())
        .enumerate()
        .map(|(k, (count, l))| HistogramEntry {
            learner: k,
            feature: l.spec().feature.clone(),
            kind: kind_name(l.spec().kind),
            count,
        })
        .collect()
}

pub fn binning_notes(pool: &Pool) -> Vec<BinningNote> {
    pool.learners()
        .iter()
        .filter_map(|l| {
            let b = l.binned()?;
            let requested = l.n_star_requested().unwrap_or(b.n_star());
            Some(BinningNote {
                feature: l.spec().feature.clone(),
                requested,
                used: b.n_star(),
                clamped: b.n_star() < requested,
            })
        })
        .collect()
}
