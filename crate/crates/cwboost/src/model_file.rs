//! Versioned JSON model documents.
//!
//! Top-level keys: `version` (`"1"`), `loss`, `offset`, `learners`, `config`
//! and `summary`. Every real number is stored as a decimal string that parses
//! back to the identical `f64`.

use std::fs;
use std::path::Path;

use cwboost_core::basis::{Basis, BasisKind, BasisSpec, BSpline};
use cwboost_core::binning::BinConfig;
use cwboost_core::boosting::{Algorithm, HybridFinish, TrainConfig};
use cwboost_core::learner::{DfKind, LearnerOptions};
use cwboost_core::loss::Loss;
use cwboost_core::model::{ModelSummary, Term, TrainedModel};
use serde::{Deserialize, Serialize};

use crate::csv_io::fmt_f64;
use crate::error::IoError;

pub const FORMAT_VERSION: &str = "1";

/// A trained model together with the name of the response it was trained on.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelFile {
    pub model: TrainedModel,
    pub target: String,
}

#[derive(Serialize, Deserialize)]
struct ModelDoc {
    version: String,
    loss: String,
    algorithm: String,
    offset: String,
    learners: Vec<LearnerDoc>,
    config: ConfigDoc,
    summary: SummaryDoc,
}

#[derive(Serialize, Deserialize)]
struct LearnerDoc {
    feature: String,
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    degree: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    n_knots: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    range: Option<[String; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    levels: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    class: Option<u32>,
    lambda: String,
    df: String,
    theta_f: Vec<String>,
    theta_h: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct ConfigDoc {
    target: String,
    learning_rate: String,
    momentum: String,
    max_iters: usize,
    patience: usize,
    early_stopping: bool,
    df: String,
    df_kind: String,
    bins: String,
    validation_fraction: String,
    seed: u64,
    hybrid_finish: String,
    momentum_blend: bool,
}

#[derive(Serialize, Deserialize)]
struct SummaryDoc {
    iterations: usize,
    best_iteration: usize,
    stop_iteration: Option<usize>,
    switch_iteration: Option<usize>,
    train_risk: String,
    val_risk: Option<String>,
}

fn bad(msg: impl Into<String>) -> IoError {
    IoError::Model(msg.into())
}

fn num(s: &str) -> Result<f64, IoError> {
    s.parse::<f64>().map_err(|_| bad(format!("'{s}' is not a number")))
}

fn nums(v: &[String]) -> Result<Vec<f64>, IoError> {
    v.iter().map(|s| num(s)).collect()
}

fn strs(v: &[f64]) -> Vec<String> {
    v.iter().copied().map(fmt_f64).collect()
}

pub fn loss_name(loss: Loss) -> &'static str {
    match loss {
        Loss::SquaredError => "l2",
        Loss::Bernoulli => "bernoulli",
    }
}

pub fn parse_loss(s: &str) -> Option<Loss> {
    match s {
        "l2" => Some(Loss::SquaredError),
        "bernoulli" => Some(Loss::Bernoulli),
        _ => None,
    }
}

pub fn parse_algorithm(s: &str) -> Option<Algorithm> {
    match s {
        "cwb" => Some(Algorithm::Cwb),
        "acwb" => Some(Algorithm::Acwb),
        "hcwb" => Some(Algorithm::Hcwb),
        _ => None,
    }
}

pub fn bins_name(b: BinConfig) -> String {
    match b {
        BinConfig::SqrtN => "sqrt".into(),
        BinConfig::FourthRootN => "fourthroot".into(),
        BinConfig::None => "none".into(),
        BinConfig::Fixed(k) => k.to_string(),
    }
}

pub fn parse_bins(s: &str) -> Option<BinConfig> {
    match s {
        "sqrt" => Some(BinConfig::SqrtN),
        "fourthroot" => Some(BinConfig::FourthRootN),
        "none" => Some(BinConfig::None),
        other => other.parse::<usize>().ok().map(BinConfig::Fixed),
    }
}

fn learner_doc(t: &Term) -> LearnerDoc {
    let mut doc = LearnerDoc {
        feature: t.spec.feature.clone(),
        kind: String::new(),
        degree: None,
        n_knots: None,
        range: None,
        levels: None,
        class: None,
        lambda: fmt_f64(t.lambda),
        df: fmt_f64(t.df),
        theta_f: strs(&t.theta_f),
        theta_h: strs(&t.theta_h),
    };
    match &t.basis {
        Basis::Linear => doc.kind = "linear".into(),
        Basis::PSpline(s) => {
            let (lo, hi) = s.range();
            doc.kind = "pspline".into();
            doc.degree = Some(s.degree());
            doc.n_knots = Some(s.segments());
            doc.range = Some([fmt_f64(lo), fmt_f64(hi)]);
        }
        Basis::CategoricalRidge { levels } => {
            doc.kind = "categorical_ridge".into();
            doc.levels = Some(levels.clone());
        }
        Basis::CategoricalBinary { levels, class } => {
            doc.kind = "categorical_binary".into();
            doc.levels = Some(levels.clone());
            doc.class = Some(*class);
        }
    }
    doc
}

fn term_from(doc: &LearnerDoc) -> Result<Term, IoError> {
    let missing = |what: &str| bad(format!("learner '{}' lacks '{what}'", doc.feature));
    let basis = match doc.kind.as_str() {
        "linear" => Basis::Linear,
        "pspline" => {
            let degree = doc.degree.ok_or_else(|| missing("degree"))?;
            let n_knots = doc.n_knots.ok_or_else(|| missing("n_knots"))?;
            let [lo, hi] = doc.range.as_ref().ok_or_else(|| missing("range"))?;
            Basis::PSpline(BSpline::equidistant(num(lo)?, num(hi)?, n_knots, degree)?)
        }
        "categorical_ridge" => Basis::CategoricalRidge { levels: doc.levels.clone().ok_or_else(|| missing("levels"))? },
        "categorical_binary" => Basis::CategoricalBinary {
            levels: doc.levels.clone().ok_or_else(|| missing("levels"))?,
            class: doc.class.ok_or_else(|| missing("class"))?,
        },
        other => return Err(bad(format!("unknown learner kind '{other}'"))),
    };
    let kind: BasisKind = basis.kind();
    Ok(Term {
        spec: BasisSpec::new(doc.feature.clone(), kind),
        basis,
        theta_f: nums(&doc.theta_f)?,
        theta_h: nums(&doc.theta_h)?,
        lambda: num(&doc.lambda)?,
        df: num(&doc.df)?,
    })
}

fn config_doc(c: &TrainConfig, target: &str) -> ConfigDoc {
    ConfigDoc {
        target: target.into(),
        learning_rate: fmt_f64(c.learning_rate),
        momentum: fmt_f64(c.momentum),
        max_iters: c.max_iters,
        patience: c.patience,
        early_stopping: c.early_stopping,
        df: fmt_f64(c.learner.df),
        df_kind: match c.learner.df_kind {
            DfKind::Df1 => "df1".into(),
            DfKind::Df2 => "df2".into(),
        },
        bins: bins_name(c.learner.bins),
        validation_fraction: fmt_f64(c.validation_fraction),
        seed: c.seed,
        hybrid_finish: match c.hybrid_finish {
            HybridFinish::SameSplit => "same_split".into(),
            HybridFinish::FullData => "full_data".into(),
        },
        momentum_blend: c.momentum_blend,
    }
}

fn config_from(doc: &ConfigDoc, loss: Loss) -> Result<TrainConfig, IoError> {
    Ok(TrainConfig {
        loss,
        learning_rate: num(&doc.learning_rate)?,
        momentum: num(&doc.momentum)?,
        max_iters: doc.max_iters,
        patience: doc.patience,
        early_stopping: doc.early_stopping,
        learner: LearnerOptions {
            bins: parse_bins(&doc.bins).ok_or_else(|| bad(format!("unknown bins '{}'", doc.bins)))?,
            df: num(&doc.df)?,
            df_kind: match doc.df_kind.as_str() {
                "df1" => DfKind::Df1,
                "df2" => DfKind::Df2,
                other => return Err(bad(format!("unknown df kind '{other}'"))),
            },
        },
        validation_fraction: num(&doc.validation_fraction)?,
        seed: doc.seed,
        hybrid_finish: match doc.hybrid_finish.as_str() {
            "same_split" => HybridFinish::SameSplit,
            "full_data" => HybridFinish::FullData,
            other => return Err(bad(format!("unknown hybrid finish '{other}'"))),
        },
        momentum_blend: doc.momentum_blend,
        parallel: false,
    })
}

pub fn to_json(file: &ModelFile) -> Result<String, IoError> {
    let m = &file.model;
    let doc = ModelDoc {
        version: FORMAT_VERSION.into(),
        loss: loss_name(m.loss).into(),
        algorithm: m.algorithm.name().into(),
        offset: fmt_f64(m.offset),
        learners: m.terms.iter().map(learner_doc).collect(),
        config: config_doc(&m.config, &file.target),
        summary: SummaryDoc {
            iterations: m.summary.iterations,
            best_iteration: m.summary.best_iteration,
            stop_iteration: m.summary.stop_iteration,
            switch_iteration: m.summary.switch_iteration,
            train_risk: fmt_f64(m.summary.train_risk),
            val_risk: m.summary.val_risk.map(fmt_f64),
        },
    };
    Ok(serde_json::to_string_pretty(&doc)? + "\n")
}

pub fn from_json(text: &str) -> Result<ModelFile, IoError> {
    let value: serde_json::Value = serde_json::from_str(text)?;
    match value.get("version").and_then(|v| v.as_str()) {
        Some(FORMAT_VERSION) => {}
        Some(other) => return Err(bad(format!("unsupported model version '{other}'"))),
        None => return Err(bad("missing version tag")),
    }
    let doc: ModelDoc = serde_json::from_value(value)?;
    let loss = parse_loss(&doc.loss).ok_or_else(|| bad(format!("unknown loss '{}'", doc.loss)))?;
    let algorithm =
        parse_algorithm(&doc.algorithm).ok_or_else(|| bad(format!("unknown algorithm '{}'", doc.algorithm)))?;
    let model = TrainedModel {
        offset: num(&doc.offset)?,
        loss,
        algorithm,
        terms: doc.learners.iter().map(term_from).collect::<Result<_, _>>()?,
        config: config_from(&doc.config, loss)?,
        summary: ModelSummary {
            iterations: doc.summary.iterations,
            best_iteration: doc.summary.best_iteration,
            stop_iteration: doc.summary.stop_iteration,
            switch_iteration: doc.summary.switch_iteration,
            train_risk: num(&doc.summary.train_risk)?,
            val_risk: doc.summary.val_risk.as_deref().map(num).transpose()?,
        },
    };
    model.validate()?;
    Ok(ModelFile { model, target: doc.config.target })
}

pub fn save(file: &ModelFile, path: &Path) -> Result<(), IoError> {
    fs::write(path, to_json(file)?).map_err(|source| IoError::File { path: path.into(), source })
}

pub fn load(path: &Path) -> Result<ModelFile, IoError> {
    let text = fs::read_to_string(path).map_err(|source| IoError::File { path: path.into(), source })?;
    from_json(&text)
}
