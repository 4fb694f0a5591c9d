//! JSON export of a simulation's ground truth.

use std::fs;
use std::path::Path;

use cwboost_core::simulate::{GroundTruth, TrueEffect, TRUE_DEGREE, TRUE_INNER_KNOTS};
use serde::{Deserialize, Serialize};

use crate::csv_io::fmt_f64;
use crate::error::IoError;

#[derive(Serialize, Deserialize)]
struct TruthDoc {
    version: String,
    snr: String,
    sigma: String,
    degree: usize,
    inner_knots: usize,
    effects: Vec<EffectDoc>,
    noise_features: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct EffectDoc {
    name: String,
    x_min: String,
    x_max: String,
    coefficients: Vec<String>,
}

pub fn to_json(truth: &GroundTruth) -> Result<String, IoError> {
    let doc = TruthDoc {
        version: "1".into(),
        snr: fmt_f64(truth.snr),
        sigma: fmt_f64(truth.sigma),
        degree: TRUE_DEGREE,
        inner_knots: TRUE_INNER_KNOTS,
        effects: truth
            .effects
            .iter()
            .map(|e| EffectDoc {
                name: e.name.clone(),
                x_min: fmt_f64(e.x_min),
                x_max: fmt_f64(e.x_max),
                coefficients: e.coefficients.iter().copied().map(fmt_f64).collect(),
            })
            .collect(),
        noise_features: truth.noise_features.clone(),
    };
    Ok(serde_json::to_string_pretty(&doc)? + "\n")
}

/// Reads the effects back; the simulated linear predictor is not stored.
pub fn from_json(text: &str) -> Result<GroundTruth, IoError> {
    let doc: TruthDoc = serde_json::from_str(text)?;
    let num = |s: &str| s.parse::<f64>().map_err(|_| IoError::Model(format!("'{s}' is not a number")));
    let effects = doc
        .effects
        .iter()
        .map(|e| {
            Ok(TrueEffect {
                name: e.name.clone(),
                x_min: num(&e.x_min)?,
                x_max: num(&e.x_max)?,
                coefficients: e.coefficients.iter().map(|c| num(c)).collect::<Result<_, IoError>>()?,
            })
        })
        .collect::<Result<_, IoError>>()?;
    Ok(GroundTruth {
        effects,
        noise_features: doc.noise_features,
        snr: num(&doc.snr)?,
        sigma: num(&doc.sigma)?,
        eta: Vec::new(),
    })
}

pub fn save(truth: &GroundTruth, path: &Path) -> Result<(), IoError> {
    fs::write(path, to_json(truth)?).map_err(|source| IoError::File { path: path.into(), source })
}
