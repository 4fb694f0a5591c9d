use alloc::string::String;
use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Invalid configuration or argument combination.
    Config(String),
    /// A dataset or column violates an invariant.
    Data(String),
    /// A train/validation split could not be formed.
    Split(String),
    /// A numeric feature has no spread, so it cannot be binned.
    DegenerateFeature { min: f64, max: f64 },
    /// Mismatched dimensions in a binned kernel.
    Kernel(String),
    /// Penalty calibration failed (df target out of range, negative lambda).
    Calibration(String),
    /// Base-learner fitting failed.
    Fit(String),
    /// Loss evaluation received invalid input.
    Loss(String),
    /// Prediction-time mismatch between model and data.
    Predict(String),
    /// Invalid simulation settings.
    Simulate(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Config(m) => write!(f, "configuration error: {m}"),
            Error::Data(m) => write!(f, "data error: {m}"),
            Error::Split(m) => write!(f, "split error: {m}"),
            Error::DegenerateFeature { min, max } => {
                write!(f, "degenerate feature: min {min} and max {max} do not span a range")
            }
            Error::Kernel(m) => write!(f, "kernel error: {m}"),
            Error::Calibration(m) => write!(f, "calibration error: {m}"),
            Error::Fit(m) => write!(f, "fit error: {m}"),
            Error::Loss(m) => write!(f, "loss error: {m}"),
            Error::Predict(m) => write!(f, "prediction error: {m}"),
            Error::Simulate(m) => write!(f, "simulation error: {m}"),
        }
    }
}

impl core::error::Error for Error {}
