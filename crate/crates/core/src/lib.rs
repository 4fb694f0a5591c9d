//! Componentwise gradient boosting on penalized univariate base learners.
//!
//! The crate implements three trainers over a pool of univariate base
//! learners (linear, P-spline, categorical):
//!
//! * [`boosting::train_cwb`] - vanilla componentwise boosting,
//! * [`boosting::train_acwb`] - boosting with Nesterov momentum in function
//!   space (a primary model `f` plus a momentum model `h`),
//! * [`boosting::train_hcwb`] - momentum boosting until the validation risk
//!   stalls, followed by vanilla fine-tuning.
//!
//! Numeric features may be discretized onto an equally spaced grid
//! ([`binning`]), in which case the normal equations are assembled with the
//! fused accumulator kernels instead of the full design matrix.
//!
//! The crate is `no_std` (it needs `alloc`). The default `std` feature only
//! adds parallel candidate fitting via rayon.
#![no_std]
// Negated float comparisons are used on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(feature = "std")]
extern crate std;

pub mod basis;
pub mod binning;
pub mod boosting;
pub mod data;
mod error;
pub mod learner;
pub mod loss;
mod math;
pub mod model;
pub mod simulate;

pub use error::{Error, Result};
