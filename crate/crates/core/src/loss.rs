//! Losses, pseudo residuals and loss-optimal constants.

use alloc::format;
use alloc::vec::Vec;

use crate::math;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Loss {
    /// `L(y, f) = (y - f)^2 / 2`.
    #[default]
    SquaredError,
    /// Negative Bernoulli log-likelihood with `y` in `{0, 1}` and logit link:
    /// `L(y, f) = log(1 + exp(f)) - y f`.
    Bernoulli,
}

impl Loss {
    #[inline]
    pub fn pointwise(self, y: f64, f: f64) -> f64 {
        match self {
            Loss::SquaredError => 0.5 * (y - f) * (y - f),
            Loss::Bernoulli => math::softplus(f) - y * f,
        }
    }

    /// Negative derivative of the loss with respect to `f`.
    #[inline]
    pub fn negative_gradient(self, y: f64, f: f64) -> f64 {
        match self {
            Loss::SquaredError => y - f,
            Loss::Bernoulli => y - math::sigmoid(f),
        }
    }

    /// Link-to-response transform.
    #[inline]
    pub fn response(self, f: f64) -> f64 {
        match self {
            Loss::SquaredError => f,
            Loss::Bernoulli => math::sigmoid(f),
        }
    }

    pub fn validate_target(self, y: &[f64]) -> Result<()> {
        if self == Loss::Bernoulli {
            if let Some(i) = y.iter().position(|&v| v != 0.0 && v != 1.0) {
                return Err(Error::Loss(format!("bernoulli target must be 0/1, row {i} is {}", y[i])));
            }
        }
        Ok(())
    }
}

fn check_finite(f: &[f64]) -> Result<()> {
    match f.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(Error::Loss(format!("non-finite prediction at row {i}"))),
        None => Ok(()),
    }
}

pub fn pseudo_residuals(loss: Loss, y: &[f64], f: &[f64]) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(y.len());
    pseudo_residuals_into(loss, y, f, &mut out)?;
    Ok(out)
}

pub(crate) fn pseudo_residuals_into(loss: Loss, y: &[f64], f: &[f64], out: &mut Vec<f64>) -> Result<()> {
    if y.len() != f.len() {
        return Err(Error::Loss(format!("{} targets but {} predictions", y.len(), f.len())));
    }
    check_finite(f)?;
    out.clear();
    out.extend(y.iter().zip(f).map(|(&yi, &fi)| loss.negative_gradient(yi, fi)));
    Ok(())
}

/// Constant minimizing the empirical risk.
pub fn init_constant(loss: Loss, y: &[f64]) -> Result<f64> {
    if y.is_empty() {
        return Err(Error::Loss("empty target".into()));
    }
    let mean = math::mean(y);
    match loss {
        Loss::SquaredError => Ok(mean),
        Loss::Bernoulli => {
            loss.validate_target(y)?;
            if mean <= 0.0 || mean >= 1.0 {
                return Err(Error::Loss(format!("degenerate target: all observations in one class (mean {mean})")));
            }
            Ok(math::ln(mean / (1.0 - mean)))
        }
    }
}

/// Mean pointwise loss.
pub fn risk(loss: Loss, y: &[f64], f: &[f64]) -> f64 {
    debug_assert_eq!(y.len(), f.len());
    if y.is_empty() {
        return 0.0;
    }
    y.iter().zip(f).map(|(&yi, &fi)| loss.pointwise(yi, fi)).sum::<f64>() / y.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn residual_examples() {
        assert_eq!(pseudo_residuals(Loss::SquaredError, &[3.0], &[1.0]).unwrap(), vec![2.0]);
        assert_eq!(pseudo_residuals(Loss::Bernoulli, &[1.0], &[0.0]).unwrap(), vec![0.5]);
        assert_eq!(pseudo_residuals(Loss::Bernoulli, &[0.0], &[0.0]).unwrap(), vec![-0.5]);
        assert!(pseudo_residuals(Loss::SquaredError, &[0.0], &[f64::NAN]).is_err());
    }

    #[test]
    fn constants() {
        assert_eq!(init_constant(Loss::SquaredError, &[1.0, 2.0, 3.0]).unwrap(), 2.0);
        assert_eq!(init_constant(Loss::Bernoulli, &[0.0, 1.0, 1.0, 0.0]).unwrap(), 0.0);
        assert!(init_constant(Loss::Bernoulli, &[1.0, 1.0]).is_err());
    }

    #[test]
    fn risk_examples() {
        assert_eq!(risk(Loss::SquaredError, &[1.0, 2.0], &[1.0, 2.0]), 0.0);
        assert_eq!(risk(Loss::SquaredError, &[0.0, 2.0], &[0.0, 0.0]), 1.0);
        let r = risk(Loss::Bernoulli, &[0.0, 1.0, 1.0], &[0.0, 0.0, 0.0]);
        assert!((r - core::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn init_is_stationary() {
        let y = [0.0, 1.0, 1.0, 1.0, 0.0, 1.0];
        for loss in [Loss::SquaredError, Loss::Bernoulli] {
            let c = init_constant(loss, &y).unwrap();
            let r = pseudo_residuals(loss, &y, &[c; 6]).unwrap();
            assert!(math::mean(&r).abs() < 1e-12);
        }
    }
}
