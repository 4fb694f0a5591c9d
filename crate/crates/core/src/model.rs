//! The trained additive model: prediction and partial effects.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::basis::{Basis, BasisSpec};
use crate::binning::dot;
use crate::boosting::{Algorithm, TrainConfig};
use crate::data::{ColumnKind, Dataset};
use crate::learner::Design;
use crate::loss::Loss;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PredictType {
    #[default]
    Link,
    Response,
}

/// One base learner of the model with its aggregated parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Term {
    pub spec: BasisSpec,
    pub basis: Basis,
    /// Parameters of the primary model; the ones used for prediction.
    pub theta_f: Vec<f64>,
    /// Parameters of the momentum model (all zero for vanilla boosting).
    pub theta_h: Vec<f64>,
    pub lambda: f64,
    pub df: f64,
}

impl Term {
    pub fn is_zero(&self) -> bool {
        self.theta_f.iter().all(|&v| v == 0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ModelSummary {
    /// Boosting iterations run.
    pub iterations: usize,
    /// Iteration whose parameters the model holds.
    pub best_iteration: usize,
    pub stop_iteration: Option<usize>,
    pub switch_iteration: Option<usize>,
    pub train_risk: f64,
    pub val_risk: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub offset: f64,
    pub loss: Loss,
    pub algorithm: Algorithm,
    pub terms: Vec<Term>,
    pub config: TrainConfig,
    pub summary: ModelSummary,
}

impl TrainedModel {
    pub fn validate(&self) -> Result<()> {
        if !self.offset.is_finite() {
            return Err(Error::Predict("non-finite offset".into()));
        }
        for t in &self.terms {
            let d = t.basis.dim();
            if t.theta_f.len() != d || t.theta_h.len() != d {
                return Err(Error::Predict(format!(
                    "learner on '{}' has parameters of length {}/{} for dimension {d}",
                    t.spec.feature,
                    t.theta_f.len(),
                    t.theta_h.len()
                )));
            }
            if t.basis.kind() != t.spec.kind {
                return Err(Error::Predict(format!("learner on '{}' has a mismatched basis", t.spec.feature)));
            }
        }
        Ok(())
    }

    /// Features used by at least one term, in term order without duplicates.
    pub fn features(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for t in &self.terms {
            if !out.contains(&t.spec.feature.as_str()) {
                out.push(&t.spec.feature);
            }
        }
        out
    }

    /// `offset + sum_k Z_k theta_f[k]`, optionally mapped to the response scale.
    /// Every feature of the model must be present; terms with all-zero
    /// parameters are skipped. Unseen categorical levels contribute zero.
    pub fn predict(&self, data: &Dataset, kind: PredictType) -> Result<Vec<f64>> {
        let mut f = vec![self.offset; data.n_rows()];
        for t in &self.terms {
            let col = data
                .column(&t.spec.feature)
                .ok_or_else(|| Error::Predict(format!("data lacks feature '{}'", t.spec.feature)))?;
            if t.is_zero() {
                continue;
            }
            let design = Design::exact(&t.basis, col).map_err(|_| {
                Error::Predict(format!("column '{}' does not match the type the model was trained on", col.name))
            })?;
            design.add_scaled(&t.theta_f, 1.0, &mut f);
        }
        if kind == PredictType::Response {
            for v in &mut f {
                *v = self.loss.response(*v);
            }
        }
        Ok(f)
    }

    /// Sum of the partial effects of all terms on `feature` at `grid`. For
    /// categorical features grid values are 1-based level codes (see
    /// [`TrainedModel::levels`]). Features the model does not use give zeros.
    pub fn partial_effect(&self, feature: &str, grid: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; grid.len()];
        for t in self.terms.iter().filter(|t| t.spec.feature == feature) {
            let z = t.basis.eval_values(grid);
            for (i, o) in out.iter_mut().enumerate() {
                *o += dot(z.row(i), &t.theta_f);
            }
        }
        out
    }

    /// Training levels of a categorical feature.
    pub fn levels(&self, feature: &str) -> Option<&[String]> {
        self.terms.iter().filter(|t| t.spec.feature == feature).find_map(|t| match &t.basis {
            Basis::CategoricalRidge { levels } | Basis::CategoricalBinary { levels, .. } => Some(levels.as_slice()),
            _ => None,
        })
    }

    /// Effect of every level of a categorical feature.
    pub fn categorical_effects(&self, feature: &str) -> Option<Vec<(String, f64)>> {
        let levels = self.levels(feature)?;
        let codes: Vec<f64> = (1..=levels.len()).map(|c| c as f64).collect();
        let effect = self.partial_effect(feature, &codes);
        Some(levels.iter().cloned().zip(effect).collect())
    }

    /// Checks that `data` carries every model feature with the right type.
    pub fn check_columns(&self, data: &Dataset) -> Result<()> {
        for t in &self.terms {
            let col = data
                .column(&t.spec.feature)
                .ok_or_else(|| Error::Predict(format!("data lacks feature '{}'", t.spec.feature)))?;
            let numeric = matches!(col.kind, ColumnKind::Numeric(_));
            if numeric == t.basis.is_categorical() {
                return Err(Error::Predict(format!("column '{}' has the wrong type", col.name)));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::BasisKind;
    use crate::data::FeatureColumn;

    fn linear_model(theta: Vec<f64>) -> TrainedModel {
        TrainedModel {
            offset: 2.0,
            loss: Loss::SquaredError,
            algorithm: Algorithm::Cwb,
            terms: vec![Term {
                spec: BasisSpec::new("x", BasisKind::Linear),
                basis: Basis::Linear,
                theta_h: vec![0.0; 2],
                theta_f: theta,
                lambda: 0.0,
                df: 2.0,
            }],
            config: TrainConfig::default(),
            summary: ModelSummary::default(),
        }
    }

    fn data(x: Vec<f64>) -> Dataset {
        let n = x.len();
        Dataset::new(vec![FeatureColumn::numeric("x", x)], vec![0.0; n], "y").unwrap()
    }

    #[test]
    fn linear_prediction() {
        let m = linear_model(vec![-2.0, 1.0]);
        let p = m.predict(&data(vec![1.0, 2.0, 3.0]), PredictType::Link).unwrap();
        assert_eq!(p, vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn zero_parameters_give_offset() {
        let m = linear_model(vec![0.0, 0.0]);
        assert_eq!(m.predict(&data(vec![5.0, -1.0]), PredictType::Link).unwrap(), vec![2.0, 2.0]);
        assert_eq!(m.partial_effect("x", &[1.0, 7.0]), vec![0.0, 0.0]);
    }

    #[test]
    fn bernoulli_response_at_zero_link() {
        let mut m = linear_model(vec![-2.0, 0.0]);
        m.loss = Loss::Bernoulli;
        let p = m.predict(&data(vec![4.0]), PredictType::Response).unwrap();
        assert_eq!(p, vec![0.5]);
    }

    #[test]
    fn missing_feature_is_an_error() {
        let m = linear_model(vec![0.0, 1.0]);
        let d = Dataset::new(vec![FeatureColumn::numeric("z", vec![1.0])], vec![0.0], "y").unwrap();
        assert!(matches!(m.predict(&d, PredictType::Link), Err(Error::Predict(_))));
    }

    #[test]
    fn effects_of_two_terms_add() {
        let mut m = linear_model(vec![1.0, 1.0]);
        let mut second = m.terms[0].clone();
        second.theta_f = vec![0.5, 2.0];
        m.terms.push(second);
        assert_eq!(m.partial_effect("x", &[2.0]), vec![(1.0 + 2.0) + (0.5 + 4.0)]);
    }

    #[test]
    fn unseen_level_contributes_zero() {
        let m = TrainedModel {
            terms: vec![Term {
                spec: BasisSpec::new("c", BasisKind::CategoricalRidge),
                basis: Basis::CategoricalRidge { levels: vec!["a".into(), "b".into()] },
                theta_f: vec![1.0, 3.0],
                theta_h: vec![0.0; 2],
                lambda: 1.0,
                df: 1.0,
            }],
            ..linear_model(vec![0.0, 0.0])
        };
        let col = FeatureColumn::from_labels("c", &["b", "z", "a"]);
        let d = Dataset::new(vec![col], vec![0.0; 3], "y").unwrap();
        assert_eq!(m.predict(&d, PredictType::Link).unwrap(), vec![5.0, 2.0, 3.0]);
        let eff = m.categorical_effects("c").unwrap();
        assert_eq!(eff, vec![("a".into(), 1.0), ("b".into(), 3.0)]);
    }
}
