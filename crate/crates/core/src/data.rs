//! Columnar datasets and train/validation splitting.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::math;
use crate::{Error, Result};

/// Values of one feature column.
#[derive(Debug, Clone, PartialEq)]
pub enum ColumnKind {
    Numeric(Vec<f64>),
    /// `codes` are 1-based indices into `levels`.
    Categorical { levels: Vec<String>, codes: Vec<u32> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureColumn {
    pub name: String,
    pub kind: ColumnKind,
}

impl FeatureColumn {
    pub fn numeric(name: impl Into<String>, values: Vec<f64>) -> Self {
        FeatureColumn { name: name.into(), kind: ColumnKind::Numeric(values) }
    }

    pub fn categorical(name: impl Into<String>, levels: Vec<String>, codes: Vec<u32>) -> Self {
        FeatureColumn { name: name.into(), kind: ColumnKind::Categorical { levels, codes } }
    }

    /// Builds a categorical column from raw labels, ordering levels by first appearance.
    pub fn from_labels<S: AsRef<str>>(name: impl Into<String>, labels: &[S]) -> Self {
        let mut levels: Vec<String> = Vec::new();
        let codes = labels
            .iter()
            .map(|label| {
                let label = label.as_ref();
                match levels.iter().position(|l| l == label) {
                    Some(pos) => pos as u32 + 1,
                    None => {
                        levels.push(String::from(label));
                        levels.len() as u32
                    }
                }
            })
            .collect();
        FeatureColumn::categorical(name, levels, codes)
    }

    pub fn len(&self) -> usize {
        match &self.kind {
            ColumnKind::Numeric(v) => v.len(),
            ColumnKind::Categorical { codes, .. } => codes.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn as_numeric(&self) -> Option<&[f64]> {
        match &self.kind {
            ColumnKind::Numeric(v) => Some(v),
            ColumnKind::Categorical { .. } => None,
        }
    }

    fn validate(&self, n: usize) -> Result<()> {
        if self.len() != n {
            return Err(Error::Data(format!(
                "column '{}' has {} rows, expected {n}",
                self.name,
                self.len()
            )));
        }
        match &self.kind {
            ColumnKind::Numeric(values) => {
                if let Some(row) = values.iter().position(|v| !v.is_finite()) {
                    return Err(Error::Data(format!(
                        "column '{}' has a non-finite value at row {row}",
                        self.name
                    )));
                }
            }
            ColumnKind::Categorical { levels, codes } => {
                if levels.is_empty() {
                    return Err(Error::Data(format!("column '{}' has no levels", self.name)));
                }
                let c = levels.len() as u32;
                if let Some(row) = codes.iter().position(|&k| k == 0 || k > c) {
                    return Err(Error::Data(format!(
                        "column '{}' has code {} outside 1..={c} at row {row}",
                        self.name, codes[row]
                    )));
                }
            }
        }
        Ok(())
    }

    fn select(&self, rows: &[usize]) -> FeatureColumn {
        let kind = match &self.kind {
            ColumnKind::Numeric(v) => ColumnKind::Numeric(rows.iter().map(|&i| v[i]).collect()),
            ColumnKind::Categorical { levels, codes } => ColumnKind::Categorical {
                levels: levels.clone(),
                codes: rows.iter().map(|&i| codes[i]).collect(),
            },
        };
        FeatureColumn { name: self.name.clone(), kind }
    }
}

/// Immutable feature store plus response vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    columns: Vec<FeatureColumn>,
    response: Vec<f64>,
    target: String,
}

impl Dataset {
    pub fn new(columns: Vec<FeatureColumn>, response: Vec<f64>, target: impl Into<String>) -> Result<Self> {
        let n = response.len();
        if let Some(row) = response.iter().position(|v| !v.is_finite()) {
            return Err(Error::Data(format!("response has a non-finite value at row {row}")));
        }
        for (i, col) in columns.iter().enumerate() {
            col.validate(n)?;
            if columns[..i].iter().any(|c| c.name == col.name) {
                return Err(Error::Data(format!("duplicate column name '{}'", col.name)));
            }
        }
        Ok(Dataset { columns, response, target: target.into() })
    }

    pub fn n_rows(&self) -> usize {
        self.response.len()
    }

    pub fn columns(&self) -> &[FeatureColumn] {
        &self.columns
    }

    pub fn column(&self, name: &str) -> Option<&FeatureColumn> {
        self.columns.iter().find(|c| c.name == name)
    }

    pub fn response(&self) -> &[f64] {
        &self.response
    }

    pub fn target(&self) -> &str {
        &self.target
    }

    /// Rows `rows` in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Dataset {
        Dataset {
            columns: self.columns.iter().map(|c| c.select(rows)).collect(),
            response: rows.iter().map(|&i| self.response[i]).collect(),
            target: self.target.clone(),
        }
    }

    /// Appends the rows of `other`, which must have the same columns.
    /// Categorical codes of `other` are remapped through their level labels.
    pub fn stack(&self, other: &Dataset) -> Result<Dataset> {
        let mut columns = Vec::with_capacity(self.columns.len());
        for col in &self.columns {
            let rhs = other
                .column(&col.name)
                .ok_or_else(|| Error::Data(format!("column '{}' missing from stacked data", col.name)))?;
            let kind = match (&col.kind, &rhs.kind) {
                (ColumnKind::Numeric(a), ColumnKind::Numeric(b)) => {
                    let mut v = a.clone();
                    v.extend_from_slice(b);
                    ColumnKind::Numeric(v)
                }
                (
                    ColumnKind::Categorical { levels, codes },
                    ColumnKind::Categorical { levels: rl, codes: rc },
                ) => {
                    let mut levels = levels.clone();
                    let mut codes = codes.clone();
                    for &code in rc {
                        let label = &rl[code as usize - 1];
                        let mapped = match levels.iter().position(|l| l == label) {
                            Some(p) => p as u32 + 1,
                            None => {
                                levels.push(label.clone());
                                levels.len() as u32
                            }
                        };
                        codes.push(mapped);
                    }
                    ColumnKind::Categorical { levels, codes }
                }
                _ => {
                    return Err(Error::Data(format!("column '{}' changes kind between datasets", col.name)))
                }
            };
            columns.push(FeatureColumn { name: col.name.clone(), kind });
        }
        let mut response = self.response.clone();
        response.extend_from_slice(&other.response);
        Dataset::new(columns, response, self.target.clone())
    }
}

/// How to hold out a validation set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitSpec {
    pub validation_fraction: f64,
    pub seed: u64,
}

/// Shuffled index partition: the first `floor(n (1 - f))` permuted rows train,
/// the rest validate.
pub fn split_indices(n: usize, spec: SplitSpec) -> Result<(Vec<usize>, Vec<usize>)> {
    let f = spec.validation_fraction;
    if !(f > 0.0 && f < 1.0) {
        return Err(Error::Split(format!("validation fraction {f} not in (0, 1)")));
    }
    if n < 2 {
        return Err(Error::Split(format!("cannot split {n} rows")));
    }
    let n_train = math::floor(n as f64 * (1.0 - f)) as usize;
    if n_train == 0 || n_train == n {
        return Err(Error::Split(format!(
            "fraction {f} leaves an empty side for {n} rows"
        )));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    idx.shuffle(&mut rng);
    let val = idx.split_off(n_train);
    Ok((idx, val))
}

pub fn split(data: &Dataset, spec: SplitSpec) -> Result<(Dataset, Dataset)> {
    let (train, val) = split_indices(data.n_rows(), spec)?;
    Ok((data.select_rows(&train), data.select_rows(&val)))
}
