//! Runtime and memory grid over data size, number of learners and binning.

use std::collections::BTreeMap;
use std::fs::File;
use std::path::Path;
use std::time::Instant;

use cwboost_core::basis::{BasisKind, BasisSpec};
use cwboost_core::binning::BinConfig;
use cwboost_core::boosting::{train_acwb, train_cwb, train_hcwb, Algorithm, Pool, TrainConfig};
use cwboost_core::data::{split, Dataset, SplitSpec};
use cwboost_core::learner::LearnerOptions;
use cwboost_core::simulate::{simulate, SimConfig};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::alloc_counter;
use crate::error::IoError;

pub const CSV_HEADER: [&str; 7] = ["n", "K", "binned", "phase", "seconds", "alloc_bytes", "rep"];
pub const PHASE_INIT: &str = "init";
pub const PHASE_ITERATION: &str = "iteration";

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub ns: Vec<usize>,
    pub ks: Vec<usize>,
    pub binned: Vec<bool>,
    pub iters: usize,
    pub reps: usize,
    pub seed: u64,
    pub algorithm: Algorithm,
    pub parallel: bool,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            ns: vec![10_000, 100_000],
            ks: vec![10],
            binned: vec![true, false],
            iters: 200,
            reps: 3,
            seed: 1,
            algorithm: Algorithm::Cwb,
            parallel: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub n: usize,
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(with = "yes_no")]
    pub binned: bool,
    pub phase: String,
    pub seconds: f64,
    pub alloc_bytes: usize,
    pub rep: usize,
}

mod yes_no {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &bool, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(if *v { "yes" } else { "no" })
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<bool, D::Error> {
        match String::deserialize(d)?.as_str() {
            "yes" => Ok(true),
            "no" => Ok(false),
            other => Err(serde::de::Error::custom(format!("expected yes/no, got '{other}'"))),
        }
    }
}

fn cell_data(n: usize, k: usize, seed: u64) -> Result<Dataset, IoError> {
    let (data, truth) = simulate(&SimConfig { n, p: k, p_noise_rel: 0.5, snr: 1.0, seed })?;
    let keep: Vec<_> = truth
        .effects
        .iter()
        .map(|e| data.column(&e.name).expect("simulated column").clone())
        .collect();
    Ok(Dataset::new(keep, data.response().to_vec(), "y")?)
}

/// Runs every grid cell `reps` times; data generation is not timed.
pub fn run(config: &BenchConfig, mut progress: impl FnMut(&BenchRow)) -> Result<Vec<BenchRow>, IoError> {
    let mut rows = Vec::new();
    for &n in &config.ns {
        for &k in &config.ks {
            let data = cell_data(n, k, config.seed)?;
            let (train, valid) = if config.algorithm == Algorithm::Hcwb {
                let (t, v) = split(&data, SplitSpec { validation_fraction: 0.3, seed: config.seed })?;
                (t, Some(v))
            } else {
                (data, None)
            };
            let specs: Vec<BasisSpec> =
                train.columns().iter().map(|c| BasisSpec::new(c.name.clone(), BasisKind::pspline())).collect();
            for &binned in &config.binned {
                let options = LearnerOptions {
                    bins: if binned { BinConfig::SqrtN } else { BinConfig::None },
                    ..LearnerOptions::default()
                };
                let tc = TrainConfig {
                    max_iters: config.iters,
                    early_stopping: false,
                    momentum: config.algorithm.default_momentum(),
                    learner: options,
                    parallel: config.parallel,
                    ..TrainConfig::default()
                };
                for rep in 1..=config.reps {
                    let base = alloc_counter::reset_peak();
                    let t0 = Instant::now();
                    let pool = Pool::build(&train, &specs, None, options)?;
                    let init = t0.elapsed().as_secs_f64();
                    let init_alloc = alloc_counter::peak_since(base);

                    let base = alloc_counter::reset_peak();
                    let t1 = Instant::now();
                    let out = match config.algorithm {
                        Algorithm::Cwb => train_cwb(&pool, &train, None, &tc)?,
                        Algorithm::Acwb => train_acwb(&pool, &train, None, &tc)?,
                        Algorithm::Hcwb => train_hcwb(&pool, &train, valid.as_ref().expect("split"), &tc)?,
                    };
                    let iter_secs = t1.elapsed().as_secs_f64() / out.log.iterations().max(1) as f64;
                    let iter_alloc = alloc_counter::peak_since(base);
                    drop(out);
                    drop(pool);

                    for (phase, seconds, alloc_bytes) in
                        [(PHASE_INIT, init, init_alloc), (PHASE_ITERATION, iter_secs, iter_alloc)]
                    {
                        let row = BenchRow { n, k, binned, phase: phase.into(), seconds, alloc_bytes, rep };
                        progress(&row);
                        rows.push(row);
                    }
                }
            }
        }
    }
    Ok(rows)
}

pub fn write_rows(rows: &[BenchRow], path: &Path) -> Result<(), IoError> {
    let file = File::create(path).map_err(|source| IoError::File { path: path.into(), source })?;
    let csv_err = |source| IoError::Csv { path: path.into(), source };
    let mut w = csv::Writer::from_writer(file);
    if rows.is_empty() {
        w.write_record(CSV_HEADER).map_err(csv_err)?;
    }
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
    }
    w.flush().map_err(|source| IoError::File { path: path.into(), source })
}

pub fn read_rows(path: &Path) -> Result<Vec<BenchRow>, IoError> {
    let csv_err = |source| IoError::Csv { path: path.into(), source };
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    let header: Vec<String> = r.headers().map_err(csv_err)?.iter().map(str::to_owned).collect();
    if header != CSV_HEADER {
        return Err(IoError::Format { path: path.into(), message: format!("unexpected header {header:?}") });
    }
    r.deserialize().map(|row| row.map_err(csv_err)).collect()
}

/// Estimate and optional 95% interval.
pub type Coefficient = (f64, Option<(f64, f64)>);

pub fn median(values: &mut [f64]) -> f64 {
    values.sort_unstable_by(f64::total_cmp);
    let m = values.len();
    if m == 0 {
        f64::NAN
    } else if m % 2 == 1 {
        values[m / 2]
    } else {
        0.5 * (values[m / 2 - 1] + values[m / 2])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub n: usize,
    #[serde(rename = "K")]
    pub k: usize,
    pub binned: bool,
    pub phase: String,
    pub median_seconds: f64,
    pub median_alloc_bytes: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioSummary {
    pub n: usize,
    #[serde(rename = "K")]
    pub k: usize,
    pub phase: String,
    pub binned_seconds: f64,
    pub unbinned_seconds: f64,
    /// Binned over unbinned median time.
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exponent {
    pub binned: bool,
    pub phase: String,
    /// `n` or `K`.
    pub variable: String,
    pub estimate: f64,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchSummary {
    pub cells: Vec<CellSummary>,
    pub ratios: Vec<RatioSummary>,
    pub exponents: Vec<Exponent>,
}

/// Least-squares coefficients of `y` on the columns of `x` with 95%
/// confidence intervals (none when there are no residual degrees of freedom).
pub fn ols(x: &DMatrix<f64>, y: &DVector<f64>) -> Option<Vec<Coefficient>> {
    let (m, p) = x.shape();
    let xtx = x.transpose() * x;
    let inv = xtx.try_inverse()?;
    let beta = &inv * x.transpose() * y;
    let resid = y - x * &beta;
    let dof = m.checked_sub(p)?;
    let t = if dof > 0 { StudentsT::new(0.0, 1.0, dof as f64).ok().map(|d| d.inverse_cdf(0.975)) } else { None };
    let sigma2 = if dof > 0 { resid.norm_squared() / dof as f64 } else { f64::NAN };
    Some(
        (0..p)
            .map(|j| {
                let ci = t.map(|t| {
                    let se = (sigma2 * inv[(j, j)]).sqrt();
                    (beta[j] - t * se, beta[j] + t * se)
                });
                (beta[j], ci)
            })
            .collect(),
    )
}

/// Medians, binned/unbinned ratios and log-log exponents of runtime in `n`
/// and `K` (jointly fitted when both vary).
pub fn summarize(rows: &[BenchRow]) -> BenchSummary {
    type Key = (usize, usize, bool, String);
    let mut groups: BTreeMap<Key, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for r in rows {
        let g = groups.entry((r.n, r.k, r.binned, r.phase.clone())).or_default();
        g.0.push(r.seconds);
        g.1.push(r.alloc_bytes as f64);
    }
    let cells: Vec<CellSummary> = groups
        .into_iter()
        .map(|((n, k, binned, phase), (mut s, mut a))| CellSummary {
            n,
            k,
            binned,
            phase,
            median_seconds: median(&mut s),
            median_alloc_bytes: median(&mut a),
        })
        .collect();

    let find = |n: usize, k: usize, binned: bool, phase: &str| {
        cells.iter().find(|c| c.n == n && c.k == k && c.binned == binned && c.phase == phase)
    };
    let mut ratios = Vec::new();
    for c in cells.iter().filter(|c| c.binned) {
        if let Some(u) = find(c.n, c.k, false, &c.phase) {
            ratios.push(RatioSummary {
                n: c.n,
                k: c.k,
                phase: c.phase.clone(),
                binned_seconds: c.median_seconds,
                unbinned_seconds: u.median_seconds,
                ratio: c.median_seconds / u.median_seconds,
            });
        }
    }

    let mut exponents = Vec::new();
    for binned in [true, false] {
        for phase in [PHASE_INIT, PHASE_ITERATION] {
            let sel: Vec<&CellSummary> =
                cells.iter().filter(|c| c.binned == binned && c.phase == phase && c.median_seconds > 0.0).collect();
            let distinct = |f: fn(&CellSummary) -> usize| {
                let mut v: Vec<usize> = sel.iter().map(|c| f(c)).collect();
                v.sort_unstable();
                v.dedup();
                v.len() > 1
            };
            type Var = (&'static str, fn(&CellSummary) -> usize);
            let mut vars: Vec<Var> = Vec::new();
            if distinct(|c| c.n) {
                vars.push(("n", |c| c.n));
            }
            if distinct(|c| c.k) {
                vars.push(("K", |c| c.k));
            }
            if vars.is_empty() {
                continue;
            }
            let x = DMatrix::from_fn(sel.len(), vars.len() + 1, |i, j| {
                if j == 0 { 1.0 } else { (vars[j - 1].1(sel[i]) as f64).ln() }
            });
            let y = DVector::from_iterator(sel.len(), sel.iter().map(|c| c.median_seconds.ln()));
            if let Some(coef) = ols(&x, &y) {
                for (j, (name, _)) in vars.iter().enumerate() {
                    let (estimate, ci) = coef[j + 1];
                    exponents.push(Exponent {
                        binned,
                        phase: phase.into(),
                        variable: (*name).into(),
                        estimate,
                        ci_low: ci.map(|c| c.0),
                        ci_high: ci.map(|c| c.1),
                    });
                }
            }
        }
    }
    BenchSummary { cells, ratios, exponents }
}
