//! Synthetic additive data with spline effects, and the MISE of a fitted model.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::basis::BSpline;
use crate::binning::dot;
use crate::data::{Dataset, FeatureColumn};
use crate::math;
use crate::model::TrainedModel;
use crate::{Error, Result};

/// Interior knots of the true effect splines.
pub const TRUE_INNER_KNOTS: usize = 10;
/// Degree of the true effect splines (order 4).
pub const TRUE_DEGREE: usize = 3;
/// Standard deviation of the true spline coefficients.
pub const TAU_SD: f64 = 3.0;
pub const MIN_QUAD_POINTS: usize = 101;

const NOISE_RATIOS: [f64; 4] = [0.5, 1.0, 2.0, 5.0];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub n: usize,
    /// Informative features.
    pub p: usize,
    /// Noise features relative to `p`; one of 0.5, 1, 2, 5.
    pub p_noise_rel: f64,
    /// Signal-to-noise ratio; `f64::INFINITY` gives a noise-free response.
    pub snr: f64,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig { n: 1000, p: 5, p_noise_rel: 1.0, snr: 1.0, seed: 0 }
    }
}

impl SimConfig {
    pub fn p_noise(&self) -> usize {
        math::floor(self.p as f64 * self.p_noise_rel + 0.5) as usize
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::Simulate(format!("n = {} must be at least 2", self.n)));
        }
        if self.p == 0 {
            return Err(Error::Simulate("at least one informative feature is required".into()));
        }
        if !NOISE_RATIOS.contains(&self.p_noise_rel) {
            return Err(Error::Simulate(format!(
                "relative number of noise features {} not in {{0.5, 1, 2, 5}}",
                self.p_noise_rel
            )));
        }
        if !(self.snr > 0.0) {
            return Err(Error::Simulate(format!("SNR {} must be > 0", self.snr)));
        }
        Ok(())
    }
}

/// True effect of one informative feature.
#[derive(Debug, Clone, PartialEq)]
pub struct TrueEffect {
    pub name: String,
    pub x_min: f64,
    pub x_max: f64,
    /// Coefficients of the cubic B-spline with 10 equidistant interior knots
    /// on `[x_min, x_max]`.
    pub coefficients: Vec<f64>,
}

impl TrueEffect {
    pub fn spline(&self) -> Result<BSpline> {
        BSpline::equidistant(self.x_min, self.x_max, TRUE_INNER_KNOTS + 1, TRUE_DEGREE)
    }

    pub fn eval(&self, x: &[f64]) -> Result<Vec<f64>> {
        let z = self.spline()?.eval(x);
        Ok((0..x.len()).map(|i| dot(z.row(i), &self.coefficients)).collect())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub effects: Vec<TrueEffect>,
    pub noise_features: Vec<String>,
    pub snr: f64,
    /// Noise standard deviation `sd(eta) / snr`.
    pub sigma: f64,
    /// Linear predictor of the simulated rows.
    pub eta: Vec<f64>,
}

impl GroundTruth {
    /// Sum of the true effects on the rows of `data`.
    pub fn linear_predictor(&self, data: &Dataset) -> Result<Vec<f64>> {
        let mut eta = vec![0.0; data.n_rows()];
        for e in &self.effects {
            let x = data
                .column(&e.name)
                .and_then(|c| c.as_numeric())
                .ok_or_else(|| Error::Simulate(format!("data lacks numeric feature '{}'", e.name)))?;
            for (t, v) in eta.iter_mut().zip(e.eval(x)?) {
                *t += v;
            }
        }
        Ok(eta)
    }

    /// Fresh rows from the same generator. With `noisy == false` the response
    /// is the linear predictor itself, e.g. for a noise-free holdout.
    pub fn sample(&self, n: usize, seed: u64, noisy: bool) -> Result<Dataset> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut columns = Vec::with_capacity(self.effects.len() + self.noise_features.len());
        let mut eta = vec![0.0; n];
        for e in &self.effects {
            let x = uniform(&mut rng, e.x_min, e.x_max, n);
            for (t, v) in eta.iter_mut().zip(e.eval(&x)?) {
                *t += v;
            }
            columns.push(FeatureColumn::numeric(e.name.clone(), x));
        }
        for name in &self.noise_features {
            columns.push(FeatureColumn::numeric(name.clone(), normal(&mut rng, n)));
        }
        let y = if noisy { add_noise(&mut rng, &eta, self.sigma) } else { eta };
        Dataset::new(columns, y, "y")
    }
}

fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|_| lo + (hi - lo) * rng.random::<f64>()).collect()
}

fn normal(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

fn add_noise(rng: &mut ChaCha8Rng, eta: &[f64], sigma: f64) -> Vec<f64> {
    if sigma == 0.0 {
        return eta.to_vec();
    }
    eta.iter().map(|&e| e + sigma * rng.sample::<f64, _>(StandardNormal)).collect()
}

/// Draws informative features `x1..xp` with random ranges and spline effects,
/// standard normal noise features `noise1..`, and `y = eta + eps`.
pub fn simulate(config: &SimConfig) -> Result<(Dataset, GroundTruth)> {
    config.validate()?;
    let n = config.n;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut columns = Vec::new();
    let mut effects = Vec::with_capacity(config.p);
    let mut eta = vec![0.0; n];
    for k in 1..=config.p {
        let x_min = 100.0 * rng.random::<f64>();
        let x_max = x_min + 100.0 * rng.random::<f64>();
        let x = uniform(&mut rng, x_min, x_max, n);
        let d = TRUE_INNER_KNOTS + TRUE_DEGREE + 1;
        let coefficients: Vec<f64> = normal(&mut rng, d).into_iter().map(|v| TAU_SD * v).collect();
        let effect = TrueEffect { name: format!("x{k}"), x_min, x_max, coefficients };
        for (t, v) in eta.iter_mut().zip(effect.eval(&x)?) {
            *t += v;
        }
        columns.push(FeatureColumn::numeric(effect.name.clone(), x));
        effects.push(effect);
    }
    let mut noise_features = Vec::new();
    for k in 1..=config.p_noise() {
        let name = format!("noise{k}");
        columns.push(FeatureColumn::numeric(name.clone(), normal(&mut rng, n)));
        noise_features.push(name);
    }
    let sigma = if config.snr.is_infinite() { 0.0 } else { math::sample_sd(&eta) / config.snr };
    let y = add_noise(&mut rng, &eta, sigma);
    let data = Dataset::new(columns, y, "y")?;
    Ok((data, GroundTruth { effects, noise_features, snr: config.snr, sigma, eta }))
}

/// Equidistant grid of `points` nodes on `[lo, hi]`.
pub fn grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    let step = (hi - lo) / (points - 1) as f64;
    (0..points).map(|i| if i + 1 == points { hi } else { lo + step * i as f64 }).collect()
}

/// Composite trapezoid rule on an equidistant grid.
pub fn trapezoid(values: &[f64], step: f64) -> f64 {
    match values.len() {
        0 | 1 => 0.0,
        n => step * (values[1..n - 1].iter().sum::<f64>() + 0.5 * (values[0] + values[n - 1])),
    }
}

fn center(v: &mut [f64]) {
    let m = math::mean(v);
    for x in v {
        *x -= m;
    }
}

/// Integrated squared difference between the true and the estimated effect of
/// every informative feature, averaged over features. Both curves are
/// mean-centered on the grid first, since a boosted model keeps constants in
/// its offset. Features the model does not use count as zero effects.
pub fn mise(model: &TrainedModel, truth: &GroundTruth, quad_points: usize) -> Result<f64> {
    if quad_points < MIN_QUAD_POINTS {
        return Err(Error::Simulate(format!("need at least {MIN_QUAD_POINTS} quadrature points, got {quad_points}")));
    }
    if truth.effects.is_empty() {
        return Err(Error::Simulate("ground truth has no informative features".into()));
    }
    let mut total = 0.0;
    for e in &truth.effects {
        let xs = grid(e.x_min, e.x_max, quad_points);
        let mut t = e.eval(&xs)?;
        let mut f = model.partial_effect(&e.name, &xs);
        center(&mut t);
        center(&mut f);
        let sq: Vec<f64> = t.iter().zip(&f).map(|(a, b)| (a - b) * (a - b)).collect();
        total += trapezoid(&sq, (e.x_max - e.x_min) / (quad_points - 1) as f64);
    }
    Ok(total / truth.effects.len() as f64)
}

/// Categorical column with `n_classes` labels `c1..` drawn uniformly.
pub fn categorical_feature(name: &str, n: usize, n_classes: usize, seed: u64) -> Result<FeatureColumn> {
    if n_classes == 0 {
        return Err(Error::Simulate("at least one class is required".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let codes: Vec<u32> = (0..n).map(|_| rng.random_range(1..=n_classes as u32)).collect();
    let levels = (1..=n_classes).map(|k| format!("c{k}")).collect();
    Ok(FeatureColumn::categorical(name, levels, codes))
}
