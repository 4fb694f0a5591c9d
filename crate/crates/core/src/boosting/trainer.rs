use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::mem;

use super::{
    default_specs, select, Algorithm, CategoricalEncoding, HybridFinish, IterationRecord, PatienceCounter, Phase,
    Pool, TrainConfig, TrainLog,
};
use crate::basis::BasisKind;
use crate::binning::axpy;
use crate::data::{split, Dataset, SplitSpec};
use crate::learner::{Design, Target};
use crate::loss::{self, Loss};
use crate::model::{ModelSummary, Term, TrainedModel};
use crate::{Error, Result};

/// Result of a training run.
#[derive(Debug, Clone)]
pub struct TrainOutput {
    pub model: TrainedModel,
    pub log: TrainLog,
    /// Link predictions on the training rows, accumulated update by update, for
    /// the iterate the model holds. After a full-data hybrid finish the rows are
    /// the training rows followed by the validation rows.
    pub train_link: Vec<f64>,
}

/// Validation rows with their designs and cached predictions.
struct Holdout {
    y: Vec<f64>,
    designs: Vec<Design>,
    f: Vec<f64>,
    h: Vec<f64>,
    g: Vec<f64>,
}

struct Snapshot {
    iteration: usize,
    theta_f: Vec<Vec<f64>>,
    theta_h: Vec<Vec<f64>>,
    f: Vec<f64>,
}

struct State {
    loss: Loss,
    nu: f64,
    offset: f64,
    y: Vec<f64>,
    theta_f: Vec<Vec<f64>>,
    theta_h: Vec<Vec<f64>>,
    f: Vec<f64>,
    h: Vec<f64>,
    g: Vec<f64>,
    r: Vec<f64>,
    c: Vec<f64>,
    cor_fit: Vec<f64>,
    target: Target,
    accelerated_steps: usize,
    val: Option<Holdout>,
}

struct AccelStep {
    selected: usize,
    selected_cor: usize,
    sse: f64,
    blend: f64,
    eta: f64,
}

impl State {
    fn new(pool: &Pool, y: &[f64], loss: Loss, nu: f64, offset: f64, val: Option<Holdout>) -> Self {
        let zeros: Vec<Vec<f64>> = pool.learners().iter().map(|l| vec![0.0; l.dim()]).collect();
        let n = y.len();
        State {
            loss,
            nu,
            offset,
            y: y.to_vec(),
            theta_f: zeros.clone(),
            theta_h: zeros,
            f: vec![offset; n],
            h: vec![offset; n],
            g: vec![offset; n],
            r: Vec::with_capacity(n),
            c: vec![0.0; n],
            cor_fit: vec![0.0; n],
            target: Target::default(),
            accelerated_steps: 0,
            val,
        }
    }

    fn train_risk(&self) -> f64 {
        loss::risk(self.loss, &self.y, &self.f)
    }

    fn val_risk(&self) -> Option<f64> {
        self.val.as_ref().map(|v| loss::risk(self.loss, &v.y, &v.f))
    }

    fn vanilla_step(&mut self, pool: &Pool, parallel: bool) -> Result<(usize, f64)> {
        loss::pseudo_residuals_into(self.loss, &self.y, &self.f, &mut self.r)?;
        self.target.reset(&self.r, pool.weights())?;
        let best = select(pool, &self.target, parallel);
        let k = best.index;
        pool.learners()[k].add_contribution(&best.theta, self.nu, &mut self.f);
        axpy(self.nu, &best.theta, &mut self.theta_f[k]);
        if let Some(v) = &mut self.val {
            v.designs[k].add_scaled(&best.theta, self.nu, &mut v.f);
        }
        Ok((k, best.sse))
    }

    fn accelerated_step(&mut self, pool: &Pool, gamma: f64, blend: bool, parallel: bool) -> Result<AccelStep> {
        self.accelerated_steps += 1;
        let m = self.accelerated_steps as f64;
        let vt = 2.0 / (m + 1.0);
        let nu = self.nu;

        if blend {
            for ((g, &f), &h) in self.g.iter_mut().zip(&self.f).zip(&self.h) {
                *g = (1.0 - vt) * f + vt * h;
            }
        } else {
            self.g.clone_from(&self.f);
        }
        loss::pseudo_residuals_into(self.loss, &self.y, &self.g, &mut self.r)?;
        self.target.reset(&self.r, pool.weights())?;
        let best = select(pool, &self.target, parallel);
        let k = best.index;

        // f = g + nu b
        mem::swap(&mut self.f, &mut self.g);
        pool.learners()[k].add_contribution(&best.theta, nu, &mut self.f);
        if blend {
            for (tf, th) in self.theta_f.iter_mut().zip(&self.theta_h) {
                for (a, &b) in tf.iter_mut().zip(th) {
                    *a = (1.0 - vt) * *a + vt * b;
                }
            }
        }
        axpy(nu, &best.theta, &mut self.theta_f[k]);

        if self.accelerated_steps == 1 {
            self.c.clone_from(&self.r);
        } else {
            let w = m / (m + 1.0);
            for ((c, &r), &prev) in self.c.iter_mut().zip(&self.r).zip(&self.cor_fit) {
                *c = r + w * (*c - prev);
            }
        }
        self.target.reset(&self.c, pool.weights())?;
        let cor = select(pool, &self.target, parallel);
        let kc = cor.index;
        self.cor_fit.iter_mut().for_each(|v| *v = 0.0);
        pool.learners()[kc].add_contribution(&cor.theta, 1.0, &mut self.cor_fit);

        let eta = gamma * nu / vt;
        if eta != 0.0 {
            axpy(eta, &self.cor_fit, &mut self.h);
            axpy(eta, &cor.theta, &mut self.theta_h[kc]);
        }

        if let Some(v) = &mut self.val {
            if blend {
                for ((g, &f), &h) in v.g.iter_mut().zip(&v.f).zip(&v.h) {
                    *g = (1.0 - vt) * f + vt * h;
                }
                mem::swap(&mut v.f, &mut v.g);
            }
            v.designs[k].add_scaled(&best.theta, nu, &mut v.f);
            if eta != 0.0 {
                v.designs[kc].add_scaled(&cor.theta, eta, &mut v.h);
            }
        }

        Ok(AccelStep { selected: k, selected_cor: kc, sse: best.sse, blend: vt, eta })
    }

    fn snapshot(&self, iteration: usize) -> Snapshot {
        Snapshot {
            iteration,
            theta_f: self.theta_f.clone(),
            theta_h: self.theta_h.clone(),
            f: self.f.clone(),
        }
    }

    /// Moves vanilla training onto the rows of `pool` (train and validation
    /// stacked); the momentum model is no longer needed.
    fn move_to(&mut self, pool: &Pool, data: &Dataset) {
        self.y = data.response().to_vec();
        self.f = pool.predict_train(&self.theta_f);
        for v in &mut self.f {
            *v += self.offset;
        }
        self.h = Vec::new();
        self.g = Vec::new();
        self.c = Vec::new();
        self.cor_fit = Vec::new();
        self.val = None;
    }
}

fn check_inputs(algorithm: Algorithm, pool: &Pool, train: &Dataset, valid: Option<&Dataset>, config: &TrainConfig) -> Result<()> {
    config.validate()?;
    if pool.is_empty() {
        return Err(Error::Config("empty base-learner pool".into()));
    }
    if pool.n_rows() != train.n_rows() {
        return Err(Error::Config(format!(
            "pool built on {} rows but training data has {}",
            pool.n_rows(),
            train.n_rows()
        )));
    }
    config.loss.validate_target(train.response())?;
    match valid {
        None if algorithm == Algorithm::Hcwb => {
            return Err(Error::Config("hybrid training needs a non-empty validation set".into()))
        }
        Some(v) if v.n_rows() == 0 => return Err(Error::Config("empty validation set".into())),
        Some(v) => config.loss.validate_target(v.response())?,
        None => {}
    }
    Ok(())
}

fn run(algorithm: Algorithm, pool: &Pool, train: &Dataset, valid: Option<&Dataset>, config: &TrainConfig) -> Result<TrainOutput> {
    check_inputs(algorithm, pool, train, valid, config)?;
    let offset = loss::init_constant(config.loss, train.response())?;
    let holdout = match valid {
        Some(v) => {
            let n = v.n_rows();
            Some(Holdout {
                y: v.response().to_vec(),
                designs: pool.designs_for(v)?,
                f: vec![offset; n],
                h: vec![offset; n],
                g: vec![offset; n],
            })
        }
        None => None,
    };
    let mut state = State::new(pool, train.response(), config.loss, config.learning_rate, offset, holdout);

    let mut log = TrainLog {
        initial_train_risk: state.train_risk(),
        initial_val_risk: state.val_risk(),
        ..TrainLog::default()
    };
    let mut stopping = config.early_stopping && valid.is_some();
    let mut counter = PatienceCounter::new(config.patience);
    let mut best: Option<(f64, Snapshot)> = None;
    if let Some(r0) = log.initial_val_risk {
        counter.observe(0, r0);
        if stopping {
            best = Some((r0, state.snapshot(0)));
        }
    }

    let mut phase = if algorithm == Algorithm::Cwb { Phase::Vanilla } else { Phase::Accelerated };
    let mut full_pool: Option<Pool> = None;

    for m in 1..=config.max_iters {
        let active = full_pool.as_ref().unwrap_or(pool);
        let mut record = match phase {
            Phase::Vanilla => {
                let (k, sse) = state.vanilla_step(active, config.parallel)?;
                IterationRecord {
                    iteration: m,
                    selected: k,
                    selected_cor: None,
                    sse,
                    train_risk: 0.0,
                    val_risk: None,
                    blend: None,
                    eta: None,
                    phase,
                }
            }
            Phase::Accelerated => {
                let s = state.accelerated_step(active, config.momentum, config.momentum_blend, config.parallel)?;
                IterationRecord {
                    iteration: m,
                    selected: s.selected,
                    selected_cor: Some(s.selected_cor),
                    sse: s.sse,
                    train_risk: 0.0,
                    val_risk: None,
                    blend: Some(s.blend),
                    eta: Some(s.eta),
                    phase,
                }
            }
        };
        record.train_risk = state.train_risk();
        record.val_risk = state.val_risk();
        let val_risk = record.val_risk;
        log.records.push(record);

        let Some(vr) = val_risk else { continue };
        let exhausted = counter.observe(m, vr);
        if stopping && best.as_ref().is_none_or(|(b, _)| vr <= *b) {
            best = Some((vr, state.snapshot(m)));
        }
        if !exhausted {
            continue;
        }
        if algorithm == Algorithm::Hcwb && phase == Phase::Accelerated {
            phase = Phase::Vanilla;
            log.switch_iteration = Some(m);
            counter = PatienceCounter::new(config.patience);
            counter.observe(m, vr);
            if config.hybrid_finish == HybridFinish::FullData {
                let v = valid.ok_or_else(|| Error::Config("hybrid training needs a validation set".into()))?;
                let full = train.stack(v)?;
                let rebuilt = pool.rebuild_on(&full)?;
                state.move_to(&rebuilt, &full);
                full_pool = Some(rebuilt);
                stopping = false;
                best = None;
            }
        } else if stopping {
            log.stop_iteration = Some(m);
            break;
        }
    }

    let final_pool = full_pool.as_ref().unwrap_or(pool);
    let (theta_f, theta_h, train_link, best_iteration) = match best {
        Some((_, snap)) if stopping => (snap.theta_f, snap.theta_h, snap.f, snap.iteration),
        _ => (state.theta_f, state.theta_h, state.f, log.records.len()),
    };
    log.best_iteration = best_iteration;

    let (train_risk, val_risk) = if best_iteration == 0 {
        (log.initial_train_risk, log.initial_val_risk)
    } else {
        let r = &log.records[best_iteration - 1];
        (r.train_risk, r.val_risk)
    };
    let terms = final_pool
        .learners()
        .iter()
        .zip(theta_f.into_iter().zip(theta_h))
        .map(|(l, (tf, th))| Term {
            spec: l.spec().clone(),
            basis: l.basis().clone(),
            theta_f: tf,
            theta_h: th,
            lambda: l.lambda(),
            df: l.df(),
        })
        .collect();
    let model = TrainedModel {
        offset,
        loss: config.loss,
        algorithm,
        terms,
        config: config.clone(),
        summary: ModelSummary {
            iterations: log.records.len(),
            best_iteration,
            stop_iteration: log.stop_iteration,
            switch_iteration: log.switch_iteration,
            train_risk,
            val_risk,
        },
    };
    Ok(TrainOutput { model, log, train_link })
}

/// Vanilla componentwise boosting. With a validation set and early stopping
/// enabled, training stops after `patience` consecutive validation-risk
/// increases and the best-validation iterate is returned.
pub fn train_cwb(pool: &Pool, train: &Dataset, valid: Option<&Dataset>, config: &TrainConfig) -> Result<TrainOutput> {
    run(Algorithm::Cwb, pool, train, valid, config)
}

/// Boosting with Nesterov momentum: a primary model `f` and a momentum model
/// `h` fitted to error-corrected pseudo residuals. Early stopping as in
/// [`train_cwb`], monitored on `f`.
pub fn train_acwb(pool: &Pool, train: &Dataset, valid: Option<&Dataset>, config: &TrainConfig) -> Result<TrainOutput> {
    run(Algorithm::Acwb, pool, train, valid, config)
}

/// Momentum boosting until the validation risk of `f` has increased
/// `patience` times in a row, then vanilla boosting from the current `f`
/// with the momentum model frozen. The validation set is required.
pub fn train_hcwb(pool: &Pool, train: &Dataset, valid: &Dataset, config: &TrainConfig) -> Result<TrainOutput> {
    run(Algorithm::Hcwb, pool, train, Some(valid), config)
}

/// Splits `data` by `config.validation_fraction` (no split when it is 0),
/// builds a pool with one default learner per feature and trains it.
pub fn train(algorithm: Algorithm, data: &Dataset, config: &TrainConfig) -> Result<TrainOutput> {
    let (train_set, valid) = if config.validation_fraction > 0.0 {
        let (t, v) = split(data, SplitSpec { validation_fraction: config.validation_fraction, seed: config.seed })?;
        (t, Some(v))
    } else {
        (data.clone(), None)
    };
    let specs = default_specs(&train_set, BasisKind::pspline(), CategoricalEncoding::Ridge);
    let pool = Pool::build(&train_set, &specs, None, config.learner)?;
    run(algorithm, &pool, &train_set, valid.as_ref(), config)
}
