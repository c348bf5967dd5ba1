//! Minibatch SGD with Nesterov momentum and learning-rate selection.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;

use super::mlp::{Dense, MlpModel};
use crate::error::{shape, Error, Result};
use crate::rng::{derive_seed, rng_from_seed};

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    /// Tried from first to last; the first that does not blow up is kept.
    pub learning_rates: Vec<f64>,
    pub momentum: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    /// Blow-up when the training loss exceeds this multiple of the initial loss.
    pub blowup_factor: f64,
    /// Epochs during which the blow-up factor is checked. Non-finite losses
    /// are rejected at any epoch.
    pub probe_epochs: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rates: vec![1e-2, 5e-3, 1e-3, 5e-4, 1e-4],
            momentum: 0.99,
            batch_size: 64,
            epochs: 500,
            seed: 0,
            blowup_factor: 10.0,
            probe_epochs: 500,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self, samples: usize) -> Result<()> {
        if self.learning_rates.is_empty() || self.learning_rates.iter().any(|r| !(*r > 0.0)) {
            return Err(Error::Config("learning rates must be positive and non-empty".into()));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::Config(format!("momentum {} outside [0, 1)", self.momentum)));
        }
        if self.batch_size == 0 || self.batch_size > samples {
            return Err(Error::Config(format!(
                "batch size {} must be in 1..={samples}",
                self.batch_size
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_mse: f64,
    pub test_relative_error: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: MlpModel,
    /// Entry 0 is the untrained network.
    pub history: Vec<EpochRecord>,
    pub learning_rate: f64,
    /// Rates that blew up, with the reason.
    pub rejected: Vec<(f64, String)>,
}

/// One Nesterov update in lookahead form:
/// `v ← m·v − η·∇L(θ + m·v)`, `θ ← θ + v`.
pub fn nesterov_step(
    theta: &mut [f64],
    velocity: &mut [f64],
    momentum: f64,
    learning_rate: f64,
    grad: impl FnOnce(&[f64]) -> Vec<f64>,
) {
    let look: Vec<f64> = theta
        .iter()
        .zip(velocity.iter())
        .map(|(t, v)| t + momentum * v)
        .collect();
    let g = grad(&look);
    for ((t, v), g) in theta.iter_mut().zip(velocity.iter_mut()).zip(g) {
        *v = momentum * *v - learning_rate * g;
        *t += *v;
    }
}

fn lookahead(model: &MlpModel, velocity: &[Dense], momentum: f64) -> MlpModel {
    let layers = model
        .layers
        .iter()
        .zip(velocity)
        .map(|(l, v)| Dense {
            weights: &l.weights + &v.weights * momentum,
            bias: &l.bias + &v.bias * momentum,
        })
        .collect();
    MlpModel { layers }
}

enum RunEnd {
    Finished(MlpModel, Vec<EpochRecord>),
    BlewUp(String),
}

fn run_rate(
    init: &MlpModel,
    x: &DMatrix<f64>,
    y: &DMatrix<f64>,
    cfg: &TrainConfig,
    rate: f64,
    validation: Option<&dyn Fn(&MlpModel) -> f64>,
) -> RunEnd {
    let samples = x.ncols();
    let full_loss = |m: &MlpModel| (m.forward_columns(x) - y).norm_squared() / samples as f64;
    let mut model = init.clone();
    let mut velocity = model.zeros_like();
    let initial = full_loss(&model);
    let mut history = vec![EpochRecord {
        epoch: 0,
        train_mse: initial,
        test_relative_error: validation.map(|f| f(&model)),
    }];
    let threshold = cfg.blowup_factor * initial.max(f64::MIN_POSITIVE);
    let mut order: Vec<usize> = (0..samples).collect();
    for epoch in 1..=cfg.epochs {
        let mut rng = rng_from_seed(derive_seed(cfg.seed, epoch as u64));
        order.shuffle(&mut rng);
        for batch in order.chunks(cfg.batch_size) {
            let xb = x.select_columns(batch);
            let yb = y.select_columns(batch);
            let look = lookahead(&model, &velocity, cfg.momentum);
            let (grads, _) = look.gradient(&xb, &yb);
            for ((l, v), g) in model.layers.iter_mut().zip(&mut velocity).zip(&grads) {
                let m = cfg.momentum;
                v.weights.zip_apply(&g.weights, |v, g| *v = m * *v - rate * g);
                v.bias.zip_apply(&g.bias, |v, g| *v = m * *v - rate * g);
                l.weights += &v.weights;
                l.bias += &v.bias;
            }
        }
        let loss = if model.is_finite() {
            full_loss(&model)
        } else {
            f64::NAN
        };
        if !loss.is_finite() {
            return RunEnd::BlewUp(format!("non-finite loss at epoch {epoch}"));
        }
        if epoch <= cfg.probe_epochs && loss > threshold {
            return RunEnd::BlewUp(format!(
                "loss {loss:e} exceeded {}× initial {initial:e} at epoch {epoch}",
                cfg.blowup_factor
            ));
        }
        history.push(EpochRecord {
            epoch,
            train_mse: loss,
            test_relative_error: validation.map(|f| f(&model)),
        });
    }
    RunEnd::Finished(model, history)
}

/// Trains `model` on row-per-sample `inputs`/`targets` to minimize the mean
/// squared latent error, walking the learning-rate candidates from the first.
pub fn train_mlp(
    model: &MlpModel,
    inputs: &DMatrix<f64>,
    targets: &DMatrix<f64>,
    cfg: &TrainConfig,
    validation: Option<&dyn Fn(&MlpModel) -> f64>,
) -> Result<TrainOutcome> {
    if inputs.nrows() != targets.nrows() {
        return Err(shape("inputs and targets have different sample counts"));
    }
    if inputs.ncols() != model.input_dim() || targets.ncols() != model.output_dim() {
        return Err(shape(format!(
            "network maps {} → {}, data is {} → {}",
            model.input_dim(),
            model.output_dim(),
            inputs.ncols(),
            targets.ncols()
        )));
    }
    cfg.validate(inputs.nrows())?;
    let x = inputs.transpose();
    let y = targets.transpose();
    let mut rejected = Vec::new();
    for &rate in &cfg.learning_rates {
        match run_rate(model, &x, &y, cfg, rate, validation) {
            RunEnd::Finished(model, history) => {
                return Ok(TrainOutcome {
                    model,
                    history,
                    learning_rate: rate,
                    rejected,
                })
            }
            RunEnd::BlewUp(reason) => {
                log::info!("learning rate {rate:e} rejected: {reason}");
                rejected.push((rate, reason));
            }
        }
    }
    Err(Error::Training(
        rejected
            .into_iter()
            .map(|(r, why)| format!("rate {r:e}: {why}"))
            .collect(),
    ))
}
