//! Regressors between latent spaces.

mod linear;
mod mlp;
mod standardize;
mod train;

pub use linear::{fit_linear, LinearFit, LinearModel, RIDGE_RELATIVE};
pub use mlp::{selu, selu_derivative, Dense, MlpModel, SELU_ALPHA, SELU_LAMBDA};
pub use standardize::Standardizer;
pub use train::{nesterov_step, train_mlp, EpochRecord, TrainConfig, TrainOutcome};

use nalgebra::DMatrix;

use crate::error::{shape, Result};

/// A fitted latent map.
#[derive(Debug, Clone, PartialEq)]
pub enum Regressor {
    Linear(LinearModel),
    Mlp(MlpModel),
}

impl Regressor {
    pub fn kind(&self) -> &'static str {
        match self {
            Regressor::Linear(_) => "linear",
            Regressor::Mlp(_) => "nn",
        }
    }

    pub fn input_dim(&self) -> usize {
        match self {
            Regressor::Linear(m) => m.input_dim(),
            Regressor::Mlp(m) => m.input_dim(),
        }
    }

    pub fn output_dim(&self) -> usize {
        match self {
            Regressor::Linear(m) => m.output_dim(),
            Regressor::Mlp(m) => m.output_dim(),
        }
    }

    pub fn predict(&self, s: &[f64]) -> Result<Vec<f64>> {
        if s.len() != self.input_dim() {
            return Err(shape(format!(
                "regressor expects {} inputs, got {}",
                self.input_dim(),
                s.len()
            )));
        }
        let x = DMatrix::from_row_slice(1, s.len(), s);
        Ok(self.predict_batch(&x)?.row(0).iter().copied().collect())
    }

    /// Row-per-sample batch prediction.
    pub fn predict_batch(&self, inputs: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        match self {
            Regressor::Linear(m) => m.predict_batch(inputs),
            Regressor::Mlp(m) => m.predict_batch(inputs),
        }
    }
}
