use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{shape, Error, Result};
use crate::rng::rng_from_seed;

pub const SELU_ALPHA: f64 = 1.6732632423543772;
pub const SELU_LAMBDA: f64 = 1.0507009873554805;

#[inline]
pub fn selu(x: f64) -> f64 {
    if x > 0.0 {
        SELU_LAMBDA * x
    } else {
        SELU_LAMBDA * SELU_ALPHA * x.exp_m1()
    }
}

#[inline]
pub fn selu_derivative(x: f64) -> f64 {
    if x > 0.0 {
        SELU_LAMBDA
    } else {
        SELU_LAMBDA * SELU_ALPHA * x.exp()
    }
}

/// One affine layer `z = W a + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub weights: DMatrix<f64>,
    pub bias: DVector<f64>,
}

/// Dense network with SELU on every hidden layer and a linear output layer.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    pub layers: Vec<Dense>,
}

/// Activations kept for back-propagation; columns are samples.
pub(crate) struct Trace {
    pre: Vec<DMatrix<f64>>,
    post: Vec<DMatrix<f64>>,
}

impl MlpModel {
    pub fn from_layers(layers: Vec<Dense>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::Config("network needs at least one layer".into()));
        }
        for (i, l) in layers.iter().enumerate() {
            if l.weights.nrows() != l.bias.len() {
                return Err(shape(format!("layer {i}: bias does not match weights")));
            }
            if i > 0 && layers[i - 1].weights.nrows() != l.weights.ncols() {
                return Err(shape(format!("layer {i}: input width mismatch")));
            }
            if l.weights.iter().chain(l.bias.iter()).any(|v| !v.is_finite()) {
                return Err(Error::Domain(format!("layer {i}: non-finite parameters")));
            }
        }
        Ok(Self { layers })
    }

    /// Normal weights with variance `1/fan_in`, zero biases.
    pub fn init(dims: &[usize], seed: u64) -> Result<Self> {
        if dims.len() < 2 || dims.contains(&0) {
            return Err(Error::Config(format!("invalid layer widths {dims:?}")));
        }
        let mut rng = rng_from_seed(seed);
        let layers = dims
            .windows(2)
            .map(|w| {
                let std = (1.0 / w[0] as f64).sqrt();
                // Row-major draw order.
                let mut weights = DMatrix::zeros(w[1], w[0]);
                for r in 0..w[1] {
                    for c in 0..w[0] {
                        let z: f64 = rng.sample(StandardNormal);
                        weights[(r, c)] = std * z;
                    }
                }
                Dense {
                    weights,
                    bias: DVector::zeros(w[1]),
                }
            })
            .collect();
        Ok(Self { layers })
    }

    pub fn dims(&self) -> Vec<usize> {
        let mut d = vec![self.input_dim()];
        d.extend(self.layers.iter().map(|l| l.weights.nrows()));
        d
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].weights.ncols()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().expect("non-empty").weights.nrows()
    }

    pub fn num_parameters(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    /// Forward pass on feature-major data (one column per sample).
    pub(crate) fn forward_columns(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let mut a = x.clone();
        let last = self.layers.len() - 1;
        for (i, l) in self.layers.iter().enumerate() {
            let mut z = &l.weights * &a;
            for mut col in z.column_iter_mut() {
                col += &l.bias;
            }
            if i < last {
                z.apply(|v| *v = selu(*v));
            }
            a = z;
        }
        a
    }

    pub(crate) fn forward_trace(&self, x: &DMatrix<f64>) -> Trace {
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut post = Vec::with_capacity(self.layers.len() + 1);
        post.push(x.clone());
        let last = self.layers.len() - 1;
        for (i, l) in self.layers.iter().enumerate() {
            let mut z = &l.weights * post.last().expect("input pushed");
            for mut col in z.column_iter_mut() {
                col += &l.bias;
            }
            let a = if i < last { z.map(selu) } else { z.clone() };
            pre.push(z);
            post.push(a);
        }
        Trace { pre, post }
    }

    /// Gradient of `(1/B) Σ_b |f(x_b) - y_b|²` (columns are samples) and the loss.
    pub(crate) fn gradient(&self, x: &DMatrix<f64>, y: &DMatrix<f64>) -> (Vec<Dense>, f64) {
        let batch = x.ncols() as f64;
        let trace = self.forward_trace(x);
        let out = trace.post.last().expect("output");
        let diff = out - y;
        let loss = diff.norm_squared() / batch;
        let mut delta = diff * (2.0 / batch);
        let mut grads = Vec::with_capacity(self.layers.len());
        for i in (0..self.layers.len()).rev() {
            let gw = &delta * trace.post[i].transpose();
            let gb = DVector::from_iterator(delta.nrows(), delta.row_iter().map(|r| r.sum()));
            grads.push(Dense {
                weights: gw,
                bias: gb,
            });
            if i > 0 {
                let mut back = self.layers[i].weights.tr_mul(&delta);
                back.zip_apply(&trace.pre[i - 1], |d, z| *d *= selu_derivative(z));
                delta = back;
            }
        }
        grads.reverse();
        (grads, loss)
    }

    /// Parameter gradient of [`MlpModel::mse`] and its value, on row-per-sample data.
    pub fn loss_gradient(&self, inputs: &DMatrix<f64>, targets: &DMatrix<f64>) -> Result<(Vec<Dense>, f64)> {
        if inputs.ncols() != self.input_dim() || targets.ncols() != self.output_dim() || inputs.nrows() != targets.nrows() {
            return Err(shape("inputs and targets do not match the network"));
        }
        if inputs.nrows() == 0 {
            return Err(shape("empty batch"));
        }
        Ok(self.gradient(&inputs.transpose(), &targets.transpose()))
    }

    /// Mean squared error over row-per-sample data.
    pub fn mse(&self, inputs: &DMatrix<f64>, targets: &DMatrix<f64>) -> Result<f64> {
        let pred = self.predict_batch(inputs)?;
        if pred.shape() != targets.shape() {
            return Err(shape("targets do not match network output"));
        }
        Ok((pred - targets).norm_squared() / inputs.nrows().max(1) as f64)
    }

    pub fn predict_batch(&self, inputs: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if inputs.ncols() != self.input_dim() {
            return Err(shape(format!(
                "network expects {} inputs, got {}",
                self.input_dim(),
                inputs.ncols()
            )));
        }
        Ok(self.forward_columns(&inputs.transpose()).transpose())
    }

    pub fn predict(&self, s: &[f64]) -> Result<Vec<f64>> {
        let x = DMatrix::from_row_slice(1, s.len(), s);
        Ok(self.predict_batch(&x)?.iter().copied().collect())
    }

    pub(crate) fn zeros_like(&self) -> Vec<Dense> {
        self.layers
            .iter()
            .map(|l| Dense {
                weights: DMatrix::zeros(l.weights.nrows(), l.weights.ncols()),
                bias: DVector::zeros(l.bias.len()),
            })
            .collect()
    }

    pub(crate) fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weights.iter().chain(l.bias.iter()).all(|v| v.is_finite()))
    }
}
