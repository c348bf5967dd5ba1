//! Operator learning between function spaces by PCA dimension reduction.
//!
//! The building blocks are:
//!
//! * [`grid`]: discretized functions on the unit square and the 1-D torus with
//!   quadrature inner products, sub-sampling and spline interpolation.
//! * [`fields`]: Karhunen–Loève samplers for the Gaussian, log-normal,
//!   piecewise-constant and periodic input measures, plus the uniform
//!   coefficient model.
//! * [`solvers`]: ground-truth forward maps (variable-coefficient elliptic
//!   solver, pseudo-spectral viscous Burgers) and the Cole–Hopf oracle.
//! * [`pca`]: non-centered PCA by the snapshot method, encoders and decoders.
//! * [`regress`]: latent-space regressors (SELU MLP, affine least squares).
//! * [`surrogate`]: the composed decoder ∘ regressor ∘ encoder map and
//!   its error metrics.
//! * [`baselines`]: reduced-basis Galerkin and truncated Taylor predictors.
//! * [`theory`]: randomized checks of the PCA approximation bounds.

// `!(x > 0.0)` style checks are meant to reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod error;
pub mod fields;
pub mod grid;
pub mod pca;
pub mod regress;
pub mod rng;
pub mod solvers;
mod spline;
pub mod surrogate;
pub mod theory;

pub use error::{Error, Result};
pub use grid::{Domain, GridFunction, InnerProduct};
