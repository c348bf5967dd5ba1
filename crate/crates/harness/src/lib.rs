//! Datasets, experiment drivers and comparison protocols behind the
//! `pcanet` command-line tool.

// `!(x > 0.0)` style checks are meant to reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod dataset;
pub mod error;
pub mod experiments;
pub mod meta;
pub mod model_io;
pub mod paths;
pub mod problem;
pub mod protocols;
pub mod svg;
pub mod tensor;

pub use error::{HarnessError, Result};
