use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Grids, vectors or matrices whose sizes do not fit together.
    #[error("shape error: {0}")]
    Shape(String),

    /// A parameter outside its admissible range.
    #[error("configuration error: {0}")]
    Config(String),

    /// Input data outside the domain of the operation (e.g. non-positive coefficient).
    #[error("domain error: {0}")]
    Domain(String),

    /// An iterative or time-stepping method failed.
    #[error("numerical error: {0}")]
    Numerical(String),

    /// Eigenvalue `index` (1-based) of the snapshot Gram matrix is negligible.
    #[error("rank deficiency: eigenvalue {index} is {value:e}, below {threshold:e}")]
    RankDeficient {
        index: usize,
        value: f64,
        threshold: f64,
    },

    /// Every candidate learning rate diverged.
    #[error("training failed for every learning rate: {}", .0.join("; "))]
    Training(Vec<String>),
}

pub(crate) fn shape(msg: impl Into<String>) -> Error {
    Error::Shape(msg.into())
}
