//! Where artifacts live under the output root.
//!
//! ```text
//! <root>/data/<problem>/<split>-n<res>/          datasets
//! <root>/models/<problem>/n<res>-d<d>-<reg>/     fitted surrogates
//! <root>/results/<problem>/                      CSV and SVG outputs
//! ```

use std::path::{Path, PathBuf};

use crate::config::RegressorKind;
use crate::dataset::Split;
use crate::problem::Problem;

/// Environment variable naming the output root.
pub const OUTPUT_ENV: &str = "PCANET_OUT";
pub const DEFAULT_ROOT: &str = "pcanet-out";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    root: PathBuf,
}

impl Layout {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    /// An explicit root wins over `PCANET_OUT`, which wins over `./pcanet-out`.
    pub fn resolve(explicit: Option<&Path>) -> Self {
        match explicit {
            Some(p) => Self::new(p),
            None => Self::new(std::env::var_os(OUTPUT_ENV).map_or_else(|| PathBuf::from(DEFAULT_ROOT), PathBuf::from)),
        }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn data_dir(&self, problem: Problem, split: Split, n: usize) -> PathBuf {
        self.root
            .join("data")
            .join(problem.name())
            .join(format!("{}-n{n}", split.name()))
    }

    pub fn model_dir(&self, problem: Problem, n: usize, d: usize, kind: RegressorKind) -> PathBuf {
        self.root
            .join("models")
            .join(problem.name())
            .join(format!("n{n}-d{d}-{}", kind.name()))
    }

    pub fn results_dir(&self, problem: Problem) -> PathBuf {
        self.root.join("results").join(problem.name())
    }

    pub fn theory_dir(&self) -> PathBuf {
        self.root.join("results").join("theory")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_paths() {
        let l = Layout::resolve(Some(Path::new("/tmp/x")));
        assert_eq!(
            l.data_dir(Problem::Burgers, Split::Test, 256),
            Path::new("/tmp/x/data/burgers/test-n256")
        );
        assert_eq!(
            l.model_dir(Problem::Poisson, 33, 20, RegressorKind::Nn),
            Path::new("/tmp/x/models/poisson/n33-d20-nn")
        );
        assert_eq!(l.results_dir(Problem::CoeffModel), Path::new("/tmp/x/results/coeff_model"));
    }
}
