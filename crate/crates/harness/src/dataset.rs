//! Datasets of input/output function pairs and their on-disk form.
//!
//! A dataset is a directory holding `meta` (see [`crate::meta`]) and two raw
//! tensors `x.f64` and `y.f64` of shape `count × points`, one sample per row.

use std::fs;
use std::path::Path;

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use pcanet_core::rng::derive_seed;
use pcanet_core::GridFunction;

use crate::error::{io_err, HarnessError, Result};
use crate::meta::Meta;
use crate::problem::{Problem, ProblemSetup};
use crate::tensor;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Split {
    Train,
    Test,
}

impl Split {
    pub fn name(self) -> &'static str {
        match self {
            Self::Train => "train",
            Self::Test => "test",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Self::Train),
            "test" => Ok(Self::Test),
            _ => Err(HarnessError::Format(format!("unknown split {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    meta: Meta,
    pub x: Vec<GridFunction>,
    pub y: Vec<GridFunction>,
}

/// A rayon pool with `threads` workers (0 = one per core).
pub fn thread_pool(threads: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| HarnessError::Usage(format!("cannot build thread pool: {e}")))
}

impl Dataset {
    /// Draws `count` pairs on the source grid; sample `i` uses seed
    /// `derive_seed(seed, i)`, so the result does not depend on the pool size.
    pub fn generate(
        setup: &ProblemSetup,
        split: Split,
        seed: u64,
        count: usize,
        pool: &rayon::ThreadPool,
    ) -> Result<Self> {
        if count == 0 {
            return Err(HarnessError::Usage("cannot generate an empty dataset".into()));
        }
        let pairs: Vec<Result<(GridFunction, GridFunction)>> = pool.install(|| {
            (0..count)
                .into_par_iter()
                .map(|i| {
                    setup.sample_pair(derive_seed(seed, i as u64)).map_err(|e| HarnessError::Sample {
                        index: i,
                        source: Box::new(e),
                    })
                })
                .collect()
        });
        let mut x = Vec::with_capacity(count);
        let mut y = Vec::with_capacity(count);
        for p in pairs {
            let (a, b) = p?;
            x.push(a);
            y.push(b);
        }
        Self::assemble(Self::creation_meta(setup, split, seed)?, x, y, setup.source_resolution)
    }

    fn creation_meta(setup: &ProblemSetup, split: Split, seed: u64) -> Result<Meta> {
        let mut meta = Meta::new();
        meta.set("format_version", FORMAT_VERSION)?;
        setup.write_meta(&mut meta)?;
        meta.set("split", split.name())?;
        meta.set("seed", seed)?;
        meta.set("sample_seed", "splitmix64(seed, index)")?;
        Ok(meta)
    }

    /// Would [`generate`](Self::generate) with these arguments reproduce
    /// this dataset? Compares headers only.
    pub fn matches(&self, setup: &ProblemSetup, split: Split, seed: u64, count: usize) -> bool {
        let Ok(mut expected) = Self::creation_meta(setup, split, seed) else {
            return false;
        };
        let points = setup.domain().num_points(setup.source_resolution);
        let ok = expected.set("resolution", setup.source_resolution).is_ok()
            && expected.set("stride", 1).is_ok()
            && expected.set("count", count).is_ok()
            && expected.set("points", points).is_ok()
            && expected.set_list("x_shape", &[count, points]).is_ok()
            && expected.set_list("y_shape", &[count, points]).is_ok();
        ok && expected == self.meta
    }

    fn assemble(mut meta: Meta, x: Vec<GridFunction>, y: Vec<GridFunction>, n: usize) -> Result<Self> {
        let points = x[0].values().len();
        let source: usize = meta.parse_value("source_resolution")?;
        let domain = x[0].domain();
        let stride = domain
            .nesting_stride(source, n)
            .ok_or_else(|| HarnessError::Format(format!("{n} is not nested in {source}")))?;
        meta.set("resolution", n)?;
        meta.set("stride", stride)?;
        meta.set("count", x.len())?;
        meta.set("points", points)?;
        meta.set_list("x_shape", &[x.len(), points])?;
        meta.set_list("y_shape", &[y.len(), y[0].values().len()])?;
        Ok(Self { meta, x, y })
    }

    pub fn meta(&self) -> &Meta {
        &self.meta
    }

    pub fn problem(&self) -> Problem {
        Problem::parse(self.meta.get("problem").expect("always written")).expect("validated")
    }

    pub fn split(&self) -> Split {
        Split::parse(self.meta.get("split").expect("always written")).expect("validated")
    }

    pub fn resolution(&self) -> usize {
        self.x[0].resolution()
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn setup(&self) -> Result<ProblemSetup> {
        ProblemSetup::from_meta(&self.meta)
    }

    /// The same functions on a coarser nested grid.
    pub fn subsample(&self, n: usize) -> Result<Self> {
        if n == self.resolution() {
            return Ok(self.clone());
        }
        let domain = self.x[0].domain();
        let stride = domain.nesting_stride(self.resolution(), n).ok_or_else(|| {
            HarnessError::Usage(format!("resolution {n} is not nested in {}", self.resolution()))
        })?;
        let sub = |fs: &[GridFunction]| -> Result<Vec<GridFunction>> {
            fs.iter().map(|f| Ok(f.subsample(stride)?)).collect()
        };
        Self::assemble(self.meta.clone(), sub(&self.x)?, sub(&self.y)?, n)
    }

    /// The first `count` samples.
    pub fn prefix(&self, count: usize) -> Result<Self> {
        if count == 0 || count > self.len() {
            return Err(HarnessError::Usage(format!(
                "cannot take {count} of {} samples",
                self.len()
            )));
        }
        let n = self.resolution();
        Self::assemble(
            self.meta.clone(),
            self.x[..count].to_vec(),
            self.y[..count].to_vec(),
            n,
        )
    }

    fn flat(fs: &[GridFunction]) -> Vec<f64> {
        fs.iter().flat_map(|f| f.values().iter().copied()).collect()
    }

    /// Hex SHA-256 of both tensors; identical test sets give identical hashes.
    pub fn content_hash(&self) -> String {
        let mut h = Sha256::new();
        h.update(tensor::encode(&Self::flat(&self.x)));
        h.update(tensor::encode(&Self::flat(&self.y)));
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
        tensor::write(&dir.join("x.f64"), &Self::flat(&self.x))?;
        tensor::write(&dir.join("y.f64"), &Self::flat(&self.y))?;
        let meta_path = dir.join("meta");
        fs::write(&meta_path, self.meta.to_string()).map_err(io_err(meta_path))
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let meta_path = dir.join("meta");
        let text = fs::read_to_string(&meta_path).map_err(io_err(&meta_path))?;
        let meta = Meta::parse(&text)?;
        Self::from_parts(
            meta,
            &fs::read(dir.join("x.f64")).map_err(io_err(dir.join("x.f64")))?,
            &fs::read(dir.join("y.f64")).map_err(io_err(dir.join("y.f64")))?,
        )
    }

    /// Validates a header against raw tensor bytes and rebuilds the dataset.
    pub fn from_parts(meta: Meta, x_bytes: &[u8], y_bytes: &[u8]) -> Result<Self> {
        let version: u32 = meta.parse_value("format_version")?;
        if version != FORMAT_VERSION {
            return Err(HarnessError::Format(format!("unsupported format_version {version}")));
        }
        let problem = Problem::parse(meta.require("problem")?)
            .map_err(|e| HarnessError::Format(e.to_string()))?;
        Split::parse(meta.require("split")?)?;
        let domain = problem.domain();
        let n: usize = meta.parse_value("resolution")?;
        let count: usize = meta.parse_value("count")?;
        let points: usize = meta.parse_value("points")?;
        domain.check_resolution(n)?;
        if points != domain.num_points(n) || count == 0 {
            return Err(HarnessError::Format(format!(
                "{count} samples of {points} points do not fit a {} grid with n = {n}",
                domain.name()
            )));
        }
        for key in ["x_shape", "y_shape"] {
            if meta.parse_list::<usize>(key)? != [count, points] {
                return Err(HarnessError::Format(format!("`{key}` disagrees with count and points")));
            }
        }
        let split_rows = |bytes: &[u8]| -> Result<Vec<GridFunction>> {
            let v = tensor::decode_shaped(bytes, &[count, points])?;
            v.chunks_exact(points)
                .map(|c| Ok(GridFunction::new(domain, n, c.to_vec())?))
                .collect()
        };
        let x = split_rows(x_bytes)?;
        let y = split_rows(y_bytes)?;
        let ds = Self { meta, x, y };
        ds.setup().map_err(|e| HarnessError::Format(e.to_string()))?;
        Ok(ds)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(problem: Problem, n: usize, count: usize) -> Dataset {
        let setup = ProblemSetup::new(problem, n, None, 0.01, 1.0, 0).unwrap();
        Dataset::generate(&setup, Split::Train, 9, count, &thread_pool(1).unwrap()).unwrap()
    }

    #[test]
    fn burgers_file_sizes() {
        let ds = small(Problem::Burgers, 256, 2);
        let dir = tempfile::tempdir().unwrap();
        ds.write(dir.path()).unwrap();
        for f in ["x.f64", "y.f64"] {
            assert_eq!(fs::metadata(dir.path().join(f)).unwrap().len(), 2 * 256 * 8);
        }
        let back = Dataset::load(dir.path()).unwrap();
        assert_eq!(back, ds);
        let setup = ProblemSetup::new(Problem::Burgers, 256, None, 0.01, 1.0, 0).unwrap();
        assert!(back.matches(&setup, Split::Train, 9, 2));
        assert!(!back.matches(&setup, Split::Train, 9, 3));
        assert!(!back.matches(&setup, Split::Test, 9, 2));
    }

    #[test]
    fn regeneration_is_byte_identical_across_pool_sizes() {
        let setup = ProblemSetup::new(Problem::DarcyLognormal, 17, None, 0.01, 1.0, 0).unwrap();
        let a = Dataset::generate(&setup, Split::Test, 3, 6, &thread_pool(1).unwrap()).unwrap();
        let b = Dataset::generate(&setup, Split::Test, 3, 6, &thread_pool(3).unwrap()).unwrap();
        let (da, db) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        a.write(da.path()).unwrap();
        b.write(db.path()).unwrap();
        for f in ["meta", "x.f64", "y.f64"] {
            assert_eq!(fs::read(da.path().join(f)).unwrap(), fs::read(db.path().join(f)).unwrap());
        }
        assert_eq!(a.content_hash(), b.content_hash());
    }

    #[test]
    fn subsampling_matches_coarse_pointwise_values() {
        let ds = small(Problem::Poisson, 17, 3);
        let c = ds.subsample(9).unwrap();
        assert_eq!(c.resolution(), 9);
        assert_eq!(c.meta().get("stride"), Some("2"));
        assert_eq!(c.x[1].at(2, 3), ds.x[1].at(4, 6));
        assert!(ds.subsample(8).is_err());
        assert_eq!(ds.prefix(2).unwrap().len(), 2);
        assert!(ds.prefix(4).is_err());
    }

    #[test]
    fn load_rejects_corrupt_files() {
        let ds = small(Problem::Poisson, 9, 2);
        let x = tensor::encode(&Dataset::flat(&ds.x));
        let y = tensor::encode(&Dataset::flat(&ds.y));
        assert!(Dataset::from_parts(ds.meta().clone(), &x[..x.len() - 8], &y).is_err());
        let mut m = ds.meta().clone();
        m.set("count", 3).unwrap();
        assert!(Dataset::from_parts(m, &x, &y).is_err());
        let mut m = ds.meta().clone();
        m.set("format_version", 2).unwrap();
        assert!(Dataset::from_parts(m, &x, &y).is_err());
        let mut bad = x.clone();
        bad[..8].copy_from_slice(&f64::NAN.to_le_bytes());
        assert!(Dataset::from_parts(ds.meta().clone(), &bad, &y).is_err());
        assert!(Dataset::from_parts(ds.meta().clone(), &x, &y).is_ok());
    }

    #[test]
    fn failed_sample_reports_index() {
        let setup = ProblemSetup::new(Problem::Burgers, 96, Some(8), 0.01, 1.0, 0);
        // Non power-of-two grids are rejected by the pseudo-spectral solver.
        let setup = setup.unwrap();
        let err = Dataset::generate(&setup, Split::Train, 0, 2, &thread_pool(1).unwrap()).unwrap_err();
        assert!(matches!(err, HarnessError::Sample { index: 0, .. }), "{err}");
    }
}
