//! Experiment configuration as flat `key = value` text.

use std::path::Path;

use pcanet_core::regress::TrainConfig;
use pcanet_core::{Domain, InnerProduct};

use crate::error::{io_err, HarnessError, Result};
use crate::meta::Meta;
use crate::problem::{Problem, ProblemSetup};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RegressorKind {
    Nn,
    Linear,
}

impl RegressorKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Nn => "nn",
            Self::Linear => "linear",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "nn" => Ok(Self::Nn),
            "linear" => Ok(Self::Linear),
            _ => Err(HarnessError::Usage(format!("unknown regressor {s:?}; expected nn or linear"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub problem: Problem,
    /// The largest entry is the grid data are generated on.
    pub resolutions: Vec<usize>,
    pub n_train: usize,
    pub n_test: usize,
    /// Reduced dimensions, `d_X = d_Y = d`.
    pub dims: Vec<usize>,
    /// Training-set sizes for the sample sweep (prefixes of the training set).
    pub sample_counts: Vec<usize>,
    pub regressors: Vec<RegressorKind>,
    pub hidden: Vec<usize>,
    pub train: TrainConfig,
    pub train_seed: u64,
    pub test_seed: u64,
    pub init_seed: u64,
    pub coefficient_seed: u64,
    pub cutoff: Option<usize>,
    pub inner_product: InnerProduct,
    pub viscosity: f64,
    pub t_final: f64,
    /// Training resolution of the mesh-transfer experiment.
    pub transfer_from: Option<usize>,
    /// Solve budgets of the Taylor-vs-PCA comparison.
    pub budgets: Vec<usize>,
    /// Truncation orders of the Taylor decay measurement.
    pub taylor_orders: Vec<usize>,
    pub rb_scheme: pcanet_core::baselines::GradientScheme,
    /// Worker threads; 0 uses all cores.
    pub threads: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            problem: Problem::DarcyPiecewise,
            resolutions: vec![33, 65, 129],
            n_train: 256,
            n_test: 500,
            dims: vec![10, 20, 30, 60],
            sample_counts: vec![128, 256],
            regressors: vec![RegressorKind::Nn, RegressorKind::Linear],
            hidden: vec![500, 1000, 2000, 1000, 500],
            train: TrainConfig::default(),
            train_seed: 1,
            test_seed: 2,
            init_seed: 3,
            coefficient_seed: 4,
            cutoff: None,
            inner_product: InnerProduct::Weighted,
            viscosity: 0.01,
            t_final: 1.0,
            transfer_from: None,
            budgets: vec![8, 16, 32, 64],
            taylor_orders: vec![8, 16, 32, 64, 128],
            rb_scheme: Default::default(),
            threads: 0,
        }
    }
}

const KEYS: &[&str] = &[
    "problem",
    "resolutions",
    "n_train",
    "n_test",
    "dims",
    "sample_counts",
    "regressors",
    "hidden",
    "learning_rates",
    "momentum",
    "batch_size",
    "epochs",
    "probe_epochs",
    "blowup_factor",
    "train_seed",
    "test_seed",
    "init_seed",
    "coefficient_seed",
    "cutoff",
    "inner_product",
    "viscosity",
    "t_final",
    "transfer_from",
    "budgets",
    "taylor_orders",
    "rb_scheme",
    "threads",
];

impl ExperimentConfig {
    /// Problem-specific desk-scale defaults.
    pub fn for_problem(problem: Problem) -> Self {
        let mut c = Self {
            problem,
            ..Self::default()
        };
        if problem == Problem::Burgers {
            c.resolutions = vec![256, 512, 1024];
        }
        c
    }

    pub fn finest(&self) -> usize {
        *self.resolutions.iter().max().expect("validated non-empty")
    }

    pub fn domain(&self) -> Domain {
        self.problem.domain()
    }

    /// Training configuration with the seed derived from `init_seed`.
    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            seed: pcanet_core::rng::derive_seed(self.init_seed, 1),
            ..self.train.clone()
        }
    }

    pub fn setup(&self) -> Result<ProblemSetup> {
        ProblemSetup::new(
            self.problem,
            self.finest(),
            self.cutoff,
            self.viscosity,
            self.t_final,
            self.coefficient_seed,
        )
    }

    pub fn validate(&self) -> Result<()> {
        let usage = |m: String| Err(HarnessError::Usage(m));
        if self.resolutions.is_empty() {
            return usage("at least one resolution is required".into());
        }
        let domain = self.domain();
        let finest = self.finest();
        for &n in &self.resolutions {
            domain.check_resolution(n)?;
            if domain.nesting_stride(finest, n).is_none() {
                return usage(format!("resolution {n} is not a sub-sampling of {finest}"));
            }
            if self.problem == Problem::Burgers && !n.is_power_of_two() {
                return usage(format!("burgers resolutions must be powers of two, got {n}"));
            }
        }
        if let Some(t) = self.transfer_from {
            if domain.nesting_stride(finest, t).is_none() {
                return usage(format!("transfer resolution {t} is not a sub-sampling of {finest}"));
            }
        }
        if self.n_train == 0 || self.n_test == 0 {
            return usage("n_train and n_test must be positive".into());
        }
        if self.dims.is_empty() || self.dims.contains(&0) {
            return usage("dims must be a non-empty list of positive integers".into());
        }
        let max_d = *self.dims.iter().max().expect("non-empty");
        if self.n_train < max_d {
            return usage(format!("n_train = {} is below the largest d = {max_d}", self.n_train));
        }
        if self.sample_counts.iter().any(|&n| n == 0 || n > self.n_train) {
            return usage(format!("sample_counts must lie in 1..={}", self.n_train));
        }
        if self.regressors.is_empty() {
            return usage("at least one regressor is required".into());
        }
        if self.hidden.contains(&0) {
            return usage("hidden widths must be positive".into());
        }
        if self.budgets.contains(&0) || self.taylor_orders.contains(&0) {
            return usage("budgets and Taylor orders must be positive".into());
        }
        if !(self.viscosity > 0.0 && self.t_final > 0.0) {
            return usage("viscosity and t_final must be positive".into());
        }
        if !(self.train.blowup_factor > 1.0) || self.train.epochs == 0 {
            return usage("blowup_factor must exceed 1 and epochs must be positive".into());
        }
        self.train.validate(self.n_train.max(self.train.batch_size))?;
        self.setup()?;
        Ok(())
    }

    pub fn from_meta(meta: &Meta) -> Result<Self> {
        if let Some(k) = meta.keys().find(|k| !KEYS.contains(k)) {
            return Err(HarnessError::Usage(format!(
                "unknown config key `{k}`; known keys: {}",
                KEYS.join(", ")
            )));
        }
        let problem = match meta.get("problem") {
            Some(p) => Problem::parse(p)?,
            None => Problem::DarcyPiecewise,
        };
        let mut c = Self::for_problem(problem);
        macro_rules! scalar {
            ($key:literal, $field:expr) => {
                if let Some(v) = meta.parse_opt($key)? {
                    $field = v;
                }
            };
        }
        macro_rules! list {
            ($key:literal, $field:expr) => {
                if meta.get($key).is_some() {
                    $field = meta.parse_list($key)?;
                }
            };
        }
        list!("resolutions", c.resolutions);
        scalar!("n_train", c.n_train);
        scalar!("n_test", c.n_test);
        list!("dims", c.dims);
        list!("sample_counts", c.sample_counts);
        if meta.get("regressors").is_some() {
            c.regressors = meta
                .parse_list::<String>("regressors")?
                .iter()
                .map(|s| RegressorKind::parse(s))
                .collect::<Result<_>>()?;
        }
        list!("hidden", c.hidden);
        list!("learning_rates", c.train.learning_rates);
        scalar!("momentum", c.train.momentum);
        scalar!("batch_size", c.train.batch_size);
        scalar!("epochs", c.train.epochs);
        scalar!("probe_epochs", c.train.probe_epochs);
        scalar!("blowup_factor", c.train.blowup_factor);
        scalar!("train_seed", c.train_seed);
        scalar!("test_seed", c.test_seed);
        scalar!("init_seed", c.init_seed);
        scalar!("coefficient_seed", c.coefficient_seed);
        if let Some(v) = meta.get("cutoff") {
            c.cutoff = if v == "auto" { None } else { Some(meta.parse_value("cutoff")?) };
        }
        if let Some(v) = meta.get("inner_product") {
            c.inner_product = InnerProduct::parse(v)
                .ok_or_else(|| HarnessError::Usage(format!("unknown inner product {v:?}")))?;
        }
        scalar!("viscosity", c.viscosity);
        scalar!("t_final", c.t_final);
        if let Some(v) = meta.get("transfer_from") {
            c.transfer_from = if v == "none" { None } else { Some(meta.parse_value("transfer_from")?) };
        }
        list!("budgets", c.budgets);
        list!("taylor_orders", c.taylor_orders);
        if let Some(v) = meta.get("rb_scheme") {
            c.rb_scheme = pcanet_core::baselines::GradientScheme::parse(v)
                .ok_or_else(|| HarnessError::Usage(format!("unknown rb_scheme {v:?}")))?;
        }
        scalar!("threads", c.threads);
        Ok(c)
    }

    pub fn parse(text: &str) -> Result<Self> {
        Self::from_meta(&Meta::parse(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        Self::parse(&text)
    }

    /// Canonical text form; parsing it gives back an equal config.
    pub fn to_meta(&self) -> Meta {
        let mut m = Meta::new();
        let t = &self.train;
        let regs: Vec<&str> = self.regressors.iter().map(|r| r.name()).collect();
        let set = |m: &mut Meta, k: &str, v: String| m.set(k, v).expect("valid key and value");
        let list = |v: &[usize]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ");
        set(&mut m, "problem", self.problem.name().into());
        set(&mut m, "resolutions", list(&self.resolutions));
        set(&mut m, "n_train", self.n_train.to_string());
        set(&mut m, "n_test", self.n_test.to_string());
        set(&mut m, "dims", list(&self.dims));
        set(&mut m, "sample_counts", list(&self.sample_counts));
        set(&mut m, "regressors", regs.join(", "));
        set(&mut m, "hidden", list(&self.hidden));
        set(
            &mut m,
            "learning_rates",
            t.learning_rates.iter().map(|r| r.to_string()).collect::<Vec<_>>().join(", "),
        );
        set(&mut m, "momentum", t.momentum.to_string());
        set(&mut m, "batch_size", t.batch_size.to_string());
        set(&mut m, "epochs", t.epochs.to_string());
        set(&mut m, "probe_epochs", t.probe_epochs.to_string());
        set(&mut m, "blowup_factor", t.blowup_factor.to_string());
        set(&mut m, "train_seed", self.train_seed.to_string());
        set(&mut m, "test_seed", self.test_seed.to_string());
        set(&mut m, "init_seed", self.init_seed.to_string());
        set(&mut m, "coefficient_seed", self.coefficient_seed.to_string());
        set(&mut m, "cutoff", self.cutoff.map_or("auto".into(), |c| c.to_string()));
        set(&mut m, "inner_product", self.inner_product.name().into());
        set(&mut m, "viscosity", self.viscosity.to_string());
        set(&mut m, "t_final", self.t_final.to_string());
        set(&mut m, "transfer_from", self.transfer_from.map_or("none".into(), |c| c.to_string()));
        set(&mut m, "budgets", list(&self.budgets));
        set(&mut m, "taylor_orders", list(&self.taylor_orders));
        set(&mut m, "rb_scheme", self.rb_scheme.name().into());
        set(&mut m, "threads", self.threads.to_string());
        m
    }

    /// Parses `text` with `key=value` overrides applied on top. Keys absent
    /// from both fall back to the defaults of the chosen problem.
    pub fn with_overrides(text: &str, overrides: &[String]) -> Result<Self> {
        let mut m = Meta::parse(text)?;
        for o in overrides {
            let (k, v) = o
                .split_once('=')
                .ok_or_else(|| HarnessError::Usage(format!("override {o:?} is not key=value")))?;
            let k = k.trim();
            if !KEYS.contains(&k) {
                return Err(HarnessError::Usage(format!("unknown config key `{k}`")));
            }
            m.set(k, v.trim())?;
        }
        Self::from_meta(&m)
    }
}
