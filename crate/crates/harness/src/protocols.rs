//! Fixed comparison protocols: truncated Taylor expansion against PCA with a
//! linear map at equal solve budgets, the decay of the Taylor truncation
//! error, and online/offline timing of reduced basis against the surrogates.

use std::time::Instant;

use pcanet_core::baselines::{worst_case_tail, ReducedBasis, TaylorTruncation};
use pcanet_core::fields::CoeffModel;
use pcanet_core::pca::PcaModel;
use pcanet_core::rng::derive_seed;
use pcanet_core::surrogate::{relative_error_of, relative_test_error, FunctionPredictor, LinearOptions, Surrogate};
use pcanet_core::theory::log_log_slope;
use pcanet_core::GridFunction;

use crate::config::{ExperimentConfig, RegressorKind};
use crate::dataset::Dataset;
use crate::error::{HarnessError, Result};
use crate::experiments::{fit_surrogate, time_per_call};
use crate::problem::{Problem, ProblemSetup};

/// Accepted distance between a measured log-log slope and its predicted value.
pub const SLOPE_TOLERANCE: f64 = 0.3;

/// Latent map used against the Taylor expansion. The forward map is linear,
/// so no intercept is fitted, and with `N = d` the fit interpolates.
pub const COMPARISON_LINEAR: LinearOptions = LinearOptions {
    intercept: false,
    center: false,
    standardize: true,
};

fn require_coeff_model(cfg: &ExperimentConfig) -> Result<(ProblemSetup, CoeffModel)> {
    if cfg.problem != Problem::CoeffModel {
        return Err(HarnessError::Usage(format!(
            "the Taylor protocols need the coeff_model problem, not {}",
            cfg.problem.name()
        )));
    }
    let setup = cfg.setup()?;
    let model = setup.coeff_model().expect("coefficient problem").clone();
    Ok((setup, model))
}

/// Coefficient vectors of the test inputs, redrawn from their seeds and
/// checked against the stored functions.
pub fn test_coefficients(setup: &ProblemSetup, test: &Dataset) -> Result<Vec<Vec<f64>>> {
    let seed: u64 = test.meta().parse_value("seed")?;
    if test.resolution() != setup.source_resolution {
        return Err(HarnessError::Usage("coefficients need the test set on its source grid".into()));
    }
    test.x
        .iter()
        .enumerate()
        .map(|(i, x)| {
            let (xi, f) = setup.sample_coefficients(derive_seed(seed, i as u64))?;
            if f.values() != x.values() {
                return Err(HarnessError::Format(format!(
                    "test sample {i} does not match its recorded seed"
                )));
            }
            Ok(xi)
        })
        .collect()
}

pub const COMPARISON_HEADER: [&str; 5] = ["method", "d", "budget", "relative_error", "test_set_hash"];

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    /// `taylor` or `pca_linear`.
    pub method: String,
    /// Reduced dimension (PCA) or truncation order (Taylor).
    pub d: usize,
    /// Number of forward solves spent.
    pub budget: usize,
    pub relative_error: f64,
    pub test_set_hash: String,
}

impl ComparisonRow {
    pub fn record(&self) -> Vec<String> {
        vec![
            self.method.clone(),
            self.d.to_string(),
            self.budget.to_string(),
            self.relative_error.to_string(),
            self.test_set_hash.clone(),
        ]
    }
}

/// For each budget `b`: the Taylor expansion with `b` precomputed solves and
/// PCA + linear map trained on `N = d = b` samples, on one shared test set.
pub fn run_chkifa_comparison(cfg: &ExperimentConfig, train: &Dataset, test: &Dataset) -> Result<Vec<ComparisonRow>> {
    let (setup, model) = require_coeff_model(cfg)?;
    let xis = test_coefficients(&setup, test)?;
    let hash = test.content_hash();
    let n = test.resolution();
    let mut budgets = cfg.budgets.clone();
    budgets.sort_unstable();
    budgets.dedup();
    let mut rows = Vec::new();
    for &b in &budgets {
        let taylor = TaylorTruncation::new(&model, b, n)?;
        let preds: Vec<GridFunction> = xis.iter().map(|xi| taylor.predict(xi)).collect::<pcanet_core::Result<_>>()?;
        rows.push(ComparisonRow {
            method: "taylor".into(),
            d: b,
            budget: b,
            relative_error: relative_error_of(&preds, &test.y)?.mean,
            test_set_hash: hash.clone(),
        });
        let tr = train.prefix(b)?;
        let pin = PcaModel::fit(&tr.x, b, cfg.inner_product)?;
        let pout = PcaModel::fit(&tr.y, b, cfg.inner_product)?;
        let sur = Surrogate::fit_linear(pin, pout, &tr.x, &tr.y, COMPARISON_LINEAR)?;
        rows.push(ComparisonRow {
            method: "pca_linear".into(),
            d: b,
            budget: b,
            relative_error: relative_test_error(&sur, &test.x, &test.y)?.mean,
            test_set_hash: hash.clone(),
        });
    }
    Ok(rows)
}

pub const DECAY_HEADER: [&str; 3] = ["K", "worst_case_tail", "relative_error"];

#[derive(Debug, Clone, PartialEq)]
pub struct DecayRow {
    pub order: usize,
    /// `max_x Σ_{j≥K} |φ_j(x)|`, the bound on the input truncation error.
    pub worst_case_tail: f64,
    /// Mean relative error of the order-`K` expansion on the test set.
    pub relative_error: f64,
}

impl DecayRow {
    pub fn record(&self) -> Vec<String> {
        vec![
            self.order.to_string(),
            self.worst_case_tail.to_string(),
            self.relative_error.to_string(),
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecaySummary {
    /// Fitted log-log slope of the worst-case tail against `K`.
    pub tail_slope: f64,
    /// Fitted log-log slope of the realized test error.
    pub error_slope: f64,
    /// `1 − 1/p`, where `(‖φ_j‖_∞)` is in `ℓ^p` for every `p > 2/exponent`.
    pub target_slope: f64,
    pub pass: bool,
}

pub const DECAY_SUMMARY_HEADER: [&str; 4] = ["quantity", "value", "target", "tolerance"];

impl DecaySummary {
    pub fn records(&self) -> Vec<Vec<String>> {
        let t = self.target_slope.to_string();
        vec![
            vec!["tail_slope".into(), self.tail_slope.to_string(), t.clone(), SLOPE_TOLERANCE.to_string()],
            vec!["error_slope".into(), self.error_slope.to_string(), format!("<= {}", self.target_slope + SLOPE_TOLERANCE), String::new()],
            vec!["pass".into(), self.pass.to_string(), String::new(), String::new()],
        ]
    }
}

/// Predicted tail exponent of the coefficient model: mode `j` has sup norm
/// of order `j^{-exponent/2}`, so the tail after `K` terms decays like
/// `K^{1 - exponent/2}`.
pub fn stechkin_slope(model: &CoeffModel) -> f64 {
    1.0 - model.spec().exponent / 2.0
}

/// Truncation error against the order `K`. Passes when the worst-case tail
/// follows the predicted slope within [`SLOPE_TOLERANCE`] and the realized
/// error decays at least that fast.
pub fn run_taylor_decay(cfg: &ExperimentConfig, test: &Dataset) -> Result<(Vec<DecayRow>, DecaySummary)> {
    let (setup, model) = require_coeff_model(cfg)?;
    let xis = test_coefficients(&setup, test)?;
    let n = test.resolution();
    let mut orders = cfg.taylor_orders.clone();
    orders.sort_unstable();
    orders.dedup();
    if orders.len() < 2 {
        return Err(HarnessError::Usage("need at least two Taylor orders".into()));
    }
    let top = *orders.last().expect("non-empty");
    let full = TaylorTruncation::new(&model, top, n)?;
    let etas: Vec<GridFunction> = (0..top)
        .map(|j| {
            let mut xi = vec![0.0; j + 1];
            xi[j] = 1.0;
            full.predict(&xi)
        })
        .collect::<pcanet_core::Result<_>>()?;
    let mut rows = Vec::new();
    for &k in &orders {
        let taylor = TaylorTruncation::from_solutions(&etas[..k])?;
        let preds: Vec<GridFunction> = xis.iter().map(|xi| taylor.predict(xi)).collect::<pcanet_core::Result<_>>()?;
        rows.push(DecayRow {
            order: k,
            worst_case_tail: worst_case_tail(&model, k, model.len(), n)?,
            relative_error: relative_error_of(&preds, &test.y)?.mean,
        });
    }
    let ks: Vec<f64> = rows.iter().map(|r| r.order as f64).collect();
    let tails: Vec<f64> = rows.iter().map(|r| r.worst_case_tail).collect();
    let errs: Vec<f64> = rows.iter().map(|r| r.relative_error).collect();
    let tail_slope = log_log_slope(&ks, &tails);
    let error_slope = log_log_slope(&ks, &errs);
    let target_slope = stechkin_slope(&model);
    let pass = (tail_slope - target_slope).abs() <= SLOPE_TOLERANCE && error_slope <= target_slope + SLOPE_TOLERANCE;
    Ok((
        rows,
        DecaySummary {
            tail_slope,
            error_slope,
            target_slope,
            pass,
        },
    ))
}

pub const TIMING_HEADER: [&str; 5] = ["method", "d", "K", "online_seconds", "offline_seconds"];

#[derive(Debug, Clone, PartialEq)]
pub struct TimingRow {
    /// `rb`, `nn` or `linear`.
    pub method: String,
    pub d: usize,
    /// Grid points of the discretization.
    pub points: usize,
    /// Seconds per prediction, warm-up discarded.
    pub online_seconds: f64,
    /// Seconds to build the method from training data.
    pub offline_seconds: f64,
}

impl TimingRow {
    pub fn record(&self) -> Vec<String> {
        vec![
            self.method.clone(),
            self.d.to_string(),
            self.points.to_string(),
            self.online_seconds.to_string(),
            self.offline_seconds.to_string(),
        ]
    }
}

/// Trend checks on timing rows.
#[derive(Debug, Clone, PartialEq)]
pub struct TimingSummary {
    /// RB online time at the largest `d` over that at the smallest.
    pub rb_growth: f64,
    pub d_ratio: f64,
    /// `rb_growth > d_ratio`.
    pub rb_superlinear: bool,
    /// The linear surrogate has the smallest online time at every `d`.
    pub linear_fastest: bool,
}

impl TimingSummary {
    pub fn from_rows(rows: &[TimingRow]) -> Option<Self> {
        let mut dims: Vec<usize> = rows.iter().map(|r| r.d).collect();
        dims.sort_unstable();
        dims.dedup();
        let (lo, hi) = (*dims.first()?, *dims.last()?);
        let online = |m: &str, d: usize| rows.iter().find(|r| r.method == m && r.d == d).map(|r| r.online_seconds);
        let rb_growth = online("rb", hi)? / online("rb", lo)?;
        let d_ratio = hi as f64 / lo as f64;
        let linear_fastest = dims.iter().all(|&d| {
            online("linear", d).is_some_and(|l| rows.iter().filter(|r| r.d == d).all(|r| r.online_seconds >= l))
        });
        Some(Self {
            rb_growth,
            d_ratio,
            rb_superlinear: rb_growth > d_ratio,
            linear_fastest,
        })
    }
}

/// Online and offline wall-clock time of reduced basis and the configured
/// regressors per `d` at the first resolution. Call from a single thread;
/// dataset generation and I/O are not timed.
pub fn run_rb_timing(cfg: &ExperimentConfig, train: &Dataset, test: &Dataset) -> Result<Vec<TimingRow>> {
    if !cfg.problem.is_darcy() {
        return Err(HarnessError::Usage(format!(
            "timing needs a Darcy problem, not {}",
            cfg.problem.name()
        )));
    }
    let n = cfg.resolutions[0];
    let tr = train.subsample(n)?;
    let te = test.subsample(n)?;
    let setup = cfg.setup()?;
    let points = te.x[0].values().len();
    let data: Vec<(GridFunction, GridFunction)> =
        te.x.iter().map(|x| setup.elliptic_data(x)).collect::<Result<_>>()?;
    let mut dims = cfg.dims.clone();
    dims.sort_unstable();
    dims.dedup();
    let mut rows = Vec::new();
    for &d in &dims {
        let start = Instant::now();
        let rb = ReducedBasis::new(PcaModel::fit(&tr.y, d, cfg.inner_product)?, cfg.rb_scheme)?;
        let offline = start.elapsed().as_secs_f64();
        let online = time_per_call(&data, |(a, f)| {
            rb.solve(a, f)?;
            Ok(())
        })?;
        rows.push(TimingRow {
            method: "rb".into(),
            d,
            points,
            online_seconds: online,
            offline_seconds: offline,
        });
        for &kind in &cfg.regressors {
            let fit = fit_surrogate(cfg, &tr, d, kind, None)?;
            let online = time_per_call(&te.x, |x| {
                fit.surrogate.predict_function(x)?;
                Ok(())
            })?;
            rows.push(TimingRow {
                method: kind.name().into(),
                d,
                points,
                online_seconds: online,
                offline_seconds: fit.offline_seconds,
            });
        }
    }
    if !cfg.regressors.contains(&RegressorKind::Linear) {
        log::info!("timing without the linear regressor; the linear-fastest check is skipped");
    }
    Ok(rows)
}
