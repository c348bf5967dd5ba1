//! Experiment drivers: data, fitting, evaluation, sweeps, mesh transfer and
//! the reduced-basis comparison.
//!
//! Axes that a driver does not vary take the first entry of their list in
//! the config (first resolution, first `d`), and the full `n_train`.

use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;

use pcanet_core::baselines::ReducedBasis;
use pcanet_core::pca::PcaModel;
use pcanet_core::regress::TrainOutcome;
use pcanet_core::rng::derive_seed;
use pcanet_core::surrogate::{psi_pca_error, relative_test_error, FunctionPredictor, LinearOptions, RelativeError, Surrogate};
use pcanet_core::GridFunction;

use crate::config::{ExperimentConfig, RegressorKind};
use crate::dataset::{Dataset, Split};
use crate::error::{io_err, HarnessError, Result};
use crate::meta::Meta;
use crate::paths::Layout;
use crate::problem::ProblemSetup;
use crate::svg::{line_chart, Series};

/// Writes a CSV file with `header`, creating parent directories.
pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush().map_err(io_err(path))
}

/// Training and test sets on the finest grid. With a layout, datasets on
/// disk are reused when their headers match the config and written otherwise.
pub fn datasets(cfg: &ExperimentConfig, layout: Option<&Layout>, pool: &rayon::ThreadPool) -> Result<(Dataset, Dataset)> {
    let setup = cfg.setup()?;
    let one = |split: Split, seed: u64, count: usize| -> Result<Dataset> {
        let dir = layout.map(|l| l.data_dir(cfg.problem, split, cfg.finest()));
        if let Some(dir) = &dir {
            if dir.join("meta").exists() {
                match Dataset::load(dir) {
                    Ok(ds) if ds.matches(&setup, split, seed, count) => return Ok(ds),
                    Ok(_) => log::warn!("{} was made with other settings; regenerating", dir.display()),
                    Err(e) => log::warn!("{} is unreadable ({e}); regenerating", dir.display()),
                }
            }
        }
        log::info!("generating {} {} samples of {} at n = {}", count, split.name(), cfg.problem.name(), cfg.finest());
        let ds = Dataset::generate(&setup, split, seed, count, pool)?;
        if let Some(dir) = &dir {
            ds.write(dir)?;
        }
        Ok(ds)
    };
    Ok((
        one(Split::Train, cfg.train_seed, cfg.n_train)?,
        one(Split::Test, cfg.test_seed, cfg.n_test)?,
    ))
}

/// A fitted surrogate with its training record.
#[derive(Debug, Clone)]
pub struct FitArtifacts {
    pub surrogate: Surrogate,
    pub outcome: Option<TrainOutcome>,
    /// PCA and regressor fitting time.
    pub offline_seconds: f64,
}

impl FitArtifacts {
    /// Loss history rows: `epoch,train_mse,test_relative_error`.
    pub fn history_rows(&self) -> Vec<Vec<String>> {
        self.outcome
            .as_ref()
            .map(|o| {
                o.history
                    .iter()
                    .map(|r| {
                        vec![
                            r.epoch.to_string(),
                            r.train_mse.to_string(),
                            r.test_relative_error.map_or(String::new(), |e| e.to_string()),
                        ]
                    })
                    .collect()
            })
            .unwrap_or_default()
    }
}

pub const HISTORY_HEADER: [&str; 3] = ["epoch", "train_mse", "test_relative_error"];

/// Fits input and output PCA with `d` components on `train` and the chosen
/// regressor between them. `validation` pairs are scored every epoch.
pub fn fit_surrogate(
    cfg: &ExperimentConfig,
    train: &Dataset,
    d: usize,
    kind: RegressorKind,
    validation: Option<&Dataset>,
) -> Result<FitArtifacts> {
    let start = Instant::now();
    let pca_in = PcaModel::fit(&train.x, d, cfg.inner_product)?;
    let pca_out = PcaModel::fit(&train.y, d, cfg.inner_product)?;
    let (surrogate, outcome) = match kind {
        RegressorKind::Linear => (
            Surrogate::fit_linear(pca_in, pca_out, &train.x, &train.y, LinearOptions::default())?,
            None,
        ),
        RegressorKind::Nn => {
            let mut tc = cfg.train_config();
            tc.batch_size = tc.batch_size.min(train.len());
            let val = validation.map(|v| (v.x.as_slice(), v.y.as_slice()));
            let (s, o) = Surrogate::fit_mlp(
                pca_in,
                pca_out,
                &train.x,
                &train.y,
                &cfg.hidden,
                derive_seed(cfg.init_seed, 0),
                &tc,
                val,
            )?;
            (s, Some(o))
        }
    };
    Ok(FitArtifacts {
        surrogate,
        outcome,
        offline_seconds: start.elapsed().as_secs_f64(),
    })
}

/// Header entries describing how a model was fitted.
pub fn model_meta(cfg: &ExperimentConfig, train: &Dataset, d: usize, fit: &FitArtifacts) -> Result<Meta> {
    let mut m = Meta::new();
    m.set("problem", cfg.problem.name())?;
    m.set("train_resolution", train.resolution())?;
    m.set("d", d)?;
    m.set("n_train", train.len())?;
    m.set("train_set_hash", train.content_hash())?;
    m.set("init_seed", cfg.init_seed)?;
    if let Some(o) = &fit.outcome {
        m.set_list("hidden", &cfg.hidden)?;
        m.set("epochs", cfg.train.epochs)?;
        m.set("learning_rate", o.learning_rate)?;
        let rejected: Vec<String> = o.rejected.iter().map(|(r, _)| r.to_string()).collect();
        m.set("rejected_learning_rates", if rejected.is_empty() { "none".into() } else { rejected.join(", ") })?;
    } else {
        m.set("linear_intercept", true)?;
    }
    Ok(m)
}

/// Relative error and mean wall-clock time per prediction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub error: RelativeError,
    pub online_seconds: f64,
}

/// Scores `sur` on `test`. A test set on another grid is only accepted with
/// `transfer`, which moves both PCA bases to that grid.
pub fn evaluate(sur: &Surrogate, test: &Dataset, transfer: bool) -> Result<Evaluation> {
    if test.is_empty() {
        return Err(HarnessError::Usage("empty test set".into()));
    }
    let n = test.resolution();
    let moved;
    let sur = if sur.pca_in.resolution() == n && sur.pca_out.resolution() == n {
        sur
    } else if transfer {
        moved = sur.transfer(n, n)?;
        &moved
    } else {
        return Err(HarnessError::Core(pcanet_core::Error::Shape(format!(
            "model lives on n = {}, test data on n = {n}; pass --transfer to move the bases",
            sur.pca_in.resolution()
        ))));
    };
    let start = Instant::now();
    let pred = sur.predict_functions(&test.x)?;
    let online_seconds = start.elapsed().as_secs_f64() / test.len() as f64;
    let error = pcanet_core::surrogate::relative_error_of(&pred, &test.y)?;
    Ok(Evaluation { error, online_seconds })
}

pub const EVAL_HEADER: [&str; 7] = ["problem", "resolution", "d", "n_train", "regressor", "relative_error", "online_seconds"];

#[derive(Debug, Clone, PartialEq)]
pub struct EvalRow {
    pub problem: String,
    pub resolution: usize,
    pub d: usize,
    pub n_train: usize,
    pub regressor: RegressorKind,
    pub relative_error: f64,
    pub online_seconds: f64,
}

impl EvalRow {
    pub fn record(&self) -> Vec<String> {
        vec![
            self.problem.clone(),
            self.resolution.to_string(),
            self.d.to_string(),
            self.n_train.to_string(),
            self.regressor.name().into(),
            self.relative_error.to_string(),
            self.online_seconds.to_string(),
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Resolution,
    Dimension,
    Samples,
}

impl Axis {
    pub fn name(self) -> &'static str {
        match self {
            Self::Resolution => "resolution",
            Self::Dimension => "dimension",
            Self::Samples => "samples",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "resolution" => Ok(Self::Resolution),
            "dimension" => Ok(Self::Dimension),
            "samples" => Ok(Self::Samples),
            _ => Err(HarnessError::Usage(format!(
                "unknown axis {s:?}; expected resolution, dimension or samples"
            ))),
        }
    }
}

/// One cell of a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Cell {
    pub resolution: usize,
    pub d: usize,
    pub n_train: usize,
    pub regressor: RegressorKind,
}

/// Cells of a sweep along `axis`, sorted.
pub fn sweep_cells(cfg: &ExperimentConfig, axis: Axis) -> Vec<Cell> {
    let res0 = cfg.resolutions[0];
    let d0 = cfg.dims[0];
    let sorted = |mut v: Vec<usize>| {
        v.sort_unstable();
        v.dedup();
        v
    };
    let (res, dims, counts) = match axis {
        Axis::Resolution => (sorted(cfg.resolutions.clone()), vec![d0], vec![cfg.n_train]),
        Axis::Dimension => (vec![res0], sorted(cfg.dims.clone()), vec![cfg.n_train]),
        Axis::Samples => (vec![res0], vec![d0], sorted(cfg.sample_counts.clone())),
    };
    let mut cells = Vec::new();
    for &resolution in &res {
        for &d in &dims {
            for &n_train in &counts {
                for &regressor in &cfg.regressors {
                    cells.push(Cell { resolution, d, n_train, regressor });
                }
            }
        }
    }
    cells.sort();
    cells.dedup();
    cells
}

/// Fits and scores one cell from the finest-grid datasets.
pub fn run_cell(cfg: &ExperimentConfig, train: &Dataset, test: &Dataset, cell: Cell) -> Result<EvalRow> {
    let tr = train.subsample(cell.resolution)?.prefix(cell.n_train)?;
    let te = test.subsample(cell.resolution)?;
    let fit = fit_surrogate(cfg, &tr, cell.d, cell.regressor, None)?;
    let ev = evaluate(&fit.surrogate, &te, false)?;
    Ok(EvalRow {
        problem: cfg.problem.name().into(),
        resolution: cell.resolution,
        d: cell.d,
        n_train: cell.n_train,
        regressor: cell.regressor,
        relative_error: ev.error.mean,
        online_seconds: ev.online_seconds,
    })
}

pub const SWEEP_HEADER: [&str; 9] = [
    "axis",
    "problem",
    "resolution",
    "d",
    "n_train",
    "regressor",
    "relative_error",
    "online_seconds",
    "status",
];

/// A sweep cell and its outcome; failed cells keep their error message.
#[derive(Debug)]
pub struct SweepRow {
    pub axis: Axis,
    pub cell: Cell,
    pub result: std::result::Result<EvalRow, String>,
}

impl SweepRow {
    pub fn record(&self, problem: &str) -> Vec<String> {
        let (err, online, status) = match &self.result {
            Ok(r) => (r.relative_error.to_string(), r.online_seconds.to_string(), "ok".to_string()),
            Err(e) => ("NaN".into(), "NaN".into(), format!("error: {e}")),
        };
        vec![
            self.axis.name().into(),
            problem.into(),
            self.cell.resolution.to_string(),
            self.cell.d.to_string(),
            self.cell.n_train.to_string(),
            self.cell.regressor.name().into(),
            err,
            online,
            status,
        ]
    }

    pub fn error(&self) -> Option<f64> {
        self.result.as_ref().ok().map(|r| r.relative_error)
    }
}

/// Runs every cell of the sweep in the pool; a failing cell does not stop the others.
pub fn sweep(cfg: &ExperimentConfig, axis: Axis, train: &Dataset, test: &Dataset, pool: &rayon::ThreadPool) -> Vec<SweepRow> {
    let cells = sweep_cells(cfg, axis);
    pool.install(|| {
        cells
            .par_iter()
            .map(|&cell| SweepRow {
                axis,
                cell,
                result: run_cell(cfg, train, test, cell).map_err(|e| e.to_string()),
            })
            .collect()
    })
}

/// Line chart of a sweep: one series per regressor.
pub fn sweep_svg(problem: &str, axis: Axis, rows: &[SweepRow]) -> String {
    let mut kinds: Vec<RegressorKind> = rows.iter().map(|r| r.cell.regressor).collect();
    kinds.sort();
    kinds.dedup();
    let x_of = |c: &Cell| match axis {
        Axis::Resolution => c.resolution as f64,
        Axis::Dimension => c.d as f64,
        Axis::Samples => c.n_train as f64,
    };
    let series: Vec<Series> = kinds
        .iter()
        .map(|k| Series {
            name: k.name().into(),
            points: rows
                .iter()
                .filter(|r| r.cell.regressor == *k)
                .map(|r| (x_of(&r.cell), r.error().unwrap_or(f64::NAN)))
                .collect(),
        })
        .collect();
    line_chart(
        &format!("{problem}: relative test error vs {}", axis.name()),
        axis.name(),
        "relative test error",
        &series,
    )
}

pub const TRANSFER_HEADER: [&str; 9] = [
    "problem",
    "train_resolution",
    "eval_resolution",
    "d",
    "regressor",
    "native_error",
    "transfer_error",
    "increase",
    "gram_residual",
];

#[derive(Debug, Clone, PartialEq)]
pub struct TransferRow {
    pub problem: String,
    pub train_resolution: usize,
    pub eval_resolution: usize,
    pub d: usize,
    pub regressor: RegressorKind,
    /// Error on the test set at the training resolution.
    pub native_error: f64,
    pub transfer_error: f64,
    pub increase: f64,
    /// Worst orthonormality defect of the moved bases on the target grid.
    pub gram_residual: f64,
}

impl TransferRow {
    pub fn record(&self) -> Vec<String> {
        vec![
            self.problem.clone(),
            self.train_resolution.to_string(),
            self.eval_resolution.to_string(),
            self.d.to_string(),
            self.regressor.name().into(),
            self.native_error.to_string(),
            self.transfer_error.to_string(),
            self.increase.to_string(),
            self.gram_residual.to_string(),
        ]
    }
}

/// Trains on `transfer_from` (default: the coarsest resolution) and
/// evaluates on every other configured resolution through moved bases.
pub fn transfer(cfg: &ExperimentConfig, train: &Dataset, test: &Dataset) -> Result<Vec<TransferRow>> {
    let coarsest = *cfg.resolutions.iter().min().expect("validated non-empty");
    let from = cfg.transfer_from.unwrap_or(coarsest);
    let targets: Vec<usize> = {
        let mut v: Vec<usize> = cfg.resolutions.iter().copied().filter(|&r| r != from).collect();
        v.sort_unstable();
        v.dedup();
        v
    };
    if targets.is_empty() {
        return Err(HarnessError::Usage(format!(
            "transfer needs a resolution other than the training resolution {from}"
        )));
    }
    let tr = train.subsample(from)?;
    let native_test = test.subsample(from)?;
    let mut dims = cfg.dims.clone();
    dims.sort_unstable();
    dims.dedup();
    let mut rows = Vec::new();
    for &d in &dims {
        for &kind in &cfg.regressors {
            let fit = fit_surrogate(cfg, &tr, d, kind, None)?;
            let native = evaluate(&fit.surrogate, &native_test, false)?.error.mean;
            for &r in &targets {
                let moved = fit.surrogate.transfer(r, r)?;
                let gram = moved
                    .pca_in
                    .transfer_residual()
                    .unwrap_or(0.0)
                    .max(moved.pca_out.transfer_residual().unwrap_or(0.0));
                let e = evaluate(&moved, &test.subsample(r)?, false)?.error.mean;
                rows.push(TransferRow {
                    problem: cfg.problem.name().into(),
                    train_resolution: from,
                    eval_resolution: r,
                    d,
                    regressor: kind,
                    native_error: native,
                    transfer_error: e,
                    increase: e - native,
                    gram_residual: gram,
                });
            }
        }
    }
    Ok(rows)
}

pub const RB_HEADER: [&str; 8] = [
    "problem",
    "resolution",
    "d",
    "method",
    "relative_error",
    "online_seconds",
    "offline_seconds",
    "status",
];

#[derive(Debug, Clone, PartialEq)]
pub struct MethodRow {
    pub problem: String,
    pub resolution: usize,
    pub d: usize,
    /// `rb`, `psi_pca`, `output_pca`, `nn` or `linear`.
    pub method: String,
    pub result: std::result::Result<(f64, f64, f64), String>,
}

impl MethodRow {
    pub fn record(&self) -> Vec<String> {
        let (e, on, off, status) = match &self.result {
            Ok((e, on, off)) => (e.to_string(), on.to_string(), off.to_string(), "ok".to_string()),
            Err(m) => ("NaN".into(), "NaN".into(), "NaN".into(), format!("error: {m}")),
        };
        vec![
            self.problem.clone(),
            self.resolution.to_string(),
            self.d.to_string(),
            self.method.clone(),
            e,
            on,
            off,
            status,
        ]
    }

    pub fn error(&self) -> Option<f64> {
        self.result.as_ref().ok().map(|r| r.0)
    }
}

/// Mean seconds per call of `f` over `inputs`, the first call discarded as warm-up.
pub fn time_per_call<T>(inputs: &[T], mut f: impl FnMut(&T) -> Result<()>) -> Result<f64> {
    let Some(first) = inputs.first() else {
        return Err(HarnessError::Usage("nothing to time".into()));
    };
    f(first)?;
    if inputs.len() == 1 {
        let start = Instant::now();
        f(first)?;
        return Ok(start.elapsed().as_secs_f64());
    }
    let start = Instant::now();
    for x in &inputs[1..] {
        f(x)?;
    }
    Ok(start.elapsed().as_secs_f64() / (inputs.len() - 1) as f64)
}

/// The reduced-basis solver built on `d` output PCA modes, scored on `test`.
/// Returns the relative error, online seconds per solve and offline seconds.
pub fn rb_error(cfg: &ExperimentConfig, setup: &ProblemSetup, train: &Dataset, test: &Dataset, d: usize) -> Result<(f64, f64, f64)> {
    let start = Instant::now();
    let rb = ReducedBasis::new(PcaModel::fit(&train.y, d, cfg.inner_product)?, cfg.rb_scheme)?;
    let offline = start.elapsed().as_secs_f64();
    let data: Vec<(GridFunction, GridFunction)> =
        test.x.iter().map(|x| setup.elliptic_data(x)).collect::<Result<_>>()?;
    let mut preds = Vec::with_capacity(data.len());
    for (a, f) in &data {
        preds.push(rb.solve(a, f)?);
    }
    let online = time_per_call(&data, |(a, f)| {
        rb.solve(a, f)?;
        Ok(())
    })?;
    let err = pcanet_core::surrogate::relative_error_of(&preds, &test.y)?.mean;
    Ok((err, online, offline))
}

/// Reduced basis, the regressor-free PCA ceiling and the configured
/// regressors on a Darcy problem, for each `d`, at the first resolution.
pub fn baseline_rb(cfg: &ExperimentConfig, train: &Dataset, test: &Dataset) -> Result<Vec<MethodRow>> {
    if !cfg.problem.is_darcy() {
        return Err(HarnessError::Usage(format!(
            "baseline-rb needs a Darcy problem, not {}",
            cfg.problem.name()
        )));
    }
    let n = cfg.resolutions[0];
    let tr = train.subsample(n)?;
    let te = test.subsample(n)?;
    let setup = cfg.setup()?;
    let mut dims = cfg.dims.clone();
    dims.sort_unstable();
    dims.dedup();
    let mut rows = Vec::new();
    let row = |d: usize, method: &str, r: Result<(f64, f64, f64)>| MethodRow {
        problem: cfg.problem.name().into(),
        resolution: n,
        d,
        method: method.into(),
        result: r.map_err(|e| e.to_string()),
    };
    for &d in &dims {
        rows.push(row(d, "rb", rb_error(cfg, &setup, &tr, &te, d)));
        let ceiling = (|| -> Result<(f64, f64, f64)> {
            let start = Instant::now();
            let pin = PcaModel::fit(&tr.x, d, cfg.inner_product)?;
            let pout = PcaModel::fit(&tr.y, d, cfg.inner_product)?;
            let offline = start.elapsed().as_secs_f64();
            let forward = |x: &GridFunction| -> pcanet_core::Result<GridFunction> {
                setup.forward(x).map_err(|e| match e {
                    HarnessError::Core(c) => c,
                    other => pcanet_core::Error::Numerical(other.to_string()),
                })
            };
            let start = Instant::now();
            let e = psi_pca_error(&pin, &pout, &forward, &te.x, &te.y)?.mean;
            Ok((e, start.elapsed().as_secs_f64() / te.len() as f64, offline))
        })();
        rows.push(row(d, "psi_pca", ceiling));
        // The ceiling needs the projected coefficient to stay in the solver's
        // domain; the output projection floor is always defined.
        let floor = (|| -> Result<(f64, f64, f64)> {
            let start = Instant::now();
            let pout = PcaModel::fit(&tr.y, d, cfg.inner_product)?;
            let offline = start.elapsed().as_secs_f64();
            let start = Instant::now();
            let proj: Vec<GridFunction> = te.y.iter().map(|y| pout.project(y)).collect::<pcanet_core::Result<_>>()?;
            let online = start.elapsed().as_secs_f64() / te.len() as f64;
            Ok((pcanet_core::surrogate::relative_error_of(&proj, &te.y)?.mean, online, offline))
        })();
        rows.push(row(d, "output_pca", floor));
        for &kind in &cfg.regressors {
            let r = (|| -> Result<(f64, f64, f64)> {
                let fit = fit_surrogate(cfg, &tr, d, kind, None)?;
                let e = relative_test_error(&fit.surrogate, &te.x, &te.y)?.mean;
                let online = time_per_call(&te.x, |x| {
                    fit.surrogate.predict_function(x)?;
                    Ok(())
                })?;
                Ok((e, online, fit.offline_seconds))
            })();
            rows.push(row(d, kind.name(), r));
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::thread_pool;
    use crate::problem::Problem;

    fn tiny(problem: Problem) -> ExperimentConfig {
        let text = format!(
            "problem = {}\nresolutions = 9, 17\nn_train = 24\nn_test = 8\ndims = 4, 6\nsample_counts = 12, 24\n\
             hidden = 8\nepochs = 4\nbatch_size = 8",
            problem.name()
        );
        let c = ExperimentConfig::parse(&text).unwrap();
        c.validate().unwrap();
        c
    }

    #[test]
    fn sweep_cells_hold_other_axes_fixed() {
        let c = tiny(Problem::Poisson);
        let r = sweep_cells(&c, Axis::Resolution);
        assert_eq!(r.len(), 4);
        assert!(r.iter().all(|c| c.d == 4 && c.n_train == 24));
        let d = sweep_cells(&c, Axis::Dimension);
        assert!(d.windows(2).all(|w| w[0] <= w[1]));
        assert!(d.iter().all(|c| c.resolution == 9));
        let s = sweep_cells(&c, Axis::Samples);
        assert_eq!(s.iter().map(|c| c.n_train).collect::<Vec<_>>(), vec![12, 12, 24, 24]);
    }

    #[test]
    fn sweep_records_failed_cells_and_continues() {
        let mut c = tiny(Problem::Poisson);
        let pool = thread_pool(1).unwrap();
        let (train, test) = datasets(&c, None, &pool).unwrap();
        // d = 4 exceeds the 3-sample prefix: those cells fail, the others run.
        c.dims = vec![4];
        c.sample_counts = vec![3, 24];
        let rows = sweep(&c, Axis::Samples, &train, &test, &pool);
        assert_eq!(rows.len(), 4);
        let failed: Vec<_> = rows.iter().filter(|r| r.result.is_err()).collect();
        assert_eq!(failed.len(), 2);
        assert!(failed.iter().all(|r| r.cell.n_train == 3));
        assert!(failed[0].record("poisson")[8].starts_with("error"));
        assert!(rows.iter().filter(|r| r.cell.n_train == 24).all(|r| r.error().unwrap() < 1.0));
        let svg = sweep_svg("poisson", Axis::Samples, &rows);
        assert_eq!(svg.matches("<polyline").count(), 2);
    }

    #[test]
    fn eval_requires_transfer_flag_for_other_grids() {
        let c = tiny(Problem::Poisson);
        let pool = thread_pool(1).unwrap();
        let (train, test) = datasets(&c, None, &pool).unwrap();
        let fit = fit_surrogate(&c, &train.subsample(9).unwrap(), 4, RegressorKind::Linear, None).unwrap();
        assert!(evaluate(&fit.surrogate, &test, false).is_err());
        let e = evaluate(&fit.surrogate, &test, true).unwrap();
        let native = evaluate(&fit.surrogate, &test.subsample(9).unwrap(), false).unwrap();
        assert!((e.error.mean - native.error.mean).abs() < 0.02, "{e:?} vs {native:?}");
        assert!(e.online_seconds > 0.0);
    }

    #[test]
    fn cached_datasets_are_reused_only_when_headers_match() {
        let c = tiny(Problem::Poisson);
        let pool = thread_pool(1).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let layout = Layout::new(dir.path());
        let (a, _) = datasets(&c, Some(&layout), &pool).unwrap();
        let path = layout.data_dir(Problem::Poisson, Split::Train, 17);
        assert!(path.join("x.f64").exists());
        let (b, _) = datasets(&c, Some(&layout), &pool).unwrap();
        assert_eq!(a, b);
        let mut c2 = c.clone();
        c2.train_seed = 99;
        let (d, _) = datasets(&c2, Some(&layout), &pool).unwrap();
        assert_ne!(d.content_hash(), a.content_hash());
    }

    #[test]
    fn transfer_rows_cover_other_resolutions() {
        let mut c = tiny(Problem::DarcyLognormal);
        c.regressors = vec![RegressorKind::Linear];
        c.dims = vec![4];
        let pool = thread_pool(1).unwrap();
        let (train, test) = datasets(&c, None, &pool).unwrap();
        let rows = transfer(&c, &train, &test).unwrap();
        assert_eq!(rows.len(), 1);
        let r = &rows[0];
        assert_eq!((r.train_resolution, r.eval_resolution), (9, 17));
        assert!((r.increase - (r.transfer_error - r.native_error)).abs() < 1e-15);
        assert!(r.gram_residual.is_finite());
    }

    #[test]
    fn rb_rows_for_every_method() {
        let mut c = tiny(Problem::DarcyLognormal);
        c.dims = vec![4];
        let pool = thread_pool(1).unwrap();
        let (train, test) = datasets(&c, None, &pool).unwrap();
        let rows = baseline_rb(&c, &train, &test).unwrap();
        let methods: Vec<&str> = rows.iter().map(|r| r.method.as_str()).collect();
        assert_eq!(methods, ["rb", "psi_pca", "output_pca", "nn", "linear"]);
        for r in &rows {
            let (e, on, off) = r.result.clone().unwrap();
            assert!(e.is_finite() && e < 1.0, "{r:?}");
            assert!(on > 0.0 && off > 0.0);
        }
        assert!(baseline_rb(&tiny(Problem::Poisson), &train, &test).is_err());
    }
}
