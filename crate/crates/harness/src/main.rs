use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use pcanet_core::fields::MeasureSpec;
use pcanet_core::pca::PcaModel;
use pcanet_core::rng::derive_seed;
use pcanet_core::theory::{self, TheoryReport};
use pcanet_core::InnerProduct;

use pcanet_harness::config::{ExperimentConfig, RegressorKind};
use pcanet_harness::dataset::{thread_pool, Dataset, Split};
use pcanet_harness::experiments::{self, write_csv, Axis};
use pcanet_harness::paths::Layout;
use pcanet_harness::{model_io, protocols, HarnessError, Result};

const CSV_SCHEMAS: &str = "\
Output root: --output, else $PCANET_OUT, else ./pcanet-out.

CSV schemas (one header line, then one row per cell):
  eval            problem,resolution,d,n_train,regressor,relative_error,online_seconds
  sweep           axis,problem,resolution,d,n_train,regressor,relative_error,online_seconds,status
  fit history     epoch,train_mse,test_relative_error
  transfer        problem,train_resolution,eval_resolution,d,regressor,native_error,transfer_error,increase,gram_residual
  baseline-rb     problem,resolution,d,method,relative_error,online_seconds,offline_seconds,status
  baseline-taylor method,d,budget,relative_error,test_set_hash
                  K,worst_case_tail,relative_error
                  quantity,value,target,tolerance
  timing          method,d,K,online_seconds,offline_seconds   (K = grid points)
  theory          check,trials,kind,name,value,pass

Failed sweep and baseline cells are kept with status `error: ...`.
Exit status: 0 when every requested cell succeeded, 1 otherwise, 2 on usage errors.";

#[derive(Parser)]
#[command(name = "pcanet", version, about = "Operator learning with PCA-reduced neural networks", after_long_help = CSV_SCHEMAS)]
struct Cli {
    /// Output root directory.
    #[arg(long, global = true, value_name = "DIR")]
    output: Option<PathBuf>,
    /// Worker threads (0 = all cores). `1` gives bit-reproducible runs.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Experiment config, flat `key = value` lines.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Override one config key; repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample inputs on the finest grid, solve, and write train/test datasets
    /// for every configured resolution.
    Generate,
    /// Fit PCA bases and a regressor, save the model and its loss history.
    Fit(ModelArgs),
    /// Score a saved model on a dataset and emit one CSV row.
    Eval(EvalArgs),
    /// Error as a function of resolution, reduced dimension or sample count.
    Sweep {
        #[arg(long, value_enum)]
        axis: AxisArg,
    },
    /// Train on one grid and evaluate on the others through moved bases.
    Transfer,
    /// Reduced basis Galerkin against the PCA ceiling and the regressors (Darcy problems).
    BaselineRb,
    /// Truncated Taylor expansion against PCA + linear map, and its error decay (coeff_model).
    BaselineTaylor,
    /// Randomized checks: Fan inequality, covariance convergence rate, encoder Lipschitz bound, Chebyshev coverage.
    Theory(TheoryArgs),
    /// Online/offline timing of reduced basis and the surrogates, single-threaded.
    Timing,
}

#[derive(Args)]
struct ModelArgs {
    /// Reduced dimension (default: first configured).
    #[arg(long)]
    d: Option<usize>,
    /// Regressor (default: first configured).
    #[arg(long, value_enum)]
    regressor: Option<RegressorArg>,
    /// Training resolution (default: first configured).
    #[arg(long)]
    resolution: Option<usize>,
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Resolution of the evaluation data (default: the training resolution).
    #[arg(long)]
    eval_resolution: Option<usize>,
    /// Allow evaluation on another grid by moving the PCA bases.
    #[arg(long)]
    transfer: bool,
    #[arg(long, value_enum, default_value = "test")]
    split: SplitArg,
}

#[derive(Clone, Copy, ValueEnum)]
enum RegressorArg {
    Nn,
    Linear,
}

impl From<RegressorArg> for RegressorKind {
    fn from(r: RegressorArg) -> Self {
        match r {
            RegressorArg::Nn => RegressorKind::Nn,
            RegressorArg::Linear => RegressorKind::Linear,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum SplitArg {
    Train,
    Test,
}

#[derive(Clone, Copy, ValueEnum)]
enum AxisArg {
    Resolution,
    Dimension,
    Samples,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Check {
    Fan,
    McRate,
    Chebyshev,
    Lipschitz,
    All,
}

#[derive(Args)]
struct TheoryArgs {
    #[arg(value_enum)]
    check: Check,
    /// Matrix size for `fan`.
    #[arg(long, default_value_t = 6)]
    dim: usize,
    /// Subspace or latent dimension (default: 1, 2, 3 for `fan`, 10 otherwise).
    #[arg(long)]
    d: Option<usize>,
    /// Trials per matrix / repetitions (default depends on the check).
    #[arg(long)]
    trials: Option<usize>,
    /// Random PSD matrices for `fan`.
    #[arg(long, default_value_t = 20)]
    matrices: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Grid resolution for `chebyshev` and `lipschitz`.
    #[arg(long, default_value_t = 33)]
    resolution: usize,
    /// Mode cutoff of the Gaussian measure for `mc-rate`.
    #[arg(long, default_value_t = 8)]
    cutoff: usize,
}

struct Env {
    cfg: ExperimentConfig,
    layout: Layout,
    pool: rayon::ThreadPool,
}

fn load_env(cli: &Cli) -> Result<Env> {
    let text = match &cli.config {
        Some(p) => std::fs::read_to_string(p).map_err(|source| HarnessError::Io { path: p.clone(), source })?,
        None => String::new(),
    };
    let mut cfg = ExperimentConfig::with_overrides(&text, &cli.overrides)?;
    if let Some(t) = cli.threads {
        cfg.threads = t;
    }
    cfg.validate()?;
    let pool = thread_pool(cfg.threads)?;
    Ok(Env {
        cfg,
        layout: Layout::resolve(cli.output.as_deref()),
        pool,
    })
}

fn print_table(header: &[&str], rows: &[Vec<String>]) {
    println!("{}", header.join(","));
    for r in rows {
        println!("{}", r.join(","));
    }
}

fn cmd_generate(env: &Env) -> Result<bool> {
    let cfg = &env.cfg;
    let (train, test) = experiments::datasets(cfg, Some(&env.layout), &env.pool)?;
    for (split, ds) in [(Split::Train, &train), (Split::Test, &test)] {
        let mut res = cfg.resolutions.clone();
        res.sort_unstable();
        res.dedup();
        for n in res {
            let dir = env.layout.data_dir(cfg.problem, split, n);
            if n != ds.resolution() {
                ds.subsample(n)?.write(&dir)?;
            }
            println!("{}", dir.display());
        }
    }
    Ok(true)
}

fn model_choice(cfg: &ExperimentConfig, a: &ModelArgs) -> (usize, usize, RegressorKind) {
    (
        a.resolution.unwrap_or(cfg.resolutions[0]),
        a.d.unwrap_or(cfg.dims[0]),
        a.regressor.map_or(cfg.regressors[0], Into::into),
    )
}

fn cmd_fit(env: &Env, a: &ModelArgs) -> Result<bool> {
    let cfg = &env.cfg;
    let (n, d, kind) = model_choice(cfg, a);
    let (train, test) = experiments::datasets(cfg, Some(&env.layout), &env.pool)?;
    let tr = train.subsample(n)?;
    let te = test.subsample(n)?;
    let fit = experiments::fit_surrogate(cfg, &tr, d, kind, Some(&te))?;
    let dir = env.layout.model_dir(cfg.problem, n, d, kind);
    model_io::save(&fit.surrogate, &experiments::model_meta(cfg, &tr, d, &fit)?, &dir)?;
    write_csv(&dir.join("history.csv"), &experiments::HISTORY_HEADER, &fit.history_rows())?;
    let train_err = experiments::evaluate(&fit.surrogate, &tr, false)?.error.mean;
    let test_err = experiments::evaluate(&fit.surrogate, &te, false)?.error.mean;
    println!(
        "{}: train_relative_error={train_err} test_relative_error={test_err} offline_seconds={:.3}",
        dir.display(),
        fit.offline_seconds
    );
    Ok(true)
}

fn cmd_eval(env: &Env, a: &EvalArgs) -> Result<bool> {
    let cfg = &env.cfg;
    let (n, d, kind) = model_choice(cfg, &a.model);
    let dir = env.layout.model_dir(cfg.problem, n, d, kind);
    let (sur, meta) = model_io::load(&dir)?;
    if meta.get("problem") != Some(cfg.problem.name()) {
        return Err(HarnessError::Usage(format!(
            "{} was fitted for {:?}, config says {}",
            dir.display(),
            meta.get("problem"),
            cfg.problem.name()
        )));
    }
    let eval_n = a.eval_resolution.unwrap_or(n);
    let (train, test) = experiments::datasets(cfg, Some(&env.layout), &env.pool)?;
    let (split, ds): (&str, &Dataset) = match a.split {
        SplitArg::Train => ("train", &train),
        SplitArg::Test => ("test", &test),
    };
    let data = ds.subsample(eval_n)?;
    let ev = experiments::evaluate(&sur, &data, a.transfer)?;
    let row = experiments::EvalRow {
        problem: cfg.problem.name().into(),
        resolution: eval_n,
        d,
        n_train: meta.parse_value("n_train")?,
        regressor: kind,
        relative_error: ev.error.mean,
        online_seconds: ev.online_seconds,
    };
    let rows = vec![row.record()];
    let out = env
        .layout
        .results_dir(cfg.problem)
        .join(format!("eval-{split}-n{n}-d{d}-{}-on{eval_n}.csv", kind.name()));
    write_csv(&out, &experiments::EVAL_HEADER, &rows)?;
    print_table(&experiments::EVAL_HEADER, &rows);
    Ok(true)
}

fn cmd_sweep(env: &Env, axis: AxisArg) -> Result<bool> {
    let cfg = &env.cfg;
    let axis = match axis {
        AxisArg::Resolution => Axis::Resolution,
        AxisArg::Dimension => Axis::Dimension,
        AxisArg::Samples => Axis::Samples,
    };
    let (train, test) = experiments::datasets(cfg, Some(&env.layout), &env.pool)?;
    let rows = experiments::sweep(cfg, axis, &train, &test, &env.pool);
    let records: Vec<Vec<String>> = rows.iter().map(|r| r.record(cfg.problem.name())).collect();
    let dir = env.layout.results_dir(cfg.problem);
    write_csv(&dir.join(format!("sweep-{}.csv", axis.name())), &experiments::SWEEP_HEADER, &records)?;
    let svg = experiments::sweep_svg(cfg.problem.name(), axis, &rows);
    let svg_path = dir.join(format!("sweep-{}.svg", axis.name()));
    std::fs::write(&svg_path, svg).map_err(|source| HarnessError::Io { path: svg_path, source })?;
    print_table(&experiments::SWEEP_HEADER, &records);
    Ok(rows.iter().all(|r| r.result.is_ok()))
}

fn cmd_transfer(env: &Env) -> Result<bool> {
    let cfg = &env.cfg;
    let (train, test) = experiments::datasets(cfg, Some(&env.layout), &env.pool)?;
    let rows: Vec<Vec<String>> = experiments::transfer(cfg, &train, &test)?.iter().map(|r| r.record()).collect();
    write_csv(&env.layout.results_dir(cfg.problem).join("transfer.csv"), &experiments::TRANSFER_HEADER, &rows)?;
    print_table(&experiments::TRANSFER_HEADER, &rows);
    Ok(true)
}

fn cmd_baseline_rb(env: &Env) -> Result<bool> {
    let cfg = &env.cfg;
    let (train, test) = experiments::datasets(cfg, Some(&env.layout), &env.pool)?;
    let rows = experiments::baseline_rb(cfg, &train, &test)?;
    let records: Vec<Vec<String>> = rows.iter().map(|r| r.record()).collect();
    write_csv(&env.layout.results_dir(cfg.problem).join("baseline-rb.csv"), &experiments::RB_HEADER, &records)?;
    print_table(&experiments::RB_HEADER, &records);
    Ok(rows.iter().all(|r| r.result.is_ok()))
}

fn cmd_baseline_taylor(env: &Env) -> Result<bool> {
    let cfg = &env.cfg;
    let (train, test) = experiments::datasets(cfg, Some(&env.layout), &env.pool)?;
    let dir = env.layout.results_dir(cfg.problem);
    let rows: Vec<Vec<String>> = protocols::run_chkifa_comparison(cfg, &train, &test)?
        .iter()
        .map(|r| r.record())
        .collect();
    write_csv(&dir.join("taylor-comparison.csv"), &protocols::COMPARISON_HEADER, &rows)?;
    print_table(&protocols::COMPARISON_HEADER, &rows);
    let (decay, summary) = protocols::run_taylor_decay(cfg, &test)?;
    let rows: Vec<Vec<String>> = decay.iter().map(|r| r.record()).collect();
    write_csv(&dir.join("taylor-decay.csv"), &protocols::DECAY_HEADER, &rows)?;
    write_csv(&dir.join("taylor-decay-summary.csv"), &protocols::DECAY_SUMMARY_HEADER, &summary.records())?;
    print_table(&protocols::DECAY_HEADER, &rows);
    println!(
        "[{}] tail slope {:.3}, error slope {:.3}, predicted {:.3} ± {}",
        if summary.pass { "PASS" } else { "FAIL" },
        summary.tail_slope,
        summary.error_slope,
        summary.target_slope,
        protocols::SLOPE_TOLERANCE
    );
    Ok(true)
}

fn cmd_timing(env: &Env) -> Result<bool> {
    let cfg = &env.cfg;
    let (train, test) = experiments::datasets(cfg, Some(&env.layout), &env.pool)?;
    let single = thread_pool(1)?;
    let rows = single.install(|| protocols::run_rb_timing(cfg, &train, &test))?;
    let records: Vec<Vec<String>> = rows.iter().map(|r| r.record()).collect();
    write_csv(&env.layout.results_dir(cfg.problem).join("timing.csv"), &protocols::TIMING_HEADER, &records)?;
    print_table(&protocols::TIMING_HEADER, &records);
    if let Some(s) = protocols::TimingSummary::from_rows(&rows) {
        println!(
            "rb online growth {:.2} over d ratio {:.2} (superlinear: {}); linear fastest at every d: {}",
            s.rb_growth, s.d_ratio, s.rb_superlinear, s.linear_fastest
        );
    }
    Ok(true)
}

fn theory_reports(a: &TheoryArgs, check: Check) -> Result<Vec<TheoryReport>> {
    let mut out = Vec::new();
    match check {
        Check::Fan => {
            let dims = a.d.map_or(vec![1, 2, 3], |d| vec![d]);
            let trials = a.trials.unwrap_or(10_000);
            for m in 0..a.matrices {
                for &d in &dims {
                    out.push(theory::check_fan(a.dim, d, trials, derive_seed(a.seed, m as u64))?);
                }
            }
        }
        Check::McRate => {
            let spec = MeasureSpec::mu_g(a.cutoff);
            let n_list = [64, 128, 256, 512, 1024];
            out.push(theory::check_mc_covariance_rate(&spec, &n_list, a.trials.unwrap_or(200), a.seed)?);
        }
        Check::Chebyshev => {
            let spec = MeasureSpec::mu_g(a.resolution - 1);
            for delta in [0.1, 0.5] {
                out.push(theory::check_chebyshev_coverage(
                    &spec,
                    a.resolution,
                    a.d.unwrap_or(10),
                    delta,
                    256,
                    a.trials.unwrap_or(1000),
                    a.seed,
                )?);
            }
        }
        Check::Lipschitz => {
            let spec = MeasureSpec::mu_g(a.resolution - 1);
            let data: Vec<_> = (0..64)
                .map(|i| spec.sample(a.resolution, derive_seed(a.seed, i)))
                .collect::<pcanet_core::Result<_>>()?;
            let pca = PcaModel::fit(&data, a.d.unwrap_or(10), InnerProduct::Weighted)?;
            out.push(theory::check_encoder_lipschitz(&pca, a.trials.unwrap_or(1000), derive_seed(a.seed, 1 << 32))?);
        }
        Check::All => {
            for c in [Check::Fan, Check::McRate, Check::Chebyshev, Check::Lipschitz] {
                out.extend(theory_reports(a, c)?);
            }
        }
    }
    Ok(out)
}

fn cmd_theory(layout: &Layout, a: &TheoryArgs) -> Result<bool> {
    let reports = theory_reports(a, a.check)?;
    let name = a.check.to_possible_value().expect("no skipped variants").get_name().to_string();
    let rows: Vec<Vec<String>> = reports.iter().flat_map(|r| r.csv_rows()).map(|r| r.to_vec()).collect();
    write_csv(&layout.theory_dir().join(format!("{name}.csv")), &TheoryReport::CSV_HEADER, &rows)?;
    for r in &reports {
        println!("{r}");
    }
    Ok(reports.iter().all(|r| r.pass))
}

fn run(cli: &Cli) -> Result<bool> {
    if let Command::Theory(a) = &cli.command {
        return cmd_theory(&Layout::resolve(cli.output.as_deref()), a);
    }
    let env = load_env(cli)?;
    match &cli.command {
        Command::Generate => cmd_generate(&env),
        Command::Fit(a) => cmd_fit(&env, a),
        Command::Eval(a) => cmd_eval(&env, a),
        Command::Sweep { axis } => cmd_sweep(&env, *axis),
        Command::Transfer => cmd_transfer(&env),
        Command::BaselineRb => cmd_baseline_rb(&env),
        Command::BaselineTaylor => cmd_baseline_taylor(&env),
        Command::Timing => cmd_timing(&env),
        Command::Theory(_) => unreachable!("handled above"),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("some cells or checks failed");
            ExitCode::from(1)
        }
        Err(e @ (HarnessError::Usage(_) | HarnessError::Core(pcanet_core::Error::Config(_)))) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
