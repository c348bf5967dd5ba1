use pcanet_harness::config::{ExperimentConfig, RegressorKind};
use pcanet_harness::dataset::{thread_pool, Dataset};
use pcanet_harness::experiments::{self, evaluate, fit_surrogate};
use pcanet_harness::protocols::{run_rb_timing, TimingSummary};

fn config(text: &str) -> ExperimentConfig {
    let c = ExperimentConfig::parse(text).unwrap();
    c.validate().unwrap();
    c
}

fn data(cfg: &ExperimentConfig) -> (Dataset, Dataset) {
    experiments::datasets(cfg, None, &thread_pool(1).unwrap()).unwrap()
}

#[test]
fn piecewise_inputs_take_two_values() {
    let cfg = config("problem = darcy_piecewise\nresolutions = 17, 33\nn_train = 8\nn_test = 4\ndims = 4\nsample_counts = 8");
    let (train, test) = data(&cfg);
    for ds in [&train, &test, &train.subsample(17).unwrap()] {
        assert!(ds.x.iter().flat_map(|x| x.values()).all(|&v| v == 3.0 || v == 12.0));
    }
}

fn rb_rows(problem: &str) -> Vec<experiments::MethodRow> {
    let cfg = config(&format!(
        "problem = {problem}\nresolutions = 33\nn_train = 256\nn_test = 40\ndims = 30\nsample_counts = 256\n\
         regressors = nn\nhidden = 64, 64\nepochs = 500"
    ));
    let (train, test) = data(&cfg);
    experiments::baseline_rb(&cfg, &train, &test).unwrap()
}

fn error_of(rows: &[experiments::MethodRow], method: &str) -> Option<f64> {
    rows.iter().find(|r| r.method == method).and_then(|r| r.error())
}

fn within_factor_two(a: f64, b: f64) -> bool {
    a <= 2.0 * b && b <= 2.0 * a
}

#[test]
fn reduced_basis_is_close_to_the_pca_ceiling() {
    let rows = rb_rows("darcy_lognormal");
    let (rb, ceiling) = (error_of(&rows, "rb").unwrap(), error_of(&rows, "psi_pca").unwrap());
    assert!(within_factor_two(rb, ceiling), "rb {rb}, psi_pca {ceiling}");
}

#[test]
fn reduced_basis_on_piecewise_coefficients() {
    let rows = rb_rows("darcy_piecewise");
    // Projecting a two-valued coefficient onto smooth modes leaves the
    // positive cone, so the ceiling is reported as a failed cell.
    let ceiling = rows.iter().find(|r| r.method == "psi_pca").unwrap();
    assert!(ceiling.result.as_ref().is_err_and(|e| e.contains("positive")), "{ceiling:?}");
    let rb = error_of(&rows, "rb").unwrap();
    let floor = error_of(&rows, "output_pca").unwrap();
    let nn = error_of(&rows, "nn").unwrap();
    assert!(within_factor_two(rb, floor), "rb {rb}, output_pca {floor}");
    assert!(within_factor_two(rb, nn), "rb {rb}, nn {nn}");
}

#[test]
fn reduced_basis_online_cost_grows_superlinearly() {
    let cfg = config(
        "problem = darcy_lognormal\nresolutions = 33\nn_train = 96\nn_test = 12\ndims = 8, 64\nsample_counts = 96\n\
         regressors = linear",
    );
    let (train, test) = data(&cfg);
    let rows = run_rb_timing(&cfg, &train, &test).unwrap();
    assert_eq!(rows.len(), 4);
    assert!(rows.iter().all(|r| r.points == 33 * 33));
    let s = TimingSummary::from_rows(&rows).unwrap();
    assert!(s.rb_superlinear, "rb online time grew {:.2}x for an 8x larger d", s.rb_growth);
}

#[test]
fn refit_is_deterministic() {
    let cfg = config(
        "problem = darcy_lognormal\nresolutions = 17\nn_train = 48\nn_test = 16\ndims = 6\nsample_counts = 48\n\
         hidden = 16, 16\nepochs = 40\nbatch_size = 16",
    );
    let (train, test) = data(&cfg);
    let errors: Vec<f64> = (0..2)
        .map(|_| {
            let fit = fit_surrogate(&cfg, &train, 6, RegressorKind::Nn, None).unwrap();
            evaluate(&fit.surrogate, &test, false).unwrap().error.mean
        })
        .collect();
    assert!((errors[0] - errors[1]).abs() <= 1e-12, "{errors:?}");
}

#[test]
fn full_rank_linear_problem_is_recovered_on_the_training_set() {
    let cfg = config("problem = linear_elliptic\nresolutions = 17\nn_train = 32\nn_test = 4\ndims = 32\nsample_counts = 32");
    let (train, _) = data(&cfg);
    let fit = fit_surrogate(&cfg, &train, 32, RegressorKind::Linear, None).unwrap();
    let err = evaluate(&fit.surrogate, &train, false).unwrap().error.mean;
    assert!(err < 1e-6, "training error {err:e}");
}
