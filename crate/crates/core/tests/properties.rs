use approx::assert_relative_eq;
use proptest::prelude::*;

use pcanet_core::fields::MeasureSpec;
use pcanet_core::pca::PcaModel;
use pcanet_core::rng::derive_seed;
use pcanet_core::solvers::{solve_burgers, solve_darcy, BurgersProblem, EllipticProblem};
use pcanet_core::{Domain, GridFunction, InnerProduct};

fn sample(spec: &MeasureSpec, n: usize, count: usize, seed: u64) -> Vec<GridFunction> {
    (0..count).map(|i| spec.sample(n, derive_seed(seed, i as u64)).unwrap()).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    // Refining with splines and sub-sampling back returns the original nodes.
    #[test]
    fn refine_then_restrict_is_identity(seed in any::<u64>(), torus in any::<bool>()) {
        let (spec, n, fine) = if torus {
            (MeasureSpec::mu_b(7), 16, 64)
        } else {
            (MeasureSpec::mu_g(8), 9, 33)
        };
        let u = spec.sample(n, seed).unwrap();
        let back = u.resample(fine).unwrap().resample(n).unwrap();
        let gap = back.sub(&u).unwrap().max_abs();
        prop_assert!(gap <= 1e-12 * u.max_abs().max(1.0), "gap {}", gap);
    }

    #[test]
    fn darcy_is_linear_in_the_forcing(seed in any::<u64>(), alpha in -3.0..3.0f64, beta in -3.0..3.0f64) {
        let n = 17;
        let a = MeasureSpec::mu_l(16).sample(n, derive_seed(seed, 0)).unwrap();
        let f = MeasureSpec::mu_g(16).sample(n, derive_seed(seed, 1)).unwrap();
        let g = MeasureSpec::mu_g(16).sample(n, derive_seed(seed, 2)).unwrap();
        let solve = |rhs: &GridFunction| solve_darcy(&EllipticProblem::new(a.clone(), rhs.clone())).unwrap();
        let combined = solve(&f.scaled(alpha).add_scaled(beta, &g).unwrap());
        let separate = solve(&f).scaled(alpha).add_scaled(beta, &solve(&g)).unwrap();
        let scale = combined.max_abs().max(separate.max_abs()).max(1e-12);
        prop_assert!(combined.sub(&separate).unwrap().max_abs() <= 1e-7 * scale);
    }

    #[test]
    fn projection_is_idempotent_and_contractive(seed in any::<u64>(), d in 1usize..12) {
        let data = sample(&MeasureSpec::mu_p(16), 17, 24, seed);
        let pca = PcaModel::fit(&data, d, InnerProduct::Weighted).unwrap();
        let probe = MeasureSpec::mu_g(16).sample(17, derive_seed(seed, 99)).unwrap();
        let p = pca.project(&probe).unwrap();
        let pp = pca.project(&p).unwrap();
        prop_assert!(pp.sub(&p).unwrap().norm() <= 1e-10 * probe.norm().max(1.0));
        prop_assert!(p.norm() <= probe.norm() * (1.0 + 1e-12));
    }
}

#[test]
fn pca_is_not_centered() {
    // Every sample is a multiple of one function, so a single mode carries
    // the whole second moment, including the mean.
    let u = GridFunction::from_fn_box(17, |x, y| 1.0 + x * y).unwrap();
    let data: Vec<GridFunction> = [1.0, 2.0, 3.0].iter().map(|&c| u.scaled(c)).collect();
    let pca = PcaModel::fit(&data, 1, InnerProduct::Weighted).unwrap();
    let second_moment = (1.0 + 4.0 + 9.0) / 3.0 * u.norm().powi(2);
    assert_relative_eq!(pca.eigenvalues()[0], second_moment, max_relative = 1e-12);
    assert!(pca.empirical_projection_error(&data).unwrap() <= 1e-12 * second_moment);
}

#[test]
fn burgers_conserves_the_mean() {
    let u0 = GridFunction::from_fn_torus(128, |s| 0.3 + (2.0 * std::f64::consts::PI * s).sin()).unwrap();
    let u = solve_burgers(&BurgersProblem::new(u0.clone(), 0.02, 0.5)).unwrap();
    assert_eq!(u.domain(), Domain::Torus1d);
    assert_relative_eq!(u.mean(), u0.mean(), max_relative = 1e-12);
    assert!(u.max_abs() < u0.max_abs());
}
