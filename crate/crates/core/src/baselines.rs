//! Intrusive reference methods: reduced-basis Galerkin projection for the
//! elliptic problem and truncated Taylor expansion for the Poisson model with
//! affine forcing.

use nalgebra::{DMatrix, DVector};

use crate::error::{shape, Error, Result};
use crate::fields::CoeffModel;
use crate::grid::{quadrature_weights, Domain, GridFunction};
use crate::pca::PcaModel;
use crate::solvers::{face_coefficients, solve_poisson};

/// Discrete gradient used in the reduced stiffness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GradientScheme {
    /// Differences across grid faces weighted by harmonic-mean coefficients;
    /// the energy form of the finite-difference solver itself.
    #[default]
    Staggered,
    /// Nodal centered differences, one-sided on the boundary, trapezoid weights.
    Centered,
}

impl GradientScheme {
    pub fn name(self) -> &'static str {
        match self {
            Self::Staggered => "staggered",
            Self::Centered => "centered",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "staggered" => Some(Self::Staggered),
            "centered" => Some(Self::Centered),
            _ => None,
        }
    }
}

/// Galerkin projection of `-∇·(a∇u) = f` onto a PCA output basis.
#[derive(Debug, Clone)]
pub struct ReducedBasis {
    pca: PcaModel,
    scheme: GradientScheme,
    // Discrete gradients of the basis functions, one row per face or
    // per (node, direction).
    grads: DMatrix<f64>,
    weights: Vec<f64>,
}

impl ReducedBasis {
    /// Offline stage: differentiates the basis once.
    pub fn new(pca: PcaModel, scheme: GradientScheme) -> Result<Self> {
        if pca.domain() != Domain::Box2d {
            return Err(shape("reduced basis needs a box2d basis"));
        }
        let n = pca.resolution();
        let d = pca.dim();
        let phi = pca.basis_matrix();
        let grads = match scheme {
            GradientScheme::Staggered => {
                let faces = 2 * n * (n - 1);
                let mut g = DMatrix::zeros(faces, d);
                for c in 0..d {
                    let col = phi.column(c);
                    let mut r = 0;
                    for i in 0..n {
                        for j in 0..n - 1 {
                            g[(r, c)] = col[i * n + j + 1] - col[i * n + j];
                            r += 1;
                        }
                    }
                    for i in 0..n - 1 {
                        for j in 0..n {
                            g[(r, c)] = col[(i + 1) * n + j] - col[i * n + j];
                            r += 1;
                        }
                    }
                }
                g
            }
            GradientScheme::Centered => {
                let h = 1.0 / (n - 1) as f64;
                let points = n * n;
                let mut g = DMatrix::zeros(2 * points, d);
                let diff = |v: &dyn Fn(usize) -> f64, k: usize| -> f64 {
                    if k == 0 {
                        (v(1) - v(0)) / h
                    } else if k == n - 1 {
                        (v(n - 1) - v(n - 2)) / h
                    } else {
                        (v(k + 1) - v(k - 1)) / (2.0 * h)
                    }
                };
                for c in 0..d {
                    let col = phi.column(c);
                    for i in 0..n {
                        for j in 0..n {
                            g[(i * n + j, c)] = diff(&|t| col[i * n + t], j);
                            g[(points + i * n + j, c)] = diff(&|t| col[t * n + j], i);
                        }
                    }
                }
                g
            }
        };
        Ok(Self {
            weights: quadrature_weights(Domain::Box2d, n),
            pca,
            scheme,
            grads,
        })
    }

    pub fn dim(&self) -> usize {
        self.pca.dim()
    }

    pub fn scheme(&self) -> GradientScheme {
        self.scheme
    }

    pub fn basis(&self) -> &PcaModel {
        &self.pca
    }

    /// Reduced stiffness `A_ij = ⟨a∇φ_i, ∇φ_j⟩` for one coefficient.
    pub fn stiffness(&self, a: &GridFunction) -> Result<DMatrix<f64>> {
        if a.domain() != Domain::Box2d || a.resolution() != self.pca.resolution() {
            return Err(shape("coefficient is not on the basis grid"));
        }
        if let Some(v) = a.values().iter().find(|v| !(**v > 0.0)) {
            return Err(Error::Domain(format!("coefficient must be positive, found {v}")));
        }
        let c: Vec<f64> = match self.scheme {
            GradientScheme::Staggered => face_coefficients(a),
            GradientScheme::Centered => {
                let wa: Vec<f64> = self.weights.iter().zip(a.values()).map(|(w, a)| w * a).collect();
                wa.iter().chain(wa.iter()).copied().collect()
            }
        };
        let mut scaled = self.grads.clone();
        for (mut row, ci) in scaled.row_iter_mut().zip(&c) {
            row *= *ci;
        }
        Ok(self.grads.tr_mul(&scaled))
    }

    /// Load `b_i = ⟨f, φ_i⟩` in the trapezoid inner product.
    pub fn load(&self, f: &GridFunction) -> Result<DVector<f64>> {
        if f.domain() != Domain::Box2d || f.resolution() != self.pca.resolution() {
            return Err(shape("forcing is not on the basis grid"));
        }
        let wf = DVector::from_iterator(
            f.values().len(),
            self.weights.iter().zip(f.values()).map(|(w, v)| w * v),
        );
        Ok(self.pca.basis_matrix().tr_mul(&wf))
    }

    /// Online stage: assemble, solve the dense `d×d` system, expand.
    pub fn solve(&self, a: &GridFunction, f: &GridFunction) -> Result<GridFunction> {
        let stiff = self.stiffness(a)?;
        let b = self.load(f)?;
        let coeffs = match stiff.clone().cholesky() {
            Some(ch) => ch.solve(&b),
            None => stiff
                .lu()
                .solve(&b)
                .ok_or_else(|| Error::Numerical("singular reduced stiffness matrix".into()))?,
        };
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::Numerical("non-finite reduced solution".into()));
        }
        self.pca.decode(coeffs.as_slice())
    }
}

/// Galerkin solve on the span of `pca_out` with the default gradient scheme.
pub fn rb_galerkin_solve(pca_out: &PcaModel, a: &GridFunction, f: &GridFunction) -> Result<GridFunction> {
    ReducedBasis::new(pca_out.clone(), GradientScheme::default())?.solve(a, f)
}

/// `Σ_{j<K} ξ_j η_j` with `-Δη_j = φ_j` precomputed by `K` Poisson solves.
#[derive(Debug, Clone)]
pub struct TaylorTruncation {
    n: usize,
    etas: DMatrix<f64>,
}

impl TaylorTruncation {
    pub fn new(model: &CoeffModel, k: usize, n: usize) -> Result<Self> {
        if k == 0 || k > model.len() {
            return Err(Error::Config(format!(
                "truncation order must be in 1..={}, got {k}",
                model.len()
            )));
        }
        let sols = (0..k)
            .map(|j| solve_poisson(&model.basis_function(j, n)?))
            .collect::<Result<Vec<_>>>()?;
        Self::from_solutions(&sols)
    }

    /// Builds the predictor from already computed `η_j`.
    pub fn from_solutions(etas: &[GridFunction]) -> Result<Self> {
        let first = etas
            .first()
            .ok_or_else(|| Error::Config("empty truncation".into()))?;
        if etas.iter().any(|e| !e.same_grid(first)) {
            return Err(shape("solutions live on different grids"));
        }
        let mut m = DMatrix::zeros(first.values().len(), etas.len());
        for (j, e) in etas.iter().enumerate() {
            m.column_mut(j).copy_from_slice(e.values());
        }
        Ok(Self {
            n: first.resolution(),
            etas: m,
        })
    }

    pub fn order(&self) -> usize {
        self.etas.ncols()
    }

    pub fn resolution(&self) -> usize {
        self.n
    }

    /// Coefficients past the truncation order are ignored; missing ones are zero.
    pub fn predict(&self, xi: &[f64]) -> Result<GridFunction> {
        let k = self.order().min(xi.len());
        let v = self.etas.columns(0, k) * DVector::from_column_slice(&xi[..k]);
        GridFunction::new(Domain::Box2d, self.n, v.as_slice().to_vec())
    }
}

/// `max_s Σ_{k≤j<m} |φ_j(s)|` on the grid: the worst case over `|ξ_j| ≤ 1` of
/// the forcing discarded by truncating at `k` out of `m` modes.
pub fn worst_case_tail(model: &CoeffModel, k: usize, m: usize, n: usize) -> Result<f64> {
    if k > m || m > model.len() {
        return Err(Error::Config(format!("need k ≤ m ≤ {}, got {k}, {m}", model.len())));
    }
    let mut acc = vec![0.0; n * n];
    for j in k..m {
        for (a, v) in acc.iter_mut().zip(model.basis_function(j, n)?.values()) {
            *a += v.abs();
        }
    }
    Ok(acc.into_iter().fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::MeasureSpec;
    use crate::grid::InnerProduct;
    use crate::rng::derive_seed;
    use crate::solvers::{solve_darcy, EllipticProblem};

    fn darcy_pairs(count: usize, n: usize) -> Vec<(GridFunction, GridFunction)> {
        let spec = MeasureSpec::mu_l(6);
        let f = GridFunction::constant(Domain::Box2d, n, 1.0);
        (0..count)
            .map(|i| {
                let a = spec.sample(n, derive_seed(11, i as u64)).unwrap();
                let u = solve_darcy(&EllipticProblem::new(a.clone(), f.clone())).unwrap();
                (a, u)
            })
            .collect()
    }

    #[test]
    fn recovers_solution_in_span() {
        let pairs = darcy_pairs(1, 33);
        let (a, u) = &pairs[0];
        let f = GridFunction::constant(Domain::Box2d, 33, 1.0);
        let pca = PcaModel::fit(std::slice::from_ref(u), 1, InnerProduct::Weighted).unwrap();
        for scheme in [GradientScheme::Staggered, GradientScheme::Centered] {
            let rb = ReducedBasis::new(pca.clone(), scheme).unwrap();
            let got = rb.solve(a, &f).unwrap();
            let rel = got.sub(u).unwrap().norm() / u.norm();
            assert!(rel < 1e-2, "{}: {rel}", scheme.name());
        }
        // The staggered form is the solver's own energy, so it is exact up to CG.
        let got = rb_galerkin_solve(&pca, a, &f).unwrap();
        assert!(got.sub(u).unwrap().norm() < 1e-8 * u.norm());
    }

    #[test]
    fn zero_forcing_gives_zero() {
        let pairs = darcy_pairs(6, 17);
        let us: Vec<_> = pairs.iter().map(|p| p.1.clone()).collect();
        let pca = PcaModel::fit(&us, 4, InnerProduct::Weighted).unwrap();
        let zero = GridFunction::zeros(Domain::Box2d, 17);
        let got = rb_galerkin_solve(&pca, &pairs[0].0, &zero).unwrap();
        assert_eq!(got.max_abs(), 0.0);
    }

    #[test]
    fn stiffness_is_symmetric_positive_definite() {
        let pairs = darcy_pairs(8, 17);
        let us: Vec<_> = pairs.iter().map(|p| p.1.clone()).collect();
        let pca = PcaModel::fit(&us, 8, InnerProduct::Weighted).unwrap();
        for scheme in [GradientScheme::Staggered, GradientScheme::Centered] {
            let a = ReducedBasis::new(pca.clone(), scheme).unwrap().stiffness(&pairs[3].0).unwrap();
            assert!((&a - a.transpose()).amax() < 1e-12 * a.amax());
            assert!(a.symmetric_eigenvalues().min() > 0.0);
        }
    }

    #[test]
    fn full_training_span_reproduces_training_samples() {
        let pairs = darcy_pairs(10, 17);
        let us: Vec<_> = pairs.iter().map(|p| p.1.clone()).collect();
        let pca = PcaModel::fit(&us, 10, InnerProduct::Weighted).unwrap();
        let rb = ReducedBasis::new(pca, GradientScheme::Staggered).unwrap();
        let f = GridFunction::constant(Domain::Box2d, 17, 1.0);
        for (a, u) in &pairs {
            let got = rb.solve(a, &f).unwrap();
            assert!(got.sub(u).unwrap().norm() < 1e-7 * u.norm());
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let pairs = darcy_pairs(2, 9);
        let us: Vec<_> = pairs.iter().map(|p| p.1.clone()).collect();
        let pca = PcaModel::fit(&us, 2, InnerProduct::Weighted).unwrap();
        let f = GridFunction::constant(Domain::Box2d, 9, 1.0);
        let neg = pairs[0].0.scaled(-1.0);
        assert!(matches!(rb_galerkin_solve(&pca, &neg, &f), Err(Error::Domain(_))));
        let coarse = GridFunction::constant(Domain::Box2d, 5, 1.0);
        assert!(matches!(rb_galerkin_solve(&pca, &coarse, &coarse), Err(Error::Shape(_))));
    }

    #[test]
    fn taylor_full_order_is_exact() {
        let model = CoeffModel::new(MeasureSpec::coeff_model(4)).unwrap();
        let k = model.len();
        let t = TaylorTruncation::new(&model, k, 17).unwrap();
        let (xi, f) = model.sample(k, 17, 3).unwrap();
        let u = solve_poisson(&f).unwrap();
        let rel = t.predict(&xi).unwrap().sub(&u).unwrap().norm() / u.norm();
        assert!(rel < 1e-6, "{rel}");
    }

    #[test]
    fn taylor_ignores_tail_and_zero_head_gives_zero() {
        let model = CoeffModel::new(MeasureSpec::coeff_model(4)).unwrap();
        let t = TaylorTruncation::new(&model, 5, 17).unwrap();
        let mut xi = vec![0.0; model.len()];
        for v in xi.iter_mut().skip(5) {
            *v = 0.5;
        }
        let pred = t.predict(&xi).unwrap();
        assert_eq!(pred.max_abs(), 0.0);
        // Error then equals the norm of the tail solution.
        let u = solve_poisson(&model.assemble(&xi, 17).unwrap()).unwrap();
        assert_eq!(pred.sub(&u).unwrap().norm(), u.norm());
        assert!(TaylorTruncation::new(&model, model.len() + 1, 17).is_err());
    }

    #[test]
    fn worst_case_tail_matches_sup_norm_sum() {
        // Every cosine mode peaks at the corner, so the tail sum is attained there.
        let model = CoeffModel::new(MeasureSpec::coeff_model(6)).unwrap();
        let m = model.len();
        let mut prev = f64::INFINITY;
        for k in [0, 3, 10, 30] {
            let tail = worst_case_tail(&model, k, m, 13).unwrap();
            let oracle: f64 = (k..m).map(|j| model.sup_norm(j)).sum();
            assert!((tail - oracle).abs() < 1e-12 * oracle, "{tail} vs {oracle}");
            assert!(tail < prev);
            prev = tail;
        }
    }
}
