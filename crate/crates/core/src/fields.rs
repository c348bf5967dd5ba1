//! Samplers for the input measures.
//!
//! Every measure is a truncated Karhunen–Loève expansion in a closed-form
//! Laplacian eigenbasis. On the unit square the basis is the orthonormal
//! Neumann cosine family `ψ_k(s) = c_{k₁}(s₁) c_{k₂}(s₂)` with `c_0 = 1`,
//! `c_k = √2 cos(πks)`, and `-Δψ_k = π²|k|² ψ_k`. On the torus it is the
//! Fourier family with `-d²/ds² e_k = (2πk)² e_k`.
//!
//! For an operator `scale · (-Δ + shift·I)^{-exponent}` the mode standard
//! deviation is `√scale · (eig + shift)^{-exponent/2}`.
//!
//! Sampling is deterministic in `(spec, n, seed)`: the standard normal or
//! uniform coefficients are drawn in a fixed mode order from a ChaCha stream
//! seeded by `seed`, independently of `n`, so a field sampled on a fine grid
//! and then sub-sampled agrees with the same field sampled on the coarse grid.

use std::f64::consts::{PI, SQRT_2};

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{StandardNormal, Uniform};
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::grid::{Domain, GridFunction};
use crate::rng::rng_from_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MeasureKind {
    /// Gaussian `N(0, (-Δ + 9I)^{-2})` with Neumann boundary on the square.
    MuG,
    /// `exp` push-forward of [`MeasureKind::MuG`].
    MuL,
    /// Piecewise-constant push-forward of [`MeasureKind::MuG`].
    MuP,
    /// Gaussian `N(0, 7⁴(-d²/ds² + 7²I)^{-2.5})` on the torus.
    MuB,
    /// `Σ ξ_j √λ_j ψ_j`, `ξ_j ~ U(-1, 1)`, eigenpairs of `(-Δ + 100I)^{-4.1}`.
    CoeffModel,
}

impl MeasureKind {
    pub fn name(self) -> &'static str {
        match self {
            MeasureKind::MuG => "mu_G",
            MeasureKind::MuL => "mu_L",
            MeasureKind::MuP => "mu_P",
            MeasureKind::MuB => "mu_B",
            MeasureKind::CoeffModel => "coeff_model",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [
            MeasureKind::MuG,
            MeasureKind::MuL,
            MeasureKind::MuP,
            MeasureKind::MuB,
            MeasureKind::CoeffModel,
        ]
        .into_iter()
        .find(|k| k.name() == s)
    }

    pub fn domain(self) -> Domain {
        match self {
            MeasureKind::MuB => Domain::Torus1d,
            _ => Domain::Box2d,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasureSpec {
    pub kind: MeasureKind,
    pub shift: f64,
    pub exponent: f64,
    pub scale: f64,
    /// Values taken by the piecewise-constant map for `v ≥ 0` and `v < 0`.
    pub thresholds: (f64, f64),
    /// Maximum wavenumber per axis.
    pub cutoff: usize,
}

impl MeasureSpec {
    fn gaussian_box(kind: MeasureKind, cutoff: usize) -> Self {
        Self {
            kind,
            shift: 9.0,
            exponent: 2.0,
            scale: 1.0,
            thresholds: (12.0, 3.0),
            cutoff,
        }
    }

    pub fn mu_g(cutoff: usize) -> Self {
        Self::gaussian_box(MeasureKind::MuG, cutoff)
    }

    pub fn mu_l(cutoff: usize) -> Self {
        Self::gaussian_box(MeasureKind::MuL, cutoff)
    }

    pub fn mu_p(cutoff: usize) -> Self {
        Self::gaussian_box(MeasureKind::MuP, cutoff)
    }

    pub fn mu_b(cutoff: usize) -> Self {
        Self {
            kind: MeasureKind::MuB,
            shift: 49.0,
            exponent: 2.5,
            scale: 7f64.powi(4),
            thresholds: (12.0, 3.0),
            cutoff,
        }
    }

    pub fn coeff_model(cutoff: usize) -> Self {
        Self {
            kind: MeasureKind::CoeffModel,
            shift: 100.0,
            exponent: 4.1,
            scale: 1.0,
            thresholds: (12.0, 3.0),
            cutoff,
        }
    }

    /// Default parameters for `kind` with the given cutoff.
    pub fn for_kind(kind: MeasureKind, cutoff: usize) -> Self {
        match kind {
            MeasureKind::MuG => Self::mu_g(cutoff),
            MeasureKind::MuL => Self::mu_l(cutoff),
            MeasureKind::MuP => Self::mu_p(cutoff),
            MeasureKind::MuB => Self::mu_b(cutoff),
            MeasureKind::CoeffModel => Self::coeff_model(cutoff),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.exponent > 1.0) {
            return Err(Error::Config(format!(
                "exponent must exceed 1, got {}",
                self.exponent
            )));
        }
        if !(self.shift > 0.0) || !(self.scale > 0.0) {
            return Err(Error::Config("shift and scale must be positive".into()));
        }
        Ok(())
    }

    fn check_grid(&self, n: usize) -> Result<()> {
        self.validate()?;
        let domain = self.kind.domain();
        domain.check_resolution(n)?;
        let nyq = domain.nyquist(n);
        if self.cutoff > nyq {
            return Err(Error::Config(format!(
                "mode cutoff {} exceeds the Nyquist limit {nyq} of a {} grid with n = {n}",
                self.cutoff,
                domain.name()
            )));
        }
        Ok(())
    }

    /// Standard deviation of a mode whose Laplacian eigenvalue is `eig`.
    pub fn mode_std(&self, eig: f64) -> f64 {
        self.scale.sqrt() * (eig + self.shift).powf(-0.5 * self.exponent)
    }

    /// Standard deviation of the square-domain mode `(k₁, k₂)`.
    pub fn box_mode_std(&self, k1: usize, k2: usize) -> f64 {
        self.mode_std(PI * PI * (k1 * k1 + k2 * k2) as f64)
    }

    /// Standard deviation of the torus mode `k` (and of `-k`).
    pub fn torus_mode_std(&self, k: usize) -> f64 {
        let w = 2.0 * PI * k as f64;
        self.mode_std(w * w)
    }

    /// Variances of the truncated expansion in its own orthonormal basis.
    pub fn kl_variances(&self) -> Vec<f64> {
        let k = self.cutoff;
        match self.kind.domain() {
            Domain::Box2d => (0..=k)
                .flat_map(|k1| (0..=k).map(move |k2| (k1, k2)))
                .map(|(k1, k2)| self.box_mode_std(k1, k2).powi(2))
                .collect(),
            Domain::Torus1d => {
                let mut v = vec![self.torus_mode_std(0).powi(2)];
                for j in 1..=k {
                    let s2 = self.torus_mode_std(j).powi(2);
                    v.push(s2);
                    v.push(s2);
                }
                v
            }
        }
    }

    /// Draws a sample of the measure on a grid with `n` nodes per axis.
    pub fn sample(&self, n: usize, seed: u64) -> Result<GridFunction> {
        match self.kind {
            MeasureKind::MuG => sample_gaussian_box(self, n, seed),
            MeasureKind::MuL => sample_mu_l(self, n, seed),
            MeasureKind::MuP => sample_mu_p(self, n, seed),
            MeasureKind::MuB => sample_mu_b(self, n, seed),
            MeasureKind::CoeffModel => {
                let model = CoeffModel::new(*self)?;
                Ok(model.sample(model.len(), n, seed)?.1)
            }
        }
    }
}

/// Values of the 1-D Neumann eigenfunctions: `table[i * (K+1) + k] = c_k(s_i)`.
fn cosine_table(n: usize, cutoff: usize) -> DMatrix<f64> {
    let den = (n - 1) as f64;
    DMatrix::from_fn(n, cutoff + 1, |i, k| {
        if k == 0 {
            1.0
        } else {
            SQRT_2 * (PI * (k * i) as f64 / den).cos()
        }
    })
}

/// Evaluates `Σ_{k₁,k₂} coeff[(k₂, k₁)] ψ_{k₁}(s₁) ψ_{k₂}(s₂)` on the grid.
fn synthesize_box(coeff: &DMatrix<f64>, n: usize) -> Vec<f64> {
    let table = cosine_table(n, coeff.nrows() - 1);
    // values[(i, j)] = Σ table[(i, k₂)] coeff[(k₂, k₁)] table[(j, k₁)]
    let values = &table * coeff * table.transpose();
    let mut out = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            out.push(values[(i, j)]);
        }
    }
    out
}

/// Gaussian field on the square with Neumann cosine KL expansion.
pub fn sample_gaussian_box(spec: &MeasureSpec, n: usize, seed: u64) -> Result<GridFunction> {
    if spec.kind.domain() != Domain::Box2d || spec.kind == MeasureKind::CoeffModel {
        return Err(Error::Config(format!(
            "{} is not a Gaussian measure on the square",
            spec.kind.name()
        )));
    }
    spec.check_grid(n)?;
    let k = spec.cutoff;
    let mut rng = rng_from_seed(seed);
    // Coefficients drawn in (k₁, k₂) lexicographic order.
    let mut coeff = DMatrix::zeros(k + 1, k + 1);
    for k1 in 0..=k {
        for k2 in 0..=k {
            let xi: f64 = rng.sample(StandardNormal);
            coeff[(k2, k1)] = spec.box_mode_std(k1, k2) * xi;
        }
    }
    GridFunction::new(Domain::Box2d, n, synthesize_box(&coeff, n))
}

/// Log-normal field: `exp` of a Gaussian draw.
pub fn sample_mu_l(spec: &MeasureSpec, n: usize, seed: u64) -> Result<GridFunction> {
    sample_gaussian_box(spec, n, seed)?.map(f64::exp)
}

/// Piecewise-constant map: `hi` for `v ≥ 0`, `lo` for `v < 0`.
pub fn threshold_map(v: f64, (hi, lo): (f64, f64)) -> f64 {
    if v >= 0.0 {
        hi
    } else {
        lo
    }
}

/// Two-phase field: threshold of a Gaussian draw.
pub fn sample_mu_p(spec: &MeasureSpec, n: usize, seed: u64) -> Result<GridFunction> {
    let t = spec.thresholds;
    sample_gaussian_box(spec, n, seed)?.map(|v| threshold_map(v, t))
}

/// Periodic Gaussian field; also returns the largest imaginary residue left
/// by the inverse FFT of the conjugate-symmetric coefficients.
pub fn sample_mu_b_with_residue(
    spec: &MeasureSpec,
    n: usize,
    seed: u64,
) -> Result<(GridFunction, f64)> {
    if spec.kind != MeasureKind::MuB {
        return Err(Error::Config(format!(
            "{} is not a torus measure",
            spec.kind.name()
        )));
    }
    spec.check_grid(n)?;
    let mut rng = rng_from_seed(seed);
    let mut spectrum = vec![Complex64::new(0.0, 0.0); n];
    let xi0: f64 = rng.sample(StandardNormal);
    spectrum[0] = Complex64::new(spec.torus_mode_std(0) * xi0, 0.0);
    for k in 1..=spec.cutoff {
        let a: f64 = rng.sample(StandardNormal);
        let b: f64 = rng.sample(StandardNormal);
        let c = Complex64::new(a, -b) * (spec.torus_mode_std(k) / SQRT_2);
        spectrum[k] = c;
        spectrum[n - k] = c.conj();
    }
    FftPlanner::new().plan_fft_inverse(n).process(&mut spectrum);
    let residue = spectrum.iter().fold(0.0f64, |m, z| m.max(z.im.abs()));
    let values = spectrum.iter().map(|z| z.re).collect();
    Ok((GridFunction::new(Domain::Torus1d, n, values)?, residue))
}

pub fn sample_mu_b(spec: &MeasureSpec, n: usize, seed: u64) -> Result<GridFunction> {
    sample_mu_b_with_residue(spec, n, seed).map(|(u, _)| u)
}

/// The coefficient model with modes ordered by decreasing eigenvalue
/// (ties broken by lexicographic wavenumber).
#[derive(Debug, Clone)]
pub struct CoeffModel {
    spec: MeasureSpec,
    modes: Vec<(usize, usize)>,
}

impl CoeffModel {
    pub fn new(spec: MeasureSpec) -> Result<Self> {
        if spec.kind != MeasureKind::CoeffModel {
            return Err(Error::Config(format!(
                "{} is not the coefficient model",
                spec.kind.name()
            )));
        }
        spec.validate()?;
        let k = spec.cutoff;
        let mut modes: Vec<(usize, usize)> = (0..=k)
            .flat_map(|k1| (0..=k).map(move |k2| (k1, k2)))
            .collect();
        // Eigenvalues decrease in |k|², so order by |k|² then wavenumber.
        modes.sort_by_key(|&(a, b)| (a * a + b * b, a, b));
        Ok(Self { spec, modes })
    }

    pub fn spec(&self) -> &MeasureSpec {
        &self.spec
    }

    /// Number of available modes.
    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn modes(&self) -> &[(usize, usize)] {
        &self.modes
    }

    /// `λ_j`, 0-based `j`.
    pub fn eigenvalue(&self, j: usize) -> f64 {
        let (a, b) = self.modes[j];
        self.spec.box_mode_std(a, b).powi(2)
    }

    /// `‖φ_j‖_∞ = √λ_j ‖ψ_j‖_∞`, 0-based `j`.
    pub fn sup_norm(&self, j: usize) -> f64 {
        let (a, b) = self.modes[j];
        let c = |k: usize| if k == 0 { 1.0 } else { SQRT_2 };
        self.eigenvalue(j).sqrt() * c(a) * c(b)
    }

    fn check(&self, d: usize, n: usize) -> Result<()> {
        if d > self.len() {
            return Err(Error::Config(format!(
                "{d} modes requested, only {} available",
                self.len()
            )));
        }
        self.spec.check_grid(n)
    }

    /// `φ_j = √λ_j ψ_j` on the grid, 0-based `j`.
    pub fn basis_function(&self, j: usize, n: usize) -> Result<GridFunction> {
        self.check(j + 1, n)?;
        let mut coeffs = vec![0.0; j + 1];
        coeffs[j] = 1.0;
        self.assemble(&coeffs, n)
    }

    /// `Σ_j coeffs[j] φ_j` on the grid.
    pub fn assemble(&self, coeffs: &[f64], n: usize) -> Result<GridFunction> {
        self.check(coeffs.len(), n)?;
        let k = self.spec.cutoff;
        let mut c = DMatrix::zeros(k + 1, k + 1);
        for (xi, &(a, b)) in coeffs.iter().zip(&self.modes) {
            c[(b, a)] += xi * self.spec.box_mode_std(a, b);
        }
        GridFunction::new(Domain::Box2d, n, synthesize_box(&c, n))
    }

    /// Draws `ξ_1..ξ_d ~ U(-1, 1)` and assembles the field.
    pub fn sample(&self, d: usize, n: usize, seed: u64) -> Result<(Vec<f64>, GridFunction)> {
        self.check(d, n)?;
        let mut rng = rng_from_seed(seed);
        let dist = Uniform::new_inclusive(-1.0, 1.0).expect("valid bounds");
        let xi: Vec<f64> = (0..d).map(|_| rng.sample(dist)).collect();
        let f = self.assemble(&xi, n)?;
        Ok((xi, f))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mode_standard_deviations() {
        assert!((MeasureSpec::mu_g(8).box_mode_std(0, 0) - 1.0 / 9.0).abs() < 1e-16);
        let b = MeasureSpec::mu_b(8).torus_mode_std(0);
        assert!((b - 49f64.powf(-0.25)).abs() < 1e-15);
        assert!((b - 0.377964).abs() < 1e-6);
        let model = CoeffModel::new(MeasureSpec::coeff_model(4)).unwrap();
        assert_eq!(model.modes()[0], (0, 0));
        assert!((model.eigenvalue(0) / 100f64.powf(-4.1) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn threshold_map_values() {
        assert_eq!(threshold_map(0.5, (12.0, 3.0)), 12.0);
        assert_eq!(threshold_map(-0.1, (12.0, 3.0)), 3.0);
        assert_eq!(threshold_map(0.0, (12.0, 3.0)), 12.0);
    }

    #[test]
    fn same_seed_same_bits() {
        let spec = MeasureSpec::mu_g(16);
        assert_eq!(spec.sample(33, 5).unwrap(), spec.sample(33, 5).unwrap());
        assert_ne!(spec.sample(33, 5).unwrap(), spec.sample(33, 6).unwrap());
        let spec = MeasureSpec::mu_b(100);
        assert_eq!(spec.sample(256, 5).unwrap(), spec.sample(256, 5).unwrap());
    }

    #[test]
    fn cutoff_above_nyquist_is_rejected() {
        assert!(matches!(
            MeasureSpec::mu_g(17).sample(17, 0),
            Err(Error::Config(_))
        ));
        assert!(MeasureSpec::mu_g(16).sample(17, 0).is_ok());
        assert!(MeasureSpec::mu_b(64).sample(128, 0).is_err());
        assert!(MeasureSpec::mu_b(63).sample(128, 0).is_ok());
    }

    #[test]
    fn fine_sample_subsamples_to_coarse_sample() {
        let spec = MeasureSpec::mu_g(16);
        let fine = spec.sample(65, 11).unwrap().subsample(4).unwrap();
        let coarse = spec.sample(17, 11).unwrap();
        assert!(fine.sub(&coarse).unwrap().max_abs() < 1e-12);

        let spec = MeasureSpec::mu_b(31);
        let fine = spec.sample(256, 11).unwrap().subsample(4).unwrap();
        let coarse = spec.sample(64, 11).unwrap();
        assert!(fine.sub(&coarse).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn lognormal_positive_and_piecewise_two_valued() {
        let l = MeasureSpec::mu_l(16).sample(33, 3).unwrap();
        assert!(l.values().iter().all(|v| *v > 0.0));
        let p = MeasureSpec::mu_p(16).sample(33, 3).unwrap();
        assert!(p.values().iter().all(|v| *v == 12.0 || *v == 3.0));
    }

    #[test]
    fn torus_field_is_real() {
        for seed in 0..5 {
            let (_, residue) = sample_mu_b_with_residue(&MeasureSpec::mu_b(511), 1024, seed).unwrap();
            assert!(residue < 1e-12, "{residue}");
        }
    }

    #[test]
    fn coefficient_model_sample_properties() {
        let model = CoeffModel::new(MeasureSpec::coeff_model(16)).unwrap();
        let (xi, f) = model.sample(100, 33, 9).unwrap();
        assert_eq!(xi.len(), 100);
        assert!(xi.iter().all(|x| x.abs() <= 1.0));
        assert_eq!(f, model.assemble(&xi, 33).unwrap());
        assert!(model.sample(model.len() + 1, 33, 9).is_err());
        // eigenvalues non-increasing along the ordering
        for j in 1..model.len() {
            assert!(model.eigenvalue(j) <= model.eigenvalue(j - 1));
        }
    }

    #[test]
    fn sup_norm_partial_sums_are_monotone_and_slowing() {
        let model = CoeffModel::new(MeasureSpec::coeff_model(40)).unwrap();
        let mut sum = 0.0;
        let mut last_inc = f64::INFINITY;
        let mut incs = Vec::new();
        for j in 0..500 {
            let inc = model.sup_norm(j);
            assert!(inc > 0.0);
            sum += inc;
            incs.push(inc);
            last_inc = last_inc.min(inc);
        }
        // Increments non-increasing up to ties at equal |k|.
        for w in incs.windows(2) {
            assert!(w[1] <= w[0] * SQRT_2 + 1e-30);
        }
        // Cauchy-slowing: later blocks contribute less than earlier ones.
        let block = |a: usize, b: usize| incs[a..b].iter().sum::<f64>();
        assert!(block(250, 500) < block(0, 250));
        assert!(block(400, 500) < block(300, 400));
        // Direct evaluation matches the closed form.
        let phi = model.basis_function(7, 81).unwrap();
        assert!((phi.max_abs() - model.sup_norm(7)).abs() < 1e-12 * model.sup_norm(7));
        assert!(sum.is_finite());
    }
}
