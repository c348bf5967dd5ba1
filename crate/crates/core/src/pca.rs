//! Non-centered PCA of grid functions by the snapshot method.
//!
//! For data `u_1..u_N` the `N×N` Gram matrix `G_ij = ⟨u_i, u_j⟩ / N` has the
//! same non-zero spectrum as the empirical second-moment operator
//! `C_N = (1/N) Σ u_j ⊗ u_j`. Its eigenvectors `v^(j)` lift to orthonormal
//! functions `φ_j = (Nλ_j)^{-1/2} Σ_i v_i^(j) u_i`. No mean is subtracted.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{shape, Error, Result};
use crate::grid::{Domain, GridFunction, InnerProduct};

/// Relative size below which a Gram eigenvalue counts as zero.
pub const RANK_TOLERANCE: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq)]
pub struct PcaModel {
    domain: Domain,
    n: usize,
    inner: InnerProduct,
    /// Column `j` holds the values of `φ_{j+1}`.
    basis: DMatrix<f64>,
    /// All `N` eigenvalues, non-increasing, clamped at zero.
    eigenvalues: Vec<f64>,
    weights: Vec<f64>,
    /// `max |⟨φ_i, φ_j⟩ - δ_ij|` after a basis transfer.
    transfer_residual: Option<f64>,
}

fn stack_columns(data: &[GridFunction]) -> DMatrix<f64> {
    let points = data[0].values().len();
    DMatrix::from_fn(points, data.len(), |p, i| data[i].values()[p])
}

/// Flips `v` so that its entry of largest magnitude (first one on ties) is positive.
fn apply_sign_convention(mut v: nalgebra::DVectorViewMut<'_, f64>) {
    let mut best = 0usize;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    if v[best] < 0.0 {
        v.neg_mut();
    }
}

impl PcaModel {
    /// Fits the top `d` components of `data` under `inner`.
    pub fn fit(data: &[GridFunction], d: usize, inner: InnerProduct) -> Result<Self> {
        let count = data.len();
        if d == 0 || d > count {
            return Err(Error::Config(format!(
                "reduced dimension must satisfy 1 ≤ d ≤ N, got d = {d}, N = {count}"
            )));
        }
        let first = &data[0];
        if let Some(bad) = data.iter().position(|u| !u.same_grid(first)) {
            return Err(shape(format!("sample {bad} is on a different grid")));
        }
        let (domain, n) = (first.domain(), first.resolution());
        let weights = inner.weights(domain, n);
        let x = stack_columns(data);
        let mut wx = x.clone();
        for (mut row, w) in wx.row_iter_mut().zip(&weights) {
            row *= *w;
        }
        let mut gram = x.tr_mul(&wx);
        gram /= count as f64;
        // Exact symmetry before the eigensolve.
        gram = (&gram + gram.transpose()) * 0.5;

        let eig = SymmetricEigen::new(gram);
        let mut order: Vec<usize> = (0..count).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i].max(0.0)).collect();

        let lead = eigenvalues[0];
        let threshold = RANK_TOLERANCE * lead;
        for (j, &lam) in eigenvalues.iter().take(d).enumerate() {
            if !(lam > threshold) || lam == 0.0 {
                return Err(Error::RankDeficient {
                    index: j + 1,
                    value: lam,
                    threshold,
                });
            }
        }

        let mut coeff = DMatrix::zeros(count, d);
        for j in 0..d {
            let scale = 1.0 / (count as f64 * eigenvalues[j]).sqrt();
            coeff.set_column(j, &(eig.eigenvectors.column(order[j]) * scale));
        }
        let mut basis = &x * coeff;
        for j in 0..d {
            apply_sign_convention(basis.column_mut(j));
        }
        // Exactly repeated eigenvalues: order by the first basis entry.
        let mut cols: Vec<usize> = (0..d).collect();
        cols.sort_by(|&a, &b| {
            eigenvalues[b]
                .total_cmp(&eigenvalues[a])
                .then(basis[(0, b)].total_cmp(&basis[(0, a)]))
        });
        let basis = basis.select_columns(&cols);

        Ok(Self {
            domain,
            n,
            inner,
            basis,
            eigenvalues,
            weights,
            transfer_residual: None,
        })
    }

    /// Rebuilds a model from stored parts (basis functions as columns).
    pub fn from_parts(
        domain: Domain,
        n: usize,
        inner: InnerProduct,
        basis: DMatrix<f64>,
        eigenvalues: Vec<f64>,
    ) -> Result<Self> {
        domain.check_resolution(n)?;
        if basis.nrows() != domain.num_points(n) || basis.ncols() == 0 {
            return Err(shape(format!(
                "basis has shape {}×{}, grid needs {} rows",
                basis.nrows(),
                basis.ncols(),
                domain.num_points(n)
            )));
        }
        if eigenvalues.len() < basis.ncols() {
            return Err(shape("fewer eigenvalues than basis functions"));
        }
        if eigenvalues.windows(2).any(|w| w[1] > w[0]) || eigenvalues.iter().any(|l| *l < 0.0) {
            return Err(Error::Config(
                "eigenvalues must be non-negative and non-increasing".into(),
            ));
        }
        Ok(Self {
            domain,
            n,
            inner,
            weights: inner.weights(domain, n),
            basis,
            eigenvalues,
            transfer_residual: None,
        })
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn resolution(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn inner_product(&self) -> InnerProduct {
        self.inner
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn basis_matrix(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn transfer_residual(&self) -> Option<f64> {
        self.transfer_residual
    }

    /// `φ_{j+1}` as a grid function.
    pub fn basis_function(&self, j: usize) -> GridFunction {
        GridFunction::new(self.domain, self.n, self.basis.column(j).iter().copied().collect())
            .expect("basis values are finite")
    }

    /// Keeps the leading `d` components.
    pub fn truncated(&self, d: usize) -> Result<Self> {
        if d == 0 || d > self.dim() {
            return Err(Error::Config(format!(
                "cannot truncate a {}-dimensional model to d = {d}",
                self.dim()
            )));
        }
        let mut out = self.clone();
        out.basis = self.basis.columns(0, d).into_owned();
        Ok(out)
    }

    /// `Σ_{j>d} λ_j` over the stored spectrum.
    pub fn eigenvalue_tail(&self, d: usize) -> f64 {
        self.eigenvalues.iter().skip(d).sum()
    }

    fn check_grid(&self, u: &GridFunction) -> Result<()> {
        if u.domain() != self.domain || u.resolution() != self.n {
            return Err(shape(format!(
                "model is on {}(n = {}), function on {}(n = {})",
                self.domain.name(),
                self.n,
                u.domain().name(),
                u.resolution()
            )));
        }
        Ok(())
    }

    /// `(⟨u, φ_1⟩, …, ⟨u, φ_d⟩)`.
    pub fn encode(&self, u: &GridFunction) -> Result<Vec<f64>> {
        self.check_grid(u)?;
        let wu = DVector::from_iterator(
            self.weights.len(),
            u.values().iter().zip(&self.weights).map(|(v, w)| v * w),
        );
        Ok(self.basis.tr_mul(&wu).iter().copied().collect())
    }

    /// Encodes many functions; row `i` is the latent code of `data[i]`.
    pub fn encode_batch(&self, data: &[GridFunction]) -> Result<DMatrix<f64>> {
        if data.is_empty() {
            return Ok(DMatrix::zeros(0, self.dim()));
        }
        for u in data {
            self.check_grid(u)?;
        }
        let mut wx = stack_columns(data);
        for (mut row, w) in wx.row_iter_mut().zip(&self.weights) {
            row *= *w;
        }
        Ok(wx.tr_mul(&self.basis))
    }

    /// `Σ_j s_j φ_j`.
    pub fn decode(&self, s: &[f64]) -> Result<GridFunction> {
        if s.len() != self.dim() {
            return Err(shape(format!(
                "latent vector has length {}, model dimension is {}",
                s.len(),
                self.dim()
            )));
        }
        let v = &self.basis * DVector::from_column_slice(s);
        GridFunction::new(self.domain, self.n, v.iter().copied().collect())
    }

    /// Orthogonal projection onto the span of the basis.
    pub fn project(&self, u: &GridFunction) -> Result<GridFunction> {
        self.decode(&self.encode(u)?)
    }

    /// Squared norm of `u` under the model's inner product.
    pub fn norm_squared(&self, u: &GridFunction) -> f64 {
        u.values()
            .iter()
            .zip(&self.weights)
            .map(|(v, w)| w * v * v)
            .sum()
    }

    /// `(1/N) Σ ‖u_j − Π u_j‖²`.
    pub fn empirical_projection_error(&self, data: &[GridFunction]) -> Result<f64> {
        if data.is_empty() {
            return Err(Error::Config("projection error of an empty dataset".into()));
        }
        let mut total = 0.0;
        for u in data {
            let residual = u.sub(&self.project(u)?)?;
            total += self.norm_squared(&residual);
        }
        Ok(total / data.len() as f64)
    }

    /// `max |⟨φ_i, φ_j⟩ − δ_ij|` on the model's grid.
    pub fn gram_residual(&self) -> f64 {
        let mut wb = self.basis.clone();
        for (mut row, w) in wb.row_iter_mut().zip(&self.weights) {
            row *= *w;
        }
        let g = self.basis.tr_mul(&wb);
        let mut worst: f64 = 0.0;
        for i in 0..g.nrows() {
            for j in 0..g.ncols() {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((g[(i, j)] - target).abs());
            }
        }
        worst
    }

    /// Moves the basis to another resolution: sub-sampling onto nested
    /// coarser grids, cubic-spline interpolation onto finer ones. The
    /// transferred basis is not re-orthonormalized; its Gram residual on the
    /// target grid is recorded in [`PcaModel::transfer_residual`].
    pub fn transfer(&self, target_n: usize) -> Result<Self> {
        if target_n == self.n {
            return Ok(self.clone());
        }
        self.domain.check_resolution(target_n)?;
        let points = self.domain.num_points(target_n);
        let mut basis = DMatrix::zeros(points, self.dim());
        for j in 0..self.dim() {
            let moved = self.basis_function(j).resample(target_n)?;
            basis.set_column(j, &DVector::from_column_slice(moved.values()));
        }
        let mut out = Self {
            domain: self.domain,
            n: target_n,
            inner: self.inner,
            basis,
            eigenvalues: self.eigenvalues.clone(),
            weights: self.inner.weights(self.domain, target_n),
            transfer_residual: None,
        };
        out.transfer_residual = Some(out.gram_residual());
        Ok(out)
    }
}
