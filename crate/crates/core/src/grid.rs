//! Functions sampled on uniform grids.
//!
//! Two domains are supported. The unit square `[0,1]²` is sampled with `n`
//! nodes per axis including both boundaries, spacing `h = 1/(n-1)`, stored
//! row-major: node `(i, j)` sits at `(s₁, s₂) = (j·h, i·h)` and is stored at
//! index `i·n + j`. The unit torus `[0,1)` is sampled at `s_i = i/n`.
//!
//! Inner products are quadrature approximations of the L² inner product
//! (trapezoid on the square, uniform weights on the torus) so that norms and
//! spectra are comparable across resolutions.

use crate::error::{shape, Error, Result};
use crate::spline;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Domain {
    /// Unit square with boundary nodes.
    Box2d,
    /// Unit periodic interval.
    Torus1d,
}

impl Domain {
    pub fn name(self) -> &'static str {
        match self {
            Domain::Box2d => "box2d",
            Domain::Torus1d => "torus1d",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "box2d" => Some(Domain::Box2d),
            "torus1d" => Some(Domain::Torus1d),
            _ => None,
        }
    }

    /// Number of stored values at resolution `n`.
    pub fn num_points(self, n: usize) -> usize {
        match self {
            Domain::Box2d => n.saturating_mul(n),
            Domain::Torus1d => n,
        }
    }

    pub fn check_resolution(self, n: usize) -> Result<()> {
        let (min, max) = match self {
            Domain::Box2d => (2, MAX_BOX_RESOLUTION),
            Domain::Torus1d => (1, MAX_TORUS_RESOLUTION),
        };
        if n < min || n > max {
            return Err(Error::Config(format!(
                "{} resolution must lie in {min}..={max}, got {n}",
                self.name()
            )));
        }
        Ok(())
    }

    /// Node coordinates along one axis.
    pub fn axis_nodes(self, n: usize) -> Vec<f64> {
        match self {
            Domain::Box2d => {
                let den = (n.max(2) - 1) as f64;
                (0..n).map(|i| i as f64 / den).collect()
            }
            Domain::Torus1d => (0..n).map(|i| i as f64 / n as f64).collect(),
        }
    }

    /// Largest wavenumber per axis that the grid resolves without aliasing:
    /// `n - 1` cosine modes on the square, `(n - 1) / 2` Fourier modes on the torus.
    pub fn nyquist(self, n: usize) -> usize {
        match self {
            Domain::Box2d => n.saturating_sub(1),
            Domain::Torus1d => n.saturating_sub(1) / 2,
        }
    }

    /// Whether a grid at resolution `coarse` is a sub-grid of one at `fine`,
    /// and if so the stride.
    pub fn nesting_stride(self, fine: usize, coarse: usize) -> Option<usize> {
        match self {
            Domain::Box2d => {
                if coarse < 2 || fine < coarse || !(fine - 1).is_multiple_of(coarse - 1) {
                    None
                } else {
                    Some((fine - 1) / (coarse - 1))
                }
            }
            Domain::Torus1d => {
                if coarse == 0 || fine < coarse || !fine.is_multiple_of(coarse) {
                    None
                } else {
                    Some(fine / coarse)
                }
            }
        }
    }
}

/// Largest accepted grids; far beyond what fits in memory, but they keep
/// point counts from overflowing when sizes come from untrusted headers.
pub const MAX_BOX_RESOLUTION: usize = 1 << 16;
pub const MAX_TORUS_RESOLUTION: usize = 1 << 30;

/// Which inner product to use on grid values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InnerProduct {
    /// Quadrature-weighted L² inner product.
    #[default]
    Weighted,
    /// Plain Euclidean inner product of the value arrays.
    Unweighted,
}

impl InnerProduct {
    pub fn name(self) -> &'static str {
        match self {
            InnerProduct::Weighted => "weighted",
            InnerProduct::Unweighted => "unweighted",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "weighted" => Some(InnerProduct::Weighted),
            "unweighted" => Some(InnerProduct::Unweighted),
            _ => None,
        }
    }

    pub fn weights(self, domain: Domain, n: usize) -> Vec<f64> {
        match self {
            InnerProduct::Weighted => quadrature_weights(domain, n),
            InnerProduct::Unweighted => vec![1.0; domain.num_points(n)],
        }
    }
}

/// Trapezoid weights `h²·{1, ½, ¼}` on the square; `1/n` on the torus.
pub fn quadrature_weights(domain: Domain, n: usize) -> Vec<f64> {
    match domain {
        Domain::Box2d => {
            let h = 1.0 / (n.max(2) - 1) as f64;
            let edge = |i: usize| if i == 0 || i + 1 == n { 0.5 } else { 1.0 };
            let mut w = Vec::with_capacity(n * n);
            for i in 0..n {
                for j in 0..n {
                    w.push(h * h * edge(i) * edge(j));
                }
            }
            w
        }
        Domain::Torus1d => vec![1.0 / n as f64; n],
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    domain: Domain,
    n: usize,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(domain: Domain, n: usize, values: Vec<f64>) -> Result<Self> {
        domain.check_resolution(n)?;
        if values.len() != domain.num_points(n) {
            return Err(shape(format!(
                "{} grid with n = {n} needs {} values, got {}",
                domain.name(),
                domain.num_points(n),
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Domain(format!(
                "non-finite value {} at index {pos}",
                values[pos]
            )));
        }
        Ok(Self { domain, n, values })
    }

    pub fn zeros(domain: Domain, n: usize) -> Self {
        Self {
            domain,
            n,
            values: vec![0.0; domain.num_points(n)],
        }
    }

    pub fn constant(domain: Domain, n: usize, c: f64) -> Self {
        Self {
            domain,
            n,
            values: vec![c; domain.num_points(n)],
        }
    }

    /// Samples `f(s₁, s₂)` on the unit-square grid.
    pub fn from_fn_box(n: usize, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let s = Domain::Box2d.axis_nodes(n);
        let mut values = Vec::with_capacity(n * n);
        for s2 in &s {
            for s1 in &s {
                values.push(f(*s1, *s2));
            }
        }
        Self::new(Domain::Box2d, n, values)
    }

    /// Samples `f(s)` on the torus grid.
    pub fn from_fn_torus(n: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = Domain::Torus1d.axis_nodes(n).into_iter().map(f).collect();
        Self::new(Domain::Torus1d, n, values)
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn resolution(&self) -> usize {
        self.n
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Value at row `i` (s₂ index), column `j` (s₁ index) of a box grid.
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    pub fn same_grid(&self, other: &GridFunction) -> bool {
        self.domain == other.domain && self.n == other.n
    }

    fn check_same_grid(&self, other: &GridFunction) -> Result<()> {
        if self.same_grid(other) {
            Ok(())
        } else {
            Err(shape(format!(
                "grid mismatch: {}(n = {}) vs {}(n = {})",
                self.domain.name(),
                self.n,
                other.domain.name(),
                other.n
            )))
        }
    }

    pub fn inner_product(&self, other: &GridFunction) -> Result<f64> {
        self.inner_product_with(other, InnerProduct::Weighted)
    }

    pub fn inner_product_with(&self, other: &GridFunction, kind: InnerProduct) -> Result<f64> {
        self.check_same_grid(other)?;
        let w = kind.weights(self.domain, self.n);
        Ok(weighted_dot(&w, &self.values, &other.values))
    }

    pub fn norm(&self) -> f64 {
        self.norm_with(InnerProduct::Weighted)
    }

    pub fn norm_with(&self, kind: InnerProduct) -> f64 {
        let w = kind.weights(self.domain, self.n);
        weighted_dot(&w, &self.values, &self.values).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn mean(&self) -> f64 {
        let w = quadrature_weights(self.domain, self.n);
        weighted_dot(&w, &self.values, &vec![1.0; self.values.len()])
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<GridFunction> {
        GridFunction::new(self.domain, self.n, self.values.iter().map(|v| f(*v)).collect())
    }

    pub fn scaled(&self, alpha: f64) -> GridFunction {
        GridFunction {
            domain: self.domain,
            n: self.n,
            values: self.values.iter().map(|v| alpha * v).collect(),
        }
    }

    /// `self + alpha * other`.
    pub fn add_scaled(&self, alpha: f64, other: &GridFunction) -> Result<GridFunction> {
        self.check_same_grid(other)?;
        Ok(GridFunction {
            domain: self.domain,
            n: self.n,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + alpha * b)
                .collect(),
        })
    }

    pub fn sub(&self, other: &GridFunction) -> Result<GridFunction> {
        self.add_scaled(-1.0, other)
    }

    /// Keeps every `stride`-th node (both boundaries on the square).
    pub fn subsample(&self, stride: usize) -> Result<GridFunction> {
        if stride == 0 {
            return Err(shape("stride must be positive"));
        }
        let n = self.n;
        match self.domain {
            Domain::Box2d => {
                if !(n - 1).is_multiple_of(stride) {
                    return Err(shape(format!(
                        "box grid n = {n}: n - 1 is not divisible by stride {stride}"
                    )));
                }
                let m = (n - 1) / stride + 1;
                let mut values = Vec::with_capacity(m * m);
                for i in 0..m {
                    for j in 0..m {
                        values.push(self.values[i * stride * n + j * stride]);
                    }
                }
                Ok(GridFunction {
                    domain: self.domain,
                    n: m,
                    values,
                })
            }
            Domain::Torus1d => {
                if !n.is_multiple_of(stride) {
                    return Err(shape(format!(
                        "torus grid n = {n} is not divisible by stride {stride}"
                    )));
                }
                Ok(GridFunction {
                    domain: self.domain,
                    n: n / stride,
                    values: self.values.iter().step_by(stride).copied().collect(),
                })
            }
        }
    }

    /// Cubic-spline resampling: natural tensor-product splines on the
    /// square, periodic splines on the torus.
    pub fn interpolate(&self, target_n: usize) -> Result<GridFunction> {
        if target_n < 2 {
            return Err(Error::Config(format!(
                "interpolation target must be at least 2, got {target_n}"
            )));
        }
        match self.domain {
            Domain::Torus1d => Ok(GridFunction {
                domain: self.domain,
                n: target_n,
                values: spline::resample_periodic(&self.values, target_n),
            }),
            Domain::Box2d => {
                let n = self.n;
                let m = target_n;
                // Along s₁ (within each row), then along s₂ (within each column).
                let mut rows = Vec::with_capacity(n * m);
                for row in self.values.chunks(n) {
                    rows.extend(spline::resample_natural(row, m));
                }
                let mut values = vec![0.0; m * m];
                let mut column = vec![0.0; n];
                for j in 0..m {
                    for i in 0..n {
                        column[i] = rows[i * m + j];
                    }
                    for (i, v) in spline::resample_natural(&column, m).into_iter().enumerate() {
                        values[i * m + j] = v;
                    }
                }
                Ok(GridFunction {
                    domain: self.domain,
                    n: m,
                    values,
                })
            }
        }
    }

    /// Moves to resolution `target_n`: sub-sampling when the target grid
    /// nests inside this one, spline interpolation when it is finer.
    pub fn resample(&self, target_n: usize) -> Result<GridFunction> {
        if target_n == self.n {
            return Ok(self.clone());
        }
        if target_n < self.n {
            let stride = self.domain.nesting_stride(self.n, target_n).ok_or_else(|| {
                shape(format!(
                    "{} grid n = {target_n} is not nested in n = {}",
                    self.domain.name(),
                    self.n
                ))
            })?;
            self.subsample(stride)
        } else {
            self.interpolate(target_n)
        }
    }
}

pub(crate) fn weighted_dot(w: &[f64], a: &[f64], b: &[f64]) -> f64 {
    w.iter().zip(a).zip(b).map(|((w, a), b)| w * a * b).sum()
}
