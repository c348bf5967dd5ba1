use nalgebra::{DMatrix, DVector};

use crate::error::{shape, Error, Result};

/// Diagonal damping added to the normal equations, relative to their largest diagonal entry.
pub const RIDGE_RELATIVE: f64 = 1e-12;

/// `s ↦ A s + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub matrix: DMatrix<f64>,
    pub bias: DVector<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearFit {
    pub model: LinearModel,
    /// The design was (numerically) rank deficient; the damping selected a solution.
    pub rank_deficient: bool,
}

impl LinearModel {
    pub fn new(matrix: DMatrix<f64>, bias: DVector<f64>) -> Result<Self> {
        if matrix.nrows() != bias.len() {
            return Err(shape("bias length must match the number of outputs"));
        }
        if matrix.iter().chain(bias.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Domain("linear model has non-finite entries".into()));
        }
        Ok(Self { matrix, bias })
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            matrix: DMatrix::identity(dim, dim),
            bias: DVector::zeros(dim),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn output_dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn predict_batch(&self, inputs: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if inputs.ncols() != self.input_dim() {
            return Err(shape(format!(
                "linear model expects {} inputs, got {}",
                self.input_dim(),
                inputs.ncols()
            )));
        }
        let mut out = inputs * self.matrix.transpose();
        for mut row in out.row_iter_mut() {
            row += self.bias.transpose();
        }
        Ok(out)
    }
}

/// Least-squares affine (or, with `intercept = false`, linear) fit of
/// `targets` (rows are samples) on `inputs` through the damped normal equations.
pub fn fit_linear(
    inputs: &DMatrix<f64>,
    targets: &DMatrix<f64>,
    intercept: bool,
) -> Result<LinearFit> {
    let (count, d_in) = inputs.shape();
    if targets.nrows() != count {
        return Err(shape(format!(
            "{count} inputs but {} targets",
            targets.nrows()
        )));
    }
    if count == 0 {
        return Err(Error::Config("cannot fit a linear map to no data".into()));
    }
    let d_out = targets.ncols();
    let cols = d_in + usize::from(intercept);
    let design = if intercept {
        let mut x = DMatrix::from_element(count, cols, 1.0);
        x.columns_mut(0, d_in).copy_from(inputs);
        x
    } else {
        inputs.clone()
    };
    let mut normal = design.tr_mul(&design);
    let rhs = design.tr_mul(targets);
    let max_diag = normal.diagonal().max();
    let mut rank_deficient = count < cols;
    if max_diag > 0.0 {
        for i in 0..cols {
            normal[(i, i)] += RIDGE_RELATIVE * max_diag;
        }
    }
    let coeff = match normal.clone().cholesky() {
        Some(chol) => {
            let l = chol.l_dirty().diagonal();
            let (lo, hi) = (l.min(), l.max());
            if lo * lo < 1e-10 * hi * hi {
                rank_deficient = true;
            }
            chol.solve(&rhs)
        }
        None => {
            rank_deficient = true;
            normal
                .lu()
                .solve(&rhs)
                .ok_or_else(|| Error::Numerical("singular normal equations".into()))?
        }
    };
    if rank_deficient {
        log::warn!(
            "linear fit: rank-deficient design ({count} samples, {cols} unknowns); damped solution used"
        );
    }
    let matrix = coeff.rows(0, d_in).transpose();
    let bias = if intercept {
        coeff.row(d_in).transpose()
    } else {
        DVector::zeros(d_out)
    };
    Ok(LinearFit {
        model: LinearModel::new(matrix, bias)?,
        rank_deficient,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use rand::Rng;

    #[test]
    fn recovers_exact_affine_map() {
        let mut rng = rng_from_seed(3);
        let a = DMatrix::from_fn(3, 4, |_, _| rng.random_range(-1.0..1.0));
        let b = DVector::from_fn(3, |_, _| rng.random_range(-1.0..1.0));
        let x = DMatrix::from_fn(40, 4, |_, _| rng.random_range(-2.0..2.0));
        let truth = LinearModel::new(a.clone(), b.clone()).unwrap();
        let y = truth.predict_batch(&x).unwrap();
        let fit = fit_linear(&x, &y, true).unwrap();
        assert!(!fit.rank_deficient);
        assert!((&fit.model.matrix - &a).amax() < 1e-8 * a.amax());
        assert!((&fit.model.bias - &b).amax() < 1e-8 * a.amax());
    }

    #[test]
    fn zero_targets_give_zero_map() {
        let x = DMatrix::from_fn(10, 2, |i, j| (i * 3 + j) as f64 * 0.1);
        let fit = fit_linear(&x, &DMatrix::zeros(10, 3), true).unwrap();
        assert_eq!(fit.model.matrix.amax(), 0.0);
        assert_eq!(fit.model.bias.amax(), 0.0);
    }

    #[test]
    fn two_point_line() {
        let x = DMatrix::from_row_slice(2, 1, &[0.0, 1.0]);
        let y = DMatrix::from_row_slice(2, 1, &[1.0, 3.0]);
        let m = fit_linear(&x, &y, true).unwrap().model;
        assert!((m.matrix[(0, 0)] - 2.0).abs() < 1e-9);
        assert!((m.bias[0] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn residual_is_orthogonal_to_inputs() {
        let mut rng = rng_from_seed(4);
        let x: DMatrix<f64> = DMatrix::from_fn(50, 5, |_, _| rng.random_range(-1.0..1.0));
        let y = DMatrix::from_fn(50, 2, |i, j| x[(i, j)].powi(3) + rng.random_range(-0.1..0.1));
        let m = fit_linear(&x, &y, true).unwrap().model;
        let r = &y - m.predict_batch(&x).unwrap();
        let mut design = DMatrix::from_element(50, 6, 1.0);
        design.columns_mut(0, 5).copy_from(&x);
        let g = design.tr_mul(&r);
        assert!(g.norm() < 1e-8 * design.norm() * y.norm());
    }

    #[test]
    fn underdetermined_design_is_flagged() {
        let x = DMatrix::from_row_slice(2, 3, &[1.0, 0.0, 2.0, 0.0, 1.0, 1.0]);
        let y = DMatrix::from_row_slice(2, 1, &[1.0, 2.0]);
        let fit = fit_linear(&x, &y, true).unwrap();
        assert!(fit.rank_deficient);
        let pred = fit.model.predict_batch(&x).unwrap();
        assert!((&pred - &y).amax() < 1e-6);
    }
}
