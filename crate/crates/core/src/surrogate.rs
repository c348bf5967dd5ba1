//! The composed surrogate `decode_out ∘ regressor ∘ standardize ∘ encode_in`
//! and the relative-error metrics used to evaluate it.

use nalgebra::DMatrix;

use crate::error::{shape, Error, Result};
use crate::grid::GridFunction;
use crate::pca::PcaModel;
use crate::regress::{
    fit_linear, train_mlp, MlpModel, Regressor, Standardizer, TrainConfig, TrainOutcome,
};

/// Anything that maps an input function to an output function.
pub trait FunctionPredictor {
    fn predict_function(&self, x: &GridFunction) -> Result<GridFunction>;

    /// Batched prediction; implementations may override for speed.
    fn predict_functions(&self, xs: &[GridFunction]) -> Result<Vec<GridFunction>> {
        xs.iter().map(|x| self.predict_function(x)).collect()
    }
}

impl<F> FunctionPredictor for F
where
    F: Fn(&GridFunction) -> Result<GridFunction>,
{
    fn predict_function(&self, x: &GridFunction) -> Result<GridFunction> {
        self(x)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Surrogate {
    pub pca_in: PcaModel,
    pub pca_out: PcaModel,
    /// Applied to latent inputs before the regressor.
    pub input_scaling: Standardizer,
    /// Inverted on the regressor output.
    pub output_scaling: Standardizer,
    pub regressor: Regressor,
}

/// Options for the affine latent map.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearOptions {
    pub intercept: bool,
    /// Subtract the latent mean before scaling (z-scoring) or only rescale.
    pub center: bool,
    pub standardize: bool,
}

impl Default for LinearOptions {
    fn default() -> Self {
        Self {
            intercept: true,
            center: true,
            standardize: true,
        }
    }
}

impl Surrogate {
    pub fn new(
        pca_in: PcaModel,
        pca_out: PcaModel,
        input_scaling: Standardizer,
        output_scaling: Standardizer,
        regressor: Regressor,
    ) -> Result<Self> {
        if regressor.input_dim() != pca_in.dim()
            || input_scaling.dim() != pca_in.dim()
            || regressor.output_dim() != pca_out.dim()
            || output_scaling.dim() != pca_out.dim()
        {
            return Err(shape(format!(
                "regressor {} → {} does not fit PCA dimensions {} → {}",
                regressor.input_dim(),
                regressor.output_dim(),
                pca_in.dim(),
                pca_out.dim()
            )));
        }
        Ok(Self {
            pca_in,
            pca_out,
            input_scaling,
            output_scaling,
            regressor,
        })
    }

    /// Latent training pairs for the given PCA models.
    pub fn latent_pairs(
        pca_in: &PcaModel,
        pca_out: &PcaModel,
        xs: &[GridFunction],
        ys: &[GridFunction],
    ) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
        if xs.len() != ys.len() || xs.is_empty() {
            return Err(shape(format!(
                "need equally many non-zero inputs and outputs, got {} and {}",
                xs.len(),
                ys.len()
            )));
        }
        Ok((pca_in.encode_batch(xs)?, pca_out.encode_batch(ys)?))
    }

    pub fn fit_linear(
        pca_in: PcaModel,
        pca_out: PcaModel,
        xs: &[GridFunction],
        ys: &[GridFunction],
        opts: LinearOptions,
    ) -> Result<Self> {
        let (s, t) = Self::latent_pairs(&pca_in, &pca_out, xs, ys)?;
        let scaling = if opts.standardize {
            Standardizer::fit(&s, opts.center)
        } else {
            Standardizer::identity(s.ncols())
        };
        let fit = fit_linear(&scaling.apply_batch(&s)?, &t, opts.intercept)?;
        let out = Standardizer::identity(t.ncols());
        Self::new(pca_in, pca_out, scaling, out, Regressor::Linear(fit.model))
    }

    /// Trains an MLP with the given hidden widths. Latent inputs and targets
    /// are centered and divided by one shared scale each, so squared latent
    /// distances stay proportional to function-space distances. If validation
    /// pairs are supplied, the relative error on them is recorded every epoch.
    pub fn fit_mlp(
        pca_in: PcaModel,
        pca_out: PcaModel,
        xs: &[GridFunction],
        ys: &[GridFunction],
        hidden: &[usize],
        init_seed: u64,
        cfg: &TrainConfig,
        validation: Option<(&[GridFunction], &[GridFunction])>,
    ) -> Result<(Self, TrainOutcome)> {
        let (s, t) = Self::latent_pairs(&pca_in, &pca_out, xs, ys)?;
        let input_scaling = Standardizer::fit_global(&s, true);
        let output_scaling = Standardizer::fit_global(&t, true);
        let z = input_scaling.apply_batch(&s)?;
        let tz = output_scaling.apply_batch(&t)?;
        let mut dims = vec![pca_in.dim()];
        dims.extend_from_slice(hidden);
        dims.push(pca_out.dim());
        let init = MlpModel::init(&dims, init_seed)?;

        let val = match validation {
            Some((vx, vy)) => {
                let vz = input_scaling.apply_batch(&pca_in.encode_batch(vx)?)?;
                Some((vz, vy))
            }
            None => None,
        };
        let metric = |m: &MlpModel| -> f64 {
            let (vz, vy) = val.as_ref().expect("validation present");
            let pred = output_scaling
                .invert_batch(&m.predict_batch(vz).expect("shapes checked"))
                .expect("shapes checked");
            let mut sum = 0.0;
            let mut used = 0usize;
            for (i, y) in vy.iter().enumerate() {
                let yn = pca_out.norm_squared(y).sqrt();
                if yn == 0.0 {
                    continue;
                }
                let row: Vec<f64> = pred.row(i).iter().copied().collect();
                let yhat = match pca_out.decode(&row) {
                    Ok(f) => f,
                    Err(_) => return f64::NAN,
                };
                sum += pca_out.norm_squared(&yhat.sub(y).expect("same grid")).sqrt() / yn;
                used += 1;
            }
            sum / used.max(1) as f64
        };
        let metric_ref: Option<&dyn Fn(&MlpModel) -> f64> =
            if val.is_some() { Some(&metric) } else { None };
        let outcome = train_mlp(&init, &z, &tz, cfg, metric_ref)?;
        let sur = Self::new(
            pca_in,
            pca_out,
            input_scaling,
            output_scaling,
            Regressor::Mlp(outcome.model.clone()),
        )?;
        Ok((sur, outcome))
    }

    /// Latent output for a latent input.
    pub fn predict_latent(&self, x: &GridFunction) -> Result<Vec<f64>> {
        let s = self.input_scaling.apply(&self.pca_in.encode(x)?)?;
        self.output_scaling.invert(&self.regressor.predict(&s)?)
    }

    /// Moves both bases to other resolutions without touching the regressor.
    pub fn transfer(&self, n_in: usize, n_out: usize) -> Result<Self> {
        Ok(Self {
            pca_in: self.pca_in.transfer(n_in)?,
            pca_out: self.pca_out.transfer(n_out)?,
            input_scaling: self.input_scaling.clone(),
            output_scaling: self.output_scaling.clone(),
            regressor: self.regressor.clone(),
        })
    }
}

impl FunctionPredictor for Surrogate {
    fn predict_function(&self, x: &GridFunction) -> Result<GridFunction> {
        self.pca_out.decode(&self.predict_latent(x)?)
    }

    fn predict_functions(&self, xs: &[GridFunction]) -> Result<Vec<GridFunction>> {
        if xs.is_empty() {
            return Ok(Vec::new());
        }
        let s = self.input_scaling.apply_batch(&self.pca_in.encode_batch(xs)?)?;
        let t = self.output_scaling.invert_batch(&self.regressor.predict_batch(&s)?)?;
        let out = self.pca_out.basis_matrix() * t.transpose();
        out.column_iter()
            .map(|c| {
                GridFunction::new(
                    self.pca_out.domain(),
                    self.pca_out.resolution(),
                    c.iter().copied().collect(),
                )
            })
            .collect()
    }
}

/// Mean relative error with the number of pairs used and skipped.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelativeError {
    pub mean: f64,
    pub used: usize,
    /// Pairs whose target has zero norm.
    pub skipped: usize,
}

/// Mean of `‖predicted_i − y_i‖ / ‖y_i‖` in the quadrature L² norm.
pub fn relative_error_of(predicted: &[GridFunction], targets: &[GridFunction]) -> Result<RelativeError> {
    if predicted.len() != targets.len() {
        return Err(shape("prediction and target counts differ"));
    }
    if targets.is_empty() {
        return Err(Error::Config("empty test set".into()));
    }
    let mut sum = 0.0;
    let mut used = 0;
    let mut skipped = 0;
    for (p, y) in predicted.iter().zip(targets) {
        let yn = y.norm();
        if yn == 0.0 {
            skipped += 1;
            continue;
        }
        sum += p.sub(y)?.norm() / yn;
        used += 1;
    }
    if skipped > 0 {
        log::warn!("relative error: skipped {skipped} zero-norm targets");
    }
    if used == 0 {
        return Err(Error::Domain("every test target has zero norm".into()));
    }
    Ok(RelativeError {
        mean: sum / used as f64,
        used,
        skipped,
    })
}

/// Monte Carlo relative test error of any predictor.
pub fn relative_test_error(
    predictor: &dyn FunctionPredictor,
    inputs: &[GridFunction],
    targets: &[GridFunction],
) -> Result<RelativeError> {
    if inputs.len() != targets.len() {
        return Err(shape("input and target counts differ"));
    }
    if inputs.is_empty() {
        return Err(Error::Config("empty test set".into()));
    }
    relative_error_of(&predictor.predict_functions(inputs)?, targets)
}

/// Error of `Π_out ∘ Ψ ∘ Π_in`, the regressor-free ceiling of the method.
pub fn psi_pca_error(
    pca_in: &PcaModel,
    pca_out: &PcaModel,
    forward: &dyn Fn(&GridFunction) -> Result<GridFunction>,
    inputs: &[GridFunction],
    targets: &[GridFunction],
) -> Result<RelativeError> {
    let ceiling = |x: &GridFunction| -> Result<GridFunction> {
        pca_out.project(&forward(&pca_in.project(x)?)?)
    };
    relative_test_error(&ceiling, inputs, targets)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::MeasureSpec;
    use crate::grid::{Domain, InnerProduct};
    use crate::regress::LinearModel;
    use crate::solvers::solve_poisson;
    use nalgebra::DVector;

    fn poisson_data(count: usize, n: usize, seed: u64) -> (Vec<GridFunction>, Vec<GridFunction>) {
        let spec = MeasureSpec::mu_g(6);
        let xs: Vec<GridFunction> = (0..count)
            .map(|i| spec.sample(n, crate::rng::derive_seed(seed, i as u64)).unwrap())
            .collect();
        let ys = xs.iter().map(|x| solve_poisson(x).unwrap()).collect();
        (xs, ys)
    }

    #[test]
    fn zero_predictor_has_unit_error_and_perfect_has_zero() {
        let (xs, ys) = poisson_data(6, 9, 1);
        let zero = |x: &GridFunction| Ok(GridFunction::zeros(x.domain(), x.resolution()));
        let e = relative_test_error(&zero, &xs, &ys).unwrap();
        assert_eq!(e.mean, 1.0);
        let e = relative_error_of(&ys, &ys).unwrap();
        assert_eq!(e.mean, 0.0);
        assert!(relative_test_error(&zero, &[], &[]).is_err());
    }

    #[test]
    fn zero_norm_targets_are_skipped() {
        let (xs, mut ys) = poisson_data(4, 9, 2);
        ys[1] = GridFunction::zeros(Domain::Box2d, 9);
        let e = relative_error_of(&xs.iter().map(|x| x.scaled(0.0)).collect::<Vec<_>>(), &ys).unwrap();
        assert_eq!((e.used, e.skipped), (3, 1));
    }

    #[test]
    fn scale_invariance_of_relative_error() {
        let (xs, ys) = poisson_data(5, 9, 3);
        let preds: Vec<GridFunction> = ys.iter().zip(&xs).map(|(y, x)| y.add_scaled(1e-3, x).unwrap()).collect();
        let a = relative_error_of(&preds, &ys).unwrap().mean;
        let sp: Vec<_> = preds.iter().map(|p| p.scaled(7.5)).collect();
        let sy: Vec<_> = ys.iter().map(|y| y.scaled(7.5)).collect();
        let b = relative_error_of(&sp, &sy).unwrap().mean;
        assert!((a - b).abs() < 1e-12 * a);
    }

    #[test]
    fn linear_problem_full_rank_matches_ceiling() {
        let (xs, ys) = poisson_data(30, 17, 4);
        let pin = PcaModel::fit(&xs, 30, InnerProduct::Weighted).unwrap();
        let pout = PcaModel::fit(&ys, 30, InnerProduct::Weighted).unwrap();
        let opts = LinearOptions {
            intercept: false,
            center: false,
            standardize: false,
        };
        let sur = Surrogate::fit_linear(pin.clone(), pout.clone(), &xs, &ys, opts).unwrap();
        // On the training set the full-rank linear surrogate reproduces the data.
        let e = relative_test_error(&sur, &xs, &ys).unwrap().mean;
        assert!(e < 1e-6, "{e}");
        let ceiling = psi_pca_error(&pin, &pout, &|x| solve_poisson(x), &xs, &ys).unwrap().mean;
        assert!((e - ceiling).abs() < 1e-6);
    }

    #[test]
    fn composition_on_input_span_equals_projected_truth() {
        let (xs, ys) = poisson_data(40, 17, 5);
        let pin = PcaModel::fit(&xs, 8, InnerProduct::Weighted).unwrap();
        let pout = PcaModel::fit(&ys, 12, InnerProduct::Weighted).unwrap();
        // φ = F_out ∘ Ψ ∘ G_in, assembled column by column.
        let mut a = nalgebra::DMatrix::zeros(12, 8);
        for j in 0..8 {
            let col = pout.encode(&solve_poisson(&pin.basis_function(j)).unwrap()).unwrap();
            a.set_column(j, &DVector::from_vec(col));
        }
        let sur = Surrogate::new(
            pin.clone(),
            pout.clone(),
            Standardizer::identity(8),
            Standardizer::identity(12),
            Regressor::Linear(LinearModel::new(a, DVector::zeros(12)).unwrap()),
        )
        .unwrap();
        let x = pin.project(&xs[0]).unwrap();
        let truth = pout.project(&solve_poisson(&x).unwrap()).unwrap();
        let got = sur.predict_function(&x).unwrap();
        assert!(got.sub(&truth).unwrap().norm() < 1e-8 * truth.norm());
        // Zero input with a zero-bias linear map gives the zero function.
        let z = sur.predict_function(&GridFunction::zeros(Domain::Box2d, 17)).unwrap();
        assert_eq!(z.max_abs(), 0.0);
        // Batched and single predictions agree; repeated calls are identical.
        let batch = sur.predict_functions(&xs[..3]).unwrap();
        for (b, x) in batch.iter().zip(&xs[..3]) {
            let single = sur.predict_function(x).unwrap();
            assert!(b.sub(&single).unwrap().max_abs() < 1e-14);
            assert_eq!(single, sur.predict_function(x).unwrap());
        }
    }

    #[test]
    fn ceiling_is_monotone_in_output_dimension() {
        let (_, ys) = poisson_data(30, 17, 6);
        // A full-rank input basis reproduces every training sample.
        let pin = PcaModel::fit(&ys, 30, InnerProduct::Weighted).unwrap();
        let full = PcaModel::fit(&ys, 20, InnerProduct::Weighted).unwrap();
        let mut prev = f64::INFINITY;
        for d in [2, 5, 10, 20] {
            let pout = full.truncated(d).unwrap();
            let e = psi_pca_error(&pin, &pout, &|x| Ok(x.clone()), &ys, &ys).unwrap().mean;
            assert!(e <= prev + 1e-12, "{d}: {e} > {prev}");
            prev = e;
        }
        assert!(prev < 0.05);
    }

    #[test]
    fn decoder_isometry_in_latent_output() {
        let (xs, ys) = poisson_data(20, 9, 7);
        let pin = PcaModel::fit(&xs, 4, InnerProduct::Weighted).unwrap();
        let pout = PcaModel::fit(&ys, 5, InnerProduct::Weighted).unwrap();
        let delta = [0.3, -0.1, 0.0, 0.7, 0.2];
        let base = LinearModel::new(nalgebra::DMatrix::zeros(5, 4), DVector::zeros(5)).unwrap();
        let shifted = LinearModel::new(nalgebra::DMatrix::zeros(5, 4), DVector::from_column_slice(&delta)).unwrap();
        let a = Surrogate::new(pin.clone(), pout.clone(), Standardizer::identity(4), Standardizer::identity(5), Regressor::Linear(base)).unwrap();
        let b = Surrogate::new(pin, pout, Standardizer::identity(4), Standardizer::identity(5), Regressor::Linear(shifted)).unwrap();
        let diff = a.predict_function(&xs[0]).unwrap().sub(&b.predict_function(&xs[0]).unwrap()).unwrap().norm();
        let dn = delta.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!((diff - dn).abs() < 1e-10 * dn);
    }
}
