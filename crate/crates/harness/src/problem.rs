//! The six forward problems: which measure generates inputs and which solver
//! produces outputs.

use pcanet_core::fields::{CoeffModel, MeasureKind, MeasureSpec};
use pcanet_core::rng::derive_seed;
use pcanet_core::solvers::{solve_burgers, solve_darcy, solve_poisson, BurgersProblem, EllipticProblem};
use pcanet_core::{Domain, GridFunction};

use crate::error::{HarnessError, Result};
use crate::meta::Meta;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Problem {
    /// `f ↦ u` with one fixed piecewise-constant coefficient, `f ~ μ_G`.
    LinearElliptic,
    /// `f ↦ u` for `-Δu = f`, `f ~ μ_G`.
    Poisson,
    /// `a ↦ u` with `f ≡ 1`, `a ~ μ_L`.
    DarcyLognormal,
    /// `a ↦ u` with `f ≡ 1`, `a ~ μ_P`.
    DarcyPiecewise,
    /// `u₀ ↦ u(·, t)` for viscous Burgers, `u₀ ~ μ_B`.
    Burgers,
    /// `f ↦ u` for `-Δu = f`, `f` from the uniform coefficient model.
    CoeffModel,
}

pub const ELLIPTIC_SOLVER: &str = "fd5-harmonic-pcg";
pub const BURGERS_SOLVER: &str = "pseudospectral-ifrk4";

impl Problem {
    pub const ALL: [Problem; 6] = [
        Problem::LinearElliptic,
        Problem::Poisson,
        Problem::DarcyLognormal,
        Problem::DarcyPiecewise,
        Problem::Burgers,
        Problem::CoeffModel,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::LinearElliptic => "linear_elliptic",
            Self::Poisson => "poisson",
            Self::DarcyLognormal => "darcy_lognormal",
            Self::DarcyPiecewise => "darcy_piecewise",
            Self::Burgers => "burgers",
            Self::CoeffModel => "coeff_model",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = Self::ALL.iter().map(|p| p.name()).collect();
                HarnessError::Usage(format!("unknown problem {s:?}; expected one of {}", names.join(", ")))
            })
    }

    pub fn domain(self) -> Domain {
        match self {
            Self::Burgers => Domain::Torus1d,
            _ => Domain::Box2d,
        }
    }

    pub fn measure_kind(self) -> MeasureKind {
        match self {
            Self::LinearElliptic | Self::Poisson => MeasureKind::MuG,
            Self::DarcyLognormal => MeasureKind::MuL,
            Self::DarcyPiecewise => MeasureKind::MuP,
            Self::Burgers => MeasureKind::MuB,
            Self::CoeffModel => MeasureKind::CoeffModel,
        }
    }

    pub fn solver(self) -> &'static str {
        match self {
            Self::Burgers => BURGERS_SOLVER,
            _ => ELLIPTIC_SOLVER,
        }
    }

    /// Is the forward map linear in the input?
    pub fn is_linear(self) -> bool {
        matches!(self, Self::LinearElliptic | Self::Poisson | Self::CoeffModel)
    }

    /// Is the input the diffusion coefficient (with unit forcing)?
    pub fn is_darcy(self) -> bool {
        matches!(self, Self::DarcyLognormal | Self::DarcyPiecewise)
    }
}

/// A problem instantiated on its source (finest) grid.
#[derive(Debug, Clone)]
pub struct ProblemSetup {
    pub problem: Problem,
    pub measure: MeasureSpec,
    pub source_resolution: usize,
    pub viscosity: f64,
    pub t_final: f64,
    pub coefficient_seed: u64,
    coefficient: Option<GridFunction>,
    coeff_model: Option<CoeffModel>,
}

impl ProblemSetup {
    /// `cutoff` defaults to the Nyquist wavenumber of the source grid.
    pub fn new(
        problem: Problem,
        source_resolution: usize,
        cutoff: Option<usize>,
        viscosity: f64,
        t_final: f64,
        coefficient_seed: u64,
    ) -> Result<Self> {
        let domain = problem.domain();
        domain.check_resolution(source_resolution)?;
        let cutoff = cutoff.unwrap_or_else(|| domain.nyquist(source_resolution));
        let measure = MeasureSpec::for_kind(problem.measure_kind(), cutoff);
        measure.validate()?;
        if cutoff > domain.nyquist(source_resolution) {
            return Err(HarnessError::Usage(format!(
                "mode cutoff {cutoff} exceeds the Nyquist limit {} of the n = {source_resolution} grid",
                domain.nyquist(source_resolution)
            )));
        }
        if problem == Problem::Burgers && !(viscosity > 0.0 && t_final > 0.0) {
            return Err(HarnessError::Usage("viscosity and final time must be positive".into()));
        }
        let coefficient = match problem {
            Problem::LinearElliptic => Some(
                MeasureSpec::mu_p(cutoff).sample(source_resolution, derive_seed(coefficient_seed, 0))?,
            ),
            _ => None,
        };
        let coeff_model = match problem {
            Problem::CoeffModel => Some(CoeffModel::new(measure)?),
            _ => None,
        };
        Ok(Self {
            problem,
            measure,
            source_resolution,
            viscosity,
            t_final,
            coefficient_seed,
            coefficient,
            coeff_model,
        })
    }

    pub fn domain(&self) -> Domain {
        self.problem.domain()
    }

    pub fn coeff_model(&self) -> Option<&CoeffModel> {
        self.coeff_model.as_ref()
    }

    /// The fixed coefficient of the linear elliptic problem on the source grid.
    pub fn fixed_coefficient(&self) -> Option<&GridFunction> {
        self.coefficient.as_ref()
    }

    /// Coefficients `ξ` (coefficient model only) and the input function.
    pub fn sample_coefficients(&self, seed: u64) -> Result<(Vec<f64>, GridFunction)> {
        let model = self
            .coeff_model
            .as_ref()
            .ok_or_else(|| HarnessError::Usage(format!("{} has no coefficient model", self.problem.name())))?;
        Ok(model.sample(model.len(), self.source_resolution, seed)?)
    }

    /// Input draw on the source grid.
    pub fn sample_input(&self, seed: u64) -> Result<GridFunction> {
        match self.problem {
            Problem::CoeffModel => Ok(self.sample_coefficients(seed)?.1),
            _ => Ok(self.measure.sample(self.source_resolution, seed)?),
        }
    }

    /// Coefficient and forcing of the elliptic problem for input `x`.
    pub fn elliptic_data(&self, x: &GridFunction) -> Result<(GridFunction, GridFunction)> {
        let n = x.resolution();
        let ones = GridFunction::constant(Domain::Box2d, n, 1.0);
        Ok(match self.problem {
            Problem::DarcyLognormal | Problem::DarcyPiecewise => (x.clone(), ones),
            Problem::Poisson | Problem::CoeffModel => (ones, x.clone()),
            Problem::LinearElliptic => {
                let a = self.coefficient.as_ref().expect("set for linear elliptic");
                (a.resample(n)?, x.clone())
            }
            Problem::Burgers => {
                return Err(HarnessError::Usage("burgers is not an elliptic problem".into()))
            }
        })
    }

    /// Ground-truth forward map on the grid of `x`.
    pub fn forward(&self, x: &GridFunction) -> Result<GridFunction> {
        if x.domain() != self.domain() {
            return Err(HarnessError::Usage(format!(
                "{} input must live on {}",
                self.problem.name(),
                self.domain().name()
            )));
        }
        match self.problem {
            Problem::Burgers => Ok(solve_burgers(&BurgersProblem {
                u0: x.clone(),
                viscosity: self.viscosity,
                t_final: self.t_final,
            })?),
            Problem::Poisson | Problem::CoeffModel => Ok(solve_poisson(x)?),
            _ => {
                let (a, f) = self.elliptic_data(x)?;
                Ok(solve_darcy(&EllipticProblem::new(a, f))?)
            }
        }
    }

    /// `(x, Ψ(x))` on the source grid.
    pub fn sample_pair(&self, seed: u64) -> Result<(GridFunction, GridFunction)> {
        let x = self.sample_input(seed)?;
        let y = self.forward(&x)?;
        Ok((x, y))
    }

    /// Problem, measure and solver entries of a dataset header.
    pub fn write_meta(&self, meta: &mut Meta) -> Result<()> {
        let m = &self.measure;
        meta.set("problem", self.problem.name())?;
        meta.set("domain", self.domain().name())?;
        meta.set("measure", m.kind.name())?;
        meta.set("measure_shift", m.shift)?;
        meta.set("measure_exponent", m.exponent)?;
        meta.set("measure_scale", m.scale)?;
        meta.set("measure_cutoff", m.cutoff)?;
        if m.kind == MeasureKind::MuP {
            meta.set_list("measure_thresholds", &[m.thresholds.0, m.thresholds.1])?;
        }
        meta.set("solver", self.problem.solver())?;
        match self.problem {
            Problem::Burgers => {
                meta.set("viscosity", self.viscosity)?;
                meta.set("t_final", self.t_final)?;
            }
            _ => meta.set("solver_tolerance", 1e-10)?,
        }
        if self.problem == Problem::LinearElliptic {
            meta.set("coefficient_seed", self.coefficient_seed)?;
        }
        meta.set("source_resolution", self.source_resolution)?;
        Ok(())
    }

    /// Rebuilds the setup recorded by [`write_meta`](Self::write_meta).
    pub fn from_meta(meta: &Meta) -> Result<Self> {
        let problem = Problem::parse(meta.require("problem")?)?;
        let setup = Self::new(
            problem,
            meta.parse_value("source_resolution")?,
            Some(meta.parse_value("measure_cutoff")?),
            meta.parse_opt("viscosity")?.unwrap_or(0.01),
            meta.parse_opt("t_final")?.unwrap_or(1.0),
            meta.parse_opt("coefficient_seed")?.unwrap_or(0),
        )?;
        let m = &setup.measure;
        let same = meta.require("measure")? == m.kind.name()
            && meta.parse_value::<f64>("measure_shift")? == m.shift
            && meta.parse_value::<f64>("measure_exponent")? == m.exponent
            && meta.parse_value::<f64>("measure_scale")? == m.scale
            && meta.require("domain")? == setup.domain().name()
            && meta.require("solver")? == problem.solver();
        if !same {
            return Err(HarnessError::Format(
                "header does not match the built-in definition of the problem".into(),
            ));
        }
        Ok(setup)
    }
}
