//! Ground-truth forward maps.

mod burgers;
mod darcy;

pub(crate) use darcy::face_coefficients;

pub use burgers::{
    oracle_burgers_colehopf, solve_burgers, solve_burgers_with_dumps, BurgersProblem,
};
pub use darcy::{solve_darcy, solve_darcy_with_stats, solve_poisson, CgStats, EllipticProblem};
