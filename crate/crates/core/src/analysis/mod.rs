//! Norms, moduli of smoothness, K-functionals, the maximal function, the
//! asymptotic differential operator and its saturation equation, and
//! convergence-rate fitting.
//!
//! Sup norms and moduli are evaluated on grids, which gives lower
//! estimates of the true quantities. K-functionals are minimized over a
//! finite candidate family, which gives upper estimates. Inequalities of
//! the form `error <= C * modulus` or `error <= C * K` are therefore checked
//! in the direction in which a violation is real evidence of a failure.

mod grid;
mod kfunctional;
mod maximal;
mod modulus;
mod norms;
mod rate;
mod saturation;
mod voronovskaja;

pub use grid::{Grid, GridKind};
pub use kfunctional::{k_functional, DEFAULT_SEARCH_BUDGET, KCandidate, KFunctional, KFunctionalEstimate, KVariant};
pub use maximal::{maximal_function, MaximalFunction};
pub use modulus::{forward_difference, modulus_grid_for, modulus_omega, modulus_omega_r, omega, ModulusEstimate};
pub use norms::{norm, norm_values, NormKind};
pub use rate::{rate_fit, RateFit};
pub use saturation::{saturation_weights, SaturationSolution};
pub use voronovskaja::{
    coefficient_a, coefficient_b, n_q_n, ode_expression, q_n, voronovskaja_check, voronovskaja_rhs,
    Voronovskaja, VoronovskajaRow,
};

use crate::basis::BasisError;
use crate::funcexpr::FuncError;
use crate::operators::OperatorError;
use crate::quadrature::QuadError;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("grid spacing {h} is too coarse for delta = {delta} (need h <= delta / 20)")]
    Resolution { h: f64, delta: f64 },
    #[error("{0}")]
    Domain(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Func(#[from] FuncError),
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error(transparent)]
    Quadrature(#[from] QuadError),
    #[error(transparent)]
    Basis(#[from] BasisError),
}
