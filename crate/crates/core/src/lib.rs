//! Logarithm-preserving Kantorovich–Bernstein operators on `[0, 1]` and the
//! numerical machinery for checking how they converge.
//!
//! The central operator of degree `n` with parameter `mu > 0` is
//!
//! ```text
//! L_n f(x) = ln_mu(x) * sum_k p_{n,k}(a_{n+1}(x)) * (n+1) * int_{k/(n+1)}^{(k+1)/(n+1)} f(t) / ln_mu(t) dt
//! ```
//!
//! with `ln_mu(x) = ln(1 + mu + x)` and `a_{n+1}` the reparameterization in
//! [`basis::ReparamCurve`]. It reproduces `ln_mu` exactly.

// `!(a <= b)` is written on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod basis;
pub mod exec;
pub mod funcexpr;
pub mod operators;
pub mod quadrature;

pub use basis::{LogWeight, ReparamCurve};
pub use exec::Execution;
pub use funcexpr::{FuncExpr, Smoothness, UnivariateFn};
pub use operators::{Family, OperatorSpec};
pub use quadrature::QuadratureRule;
