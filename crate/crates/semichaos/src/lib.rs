//! Decides Devaney chaos for weighted composition semigroups
//! (T(t)f)(x) = h_t(x) f(phi(t,x)) on weighted L^p spaces over an open
//! interval, where phi is the semiflow of x' = F(x) and h_t is the
//! exponential of the weight h accumulated along the flow.
//!
//! The decision runs through a flow-free integral test on each connected
//! component of {F != 0}; an independent flow-based route (transported
//! densities, series and time-integrals) exists for cross-validation, plus a
//! direct semigroup simulator and a Sobolev-space reduction.

// Guards written as `!(x > 0.0)` deliberately treat NaN as a failure of the
// positive branch; rewriting them as `x <= 0.0` would let NaN slip through.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod expr;

pub use error::{Error, Result};
pub use expr::Expr;
pub mod cli;
pub mod criterion;
pub mod flowcheck;
pub mod model;
mod ode;
pub mod quadrature;
pub mod semiflow;
pub mod simulator;
pub mod sobolev;
pub mod zeroset;
