//! Numerical toolkit for spherical mixed p-spin glasses: Parisi-type
//! variational problems, finite-N landscapes, interpolation bounds and
//! Langevin dynamics.

// `!(x > 0.0)` style guards are intentional: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod hamiltonian;
pub mod landscape;
pub mod langevin;
pub mod mixture;
pub mod parisi;
pub mod quad;
pub mod replica_bounds;
pub mod report;

pub use error::{Error, Result};
pub use mixture::{e_infinity_pure, EInfinity, Mixture};
