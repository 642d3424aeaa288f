//! Lattice laboratory for generalized backward doubly stochastic differential
//! equations driven by a pure-jump Lévy process with finitely many jump sizes.
//!
//! The crate is organised bottom-up:
//!
//! - [`levy_basis`] builds the power moments of the jump measure and the
//!   orthonormal polynomials that define the Teugels martingales.
//! - [`path_engine`] simulates the Lévy process, the Brownian motion, the
//!   increasing clock and the Teugels increments.
//! - [`solver`] solves the backward equation exactly over a recombining jump
//!   lattice conditioned on one Brownian path.
//! - [`comparison_lab`] linearizes two solutions, checks the jump positivity
//!   condition, builds the Doléans-Dade exponential and verifies ordering.
//! - [`approx_ladder`] implements inf/sup-convolution approximations and the
//!   monotone ladder that yields minimal and maximal solutions for continuous
//!   drivers.
//!
//! Data-parallel loops (Monte Carlo ensembles, lattice layers, convolution
//! sweeps) go through [`Execution`]; with the default `parallel` feature they
//! run on rayon, otherwise everything is sequential.

// `!(x > 0.0)` is the NaN-rejecting form used throughout input validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod approx_ladder;
pub mod comparison_lab;
mod error;
mod exec;
pub mod levy_basis;
pub mod numeric;
pub mod path_engine;
pub mod solver;

pub use error::{Error, Result};
pub use exec::Execution;

/// Crate version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
