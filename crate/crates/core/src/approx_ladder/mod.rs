//! Lipschitz approximation of continuous drivers and the monotone ladder of
//! solutions.
//!
//! [`inf_convolution`] realizes `φ_n(x) = inf_y {φ(y) + n|x − y|}` as a
//! minimum over a finite grid anchored at `x`, so `φ_n ≤ φ` holds exactly and
//! `φ_n` is nondecreasing in `n`. [`run_ladder`] solves the equation with
//! `(f_n, h_n)` on a fixed lattice, Brownian path and clock for a schedule of
//! `n`, checking that the solutions increase node by node. The limit is the
//! minimal solution; [`Direction::Max`] builds the maximal one from
//! sup-convolutions.

mod cauchy;
mod convolution;
mod driver;
mod ladder;

pub use cauchy::{cauchy_diagnostics, CauchyReport, CauchyRow};
pub use convolution::{inf_convolution, sup_convolution, Convolved, LipschitzApprox};
pub use driver::{ContinuousDriver, Direction};
pub use ladder::{
    bracket_gap, default_rungs, minimality_check, run_ladder, LadderConfig, LadderResult, LadderSummary,
    MinimalityReport, Rung, RungGap, ABORT_TOL, MONOTONE_TOL,
};
