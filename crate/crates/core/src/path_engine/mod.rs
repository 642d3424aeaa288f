//! Discrete-time realizations of the Lévy process, the Brownian motion, the
//! increasing clock and the Teugels martingale increments.
//!
//! Every path is driven by its own ChaCha stream derived from a master seed and
//! the path index, so ensembles are reproducible regardless of how many
//! threads generate them.

mod brownian;
mod clock;
mod ensemble;
mod grid;
mod levy;
mod rng;
mod teugels;

pub use brownian::{simulate_brownian, BrownianPath};
pub use clock::{clock_values, ClockA, ClockProfile};
pub use ensemble::{
    empirical_bracket, increment_mean, jump_count_chi_square, simulate_ensemble, ChiSquareReport, PathEnsemble,
    SimulatedPath,
};
pub use grid::TimeGrid;
pub use levy::{simulate_levy, LevyPath};
pub use rng::{path_rng, Stream};
pub use teugels::{power_increments, teugels_increments, RawPowerIncrements, TeugelsIncrements};
