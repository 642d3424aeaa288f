//! Backward recursion on the recombining jump lattice, conditioned on one
//! Brownian path.

mod backward;
mod driver;
mod lattice;
mod norms;
mod picard;

pub(crate) use backward::{check_shapes, terminal_layer};
pub use backward::{projection_residual, solve_backward, solve_backward_with, Solution, SolverConfig};
pub use driver::{
    BoundFn, CoefFn, DriverFn, DriverSpec, GrowthCheck, LipschitzCheck, LipschitzConstants, NoiseCoef, TerminalSpec,
    TerminalState,
};
pub use lattice::{build_lattice, build_lattice_with_cap, lattice_node_count, JumpLattice, Layer, DEFAULT_NODE_CAP};
pub use norms::{apriori_bound, norms, solution_norms, NormConfig, NormReport, NormWeights};
pub use picard::{em_distance, picard_solve, PicardHistory};
