//! Comparison of two solutions on one lattice: difference quotients, the jump
//! condition, the discrete Doléans-Dade exponential and the conditional
//! expectation representation of `Y¹ − Y²`.

mod compare;
mod gamma;
mod quotients;
mod representation;

pub use compare::{check_certificates, compare, Certificates, ComparisonReport, Order, Verdict, ORDER_TOL};
pub use gamma::{
    doleans_exponential, gamma_recursion, gamma_recursion_check, min_step_factor, GammaConvention, GammaInputs,
    GammaPath,
};
pub use quotients::{
    check_jump_condition, data_gaps, difference_quotients, linearization_residual, ComparisonCase, DataGaps,
    LinearizedCoeffs, QUOTIENT_ZERO,
};
pub use representation::{representation_check, represented_root, represented_values, RepresentationResult};
