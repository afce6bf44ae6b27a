//! Stable entire solutions `u = -P - C + z` built by monotone iteration
//! between the zero sub-solution and the `W_j` super-solution.

mod polynomial;
mod solver;

pub use polynomial::{compute_cp, compute_cp_prime, AdmissibilityConstants, Maximum, Monomial, PolynomialSpec};
pub use solver::{
    certify_constructed, couplings, extrapolated_initial_data, monotone_iterate, outer_growth_ratio, ExtrapolatedData, super_solution, truncation_radius, ChainCheck, MonotoneConfig, RadialGrid,
    SuperSolution, SystemIterate,
};
