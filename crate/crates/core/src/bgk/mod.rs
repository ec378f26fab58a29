//! The discretized BGK model: grid, operators, moments and collision term.

mod config;
mod equilibrium;
mod grid;
mod moments;
mod operators;

pub use config::BgkConfig;
pub use equilibrium::{build_collision_term, build_equilibrium, equilibrium_factor, CollisionTerm};
pub use grid::{build_upwind_matrices, fourth_difference, UpwindMatrices};
pub use moments::{collision_frequency, compute_moments, conserved_sums, ConservedSums, MacroFields};
pub use operators::{
    build_dissipation_operator, build_transport_operator, shifted_transport, SystemOperators, OPERATOR_ROUNDING,
};

pub(crate) use moments::require_positive;
