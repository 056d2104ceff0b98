//! Distributional Bellman operators and model-based solvers.
//!
//! | item | role |
//! |---|---|
//! | [`apply_bellman`] | exact operator, particle output |
//! | [`apply_empirical`] | one-sample operator |
//! | [`apply_projected_bellman`] | categorical projection of the exact operator |
//! | [`distributional_dp`] | fixed-point iteration with a contraction stopping rule |
//! | [`dcfp_solve`] | direct linear solve for the categorical fixed point |
//! | [`sigma_variation`], [`second_order_sigma`] | variance diagnostics |

mod dcfp;
mod dp;
mod operator;
mod variance;

pub use dcfp::{dcfp_solve, dcfp_solve_capped, DcfpOutcome, DCFP_DIMENSION_CAP};
pub use dp::{contraction_factor, distributional_dp, project_model, DpOptions, DpOutcome};
pub use operator::{apply_bellman, apply_empirical, apply_projected_bellman, BellmanOperator};
pub use variance::{second_order_sigma, sigma_variation, solve_second_order};
