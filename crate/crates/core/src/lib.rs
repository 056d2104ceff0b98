//! Distributional policy evaluation on tabular MDPs.
//!
//! The crate estimates the per-state law of the discounted return under a
//! fixed policy and cross-checks every estimator against exact references:
//!
//! - [`measures`]: categorical and particle distributions, exact `W1`,
//!   Cramér and `W_p` metrics, Cramér projection, particle compression.
//! - [`mdp`]: tabular MDPs, policies, the induced Markov chain (stationary
//!   law, mixing time) and the two sampling regimes.
//! - [`bellman`]: exact and empirical distributional Bellman operators,
//!   distributional dynamic programming, the categorical fixed point by a
//!   direct linear solve, and second-order variance diagnostics.
//! - [`agents`]: NTD and CTD learners with generative or Markovian data,
//!   data-drop/burn-in, variance-reduced epochs, Polyak–Ruppert averaging,
//!   step-size schedules and the sample-size formulas.
//! - [`concentration`]: Freedman, Azuma and Bernstein bounds for
//!   Hilbert-space martingales and an empirical violation-rate harness.

pub mod agents;
pub mod bellman;
pub mod concentration;
pub mod error;
pub mod mdp;
pub mod measures;
pub mod rng;
#[cfg(test)]
mod testkit;

pub use error::{Error, Result};
