//! Freedman-type bounds for Hilbert-space martingales and a Monte-Carlo
//! harness that checks them.
//!
//! ```
//! use disteval::concentration::{azuma_bound, freedman_bound, FreedmanParams};
//!
//! // a quiet martingale: W_n is far below n b^2
//! let params = FreedmanParams::new(0.05, 5, 22.45, 1.0).unwrap();
//! let freedman = freedman_bound(22.45, &params).unwrap();
//! let azuma = azuma_bound(1000, 1.0, 0.05).unwrap();
//! assert!(freedman < 0.5 * azuma);
//! ```

mod bounds;
mod martingale;

pub use bounds::{azuma_bound, bernstein_crude_bound, freedman_bound, freedman_tail, FreedmanParams};
pub use martingale::{
    shipped_specs, simulate, violates, violation_rate, wilson_interval, write_paths_csv, Embedding, Generator,
    MartingalePath, MartingaleSpec, ViolationReport,
};
