//! Stochastic-approximation learners for the return distribution.
//!
//! [`run_td`] runs NTD (particle) or CTD (categorical) with generative or
//! Markovian data; [`run_td_datadrop`] adds burn-in and thinning on a
//! trajectory; [`run_vr`] runs the variance-reduced epoch scheme. All
//! runs are deterministic functions of their configuration and seed.
//!
//! ```
//! use disteval::agents::{run_td, RepresentationSpec, RunConfig, Sampling, StepSchedule};
//! use disteval::mdp::Gallery;
//!
//! let gallery = Gallery::embedded();
//! let entry = gallery.get("chain3").unwrap();
//! let config = RunConfig::new(
//!     &entry.mdp,
//!     &entry.policy,
//!     Sampling::generative_uniform(3),
//!     RepresentationSpec::Categorical { k: 32 },
//!     StepSchedule::theorem42(1.0, 1.0 / 3.0, entry.mdp.gamma()).unwrap(),
//!     1_000,
//!     7,
//! );
//! let result = run_td(&config, None).unwrap();
//! assert_eq!(result.samples, 1_000);
//! ```

mod averaging;
mod config;
mod estimate;
mod params;
mod result;
mod schedule;
mod td;
mod vr;

pub use averaging::polyak_average;
pub use config::{Averaging, RepresentationSpec, RunConfig, Sampling, TraceRequest, VRConfig};
pub use params::{
    burn_in, categorical_k, interval, td_updates, theorem_parameters, vr_step_size, ChainQuantities, ParameterBundle,
    Setting, UniversalConstants,
};
pub use result::{ErrorTrace, RunResult, TracePoint};
pub use schedule::StepSchedule;
pub use td::{run_td, run_td_datadrop};
pub use vr::{build_reference_operator, run_vr, ReferenceOperator};
