//! Tabular MDPs, evaluation policies and the Markov chain they induce.

mod chain;
pub mod gallery;
mod model;
mod sampling;

pub use chain::{induced_kernel, mixing_time, mixing_time_capped, period, stationary, ChainInfo, Kernel, MIXING_CAP};
pub use gallery::{Gallery, GalleryEntry};
pub use model::{MdpFile, Outcome, Policy, RewardLaw, TabularMDP, Transition};
pub use sampling::{draw_state, sample_generative, sample_step, GenerativeConfig, TransitionSampler};

