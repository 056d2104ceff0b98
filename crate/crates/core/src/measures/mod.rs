//! One-dimensional probability measures on the return range
//! `[0, 1/(1-gamma)]`.
//!
//! Two representations are supported: [`CategoricalDist`] on a fixed
//! equally spaced [`SupportGrid`], and [`ParticleDist`], a finite list of
//! weighted point masses. All metrics are exact integrals of step-function
//! CDFs under the left-continuous convention `F(x) = P[X < x]`, and accept
//! either representation on either side.
//!
//! | Function | Computes |
//! |----------|----------|
//! | [`w1`] | `int |F1 - F2|` |
//! | [`cramer`] | `(int (F1 - F2)^2)^{1/2}` |
//! | [`wp`] | `(int_0^1 |F1^{-1} - F2^{-1}|^p)^{1/p}` |
//! | [`project_categorical`] | Cramér projection onto a grid |
//! | [`compress`] | greedy particle reduction with a `W1` certificate |
//!
//! ```
//! use disteval::measures::{cramer, w1, Distribution, ParticleDist};
//!
//! let a = Distribution::dirac(0.0);
//! let b: Distribution = ParticleDist::new(vec![(0.0, 0.5), (1.0, 0.5)]).unwrap().into();
//! assert_eq!(w1(&a, &b), 0.5);
//! assert_eq!(cramer(&a, &b), 0.5);
//! ```

mod categorical;
mod compress;
mod distribution;
mod grid;
mod metrics;
mod model;
mod particle;
mod projection;

pub use categorical::CategoricalDist;
pub use compress::compress;
pub use distribution::{cdf, mean, mix, pushforward, Distribution};
pub use grid::SupportGrid;
pub use metrics::{cramer, sup_metric, w1, wp, Metric, MetricReport};
pub use model::{Representation, ReturnModel};
pub use particle::{ParticleDist, DEDUP_TOL};
pub use projection::project_categorical;

pub(crate) use distribution::merge_scaled;
pub(crate) use projection::{add_projected_pushforward, deposit};
