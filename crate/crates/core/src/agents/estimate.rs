//! Mutable per-state storage used inside the learners.

use crate::error::Result;
use crate::measures::{
    add_projected_pushforward, compress, merge_scaled, CategoricalDist, Distribution, ParticleDist, ReturnModel,
    SupportGrid,
};

#[derive(Debug, Clone)]
pub(crate) enum Estimate {
    Categorical { grid: SupportGrid, probs: Vec<Vec<f64>>, scratch: Vec<f64> },
    Particle { budget: usize, states: Vec<ParticleDist> },
}

impl Estimate {
    /// `budget` is used only for particle models.
    pub(crate) fn from_model(model: &ReturnModel, budget: usize) -> Self {
        match model.grid() {
            Some(grid) => Self::Categorical {
                grid,
                probs: model
                    .iter()
                    .map(|d| d.as_categorical().expect("homogeneous model").probs().to_vec())
                    .collect(),
                scratch: vec![0.0; grid.len()],
            },
            None => Self::Particle {
                budget,
                states: model.iter().map(Distribution::to_particle).collect(),
            },
        }
    }

    pub(crate) fn to_model(&self) -> ReturnModel {
        match self {
            Self::Categorical { grid, probs, .. } => ReturnModel::from_categoricals(
                probs.iter().map(|p| CategoricalDist::from_raw(*grid, p.clone())).collect(),
            ),
            Self::Particle { states, .. } => ReturnModel::from_particles(states.clone()),
        }
    }

    /// `eta(s) <- (1 - alpha) eta(s) + alpha [Pi] (b_{r,gamma})_# eta(s')`.
    /// Returns the compression certificate (zero in categorical mode).
    pub(crate) fn td_update(&mut self, s: usize, r: f64, s_next: usize, alpha: f64, gamma: f64) -> Result<f64> {
        match self {
            Self::Categorical { grid, probs, scratch } => {
                scratch.iter_mut().for_each(|x| *x = 0.0);
                add_projected_pushforward(scratch, grid, grid, &probs[s_next], r, gamma, 1.0);
                for (p, t) in probs[s].iter_mut().zip(scratch.iter()) {
                    *p = (1.0 - alpha) * *p + alpha * t;
                }
                debug_assert!(probs[s].iter().all(|&p| p >= 0.0));
                Ok(0.0)
            }
            Self::Particle { budget, states } => {
                let target: Vec<(f64, f64)> =
                    states[s_next].atoms().iter().map(|&(x, w)| (r + gamma * x, w)).collect();
                let merged = merge_scaled(states[s].atoms(), 1.0 - alpha, &target, alpha);
                let (dist, bound) = compress_to(ParticleDist::from_sorted(merged), *budget)?;
                states[s] = dist;
                Ok(bound)
            }
        }
    }
}

pub(crate) fn compress_to(dist: ParticleDist, budget: usize) -> Result<(ParticleDist, f64)> {
    if dist.len() <= budget {
        Ok((dist, 0.0))
    } else {
        compress(&dist, budget)
    }
}

impl Estimate {
    pub(crate) fn state(&self, s: usize) -> Distribution {
        match self {
            Self::Categorical { grid, probs, .. } => CategoricalDist::from_raw(*grid, probs[s].clone()).into(),
            Self::Particle { states, .. } => states[s].clone().into(),
        }
    }
}
