use serde::{Deserialize, Serialize};

use super::categorical::CategoricalDist;
use super::distribution::Distribution;
use super::grid::SupportGrid;
use super::particle::ParticleDist;
use crate::error::{Error, Result};

/// Which concrete representation a [`ReturnModel`] uses.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Representation {
    Categorical(SupportGrid),
    Particle,
}

/// One return distribution per state, all in the same representation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReturnModel {
    states: Vec<Distribution>,
}

impl ReturnModel {
    pub fn new(states: Vec<Distribution>) -> Result<Self> {
        if states.is_empty() {
            return Err(Error::InvalidDistribution("a return model needs at least one state".into()));
        }
        let model = Self { states };
        model.representation()?;
        Ok(model)
    }

    /// `delta_x` at every state, particle representation.
    pub fn dirac(n_states: usize, x: f64) -> Self {
        Self {
            states: vec![Distribution::dirac(x); n_states],
        }
    }

    /// Point mass on grid atom `k` at every state.
    pub fn categorical_dirac(n_states: usize, grid: SupportGrid, k: usize) -> Self {
        Self {
            states: vec![CategoricalDist::dirac(grid, k).into(); n_states],
        }
    }

    pub fn categorical_uniform(n_states: usize, grid: SupportGrid) -> Self {
        Self {
            states: vec![CategoricalDist::uniform(grid).into(); n_states],
        }
    }

    pub fn n_states(&self) -> usize {
        self.states.len()
    }

    pub fn state(&self, s: usize) -> &Distribution {
        &self.states[s]
    }

    pub fn iter(&self) -> impl Iterator<Item = &Distribution> {
        self.states.iter()
    }

    pub fn states(&self) -> &[Distribution] {
        &self.states
    }

    pub fn into_states(self) -> Vec<Distribution> {
        self.states
    }

    /// Replaces state `s`, keeping the representation homogeneous.
    pub fn set(&mut self, s: usize, dist: Distribution) -> Result<()> {
        let old = std::mem::replace(&mut self.states[s], dist);
        if let Err(e) = self.representation() {
            self.states[s] = old;
            return Err(e);
        }
        Ok(())
    }

    pub fn representation(&self) -> Result<Representation> {
        let first = match &self.states[0] {
            Distribution::Categorical(c) => Representation::Categorical(*c.grid()),
            Distribution::Particle(_) => Representation::Particle,
        };
        for (s, d) in self.states.iter().enumerate() {
            let ok = match (first, d) {
                (Representation::Categorical(g), Distribution::Categorical(c)) => *c.grid() == g,
                (Representation::Particle, Distribution::Particle(_)) => true,
                _ => false,
            };
            if !ok {
                return Err(Error::RepresentationMismatch(format!(
                    "state {s} differs from state 0"
                )));
            }
        }
        Ok(first)
    }

    pub fn grid(&self) -> Option<SupportGrid> {
        match self.representation() {
            Ok(Representation::Categorical(g)) => Some(g),
            _ => None,
        }
    }

    pub fn means(&self) -> Vec<f64> {
        self.states.iter().map(Distribution::mean).collect()
    }

    /// Every state is a probability measure within `tol` and supported in
    /// `[0, upper]`.
    pub fn is_valid(&self, tol: f64, upper: f64) -> bool {
        self.states
            .iter()
            .all(|d| d.is_valid(tol) && d.max_location() <= upper + 1e-9)
    }

    pub fn total_atoms(&self) -> usize {
        self.states
            .iter()
            .map(|d| match d {
                Distribution::Categorical(c) => c.probs().len(),
                Distribution::Particle(p) => p.len(),
            })
            .sum()
    }

    pub fn to_particle(&self) -> ReturnModel {
        Self {
            states: self
                .states
                .iter()
                .map(|d| Distribution::Particle(d.to_particle()))
                .collect(),
        }
    }

    pub(crate) fn from_particles(states: Vec<ParticleDist>) -> Self {
        Self {
            states: states.into_iter().map(Distribution::Particle).collect(),
        }
    }

    pub(crate) fn from_categoricals(states: Vec<CategoricalDist>) -> Self {
        Self {
            states: states.into_iter().map(Distribution::Categorical).collect(),
        }
    }
}

impl<'de> Deserialize<'de> for ReturnModel {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Repr {
            states: Vec<Distribution>,
        }
        let repr = Repr::deserialize(deserializer)?;
        ReturnModel::new(repr.states).map_err(serde::de::Error::custom)
    }
}
