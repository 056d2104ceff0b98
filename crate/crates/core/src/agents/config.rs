use serde::{Deserialize, Serialize};

use super::schedule::StepSchedule;
use crate::error::{invalid, Error, Result};
use crate::mdp::{GenerativeConfig, Policy, TabularMDP};
use crate::measures::{Metric, Representation, ReturnModel, SupportGrid};

/// How transitions are obtained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum Sampling {
    /// i.i.d. start states drawn from `mu`.
    Generative { mu: Vec<f64> },
    /// One trajectory whose first state is drawn from `initial`.
    Markov { initial: Vec<f64> },
}

impl Sampling {
    pub fn generative_uniform(n_states: usize) -> Self {
        Self::Generative { mu: vec![1.0 / n_states as f64; n_states] }
    }

    pub fn markov_uniform(n_states: usize) -> Self {
        Self::Markov { initial: vec![1.0 / n_states as f64; n_states] }
    }

    pub(crate) fn check(&self, n_states: usize) -> Result<()> {
        match self {
            Self::Generative { mu } => {
                if mu.len() != n_states {
                    return Err(Error::StateCountMismatch { left: mu.len(), right: n_states });
                }
                GenerativeConfig::new(mu.clone()).map(|_| ())
            }
            Self::Markov { initial } => {
                let total: f64 = initial.iter().sum();
                if initial.len() != n_states {
                    return Err(Error::StateCountMismatch { left: initial.len(), right: n_states });
                }
                if initial.iter().any(|p| !(*p >= 0.0)) || (total - 1.0).abs() > 1e-12 {
                    return Err(invalid("initial", "must be a probability vector"));
                }
                Ok(())
            }
        }
    }
}

/// The family the learner works in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum RepresentationSpec {
    /// CTD on the grid with `k + 1` atoms for the MDP's discount.
    Categorical { k: usize },
    /// NTD with every state compressed to at most `budget` atoms.
    Particle { budget: usize },
}

impl RepresentationSpec {
    pub(crate) fn check(&self) -> Result<()> {
        match *self {
            Self::Categorical { k } if k < 1 => Err(invalid("k", "must be at least 1")),
            Self::Particle { budget } if budget < 2 => Err(invalid("budget", "must be at least 2")),
            _ => Ok(()),
        }
    }

    pub fn grid(&self, gamma: f64) -> Result<Option<SupportGrid>> {
        match *self {
            Self::Categorical { k } => SupportGrid::new(k, gamma).map(Some),
            Self::Particle { .. } => Ok(None),
        }
    }

    /// `delta_0` in every state.
    pub fn initial_model(&self, n_states: usize, gamma: f64) -> Result<ReturnModel> {
        match self.grid(gamma)? {
            Some(grid) => Ok(ReturnModel::categorical_dirac(n_states, grid, 0)),
            None => Ok(ReturnModel::dirac(n_states, 0.0)),
        }
    }

    pub(crate) fn accepts(&self, model: &ReturnModel, gamma: f64) -> Result<()> {
        let rep = model.representation()?;
        let ok = match (self, rep) {
            (Self::Categorical { .. }, Representation::Categorical(g)) => Some(g) == self.grid(gamma)?,
            (Self::Particle { .. }, Representation::Particle) => true,
            _ => false,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::RepresentationMismatch(format!(
                "initial model does not match {self:?}"
            )))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Averaging {
    LastIterate,
    /// Uniform average of the iterates after update `t0`.
    Polyak { t0: usize },
}

/// Which errors to record while running.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRequest<'a> {
    pub reference: &'a ReturnModel,
    pub metric: Metric,
    /// Update counts at which to record; the final count is always added.
    pub checkpoints: Vec<usize>,
}

/// Settings for [`run_td`](super::run_td) and
/// [`run_td_datadrop`](super::run_td_datadrop).
#[derive(Debug, Clone)]
pub struct RunConfig<'a> {
    pub mdp: &'a TabularMDP,
    pub policy: &'a Policy,
    pub sampling: Sampling,
    pub representation: RepresentationSpec,
    pub schedule: StepSchedule,
    /// Number of updates.
    pub updates: usize,
    pub seed: u64,
    /// Markov data-drop only: samples discarded before the first update.
    pub burn_in: usize,
    /// Markov data-drop only: samples between consecutive updates.
    pub interval: usize,
    pub averaging: Averaging,
    /// Defaults to `delta_0` everywhere.
    pub init: Option<ReturnModel>,
}

impl<'a> RunConfig<'a> {
    pub fn new(
        mdp: &'a TabularMDP,
        policy: &'a Policy,
        sampling: Sampling,
        representation: RepresentationSpec,
        schedule: StepSchedule,
        updates: usize,
        seed: u64,
    ) -> Self {
        Self {
            mdp,
            policy,
            sampling,
            representation,
            schedule,
            updates,
            seed,
            burn_in: 0,
            interval: 1,
            averaging: Averaging::LastIterate,
            init: None,
        }
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if self.updates < 1 {
            return Err(invalid("updates", "must be at least 1"));
        }
        if self.interval < 1 {
            return Err(invalid("interval", "must be at least 1"));
        }
        if let Averaging::Polyak { t0 } = self.averaging {
            if t0 >= self.updates {
                return Err(invalid("t0", "Polyak burn-in must be smaller than the number of updates"));
            }
        }
        self.representation.check()?;
        self.schedule.validate()?;
        self.sampling.check(self.mdp.n_states())?;
        if let Some(init) = &self.init {
            if init.n_states() != self.mdp.n_states() {
                return Err(Error::StateCountMismatch { left: init.n_states(), right: self.mdp.n_states() });
            }
            self.representation.accepts(init, self.mdp.gamma())?;
        }
        Ok(())
    }

    pub(crate) fn initial_model(&self) -> Result<ReturnModel> {
        match &self.init {
            Some(m) => Ok(m.clone()),
            None => self.representation.initial_model(self.mdp.n_states(), self.mdp.gamma()),
        }
    }
}

/// Settings for [`run_vr`](super::run_vr). Data is always Markovian.
#[derive(Debug, Clone)]
pub struct VRConfig<'a> {
    pub mdp: &'a TabularMDP,
    pub policy: &'a Policy,
    /// Law of the first state.
    pub initial: Vec<f64>,
    pub representation: RepresentationSpec,
    pub epochs: usize,
    /// Samples per reference operator.
    pub n_ref: usize,
    pub t_epoch: usize,
    pub alpha: f64,
    pub seed: u64,
    pub init: Option<ReturnModel>,
}

impl VRConfig<'_> {
    pub(crate) fn validate(&self) -> Result<()> {
        if self.epochs < 1 {
            return Err(invalid("epochs", "must be at least 1"));
        }
        if self.n_ref < 1 {
            return Err(invalid("n_ref", "must be at least 1"));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(invalid("alpha", "must lie in (0, 1)"));
        }
        self.representation.check()?;
        Sampling::Markov { initial: self.initial.clone() }.check(self.mdp.n_states())?;
        if let Some(init) = &self.init {
            if init.n_states() != self.mdp.n_states() {
                return Err(Error::StateCountMismatch { left: init.n_states(), right: self.mdp.n_states() });
            }
            self.representation.accepts(init, self.mdp.gamma())?;
        }
        Ok(())
    }
}
