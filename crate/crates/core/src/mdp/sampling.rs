//! The two data regimes: i.i.d. transitions from a generative model, and a
//! single trajectory of the induced chain.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::model::{Policy, TabularMDP, Transition};
use crate::error::{invalid, Error, Result};
use crate::rng::{draw_cumulative, SimRng};

/// State distribution `mu` of the generative model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerativeConfig {
    mu: Vec<f64>,
}

impl GenerativeConfig {
    pub fn new(mu: Vec<f64>) -> Result<Self> {
        let total: f64 = mu.iter().sum();
        if mu.is_empty() || mu.iter().any(|m| !(*m > 0.0)) || (total - 1.0).abs() > 1e-12 {
            return Err(invalid("mu", "must be a strictly positive distribution"));
        }
        Ok(Self { mu })
    }

    pub fn uniform(n_states: usize) -> Self {
        Self {
            mu: vec![1.0 / n_states as f64; n_states],
        }
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    pub fn mu_min(&self) -> f64 {
        self.mu.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

fn cumulative(p: &[f64]) -> Vec<f64> {
    p.iter()
        .scan(0.0, |acc, x| {
            *acc += x;
            Some(*acc)
        })
        .collect()
}

/// Precomputed inverse-CDF tables for drawing transitions quickly.
#[derive(Debug, Clone)]
pub struct TransitionSampler {
    n_states: usize,
    n_actions: usize,
    policy: Vec<Vec<f64>>,
    transition: Vec<Vec<f64>>,
    rewards: Vec<(Vec<f64>, Vec<f64>)>,
}

impl TransitionSampler {
    pub fn new(mdp: &TabularMDP, policy: &Policy) -> Result<Self> {
        if policy.n_states() != mdp.n_states() || policy.n_actions() != mdp.n_actions() {
            return Err(Error::ShapeMismatch("policy does not match MDP".into()));
        }
        let (ns, na) = (mdp.n_states(), mdp.n_actions());
        let mut transition = Vec::with_capacity(ns * na);
        let mut rewards = Vec::with_capacity(ns * na);
        for s in 0..ns {
            for a in 0..na {
                transition.push(cumulative(mdp.transition(s, a)));
                let law = mdp.reward(s, a).outcomes();
                let values = law.iter().map(|o| o.0).collect();
                let probs: Vec<f64> = law.iter().map(|o| o.1).collect();
                rewards.push((values, cumulative(&probs)));
            }
        }
        Ok(Self {
            n_states: ns,
            n_actions: na,
            policy: (0..ns).map(|s| cumulative(policy.row(s))).collect(),
            transition,
            rewards,
        })
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    /// One Markov step from `s`.
    pub fn step(&self, rng: &mut SimRng, s: usize) -> Transition {
        let a = draw_cumulative(&self.policy[s], rng.random());
        let idx = s * self.n_actions + a;
        let (values, cum) = &self.rewards[idx];
        let r = values[draw_cumulative(cum, rng.random())];
        let s_next = draw_cumulative(&self.transition[idx], rng.random());
        Transition { s, a, r, s_next }
    }

    /// One i.i.d. tuple with `s ~ mu`.
    pub fn generative(&self, rng: &mut SimRng, cfg: &GenerativeConfig) -> Transition {
        let s = draw_state(rng, cfg.mu());
        self.step(rng, s)
    }
}

/// Draws an index from a probability vector.
pub fn draw_state(rng: &mut SimRng, dist: &[f64]) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, p) in dist.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    dist.len() - 1
}

/// `s ~ mu, a ~ pi(.|s), r ~ P_R(.|s,a), s' ~ P(.|s,a)`.
pub fn sample_generative(
    rng: &mut SimRng,
    cfg: &GenerativeConfig,
    mdp: &TabularMDP,
    policy: &Policy,
) -> Result<Transition> {
    if cfg.mu().len() != mdp.n_states() {
        return Err(Error::ShapeMismatch("mu does not match the state count".into()));
    }
    Ok(TransitionSampler::new(mdp, policy)?.generative(rng, cfg))
}

/// One step of the trajectory from state `s`.
pub fn sample_step(rng: &mut SimRng, mdp: &TabularMDP, policy: &Policy, s: usize) -> Result<Transition> {
    Ok(TransitionSampler::new(mdp, policy)?.step(rng, s))
}
