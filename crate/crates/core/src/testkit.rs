//! Small MDPs shared by unit tests.

use crate::mdp::{Policy, RewardLaw, TabularMDP};
use crate::measures::{ParticleDist, ReturnModel};
use crate::rng::SimRng;
use rand::Rng;

pub fn zero_reward(n: usize, gamma: f64) -> (TabularMDP, Policy) {
    let row = vec![1.0 / n as f64; n];
    let mdp = TabularMDP::new(
        gamma,
        vec![vec![row; 1]; n],
        vec![vec![RewardLaw::deterministic(0.0).unwrap()]; n],
    )
    .unwrap();
    (mdp, Policy::uniform(n, 1))
}

/// One state, reward one, so the return is `1 / (1 - gamma)`.
pub fn unit_reward(gamma: f64) -> (TabularMDP, Policy) {
    let mdp = TabularMDP::new(
        gamma,
        vec![vec![vec![1.0]]],
        vec![vec![RewardLaw::deterministic(1.0).unwrap()]],
    )
    .unwrap();
    (mdp, Policy::uniform(1, 1))
}

/// Two states, two actions, random rewards.
pub fn two_state(gamma: f64) -> (TabularMDP, Policy) {
    let mdp = TabularMDP::new(
        gamma,
        vec![
            vec![vec![0.9, 0.1], vec![0.2, 0.8]],
            vec![vec![0.5, 0.5], vec![0.3, 0.7]],
        ],
        vec![
            vec![
                RewardLaw::new(vec![(0.0, 0.5), (1.0, 0.5)]).unwrap(),
                RewardLaw::deterministic(0.25).unwrap(),
            ],
            vec![
                RewardLaw::new(vec![(1.0, 0.2), (0.5, 0.8)]).unwrap(),
                RewardLaw::deterministic(0.0).unwrap(),
            ],
        ],
    )
    .unwrap();
    (mdp, Policy::new(vec![vec![0.7, 0.3], vec![0.4, 0.6]]).unwrap())
}

/// A deterministic cycle `0 -> 1 -> 2 -> 0` with fixed rewards.
pub fn cycle3(gamma: f64) -> (TabularMDP, Policy) {
    let mdp = TabularMDP::new(
        gamma,
        vec![
            vec![vec![0.0, 1.0, 0.0]],
            vec![vec![0.0, 0.0, 1.0]],
            vec![vec![1.0, 0.0, 0.0]],
        ],
        vec![
            vec![RewardLaw::deterministic(0.2).unwrap()],
            vec![RewardLaw::deterministic(0.9).unwrap()],
            vec![RewardLaw::deterministic(0.5).unwrap()],
        ],
    )
    .unwrap();
    (mdp, Policy::uniform(3, 1))
}

/// A particle model with a few random atoms per state inside the return range.
pub fn random_particles(rng: &mut SimRng, n_states: usize, atoms: usize, upper: f64) -> ReturnModel {
    let states = (0..n_states)
        .map(|_| {
            let raw: Vec<(f64, f64)> = (0..atoms)
                .map(|_| (rng.random::<f64>() * upper, rng.random::<f64>() + 0.05))
                .collect();
            let total: f64 = raw.iter().map(|a| a.1).sum();
            ParticleDist::new(raw.into_iter().map(|(x, w)| (x, w / total)).collect()).unwrap()
        })
        .collect();
    ReturnModel::from_particles(states)
}
