use crate::error::{Error, Result};
use crate::mdp::{Outcome, Policy, TabularMDP, Transition};
use crate::measures::{
    add_projected_pushforward, project_categorical, pushforward, CategoricalDist, Distribution,
    ParticleDist, ReturnModel, SupportGrid,
};

/// The exact distributional Bellman operator of a fixed `(mdp, policy)`,
/// with the one-step branch table precomputed.
///
/// `[T eta](s)` is the mixture over branches `(p, r, s')` of the law of
/// `r + gamma * G` with `G ~ eta(s')`.
#[derive(Debug, Clone)]
pub struct BellmanOperator {
    gamma: f64,
    outcomes: Vec<Vec<Outcome>>,
}

impl BellmanOperator {
    pub fn new(mdp: &TabularMDP, policy: &Policy) -> Result<Self> {
        Ok(Self {
            gamma: mdp.gamma(),
            outcomes: mdp.outcome_table(policy)?,
        })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn n_states(&self) -> usize {
        self.outcomes.len()
    }

    pub fn outcomes(&self, s: usize) -> &[Outcome] {
        &self.outcomes[s]
    }

    fn check(&self, model: &ReturnModel) -> Result<()> {
        if model.n_states() != self.n_states() {
            return Err(Error::StateCountMismatch {
                left: model.n_states(),
                right: self.n_states(),
            });
        }
        Ok(())
    }

    /// `[T eta](s)` as a particle distribution.
    pub fn apply_state(&self, model: &ReturnModel, s: usize) -> ParticleDist {
        let mut atoms = Vec::new();
        for o in &self.outcomes[s] {
            atoms.extend(
                model
                    .state(o.next)
                    .atoms()
                    .iter()
                    .filter(|a| a.1 > 0.0)
                    .map(|&(x, w)| (o.reward + self.gamma * x, o.prob * w)),
            );
        }
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        ParticleDist::from_sorted(atoms)
    }

    /// Full application; the result is in particle form.
    pub fn apply(&self, model: &ReturnModel) -> Result<ReturnModel> {
        self.check(model)?;
        Ok(ReturnModel::from_particles(
            (0..self.n_states()).map(|s| self.apply_state(model, s)).collect(),
        ))
    }

    /// `Pi_K T eta`. Categorical inputs take a direct grid-to-grid path.
    pub fn apply_projected(&self, model: &ReturnModel, grid: &SupportGrid) -> Result<ReturnModel> {
        self.check(model)?;
        let mut out = Vec::with_capacity(self.n_states());
        for s in 0..self.n_states() {
            out.push(self.apply_projected_state(model, s, grid)?);
        }
        Ok(ReturnModel::from_categoricals(out))
    }

    pub fn apply_projected_state(&self, model: &ReturnModel, s: usize, grid: &SupportGrid) -> Result<CategoricalDist> {
        let mut probs = vec![0.0; grid.len()];
        for o in &self.outcomes[s] {
            match model.state(o.next) {
                Distribution::Categorical(c) => {
                    add_projected_pushforward(&mut probs, grid, c.grid(), c.probs(), o.reward, self.gamma, o.prob);
                }
                d @ Distribution::Particle(_) => {
                    let projected = project_categorical(&pushforward(d, o.reward, self.gamma), grid)?;
                    for (acc, p) in probs.iter_mut().zip(projected.probs()) {
                        *acc += o.prob * p;
                    }
                }
            }
        }
        Ok(CategoricalDist::from_raw(*grid, probs))
    }
}

/// `[T^pi eta]`, exact, in particle form.
pub fn apply_bellman(mdp: &TabularMDP, policy: &Policy, model: &ReturnModel) -> Result<ReturnModel> {
    BellmanOperator::new(mdp, policy)?.apply(model)
}

/// The single-sample operator at the visited state:
/// `(b_{r,gamma})_# eta(s')`.
pub fn apply_empirical(t: &Transition, model: &ReturnModel, gamma: f64) -> Distribution {
    pushforward(model.state(t.s_next), t.r, gamma)
}

/// `Pi_K T^pi eta`, categorical on `grid`.
pub fn apply_projected_bellman(
    mdp: &TabularMDP,
    policy: &Policy,
    model: &ReturnModel,
    grid: &SupportGrid,
) -> Result<ReturnModel> {
    BellmanOperator::new(mdp, policy)?.apply_projected(model, grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::TransitionSampler;
    use crate::measures::{w1, ReturnModel};
    use crate::rng::stream;
    use crate::testkit::{random_particles, two_state, unit_reward, zero_reward};
    use std::collections::HashMap;

    #[test]
    fn zero_reward_keeps_dirac_at_zero() {
        let (mdp, pi) = zero_reward(3, 0.8);
        let out = apply_bellman(&mdp, &pi, &ReturnModel::dirac(3, 0.0)).unwrap();
        for d in out.iter() {
            assert_eq!(d.atoms().as_ref(), &[(0.0, 1.0)]);
        }
    }

    #[test]
    fn unit_reward_shifts_zero_to_one() {
        let (mdp, pi) = unit_reward(0.5);
        let out = apply_bellman(&mdp, &pi, &ReturnModel::dirac(1, 0.0)).unwrap();
        assert_eq!(out.state(0).atoms().as_ref(), &[(1.0, 1.0)]);
    }

    #[test]
    fn matches_branch_enumeration() {
        let (mdp, pi) = two_state(0.7);
        let mut rng = stream(3, 0);
        let model = random_particles(&mut rng, 2, 4, mdp.upper());
        let out = apply_bellman(&mdp, &pi, &model).unwrap();
        for s in 0..2 {
            let mut atoms = Vec::new();
            for a in 0..2 {
                for s2 in 0..2 {
                    for &(r, pr) in mdp.reward(s, a).outcomes() {
                        let w = pi.prob(s, a) * mdp.transition(s, a)[s2] * pr;
                        for &(x, q) in model.state(s2).atoms().iter() {
                            atoms.push((r + 0.7 * x, w * q));
                        }
                    }
                }
            }
            let oracle = Distribution::Particle(ParticleDist::new(atoms).unwrap());
            assert!(w1(out.state(s), &oracle) < 1e-12);
            assert!((out.state(s).mean() - oracle.mean()).abs() < 1e-12);
        }
    }

    #[test]
    fn empirical_operator_on_zero_model_is_reward_dirac() {
        let t = Transition { s: 0, a: 1, r: 0.25, s_next: 1 };
        let out = apply_empirical(&t, &ReturnModel::dirac(2, 0.0), 0.9);
        assert_eq!(out.atoms().as_ref(), &[(0.25, 1.0)]);
    }

    #[test]
    fn empirical_operator_averages_to_exact() {
        let (mdp, pi) = two_state(0.7);
        let mut rng = stream(11, 0);
        let model = random_particles(&mut rng, 2, 3, mdp.upper());
        let exact = apply_bellman(&mdp, &pi, &model).unwrap();
        let sampler = TransitionSampler::new(&mdp, &pi).unwrap();
        let n = 100_000;
        let mut counts: HashMap<(u64, usize), usize> = HashMap::new();
        for _ in 0..n {
            let t = sampler.step(&mut rng, 0);
            *counts.entry((t.r.to_bits(), t.s_next)).or_default() += 1;
        }
        let pieces: Vec<(f64, Distribution)> = counts
            .iter()
            .map(|(&(r, s2), &c)| {
                let t = Transition { s: 0, a: 0, r: f64::from_bits(r), s_next: s2 };
                (c as f64 / n as f64, apply_empirical(&t, &model, 0.7))
            })
            .collect();
        let refs: Vec<(f64, &Distribution)> = pieces.iter().map(|(w, d)| (*w, d)).collect();
        let average = crate::measures::mix(&refs).unwrap();
        let mut gap: f64 = 0.0;
        for &(x, _) in exact.state(0).atoms().iter().chain(average.atoms().iter()) {
            for y in [x, x + 1e-9] {
                gap = gap.max((exact.state(0).cdf(y) - average.cdf(y)).abs());
            }
        }
        assert!(gap <= 4.0 / (n as f64).sqrt(), "gap {gap}");
    }

    #[test]
    fn projected_matches_projection_of_exact() {
        let (mdp, pi) = two_state(0.6);
        let grid = SupportGrid::new(16, 0.6).unwrap();
        let mut rng = stream(5, 0);
        let model = random_particles(&mut rng, 2, 5, mdp.upper());
        let fast = apply_projected_bellman(&mdp, &pi, &model, &grid).unwrap();
        let exact = apply_bellman(&mdp, &pi, &model).unwrap();
        let cat_model = crate::bellman::project_model(&model, &grid).unwrap();
        let fast_cat = apply_projected_bellman(&mdp, &pi, &cat_model, &grid).unwrap();
        for s in 0..2 {
            let slow = project_categorical(exact.state(s), &grid).unwrap();
            let got = fast.state(s).as_categorical().unwrap();
            for (a, b) in got.probs().iter().zip(slow.probs()) {
                assert!((a - b).abs() < 1e-12);
            }
            let cat_exact = apply_bellman(&mdp, &pi, &cat_model).unwrap();
            let slow = project_categorical(cat_exact.state(s), &grid).unwrap();
            for (a, b) in fast_cat.state(s).as_categorical().unwrap().probs().iter().zip(slow.probs()) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn zero_dynamics_leave_grid_inputs_fixed() {
        let (mdp, pi) = zero_reward(1, 0.5);
        let grid = SupportGrid::new(8, 0.5).unwrap();
        let model = ReturnModel::categorical_dirac(1, grid, 0);
        let out = apply_projected_bellman(&mdp, &pi, &model, &grid).unwrap();
        assert_eq!(out, model);
    }
}
