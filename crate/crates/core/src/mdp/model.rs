use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

const ROW_TOL: f64 = 1e-12;

/// A finitely supported reward law on `[0, 1]` as `(value, probability)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RewardLaw {
    outcomes: Vec<(f64, f64)>,
}

impl RewardLaw {
    pub fn new(outcomes: Vec<(f64, f64)>) -> Result<Self> {
        if outcomes.is_empty() {
            return Err(Error::InvalidMdp("empty reward law".into()));
        }
        for &(r, p) in &outcomes {
            if !(0.0..=1.0).contains(&r) {
                return Err(Error::InvalidMdp(format!("reward {r} outside [0, 1]")));
            }
            if !(p >= 0.0) {
                return Err(Error::InvalidMdp(format!("reward probability {p}")));
            }
        }
        let total: f64 = outcomes.iter().map(|o| o.1).sum();
        if (total - 1.0).abs() > ROW_TOL {
            return Err(Error::InvalidMdp(format!("reward law sums to {total}")));
        }
        Ok(Self { outcomes })
    }

    pub fn deterministic(r: f64) -> Result<Self> {
        Self::new(vec![(r, 1.0)])
    }

    pub fn outcomes(&self) -> &[(f64, f64)] {
        &self.outcomes
    }

    pub fn mean(&self) -> f64 {
        self.outcomes.iter().map(|(r, p)| r * p).sum()
    }
}

/// `<S, A, P_R, P, gamma>` with finite state and action sets.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularMDP {
    n_states: usize,
    n_actions: usize,
    gamma: f64,
    /// `P(s' | s, a)` at `[(s * A + a) * S + s']`.
    transition: Vec<f64>,
    /// reward law at `[s * A + a]`
    rewards: Vec<RewardLaw>,
}

fn check_row(row: &[f64], what: impl Fn() -> String) -> Result<()> {
    if row.iter().any(|p| !(*p >= 0.0)) {
        return Err(Error::InvalidMdp(format!("{}: negative entry", what())));
    }
    let total: f64 = row.iter().sum();
    if (total - 1.0).abs() > ROW_TOL {
        return Err(Error::InvalidMdp(format!("{}: row sums to {total}", what())));
    }
    Ok(())
}

impl TabularMDP {
    /// `transition[s][a][s']` and `rewards[s][a]`.
    pub fn new(gamma: f64, transition: Vec<Vec<Vec<f64>>>, rewards: Vec<Vec<RewardLaw>>) -> Result<Self> {
        if !(gamma > 0.0 && gamma < 1.0) {
            return Err(invalid("gamma", format!("{gamma} not in (0, 1)")));
        }
        let n_states = transition.len();
        if n_states == 0 {
            return Err(Error::InvalidMdp("no states".into()));
        }
        let n_actions = transition[0].len();
        if n_actions == 0 {
            return Err(Error::InvalidMdp("no actions".into()));
        }
        if rewards.len() != n_states {
            return Err(Error::InvalidMdp(format!(
                "{} reward rows for {n_states} states",
                rewards.len()
            )));
        }
        let mut flat = Vec::with_capacity(n_states * n_actions * n_states);
        let mut laws = Vec::with_capacity(n_states * n_actions);
        for (s, (rows, rs)) in transition.into_iter().zip(rewards).enumerate() {
            if rows.len() != n_actions || rs.len() != n_actions {
                return Err(Error::InvalidMdp(format!("state {s}: expected {n_actions} actions")));
            }
            for (a, row) in rows.into_iter().enumerate() {
                if row.len() != n_states {
                    return Err(Error::InvalidMdp(format!(
                        "P(.|{s},{a}) has {} entries, expected {n_states}",
                        row.len()
                    )));
                }
                check_row(&row, || format!("P(.|{s},{a})"))?;
                flat.extend(row);
            }
            laws.extend(rs);
        }
        Ok(Self {
            n_states,
            n_actions,
            gamma,
            transition: flat,
            rewards: laws,
        })
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Upper end of the return range.
    pub fn upper(&self) -> f64 {
        1.0 / (1.0 - self.gamma)
    }

    pub fn with_gamma(&self, gamma: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma < 1.0) {
            return Err(invalid("gamma", format!("{gamma} not in (0, 1)")));
        }
        Ok(Self { gamma, ..self.clone() })
    }

    pub fn transition(&self, s: usize, a: usize) -> &[f64] {
        let start = (s * self.n_actions + a) * self.n_states;
        &self.transition[start..start + self.n_states]
    }

    pub fn reward(&self, s: usize, a: usize) -> &RewardLaw {
        &self.rewards[s * self.n_actions + a]
    }

    fn check_policy(&self, policy: &Policy) -> Result<()> {
        if policy.n_states() != self.n_states || policy.n_actions() != self.n_actions {
            return Err(Error::ShapeMismatch(format!(
                "policy is {}x{}, MDP is {}x{}",
                policy.n_states(),
                policy.n_actions(),
                self.n_states,
                self.n_actions
            )));
        }
        Ok(())
    }

    /// One-step outcomes `(probability, reward, next state)` from `s` under
    /// `policy`, with identical `(reward, next state)` pairs merged across
    /// actions and zero-probability branches dropped.
    pub fn outcomes(&self, policy: &Policy, s: usize) -> Result<Vec<Outcome>> {
        self.check_policy(policy)?;
        let mut out: Vec<Outcome> = Vec::new();
        for a in 0..self.n_actions {
            let pa = policy.prob(s, a);
            if pa == 0.0 {
                continue;
            }
            for (s_next, &pt) in self.transition(s, a).iter().enumerate() {
                if pt == 0.0 {
                    continue;
                }
                for &(r, pr) in self.reward(s, a).outcomes() {
                    if pr == 0.0 {
                        continue;
                    }
                    let prob = pa * pt * pr;
                    match out.iter_mut().find(|o| o.reward == r && o.next == s_next) {
                        Some(o) => o.prob += prob,
                        None => out.push(Outcome {
                            prob,
                            reward: r,
                            next: s_next,
                        }),
                    }
                }
            }
        }
        Ok(out)
    }

    /// All states' outcome lists.
    pub fn outcome_table(&self, policy: &Policy) -> Result<Vec<Vec<Outcome>>> {
        (0..self.n_states).map(|s| self.outcomes(policy, s)).collect()
    }

    /// `r^pi(s) = sum_a pi(a|s) E[R | s, a]`.
    pub fn expected_reward(&self, policy: &Policy) -> Result<Vec<f64>> {
        self.check_policy(policy)?;
        Ok((0..self.n_states)
            .map(|s| {
                (0..self.n_actions)
                    .map(|a| policy.prob(s, a) * self.reward(s, a).mean())
                    .sum()
            })
            .collect())
    }
}

/// A merged one-step branch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Outcome {
    pub prob: f64,
    pub reward: f64,
    pub next: usize,
}

/// `pi(a | s)` for every state.
#[derive(Debug, Clone, PartialEq)]
pub struct Policy {
    n_states: usize,
    n_actions: usize,
    probs: Vec<f64>,
}

impl Policy {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n_states = rows.len();
        let n_actions = rows.first().map_or(0, Vec::len);
        if n_states == 0 || n_actions == 0 {
            return Err(Error::InvalidPolicy("empty policy".into()));
        }
        let mut probs = Vec::with_capacity(n_states * n_actions);
        for (s, row) in rows.into_iter().enumerate() {
            if row.len() != n_actions {
                return Err(Error::InvalidPolicy(format!("row {s} has {} actions", row.len())));
            }
            check_row(&row, || format!("pi(.|{s})"))
                .map_err(|e| Error::InvalidPolicy(e.to_string()))?;
            probs.extend(row);
        }
        Ok(Self {
            n_states,
            n_actions,
            probs,
        })
    }

    pub fn uniform(n_states: usize, n_actions: usize) -> Self {
        Self {
            n_states,
            n_actions,
            probs: vec![1.0 / n_actions as f64; n_states * n_actions],
        }
    }

    /// Always takes `actions[s]` in state `s`.
    pub fn deterministic(n_actions: usize, actions: &[usize]) -> Result<Self> {
        let rows = actions
            .iter()
            .map(|&a| {
                if a >= n_actions {
                    return Err(Error::InvalidPolicy(format!("action {a} out of range")));
                }
                let mut row = vec![0.0; n_actions];
                row[a] = 1.0;
                Ok(row)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(rows)
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn prob(&self, s: usize, a: usize) -> f64 {
        self.probs[s * self.n_actions + a]
    }

    pub fn row(&self, s: usize) -> &[f64] {
        &self.probs[s * self.n_actions..(s + 1) * self.n_actions]
    }
}

/// One observed step `(s, a, r, s')`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub s: usize,
    pub a: usize,
    pub r: f64,
    pub s_next: usize,
}

/// On-disk shape of an MDP together with the evaluated policy.
///
/// ```json
/// {
///   "name": "chain3",
///   "gamma": 0.5,
///   "transitions": [[[0.5, 0.5, 0.0], ...], ...],
///   "rewards": [[[[0.0, 0.5], [1.0, 0.5]], ...], ...],
///   "policy": [[0.5, 0.5], ...]
/// }
/// ```
///
/// `transitions[s][a][s']`, `rewards[s][a]` is a list of `[value, prob]`
/// pairs, `policy[s][a]`. Unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MdpFile {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub gamma: f64,
    pub transitions: Vec<Vec<Vec<f64>>>,
    pub rewards: Vec<Vec<Vec<[f64; 2]>>>,
    pub policy: Vec<Vec<f64>>,
}

impl MdpFile {
    pub fn build(&self) -> Result<(TabularMDP, Policy)> {
        let rewards = self
            .rewards
            .iter()
            .map(|row| {
                row.iter()
                    .map(|law| RewardLaw::new(law.iter().map(|&[r, p]| (r, p)).collect()))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        let mdp = TabularMDP::new(self.gamma, self.transitions.clone(), rewards)?;
        let policy = Policy::new(self.policy.clone())?;
        mdp.check_policy(&policy)?;
        Ok((mdp, policy))
    }

    pub fn from_model(name: &str, mdp: &TabularMDP, policy: &Policy) -> Self {
        let (ns, na) = (mdp.n_states(), mdp.n_actions());
        Self {
            name: name.to_string(),
            description: None,
            gamma: mdp.gamma(),
            transitions: (0..ns)
                .map(|s| (0..na).map(|a| mdp.transition(s, a).to_vec()).collect())
                .collect(),
            rewards: (0..ns)
                .map(|s| {
                    (0..na)
                        .map(|a| mdp.reward(s, a).outcomes().iter().map(|&(r, p)| [r, p]).collect())
                        .collect()
                })
                .collect(),
            policy: (0..ns).map(|s| policy.row(s).to_vec()).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> (TabularMDP, Policy) {
        let mdp = TabularMDP::new(
            0.9,
            vec![vec![vec![1.0, 0.0], vec![0.0, 1.0]], vec![vec![0.5, 0.5], vec![0.5, 0.5]]],
            vec![
                vec![RewardLaw::deterministic(0.0).unwrap(), RewardLaw::deterministic(1.0).unwrap()],
                vec![
                    RewardLaw::new(vec![(0.0, 0.5), (1.0, 0.5)]).unwrap(),
                    RewardLaw::new(vec![(0.0, 0.5), (1.0, 0.5)]).unwrap(),
                ],
            ],
        )
        .unwrap();
        (mdp, Policy::uniform(2, 2))
    }

    #[test]
    fn validates_rows() {
        let law = || vec![vec![RewardLaw::deterministic(0.0).unwrap()]];
        assert!(TabularMDP::new(0.5, vec![vec![vec![0.9]]], law()).is_err());
        assert!(TabularMDP::new(1.0, vec![vec![vec![1.0]]], law()).is_err());
        assert!(TabularMDP::new(0.5, vec![vec![vec![1.0]]], law()).is_ok());
        assert!(RewardLaw::new(vec![(1.5, 1.0)]).is_err());
        assert!(RewardLaw::new(vec![(0.5, 0.5)]).is_err());
        assert!(Policy::new(vec![vec![0.5, 0.6]]).is_err());
        assert!(Policy::new(vec![vec![1.2, -0.2]]).is_err());
    }

    #[test]
    fn outcomes_merge_branches() {
        let (mdp, pi) = tiny();
        let out = mdp.outcomes(&pi, 1).unwrap();
        // both actions give the same (r, s') branches, merged to four
        assert_eq!(out.len(), 4);
        assert!(out.iter().all(|o| (o.prob - 0.25).abs() < 1e-15));
        let total: f64 = mdp.outcomes(&pi, 0).unwrap().iter().map(|o| o.prob).sum();
        assert!((total - 1.0).abs() < 1e-15);
        assert_eq!(mdp.expected_reward(&pi).unwrap(), vec![0.5, 0.5]);
        assert!(mdp.outcomes(&Policy::uniform(3, 2), 0).is_err());
    }

    #[test]
    fn file_round_trip() {
        let (mdp, pi) = tiny();
        let file = MdpFile::from_model("tiny", &mdp, &pi);
        let json = serde_json::to_string(&file).unwrap();
        let back: MdpFile = serde_json::from_str(&json).unwrap();
        assert_eq!(back.build().unwrap(), (mdp, pi));
        let bad = json.replacen("\"gamma\"", "\"gama\"", 1);
        assert!(serde_json::from_str::<MdpFile>(&bad).is_err());
    }
}
