//! The Markov chain a policy induces on the state space.

use std::collections::VecDeque;

use super::model::{Policy, TabularMDP};
use crate::error::{Error, Result};

/// Default cap on the number of matrix powers tried by [`mixing_time`].
pub const MIXING_CAP: usize = 1_000_000;

const STATIONARY_RESIDUAL: f64 = 1e-12;
const POWER_ITERATION_CAP: usize = 10_000_000;

/// Square row-stochastic matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    n: usize,
    data: Vec<f64>,
}

impl Kernel {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != n {
                return Err(Error::ShapeMismatch(format!("kernel row {i} has {} entries", row.len())));
            }
            let total: f64 = row.iter().sum();
            if row.iter().any(|p| !(*p >= 0.0)) || (total - 1.0).abs() > 1e-12 {
                return Err(Error::ShapeMismatch(format!("kernel row {i} is not a distribution")));
            }
            data.extend(row);
        }
        Ok(Self { n, data })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    /// `v^T P`.
    pub fn left_mul(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for (i, &vi) in v.iter().enumerate() {
            for (o, p) in out.iter_mut().zip(self.row(i)) {
                *o += vi * p;
            }
        }
        out
    }

    /// `P v`.
    pub fn right_mul(&self, v: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| self.row(i).iter().zip(v).map(|(p, x)| p * x).sum())
            .collect()
    }

    fn matmul(&self, other: &Kernel) -> Kernel {
        let n = self.n;
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == 0.0 {
                    continue;
                }
                for j in 0..n {
                    data[i * n + j] += a * other.data[k * n + j];
                }
            }
        }
        Kernel { n, data }
    }

    fn successors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        self.row(i).iter().enumerate().filter(|(_, p)| **p > 0.0).map(|(j, _)| j)
    }
}

/// `P^pi(s'|s) = sum_a pi(a|s) P(s'|s,a)`.
pub fn induced_kernel(mdp: &TabularMDP, policy: &Policy) -> Result<Kernel> {
    if policy.n_states() != mdp.n_states() || policy.n_actions() != mdp.n_actions() {
        return Err(Error::ShapeMismatch(format!(
            "policy is {}x{}, MDP is {}x{}",
            policy.n_states(),
            policy.n_actions(),
            mdp.n_states(),
            mdp.n_actions()
        )));
    }
    let n = mdp.n_states();
    let mut data = vec![0.0; n * n];
    for s in 0..n {
        for a in 0..mdp.n_actions() {
            let pa = policy.prob(s, a);
            for (d, p) in data[s * n..(s + 1) * n].iter_mut().zip(mdp.transition(s, a)) {
                *d += pa * p;
            }
        }
    }
    Ok(Kernel { n, data })
}

fn bfs_levels(n: usize, start: usize, succ: impl Fn(usize) -> Vec<usize>) -> Vec<Option<usize>> {
    let mut level = vec![None; n];
    level[start] = Some(0);
    let mut queue = VecDeque::from([start]);
    while let Some(u) = queue.pop_front() {
        let lu = level[u].expect("queued states have a level");
        for v in succ(u) {
            if level[v].is_none() {
                level[v] = Some(lu + 1);
                queue.push_back(v);
            }
        }
    }
    level
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Rejects reducible chains and returns the period of an irreducible one.
pub fn period(kernel: &Kernel) -> Result<usize> {
    let n = kernel.n;
    let forward = bfs_levels(n, 0, |u| kernel.successors(u).collect());
    if forward.iter().any(Option::is_none) {
        return Err(Error::Reducible(0));
    }
    let backward = bfs_levels(n, 0, |u| (0..n).filter(|&v| kernel.get(v, u) > 0.0).collect());
    if let Some(s) = backward.iter().position(Option::is_none) {
        return Err(Error::Reducible(s));
    }
    // every cycle length is a multiple of the period; BFS levels give the
    // gcd over all edges of level(u) + 1 - level(v)
    let level: Vec<usize> = forward.into_iter().map(|l| l.expect("reachable")).collect();
    let mut g = 0;
    for u in 0..n {
        for v in kernel.successors(u) {
            g = gcd(g, (level[u] + 1).abs_diff(level[v]));
        }
    }
    Ok(g)
}

/// Stationary distribution of an irreducible aperiodic kernel, by power
/// iteration until `||mu P - mu||_1 <= 1e-12`.
pub fn stationary(kernel: &Kernel) -> Result<Vec<f64>> {
    let p = period(kernel)?;
    if p != 1 {
        return Err(Error::Periodic(p));
    }
    let n = kernel.n;
    let mut mu = vec![1.0 / n as f64; n];
    for _ in 0..POWER_ITERATION_CAP {
        let next = kernel.left_mul(&mu);
        let residual: f64 = next.iter().zip(&mu).map(|(a, b)| (a - b).abs()).sum();
        mu = next;
        let total: f64 = mu.iter().sum();
        mu.iter_mut().for_each(|m| *m /= total);
        if residual <= STATIONARY_RESIDUAL {
            return Ok(mu);
        }
    }
    Err(Error::NotConverged {
        what: "stationary power iteration",
        limit: POWER_ITERATION_CAP,
    })
}

fn total_variation(a: &[f64], b: &[f64]) -> f64 {
    0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>()
}

/// Smallest `t >= 1` with `max_s TV(P^t(.|s), mu) <= 1/4`.
pub fn mixing_time(kernel: &Kernel, stationary: &[f64]) -> Result<usize> {
    mixing_time_capped(kernel, stationary, MIXING_CAP)
}

pub fn mixing_time_capped(kernel: &Kernel, stationary: &[f64], cap: usize) -> Result<usize> {
    let mut power = kernel.clone();
    for t in 1..=cap {
        let worst = (0..kernel.n)
            .map(|s| total_variation(power.row(s), stationary))
            .fold(0.0, f64::max);
        if worst <= 0.25 {
            return Ok(t);
        }
        power = power.matmul(kernel);
    }
    Err(Error::NotConverged {
        what: "mixing time search",
        limit: cap,
    })
}

/// Kernel, stationary law and mixing time of the chain induced by a policy.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainInfo {
    pub kernel: Kernel,
    pub stationary: Vec<f64>,
    pub mu_min: f64,
    pub t_mix: usize,
}

impl ChainInfo {
    pub fn compute(mdp: &TabularMDP, policy: &Policy) -> Result<Self> {
        let kernel = induced_kernel(mdp, policy)?;
        let stationary = stationary(&kernel)?;
        let t_mix = mixing_time(&kernel, &stationary)?;
        let mu_min = stationary.iter().copied().fold(f64::INFINITY, f64::min);
        Ok(Self {
            kernel,
            stationary,
            mu_min,
            t_mix,
        })
    }
}
