//! Variance of the one-step stochastic operator and its discounted
//! accumulation along the chain.

use faer::prelude::*;
use faer::Mat;

use super::operator::BellmanOperator;
use crate::error::{Error, Result};
use crate::mdp::{induced_kernel, Policy, TabularMDP};
use crate::measures::{cramer, pushforward, Distribution, ReturnModel};

/// `sigma(xi)(s) = E ||(T_hat - T) xi (s)||_{l2}^2`, computed exactly by
/// enumerating the `(r, s')` branches of state `s`.
pub fn sigma_variation(mdp: &TabularMDP, policy: &Policy, model: &ReturnModel) -> Result<Vec<f64>> {
    let op = BellmanOperator::new(mdp, policy)?;
    if model.n_states() != op.n_states() {
        return Err(Error::StateCountMismatch { left: model.n_states(), right: op.n_states() });
    }
    let gamma = mdp.gamma();
    let mut out = Vec::with_capacity(op.n_states());
    for s in 0..op.n_states() {
        let target = Distribution::Particle(op.apply_state(model, s));
        let mut acc = 0.0;
        for o in op.outcomes(s) {
            let branch = pushforward(model.state(o.next), o.reward, gamma);
            let d = cramer(&branch, &target);
            acc += o.prob * d * d;
        }
        out.push(acc);
    }
    Ok(out)
}

/// Solves `Sigma = sigma + gamma P Sigma` for a given one-step variance.
pub fn solve_second_order(mdp: &TabularMDP, policy: &Policy, sigma: &[f64]) -> Result<Vec<f64>> {
    let kernel = induced_kernel(mdp, policy)?;
    let n = kernel.n();
    if sigma.len() != n {
        return Err(Error::StateCountMismatch { left: sigma.len(), right: n });
    }
    let gamma = mdp.gamma();
    let lhs = Mat::<f64>::from_fn(n, n, |i, j| (i == j) as u8 as f64 - gamma * kernel.get(i, j));
    let rhs = Mat::<f64>::from_fn(n, 1, |i, _| sigma[i]);
    let x = lhs.partial_piv_lu().solve(&rhs);
    let out: Vec<f64> = (0..n).map(|i| x[(i, 0)]).collect();
    if out.iter().any(|v| !v.is_finite()) {
        return Err(Error::SolverFailure("non-finite second-order solution".into()));
    }
    Ok(out)
}

/// `Sigma = (I - gamma P)^{-1} sigma(eta)` where `eta` should be (an
/// accurate approximation of) the return distribution of `policy`.
pub fn second_order_sigma(mdp: &TabularMDP, policy: &Policy, eta: &ReturnModel) -> Result<Vec<f64>> {
    let sigma = sigma_variation(mdp, policy, eta)?;
    solve_second_order(mdp, policy, &sigma)
}
