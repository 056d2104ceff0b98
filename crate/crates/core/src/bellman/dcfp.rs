//! Model-based categorical fixed point.
//!
//! On a grid with `K + 1` atoms the projected operator `Pi_K T` is linear in
//! the stacked probability vectors. Eliminating the last atom of every state
//! through `p_K = 1 - sum_{k<K} p_k` turns the fixed-point equation into an
//! affine system `(I - A) p = b` of size `|S| K` whose matrix is invertible
//! (in CDF coordinates the map is a `sqrt(gamma)`-contraction). The system
//! is solved directly by dense LU.

use faer::prelude::*;
use faer::Mat;

use super::operator::BellmanOperator;
use crate::error::{Error, Result};
use crate::mdp::{Policy, TabularMDP};
use crate::measures::{CategoricalDist, ReturnModel, SupportGrid};

/// Default cap on `|S| K`.
pub const DCFP_DIMENSION_CAP: usize = 200_000;

const RESIDUAL_TOL: f64 = 1e-10;
/// Negative coordinates larger than this in magnitude signal a bad solve.
const CLIP_LIMIT: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct DcfpOutcome {
    pub model: ReturnModel,
    /// `||(I - A) p - b||_inf` of the raw solve.
    pub residual: f64,
    /// Total negative mass removed before renormalizing.
    pub clipped_mass: f64,
}

pub fn dcfp_solve(mdp: &TabularMDP, policy: &Policy, grid: &SupportGrid) -> Result<DcfpOutcome> {
    dcfp_solve_capped(mdp, policy, grid, DCFP_DIMENSION_CAP)
}

pub fn dcfp_solve_capped(
    mdp: &TabularMDP,
    policy: &Policy,
    grid: &SupportGrid,
    cap: usize,
) -> Result<DcfpOutcome> {
    let op = BellmanOperator::new(mdp, policy)?;
    let ns = mdp.n_states();
    let k = grid.k();
    let dim = ns * k;
    if dim > cap {
        return Err(Error::DimensionCap { dim, cap });
    }
    let gamma = mdp.gamma();
    let idx = |s: usize, i: usize| s * k + i;

    // (I - A) and b, assembled from the projected pushforward of every grid
    // atom through every branch.
    let mut lhs = Mat::<f64>::identity(dim, dim);
    let mut rhs = Mat::<f64>::zeros(dim, 1);
    let mut column = vec![0.0; grid.len()];
    for s in 0..ns {
        for o in op.outcomes(s) {
            // contribution of the eliminated last atom of state o.next
            column.iter_mut().for_each(|c| *c = 0.0);
            deposit_basis(&mut column, grid, o.reward + gamma * grid.atom(k), o.prob);
            let last = column.clone();
            for (i, &v) in last.iter().enumerate().take(k) {
                rhs[(idx(s, i), 0)] += v;
            }
            for j in 0..k {
                column.iter_mut().for_each(|c| *c = 0.0);
                deposit_basis(&mut column, grid, o.reward + gamma * grid.atom(j), o.prob);
                for i in 0..k {
                    let a = column[i] - last[i];
                    if a != 0.0 {
                        lhs[(idx(s, i), idx(o.next, j))] -= a;
                    }
                }
            }
        }
    }

    let solution = lhs.partial_piv_lu().solve(&rhs);
    let mut residual: f64 = 0.0;
    let applied = &lhs * &solution;
    for r in 0..dim {
        let v = solution[(r, 0)];
        if !v.is_finite() {
            return Err(Error::SolverFailure("non-finite solution".into()));
        }
        residual = residual.max((applied[(r, 0)] - rhs[(r, 0)]).abs());
    }
    if residual > RESIDUAL_TOL {
        return Err(Error::SolverFailure(format!("residual {residual:e} exceeds {RESIDUAL_TOL:e}")));
    }

    let mut clipped_mass = 0.0;
    let mut states = Vec::with_capacity(ns);
    for s in 0..ns {
        let mut probs: Vec<f64> = (0..k).map(|i| solution[(idx(s, i), 0)]).collect();
        probs.push(1.0 - probs.iter().sum::<f64>());
        for p in probs.iter_mut() {
            if *p < 0.0 {
                if *p < -CLIP_LIMIT {
                    return Err(Error::SolverFailure(format!("probability {p:e} at state {s}")));
                }
                clipped_mass -= *p;
                *p = 0.0;
            }
        }
        let total: f64 = probs.iter().sum();
        probs.iter_mut().for_each(|p| *p /= total);
        states.push(CategoricalDist::new(*grid, probs)?);
    }
    Ok(DcfpOutcome {
        model: ReturnModel::from_categoricals(states),
        residual,
        clipped_mass,
    })
}

fn deposit_basis(column: &mut [f64], grid: &SupportGrid, x: f64, w: f64) {
    crate::measures::deposit(column, grid, x, w);
}
