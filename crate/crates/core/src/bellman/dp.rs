use serde::{Deserialize, Serialize};

use super::operator::BellmanOperator;
use crate::error::{invalid, Error, Result};
use crate::mdp::{Policy, TabularMDP};
use crate::measures::{
    compress, project_categorical, sup_metric, Metric, ReturnModel, SupportGrid,
};

/// Settings for [`distributional_dp`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DpOptions {
    pub metric: Metric,
    /// Target distance to the fixed point.
    pub tol: f64,
    pub max_iter: usize,
    /// Iterate the projected operator on this grid.
    pub grid: Option<SupportGrid>,
    /// Particle mode only: compress every state to at most this many atoms.
    pub particle_budget: Option<usize>,
}

impl DpOptions {
    pub fn categorical(grid: SupportGrid, tol: f64) -> Self {
        Self {
            metric: Metric::Cramer,
            tol,
            max_iter: 1_000_000,
            grid: Some(grid),
            particle_budget: None,
        }
    }

    pub fn particle(budget: usize, tol: f64) -> Self {
        Self {
            metric: Metric::W1,
            tol,
            max_iter: 1_000_000,
            grid: None,
            particle_budget: Some(budget),
        }
    }
}

#[derive(Debug, Clone)]
pub struct DpOutcome {
    pub model: ReturnModel,
    pub iterations: usize,
    /// Supremum distance between the last two iterates.
    pub last_gap: f64,
    /// Certified bound on the distance from `model` to the fixed point, in
    /// the chosen metric. At most `tol` on success.
    pub certified_error: f64,
    /// Particle mode: largest per-state distance moved by compression in the
    /// last iteration, in the chosen metric. Zero otherwise.
    pub compression: f64,
}

/// Contraction modulus used to turn an iterate gap into a distance to the fixed point.
pub fn contraction_factor(gamma: f64, metric: Metric, projected: bool) -> Result<f64> {
    match metric {
        Metric::W1 => Ok(gamma),
        Metric::Cramer => Ok(gamma.sqrt()),
        Metric::Wp(_) if !projected => Ok(gamma),
        Metric::Wp(_) => Err(invalid(
            "metric",
            "the projected operator is only known to contract in W1 and Cramér",
        )),
    }
}

/// Iterates `eta <- T eta` (or `Pi_K T eta` when a grid is given) until the
/// distance to the fixed point is certified to be at most `tol`.
///
/// With contraction factor `c`, consecutive gap `g` and a per-iteration
/// perturbation `b` (the compression step in particle mode, zero
/// otherwise), the new iterate lies within `(c g + b) / (1 - c)` of the
/// fixed point. Particle runs therefore need `tol` above the compression
/// floor `b / (1 - c)`; a larger budget lowers that floor.
pub fn distributional_dp(
    mdp: &TabularMDP,
    policy: &Policy,
    init: &ReturnModel,
    opts: &DpOptions,
) -> Result<DpOutcome> {
    if !(opts.tol > 0.0) {
        return Err(invalid("tol", "must be positive"));
    }
    if let Some(b) = opts.particle_budget {
        if b < 2 {
            return Err(invalid("particle_budget", "must be at least 2"));
        }
    }
    let op = BellmanOperator::new(mdp, policy)?;
    let factor = contraction_factor(mdp.gamma(), opts.metric, opts.grid.is_some())?;
    let mut model = match &opts.grid {
        Some(grid) => project_model(init, grid)?,
        None => init.to_particle(),
    };
    if model.n_states() != mdp.n_states() {
        return Err(Error::StateCountMismatch {
            left: model.n_states(),
            right: mdp.n_states(),
        });
    }
    for iter in 1..=opts.max_iter {
        let mut moved: f64 = 0.0;
        let next = match &opts.grid {
            Some(grid) => op.apply_projected(&model, grid)?,
            None => {
                let mut states = Vec::with_capacity(op.n_states());
                for s in 0..op.n_states() {
                    let exact = op.apply_state(&model, s);
                    let reduced = match opts.particle_budget {
                        Some(b) if exact.len() > b => {
                            let (p, _) = compress(&exact, b)?;
                            let d = opts.metric.distance(&exact.into(), &p.clone().into())?;
                            moved = moved.max(d);
                            p
                        }
                        _ => exact,
                    };
                    states.push(reduced);
                }
                ReturnModel::from_particles(states)
            }
        };
        let gap = sup_metric(&model, &next, opts.metric)?.sup;
        model = next;
        let certified = (factor * gap + moved) / (1.0 - factor);
        if certified <= opts.tol {
            return Ok(DpOutcome {
                model,
                iterations: iter,
                last_gap: gap,
                certified_error: certified,
                compression: moved,
            });
        }
    }
    Err(Error::NotConverged {
        what: "distributional dynamic programming",
        limit: opts.max_iter,
    })
}

/// Converts a particle model into the nearest representation on `grid`.
pub fn project_model(model: &ReturnModel, grid: &SupportGrid) -> Result<ReturnModel> {
    Ok(ReturnModel::from_categoricals(
        model
            .iter()
            .map(|d| project_categorical(d, grid))
            .collect::<Result<Vec<_>>>()?,
    ))
}
