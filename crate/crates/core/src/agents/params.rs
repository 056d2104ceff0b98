//! Sample-size and step-size formulas from the convergence theorems.
//!
//! The theorems state their requirements up to unnamed universal constants.
//! Every such constant is exposed in [`UniversalConstants`] and defaults to
//! 1, which need not satisfy the theorems' premises; the formulas are meant
//! for scaling studies, not certified guarantees.

use serde::{Deserialize, Serialize};

use super::schedule::StepSchedule;
use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UniversalConstants {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
    /// Step-size constant of the decaying schedule.
    pub c: f64,
}

impl Default for UniversalConstants {
    fn default() -> Self {
        Self { c1: 1.0, c2: 1.0, c3: 1.0, c4: 1.0, c: 1.0 }
    }
}

/// Quantities of the MDP and chain that enter the formulas.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainQuantities {
    pub gamma: f64,
    pub n_states: usize,
    /// `mu_min` of the generative law, or of the stationary law for Markov data.
    pub mu_min: f64,
    /// Needed for Markov settings only.
    pub t_mix: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Setting {
    Generative,
    DataDrop,
    VarianceReduced,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "setting", rename_all = "snake_case")]
pub enum ParameterBundle {
    Generative { k: usize, updates: usize, schedule: StepSchedule },
    DataDrop { k: usize, burn_in: usize, interval: usize, updates: usize, samples: usize, schedule: StepSchedule },
    VarianceReduced { k: usize, epochs: usize, n_ref: usize, t_epoch: usize, alpha: f64, samples: usize },
}

fn check_unit(name: &'static str, v: f64) -> Result<()> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(invalid(name, "must lie in (0, 1)"))
    }
}

fn ceil_int(x: f64) -> usize {
    // guard against 15.000000000000002 style rounding
    let r = x.round();
    if (x - r).abs() <= 1e-9 * r.abs().max(1.0) {
        r as usize
    } else {
        x.ceil() as usize
    }
}

/// Smallest integer `K` with `K > 4 / (eps^2 (1 - gamma)^3)`.
pub fn categorical_k(eps: f64, gamma: f64) -> Result<usize> {
    check_unit("eps", eps)?;
    if !(0.0..1.0).contains(&gamma) {
        return Err(invalid("gamma", "must lie in [0, 1)"));
    }
    let bound = 4.0 / (eps * eps * (1.0 - gamma).powi(3));
    let r = bound.round();
    let floor = if (bound - r).abs() <= 1e-9 * r.max(1.0) { r } else { bound.floor() };
    Ok(floor as usize + 1)
}

/// `T0 = ceil(t_mix log(12 / delta))`.
pub fn burn_in(t_mix: usize, delta: f64) -> Result<usize> {
    check_unit("delta", delta)?;
    Ok(ceil_int(t_mix as f64 * (12.0 / delta).ln()))
}

/// `q = ceil(t_mix log(3 T* / delta))`.
pub fn interval(t_mix: usize, updates: usize, delta: f64) -> Result<usize> {
    check_unit("delta", delta)?;
    Ok(ceil_int(t_mix as f64 * (3.0 * updates as f64 / delta).ln()).max(1))
}

/// `alpha = c4 / log(|S| t_epoch / delta) * min((1 - sqrt(gamma))^2, 1 / t_mix)`.
pub fn vr_step_size(c4: f64, n_states: usize, t_epoch: usize, delta: f64, gamma: f64, t_mix: usize) -> Result<f64> {
    check_unit("delta", delta)?;
    let log = (n_states as f64 * t_epoch as f64 / delta).ln();
    if !(log > 0.0) {
        return Err(invalid("t_epoch", "log(|S| t_epoch / delta) must be positive"));
    }
    let a = c4 / log * (1.0 - gamma.sqrt()).powi(2).min(1.0 / t_mix.max(1) as f64);
    if !(a > 0.0 && a < 1.0) {
        return Err(invalid("c4", "gives a step size outside (0, 1)"));
    }
    Ok(a)
}

/// Smallest integer `n >= lo` with `n >= rhs(n)`, assuming the inequality
/// keeps holding once it holds (true for the polylogarithmic right-hand
/// sides used here).
fn smallest_satisfying(lo: usize, rhs: impl Fn(f64) -> f64) -> Result<usize> {
    let holds = |n: usize| n as f64 >= rhs(n as f64);
    if holds(lo) {
        return Ok(lo);
    }
    let mut hi = lo.max(1);
    while !holds(hi) {
        hi = hi.checked_mul(2).ok_or_else(|| invalid("eps", "sample size overflows"))?;
    }
    let mut low = hi / 2;
    while hi - low > 1 {
        let mid = low + (hi - low) / 2;
        if holds(mid) {
            hi = mid;
        } else {
            low = mid;
        }
    }
    Ok(hi)
}

/// Smallest `T >= 3` with
/// `T >= C1 log^3 T / (eps^2 mu_min (1 - gamma)^3) * log(|S| T / delta)`.
/// Starting at 3 keeps `log T >= 1`.
pub fn td_updates(eps: f64, delta: f64, q: &ChainQuantities, c1: f64) -> Result<usize> {
    check_unit("eps", eps)?;
    check_unit("delta", delta)?;
    let scale = c1 / (eps * eps * q.mu_min * (1.0 - q.gamma).powi(3));
    smallest_satisfying(3, |t| scale * t.ln().powi(3) * (q.n_states as f64 * t / delta).ln())
}

pub fn theorem_parameters(
    setting: Setting,
    eps: f64,
    delta: f64,
    q: &ChainQuantities,
    consts: &UniversalConstants,
) -> Result<ParameterBundle> {
    check_unit("eps", eps)?;
    check_unit("delta", delta)?;
    let k = categorical_k(eps, q.gamma)?;
    let t_mix = || q.t_mix.ok_or_else(|| invalid("t_mix", "required for Markov settings"));
    match setting {
        Setting::Generative => Ok(ParameterBundle::Generative {
            k,
            updates: td_updates(eps, delta, q, consts.c1)?,
            schedule: StepSchedule::theorem42(consts.c, q.mu_min, q.gamma)?,
        }),
        Setting::DataDrop => {
            let tm = t_mix()?;
            let updates = td_updates(eps, delta, q, consts.c1)?;
            let t0 = burn_in(tm, delta)?;
            let iv = interval(tm, updates, delta)?;
            Ok(ParameterBundle::DataDrop {
                k,
                burn_in: t0,
                interval: iv,
                updates,
                samples: t0 + iv * updates,
                schedule: StepSchedule::theorem42(consts.c, q.mu_min, q.gamma)?,
            })
        }
        Setting::VarianceReduced => {
            let tm = t_mix()? as f64;
            let h = 1.0 / (1.0 - q.gamma);
            let log_term = (h * h / eps).ln();
            let epochs = (consts.c1 * log_term).ceil().max(1.0) as usize;
            let s = q.n_states as f64;
            let n_scale = consts.c2 / q.mu_min * (h.powi(3) / (eps * eps) + tm);
            let n_ref = smallest_satisfying(1, |n| n_scale * (s * n / delta).ln())?;
            let t_scale = consts.c3 / q.mu_min * (h.powi(3) + tm) * log_term.max(0.0);
            let t_epoch = smallest_satisfying(1, |n| t_scale * (s * n / delta).ln())?;
            let alpha = vr_step_size(consts.c4, q.n_states, t_epoch, delta, q.gamma, tm as usize)?;
            Ok(ParameterBundle::VarianceReduced {
                k,
                epochs,
                n_ref,
                t_epoch,
                alpha,
                samples: epochs * (n_ref + t_epoch),
            })
        }
    }
}
