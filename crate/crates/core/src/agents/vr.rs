//! Variance-reduced TD over epochs on a single trajectory.

use std::collections::BTreeMap;

use super::config::{RepresentationSpec, TraceRequest, VRConfig};
use super::estimate::{compress_to, Estimate};
use super::result::{ErrorTrace, RunResult};
use crate::error::{Error, Result};
use crate::mdp::{draw_state, Transition, TransitionSampler};
use crate::measures::{
    add_projected_pushforward, merge_scaled, mix, project_categorical, pushforward, Distribution, ParticleDist,
    ReturnModel, SupportGrid, DEDUP_TOL,
};
use crate::rng::stream;

/// Batch estimate of `T eta` from consecutive samples: at every visited
/// state, the equal-weight mixture of `(b_{r_i,gamma})_# eta(s'_i)` over the
/// samples leaving that state.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceOperator {
    /// `None` at unvisited states.
    pub states: Vec<Option<Distribution>>,
    pub counts: Vec<usize>,
}

impl ReferenceOperator {
    pub fn first_unvisited(&self) -> Option<usize> {
        self.counts.iter().position(|&c| c == 0)
    }
}

pub fn build_reference_operator(samples: &[Transition], model: &ReturnModel, gamma: f64) -> Result<ReferenceOperator> {
    if samples.is_empty() {
        return Err(crate::error::invalid("samples", "need at least one transition"));
    }
    let n = model.n_states();
    let mut groups: Vec<BTreeMap<(u64, usize), usize>> = vec![BTreeMap::new(); n];
    let mut counts = vec![0; n];
    for t in samples {
        if t.s >= n || t.s_next >= n {
            return Err(Error::StateCountMismatch { left: t.s.max(t.s_next) + 1, right: n });
        }
        counts[t.s] += 1;
        *groups[t.s].entry((t.r.to_bits(), t.s_next)).or_default() += 1;
    }
    let mut states = Vec::with_capacity(n);
    for (s, g) in groups.iter().enumerate() {
        if counts[s] == 0 {
            states.push(None);
            continue;
        }
        let parts: Vec<(f64, Distribution)> = g
            .iter()
            .map(|(&(r, s2), &c)| (c as f64 / counts[s] as f64, pushforward(model.state(s2), f64::from_bits(r), gamma)))
            .collect();
        let refs: Vec<(f64, &Distribution)> = parts.iter().map(|(w, d)| (*w, d)).collect();
        states.push(Some(mix(&refs)?));
    }
    Ok(ReferenceOperator { states, counts })
}

/// Resolves a signed atom list with unit total mass into a probability
/// measure by replacing its CDF with the running maximum clamped to
/// `[0, 1]`. Returns the measure and the `W1` distance between the two CDFs.
pub(crate) fn rectify(mut atoms: Vec<(f64, f64)>) -> (ParticleDist, f64) {
    atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut merged: Vec<(f64, f64)> = Vec::with_capacity(atoms.len());
    for (x, w) in atoms {
        match merged.last_mut() {
            Some(last) if x - last.0 <= DEDUP_TOL => last.1 += w,
            _ => merged.push((x, w)),
        }
    }
    let mut out = Vec::with_capacity(merged.len());
    let (mut f, mut r, mut cost) = (0.0f64, 0.0f64, 0.0);
    for (i, &(x, w)) in merged.iter().enumerate() {
        f += w;
        let next = r.max(f).clamp(0.0, 1.0);
        if next > r {
            out.push((x, next - r));
        }
        r = next;
        if let Some(&(x2, _)) = merged.get(i + 1) {
            cost += (f - r).abs() * (x2 - x);
        }
    }
    let total: f64 = out.iter().map(|a| a.1).sum();
    out.iter_mut().for_each(|a| a.1 /= total);
    (ParticleDist::from_sorted(out), cost)
}

/// VR-NTD (particle) or VR-CTD (categorical).
///
/// Each epoch draws `n_ref` samples to build the reference operator at the
/// current reference point, then runs `t_epoch` recentered updates with
/// constant step `alpha`. The trajectory continues across epochs. If `trace`
/// is given, the reference point is scored after every epoch (and before
/// the first), with `t` the epoch index.
pub fn run_vr(config: &VRConfig, trace: Option<&TraceRequest>) -> Result<RunResult> {
    config.validate()?;
    let gamma = config.mdp.gamma();
    let sampler = TransitionSampler::new(config.mdp, config.policy)?;
    let mut rng = stream(config.seed, 0);
    let init = match &config.init {
        Some(m) => m.clone(),
        None => config.representation.initial_model(config.mdp.n_states(), gamma)?,
    };
    let budget = match config.representation {
        RepresentationSpec::Particle { budget } => budget,
        RepresentationSpec::Categorical { .. } => 0,
    };
    let grid = config.representation.grid(gamma)?;
    let mut error_trace = trace.map(|req| ErrorTrace::new(req.metric));
    if let (Some(t), Some(req)) = (&mut error_trace, trace) {
        t.record(0, &init, req.reference)?;
    }
    let mut reference_point = Estimate::from_model(&init, budget);
    let mut s = draw_state(&mut rng, &config.initial);
    let (mut clipped, mut rectified, mut compression) = (0.0, 0.0, 0.0);
    let mut batch = Vec::with_capacity(config.n_ref);

    for epoch in 1..=config.epochs {
        batch.clear();
        for _ in 0..config.n_ref {
            let tr = sampler.step(&mut rng, s);
            s = tr.s_next;
            batch.push(tr);
        }
        let bar_model = reference_point.to_model();
        let reference = build_reference_operator(&batch, &bar_model, gamma)?;
        if let Some(state) = reference.first_unvisited() {
            return Err(Error::UnvisitedState { epoch, state, samples: config.n_ref });
        }
        let targets: Vec<Distribution> = reference.states.into_iter().map(|d| d.expect("all visited")).collect();
        let mut current = reference_point.clone();
        match grid {
            Some(grid) => {
                let ref_probs = targets
                    .iter()
                    .map(|d| project_categorical(d, &grid).map(|c| c.into_probs()))
                    .collect::<Result<Vec<_>>>()?;
                let bar = categorical_probs(&reference_point);
                for _ in 0..config.t_epoch {
                    let tr = sampler.step(&mut rng, s);
                    s = tr.s_next;
                    clipped += vr_ctd_step(&mut current, bar, &ref_probs, &grid, &tr, config.alpha, gamma);
                }
            }
            None => {
                for _ in 0..config.t_epoch {
                    let tr = sampler.step(&mut rng, s);
                    s = tr.s_next;
                    let (r, c) = vr_ntd_step(&mut current, &bar_model, &targets, budget, &tr, config.alpha, gamma)?;
                    rectified += r;
                    compression += c;
                }
            }
        }
        reference_point = current;
        if let (Some(t), Some(req)) = (&mut error_trace, trace) {
            t.record(epoch, &reference_point.to_model(), req.reference)?;
        }
    }
    Ok(RunResult {
        estimate: reference_point.to_model(),
        trace: error_trace,
        samples: config.epochs * (config.n_ref + config.t_epoch),
        updates: config.epochs * config.t_epoch,
        compression_w1: compression,
        clipped_mass: clipped,
        rectification_w1: rectified,
        seed: config.seed,
    })
}

fn categorical_probs(est: &Estimate) -> &[Vec<f64>] {
    match est {
        Estimate::Categorical { probs, .. } => probs,
        Estimate::Particle { .. } => unreachable!("categorical run"),
    }
}

/// Returns the clipped negative mass.
fn vr_ctd_step(
    current: &mut Estimate,
    bar: &[Vec<f64>],
    ref_probs: &[Vec<f64>],
    grid: &SupportGrid,
    tr: &Transition,
    alpha: f64,
    gamma: f64,
) -> f64 {
    let Estimate::Categorical { probs, scratch, .. } = current else {
        unreachable!("categorical run")
    };
    scratch.copy_from_slice(&ref_probs[tr.s]);
    add_projected_pushforward(scratch, grid, grid, &probs[tr.s_next], tr.r, gamma, 1.0);
    add_projected_pushforward(scratch, grid, grid, &bar[tr.s_next], tr.r, gamma, -1.0);
    let mut negative = 0.0;
    for x in scratch.iter_mut() {
        if *x < 0.0 {
            negative -= *x;
            *x = 0.0;
        }
    }
    let total: f64 = scratch.iter().sum();
    for (p, t) in probs[tr.s].iter_mut().zip(scratch.iter()) {
        *p = (1.0 - alpha) * *p + alpha * t / total;
    }
    negative
}

/// Returns the rectification cost and the compression certificate.
fn vr_ntd_step(
    current: &mut Estimate,
    bar: &ReturnModel,
    targets: &[Distribution],
    budget: usize,
    tr: &Transition,
    alpha: f64,
    gamma: f64,
) -> Result<(f64, f64)> {
    let Estimate::Particle { states, .. } = current else {
        unreachable!("particle run")
    };
    let mut signed: Vec<(f64, f64)> = targets[tr.s].atoms().into_owned();
    signed.extend(states[tr.s_next].atoms().iter().map(|&(x, w)| (tr.r + gamma * x, w)));
    signed.extend(bar.state(tr.s_next).atoms().iter().map(|&(x, w)| (tr.r + gamma * x, -w)));
    let (target, cost) = rectify(signed);
    let merged = merge_scaled(states[tr.s].atoms(), 1.0 - alpha, target.atoms(), alpha);
    let (dist, bound) = compress_to(ParticleDist::from_sorted(merged), budget)?;
    states[tr.s] = dist;
    Ok((cost, bound))
}
