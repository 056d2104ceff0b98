//! Experiment specifications and their resolution.
//!
//! A spec is a JSON object with a few common keys and a kind-specific
//! `params` object:
//!
//! ```json
//! {
//!   "kind": "ctd",
//!   "mdp": "chain3",
//!   "seeds": [0, 1, 2, 3],
//!   "params": { "k": 64, "updates": 10000 }
//! }
//! ```
//!
//! Unknown keys are rejected at both levels. Resolution fills every default
//! (including the universal constants and the quantities derived from the
//! chain) and inlines the MDP, so the resolved spec stored in a manifest
//! reruns the experiment on its own.

use std::path::{Path, PathBuf};

use disteval::agents::{
    burn_in, interval, vr_step_size, Averaging, RepresentationSpec, Sampling, StepSchedule, UniversalConstants,
};
use disteval::concentration::{shipped_specs, MartingaleSpec};
use disteval::mdp::{ChainInfo, Gallery, MdpFile, Policy, TabularMDP};
use disteval::measures::Metric;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{CliError, CliResult};

/// Environment variable naming a directory of gallery `*.json` files.
pub const GALLERY_ENV: &str = "DISTEVAL_GALLERY";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Dp,
    Dcfp,
    Ctd,
    Ntd,
    Datadrop,
    Vr,
    Freedman,
    Sweep,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::Dp => "dp",
            Kind::Dcfp => "dcfp",
            Kind::Ctd => "ctd",
            Kind::Ntd => "ntd",
            Kind::Datadrop => "datadrop",
            Kind::Vr => "vr",
            Kind::Freedman => "freedman",
            Kind::Sweep => "sweep",
        }
    }

    fn uses_mdp(self) -> bool {
        self != Kind::Freedman
    }

    fn uses_seeds(self) -> bool {
        !matches!(self, Kind::Dp | Kind::Dcfp)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub kind: Kind,
    /// Gallery entry name. Defaults to `chain3` when no MDP is given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mdp: Option<String>,
    /// Path to an MDP file (same schema as the gallery).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mdp_file: Option<PathBuf>,
    /// The MDP itself.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mdp_inline: Option<MdpFile>,
    /// Replaces the policy stored with the MDP.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub policy: Option<Vec<Vec<f64>>>,
    /// Replaces the discount stored with the MDP.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seeds: Option<Vec<u64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub params: Value,
}

impl ExperimentSpec {
    pub fn new(kind: Kind) -> Self {
        Self {
            kind,
            mdp: None,
            mdp_file: None,
            mdp_inline: None,
            policy: None,
            gamma: None,
            seeds: None,
            out: None,
            params: Value::Null,
        }
    }

    /// Reads a spec, or the resolved spec inside a manifest.
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let origin = path.display().to_string();
        let mut value: Value = serde_json::from_str(&text).map_err(|e| CliError::spec(&origin, e))?;
        if let Some(inner) = value.get_mut("resolved_spec") {
            value = inner.take();
        }
        serde_json::from_value(value).map_err(|e| CliError::spec(&origin, e))
    }
}

/// Reference model used for error traces.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ReferenceSpec {
    /// The categorical fixed point on the grid with `k + 1` atoms.
    Dcfp { k: usize },
    /// Particle dynamic programming certified to `tol` in `W1`.
    ParticleDp { budget: usize, tol: f64 },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DpParams {
    pub k: Option<usize>,
    pub budget: Option<usize>,
    pub metric: Option<Metric>,
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DcfpParams {
    pub k: Option<usize>,
    pub cap: Option<usize>,
}

/// Parameters of `ctd`, `ntd` and `datadrop` runs. The last four fields are
/// for `datadrop` only.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TdParams {
    pub k: Option<usize>,
    pub budget: Option<usize>,
    pub updates: Option<usize>,
    pub sampling: Option<Sampling>,
    pub schedule: Option<StepSchedule>,
    pub constants: Option<UniversalConstants>,
    pub averaging: Option<Averaging>,
    pub metric: Option<Metric>,
    pub checkpoints: Option<Vec<usize>>,
    pub reference: Option<ReferenceSpec>,
    pub delta: Option<f64>,
    pub t_mix: Option<usize>,
    pub burn_in: Option<usize>,
    pub interval: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VrParams {
    pub k: Option<usize>,
    pub budget: Option<usize>,
    pub epochs: Option<usize>,
    pub n_ref: Option<usize>,
    pub t_epoch: Option<usize>,
    pub alpha: Option<f64>,
    pub delta: Option<f64>,
    pub t_mix: Option<usize>,
    pub initial: Option<Vec<f64>>,
    pub constants: Option<UniversalConstants>,
    pub metric: Option<Metric>,
    pub reference: Option<ReferenceSpec>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FreedmanRunParams {
    pub specs: Option<Vec<MartingaleSpec>>,
    pub deltas: Option<Vec<f64>>,
    pub trials: Option<usize>,
    /// Overrides the horizon parameter `H` of every spec.
    pub h: Option<u32>,
    /// Paths per spec written to `paths/<spec>.csv` (first delta, first seed).
    pub dump_paths: Option<usize>,
}

/// A TD experiment repeated over several update counts.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepParams {
    pub base: Option<Kind>,
    pub updates: Option<Vec<usize>>,
    pub run: Option<TdParams>,
}

/// Kind-specific parameters with every default filled in.
#[derive(Debug, Clone, PartialEq)]
pub enum Plan {
    Dp(DpParams),
    Dcfp(DcfpParams),
    Td(Kind, TdParams),
    Vr(VrParams),
    Freedman(FreedmanRunParams),
    Sweep(SweepParams),
}

/// A validated spec together with the model it runs on.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub spec: ExperimentSpec,
    pub model: Option<(String, TabularMDP, Policy)>,
    pub plan: Plan,
}

impl Resolved {
    pub fn seeds(&self) -> &[u64] {
        self.spec.seeds.as_deref().unwrap_or(&[])
    }

    pub fn mdp(&self) -> (&TabularMDP, &Policy) {
        let (_, m, p) = self.model.as_ref().expect("kind uses an MDP");
        (m, p)
    }
}

/// Loads the gallery from `DISTEVAL_GALLERY` if set, otherwise the
/// embedded copy.
pub fn load_gallery() -> CliResult<Gallery> {
    match std::env::var_os(GALLERY_ENV) {
        Some(dir) => Gallery::from_dir(Path::new(&dir)).map_err(|e| CliError::Gallery(e.to_string())),
        None => Ok(Gallery::embedded()),
    }
}

fn typed<T: DeserializeOwned + Default>(origin: &str, v: &Value) -> CliResult<T> {
    if v.is_null() {
        return Ok(T::default());
    }
    serde_json::from_value(v.clone()).map_err(|e| CliError::spec(origin, format!("params: {e}")))
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("parameters serialize")
}

fn check(origin: &str, ok: bool, reason: &str) -> CliResult<()> {
    if ok {
        Ok(())
    } else {
        Err(CliError::spec(origin, reason))
    }
}

fn lift<T>(origin: &str, r: disteval::Result<T>) -> CliResult<T> {
    r.map_err(|e| CliError::spec(origin, e))
}

/// Roughly log-spaced update counts from 10 to `t`, always ending at `t`.
pub fn default_checkpoints(t: usize) -> Vec<usize> {
    let mut out: Vec<usize> = Vec::new();
    if t > 10 {
        let steps = 16;
        let (lo, hi) = (10f64.ln(), (t as f64).ln());
        for i in 0..steps {
            let c = (lo + (hi - lo) * i as f64 / steps as f64).exp().round() as usize;
            if out.last() != Some(&c) {
                out.push(c);
            }
        }
    }
    out.push(t);
    out
}

fn resolve_model(spec: &ExperimentSpec, origin: &str) -> CliResult<(String, TabularMDP, Policy)> {
    let given = [spec.mdp.is_some(), spec.mdp_file.is_some(), spec.mdp_inline.is_some()];
    check(origin, given.iter().filter(|g| **g).count() <= 1, "give at most one of mdp, mdp_file, mdp_inline")?;
    let file = if let Some(inline) = &spec.mdp_inline {
        inline.clone()
    } else if let Some(path) = &spec.mdp_file {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        serde_json::from_str::<MdpFile>(&text).map_err(|e| CliError::spec(path.display().to_string(), e))?
    } else {
        let gallery = load_gallery()?;
        let name = spec.mdp.as_deref().unwrap_or("chain3");
        let entry = gallery.get(name).map_err(|e| CliError::spec(origin, e))?;
        MdpFile::from_model(&entry.name, &entry.mdp, &entry.policy)
    };
    let (mut mdp, mut policy) = lift(origin, file.build())?;
    if let Some(g) = spec.gamma {
        mdp = lift(origin, mdp.with_gamma(g))?;
    }
    if let Some(rows) = &spec.policy {
        policy = lift(origin, Policy::new(rows.clone()))?;
        lift(origin, mdp.outcomes(&policy, 0).map(|_| ()))?;
    }
    Ok((file.name, mdp, policy))
}

fn representation(origin: &str, k: Option<usize>, budget: Option<usize>, default: RepresentationSpec) -> CliResult<RepresentationSpec> {
    let rep = match (k, budget) {
        (Some(_), Some(_)) => return Err(CliError::spec(origin, "give either k or budget, not both")),
        (Some(k), None) => RepresentationSpec::Categorical { k },
        (None, Some(budget)) => RepresentationSpec::Particle { budget },
        (None, None) => default,
    };
    match rep {
        RepresentationSpec::Categorical { k } => check(origin, k >= 1, "k must be at least 1")?,
        RepresentationSpec::Particle { budget } => check(origin, budget >= 2, "budget must be at least 2")?,
    }
    Ok(rep)
}

fn split(rep: RepresentationSpec) -> (Option<usize>, Option<usize>) {
    match rep {
        RepresentationSpec::Categorical { k } => (Some(k), None),
        RepresentationSpec::Particle { budget } => (None, Some(budget)),
    }
}

fn default_reference(rep: RepresentationSpec) -> ReferenceSpec {
    match rep {
        RepresentationSpec::Categorical { k } => ReferenceSpec::Dcfp { k },
        RepresentationSpec::Particle { .. } => ReferenceSpec::ParticleDp { budget: 2000, tol: 1e-2 },
    }
}

fn check_reference(origin: &str, r: &ReferenceSpec) -> CliResult<()> {
    match *r {
        ReferenceSpec::Dcfp { k } => check(origin, k >= 1, "reference k must be at least 1"),
        ReferenceSpec::ParticleDp { budget, tol } => {
            check(origin, budget >= 2 && tol > 0.0, "reference needs budget >= 2 and tol > 0")
        }
    }
}

fn check_unit(origin: &str, name: &str, v: f64) -> CliResult<()> {
    check(origin, v > 0.0 && v < 1.0, &format!("{name} must lie in (0, 1)"))
}

fn chain_info(origin: &str, mdp: &TabularMDP, policy: &Policy) -> CliResult<ChainInfo> {
    lift(origin, ChainInfo::compute(mdp, policy))
}

fn resolve_td(origin: &str, kind: Kind, mut p: TdParams, mdp: &TabularMDP, policy: &Policy) -> CliResult<TdParams> {
    let n = mdp.n_states();
    let default_rep = match kind {
        Kind::Ntd => RepresentationSpec::Particle { budget: 64 },
        _ => RepresentationSpec::Categorical { k: 64 },
    };
    let rep = representation(origin, p.k, p.budget, default_rep)?;
    match (kind, rep) {
        (Kind::Ctd, RepresentationSpec::Particle { .. }) => return Err(CliError::spec(origin, "ctd is categorical: use k")),
        (Kind::Ntd, RepresentationSpec::Categorical { .. }) => return Err(CliError::spec(origin, "ntd uses particles: use budget")),
        _ => {}
    }
    (p.k, p.budget) = split(rep);
    let updates = p.updates.unwrap_or(10_000);
    check(origin, updates >= 1, "updates must be at least 1")?;
    p.updates = Some(updates);
    let datadrop = kind == Kind::Datadrop;
    if !datadrop {
        check(
            origin,
            p.delta.is_none() && p.t_mix.is_none() && p.burn_in.is_none() && p.interval.is_none(),
            "delta, t_mix, burn_in and interval apply to datadrop only",
        )?;
    }
    let sampling = p.sampling.take().unwrap_or_else(|| {
        if datadrop {
            Sampling::markov_uniform(n)
        } else {
            Sampling::generative_uniform(n)
        }
    });
    check(
        origin,
        !datadrop || matches!(sampling, Sampling::Markov { .. }),
        "datadrop needs markov sampling",
    )?;
    let constants = p.constants.unwrap_or_default();
    p.constants = Some(constants);
    let info = if matches!(sampling, Sampling::Markov { .. }) { Some(chain_info(origin, mdp, policy)?) } else { None };
    let schedule = match p.schedule.take() {
        Some(s) => s,
        None => {
            let mu_min = match (&sampling, &info) {
                (Sampling::Generative { mu }, _) => mu.iter().copied().fold(f64::INFINITY, f64::min),
                (_, Some(info)) => info.mu_min,
                _ => unreachable!("markov sampling computes the chain"),
            };
            lift(origin, StepSchedule::theorem42(constants.c, mu_min, mdp.gamma()))?
        }
    };
    lift(origin, schedule.validate())?;
    p.schedule = Some(schedule);
    p.sampling = Some(sampling);
    let averaging = p.averaging.unwrap_or(Averaging::LastIterate);
    if let Averaging::Polyak { t0 } = averaging {
        check(origin, t0 < updates, "Polyak t0 must be smaller than updates")?;
    }
    p.averaging = Some(averaging);
    let metric = p.metric.unwrap_or(Metric::W1);
    if let Metric::Wp(q) = metric {
        check(origin, q >= 1.0, "Wp needs p >= 1")?;
    }
    p.metric = Some(metric);
    let mut checkpoints = p.checkpoints.take().unwrap_or_else(|| default_checkpoints(updates));
    checkpoints.retain(|&c| c >= 1 && c <= updates);
    checkpoints.sort_unstable();
    checkpoints.dedup();
    p.checkpoints = Some(checkpoints);
    let reference = p.reference.unwrap_or_else(|| default_reference(rep));
    check_reference(origin, &reference)?;
    p.reference = Some(reference);
    if datadrop {
        let delta = p.delta.unwrap_or(0.1);
        check_unit(origin, "delta", delta)?;
        p.delta = Some(delta);
        let t_mix = p.t_mix.unwrap_or_else(|| info.as_ref().expect("markov").t_mix);
        p.t_mix = Some(t_mix);
        p.burn_in = Some(match p.burn_in {
            Some(b) => b,
            None => lift(origin, burn_in(t_mix, delta))?,
        });
        p.interval = Some(match p.interval {
            Some(q) => q,
            None => lift(origin, interval(t_mix, updates, delta))?,
        });
        check(origin, p.interval >= Some(1), "interval must be at least 1")?;
    }
    Ok(p)
}

fn resolve_vr(origin: &str, mut p: VrParams, mdp: &TabularMDP, policy: &Policy) -> CliResult<VrParams> {
    let n = mdp.n_states();
    let rep = representation(origin, p.k, p.budget, RepresentationSpec::Categorical { k: 64 })?;
    (p.k, p.budget) = split(rep);
    let epochs = p.epochs.unwrap_or(6);
    let n_ref = p.n_ref.unwrap_or(20_000);
    let t_epoch = p.t_epoch.unwrap_or(20_000);
    check(origin, epochs >= 1 && n_ref >= 1, "epochs and n_ref must be at least 1")?;
    (p.epochs, p.n_ref, p.t_epoch) = (Some(epochs), Some(n_ref), Some(t_epoch));
    let delta = p.delta.unwrap_or(0.1);
    check_unit(origin, "delta", delta)?;
    p.delta = Some(delta);
    let constants = p.constants.unwrap_or_default();
    p.constants = Some(constants);
    let t_mix = match p.t_mix {
        Some(t) => t,
        None => chain_info(origin, mdp, policy)?.t_mix,
    };
    p.t_mix = Some(t_mix);
    let alpha = match p.alpha {
        Some(a) => a,
        None => lift(origin, vr_step_size(constants.c4, n, t_epoch.max(1), delta, mdp.gamma(), t_mix))?,
    };
    check_unit(origin, "alpha", alpha)?;
    p.alpha = Some(alpha);
    let initial = p.initial.take().unwrap_or_else(|| vec![1.0 / n as f64; n]);
    check(origin, initial.len() == n, "initial must have one entry per state")?;
    p.initial = Some(initial);
    p.metric = Some(p.metric.unwrap_or(Metric::Cramer));
    let reference = p.reference.unwrap_or_else(|| default_reference(rep));
    check_reference(origin, &reference)?;
    p.reference = Some(reference);
    Ok(p)
}

fn resolve_freedman(origin: &str, mut p: FreedmanRunParams) -> CliResult<FreedmanRunParams> {
    let specs = p.specs.take().unwrap_or_else(shipped_specs);
    check(origin, !specs.is_empty(), "specs must not be empty")?;
    for s in &specs {
        lift(origin, s.validate())?;
    }
    let deltas = p.deltas.take().unwrap_or_else(|| vec![0.2, 0.05]);
    check(origin, !deltas.is_empty(), "deltas must not be empty")?;
    for &d in &deltas {
        check_unit(origin, "delta", d)?;
    }
    let trials = p.trials.unwrap_or(10_000);
    check(origin, trials >= 1000, "trials must be at least 1000")?;
    if let Some(h) = p.h {
        check(origin, h >= 1, "h must be at least 1")?;
    }
    Ok(FreedmanRunParams { specs: Some(specs), deltas: Some(deltas), trials: Some(trials), h: p.h, dump_paths: Some(p.dump_paths.unwrap_or(2)) })
}

/// Validates `spec`, fills defaults and returns the fully resolved spec.
pub fn resolve(spec: &ExperimentSpec, origin: &str) -> CliResult<Resolved> {
    let kind = spec.kind;
    let model = if kind.uses_mdp() {
        Some(resolve_model(spec, origin)?)
    } else {
        check(
            origin,
            spec.mdp.is_none() && spec.mdp_file.is_none() && spec.mdp_inline.is_none() && spec.policy.is_none() && spec.gamma.is_none(),
            "freedman does not take an MDP",
        )?;
        None
    };
    let seeds = if kind.uses_seeds() {
        let default: Vec<u64> = if kind == Kind::Freedman { vec![0] } else { (0..8).collect() };
        let seeds = spec.seeds.clone().unwrap_or(default);
        check(origin, !seeds.is_empty(), "seeds must not be empty")?;
        Some(seeds)
    } else {
        None
    };
    let mm = model.as_ref().map(|(_, m, p)| (m, p));
    let (plan, params) = match kind {
        Kind::Dp => {
            let mut p: DpParams = typed(origin, &spec.params)?;
            let rep = representation(origin, p.k, p.budget, RepresentationSpec::Categorical { k: 64 })?;
            (p.k, p.budget) = split(rep);
            let particle = p.budget.is_some();
            p.metric = Some(p.metric.unwrap_or(if particle { Metric::W1 } else { Metric::Cramer }));
            let tol = p.tol.unwrap_or(if particle { 1e-2 } else { 1e-10 });
            check(origin, tol > 0.0, "tol must be positive")?;
            p.tol = Some(tol);
            p.max_iter = Some(p.max_iter.unwrap_or(100_000));
            let v = to_value(&p);
            (Plan::Dp(p), v)
        }
        Kind::Dcfp => {
            let mut p: DcfpParams = typed(origin, &spec.params)?;
            let k = p.k.unwrap_or(64);
            check(origin, k >= 1, "k must be at least 1")?;
            p.k = Some(k);
            p.cap = Some(p.cap.unwrap_or(disteval::bellman::DCFP_DIMENSION_CAP));
            let v = to_value(&p);
            (Plan::Dcfp(p), v)
        }
        Kind::Ctd | Kind::Ntd | Kind::Datadrop => {
            let (m, pol) = mm.expect("mdp");
            let p = resolve_td(origin, kind, typed(origin, &spec.params)?, m, pol)?;
            let v = to_value(&p);
            (Plan::Td(kind, p), v)
        }
        Kind::Vr => {
            let (m, pol) = mm.expect("mdp");
            let p = resolve_vr(origin, typed(origin, &spec.params)?, m, pol)?;
            let v = to_value(&p);
            (Plan::Vr(p), v)
        }
        Kind::Freedman => {
            let p = resolve_freedman(origin, typed(origin, &spec.params)?)?;
            let v = to_value(&p);
            (Plan::Freedman(p), v)
        }
        Kind::Sweep => {
            let mut p: SweepParams = typed(origin, &spec.params)?;
            let base = p.base.unwrap_or(Kind::Ctd);
            check(origin, matches!(base, Kind::Ctd | Kind::Ntd | Kind::Datadrop), "sweep base must be ctd, ntd or datadrop")?;
            let mut updates = p.updates.take().unwrap_or_else(|| vec![2_500, 10_000, 40_000, 160_000]);
            check(origin, !updates.is_empty() && updates.iter().all(|&t| t >= 1), "updates must be a nonempty list of positive counts")?;
            updates.sort_unstable();
            updates.dedup();
            let run = p.run.take().unwrap_or_default();
            check(origin, run.updates.is_none() && run.checkpoints.is_none(), "sweep sets updates itself; drop run.updates and run.checkpoints")?;
            check(origin, run.interval.is_none(), "sweep derives the interval per update count; drop run.interval")?;
            // validate the base once at the largest size; the interval is re-derived per size at run time
            let (m, pol) = mm.expect("mdp");
            let probe = TdParams { updates: Some(*updates.last().expect("nonempty")), ..run.clone() };
            let mut resolved = resolve_td(origin, base, probe, m, pol)?;
            resolved.updates = None;
            resolved.checkpoints = None;
            resolved.interval = None;
            let p = SweepParams { base: Some(base), updates: Some(updates), run: Some(resolved) };
            let v = to_value(&p);
            (Plan::Sweep(p), v)
        }
    };
    let resolved_spec = ExperimentSpec {
        kind,
        mdp: None,
        mdp_file: None,
        mdp_inline: model.as_ref().map(|(name, m, p)| MdpFile::from_model(name, m, p)),
        policy: None,
        gamma: None,
        seeds,
        out: spec.out.clone(),
        params,
    };
    Ok(Resolved { spec: resolved_spec, model, plan })
}

/// Resolves one point of a sweep into ordinary TD parameters.
pub fn sweep_point(origin: &str, base: Kind, run: &TdParams, updates: usize, mdp: &TabularMDP, policy: &Policy) -> CliResult<TdParams> {
    let p = TdParams { updates: Some(updates), checkpoints: Some(vec![updates]), ..run.clone() };
    resolve_td(origin, base, p, mdp, policy)
}

/// Parses `--seeds`: a list `1,2,5` or a half-open range `0..32`.
pub fn parse_seeds(s: &str) -> CliResult<Vec<u64>> {
    let bad = |e: &dyn std::fmt::Display| CliError::spec("--seeds", format!("{s:?}: {e}"));
    let seeds: Vec<u64> = if let Some((a, b)) = s.split_once("..") {
        let a: u64 = a.trim().parse().map_err(|e| bad(&e))?;
        let b: u64 = b.trim().parse().map_err(|e| bad(&e))?;
        (a..b).collect()
    } else {
        s.split(',').map(|x| x.trim().parse::<u64>()).collect::<Result<_, _>>().map_err(|e| bad(&e))?
    };
    if seeds.is_empty() {
        return Err(bad(&"no seeds"));
    }
    Ok(seeds)
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn parse(v: Value) -> CliResult<Resolved> {
        let spec: ExperimentSpec = serde_json::from_value(v).map_err(|e| CliError::spec("test", e))?;
        resolve(&spec, "test")
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(serde_json::from_value::<ExperimentSpec>(json!({"kind": "dp", "colour": 1})).is_err());
        let err = parse(json!({"kind": "ctd", "params": {"updates": 10, "k": 8, "stepsize": 1}})).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("stepsize"));
    }

    #[test]
    fn defaults_are_filled_and_stable() {
        let r = parse(json!({"kind": "datadrop", "params": {"updates": 1000}})).unwrap();
        let Plan::Td(Kind::Datadrop, p) = &r.plan else { panic!() };
        assert_eq!(p.k, Some(64));
        assert!(p.burn_in.is_some() && p.interval.is_some() && p.t_mix.is_some());
        assert_eq!(p.constants, Some(UniversalConstants::default()));
        assert_eq!(r.seeds(), (0..8).collect::<Vec<_>>());
        // resolving the resolved spec is a fixed point
        let again = resolve(&r.spec, "test").unwrap();
        assert_eq!(again.spec, r.spec);
    }

    #[test]
    fn kind_specific_checks() {
        assert!(parse(json!({"kind": "ctd", "params": {"budget": 10}})).is_err());
        assert!(parse(json!({"kind": "ntd", "params": {"k": 10}})).is_err());
        assert!(parse(json!({"kind": "ctd", "params": {"delta": 0.1}})).is_err());
        assert!(parse(json!({"kind": "freedman", "mdp": "chain3"})).is_err());
        assert!(parse(json!({"kind": "freedman", "params": {"trials": 10}})).is_err());
        assert!(parse(json!({"kind": "dp", "mdp": "nope"})).is_err());
        assert!(parse(json!({"kind": "dp", "gamma": 1.5})).is_err());
        assert!(parse(json!({"kind": "sweep", "params": {"base": "vr"}})).is_err());
    }

    #[test]
    fn seeds_flag() {
        assert_eq!(parse_seeds("0..4").unwrap(), vec![0, 1, 2, 3]);
        assert_eq!(parse_seeds("5, 7").unwrap(), vec![5, 7]);
        assert!(parse_seeds("3..3").is_err());
        assert!(parse_seeds("a").is_err());
    }

    #[test]
    fn checkpoints_are_increasing_and_end_at_t() {
        let c = default_checkpoints(160_000);
        assert!(c.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(*c.last().unwrap(), 160_000);
        assert_eq!(default_checkpoints(5), vec![5]);
    }
}
