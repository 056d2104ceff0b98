use super::averaging::PolyakAccumulator;
use super::config::{Averaging, RepresentationSpec, RunConfig, Sampling, TraceRequest};
use super::estimate::Estimate;
use super::result::{ErrorTrace, RunResult};
use crate::error::{invalid, Result};
use crate::mdp::{draw_state, induced_kernel, period, GenerativeConfig, Transition, TransitionSampler};
use crate::measures::ReturnModel;
use crate::rng::stream;

/// Iterate, averaging and trace bookkeeping shared by the TD variants.
struct Learner<'a> {
    est: Estimate,
    polyak: Option<PolyakAccumulator>,
    trace: Option<(ErrorTrace, &'a TraceRequest<'a>, Vec<usize>)>,
    compression: f64,
    gamma: f64,
}

impl<'a> Learner<'a> {
    fn new(config: &RunConfig, trace: Option<&'a TraceRequest<'a>>) -> Result<Self> {
        let init = config.initial_model()?;
        let budget = match config.representation {
            RepresentationSpec::Particle { budget } => budget,
            RepresentationSpec::Categorical { .. } => 0,
        };
        let polyak = match config.averaging {
            Averaging::Polyak { t0 } => Some(PolyakAccumulator::new(t0, &init, budget)),
            Averaging::LastIterate => None,
        };
        let trace = match trace {
            Some(req) => {
                if req.reference.n_states() != init.n_states() {
                    return Err(crate::Error::StateCountMismatch {
                        left: req.reference.n_states(),
                        right: init.n_states(),
                    });
                }
                let mut at: Vec<usize> = req.checkpoints.iter().copied().filter(|&c| c <= config.updates).collect();
                at.push(config.updates);
                at.sort_unstable();
                at.dedup();
                at.reverse();
                Some((ErrorTrace::new(req.metric), req, at))
            }
            None => None,
        };
        Ok(Self {
            est: Estimate::from_model(&init, budget),
            polyak,
            trace,
            compression: 0.0,
            gamma: config.mdp.gamma(),
        })
    }

    /// Applies update number `m` (1-based) with step `alpha`.
    fn update(&mut self, m: usize, alpha: f64, tr: &Transition) -> Result<()> {
        if let Some(p) = &mut self.polyak {
            self.compression += p.credit(tr.s, m, &self.est.state(tr.s))?;
        }
        self.compression += self.est.td_update(tr.s, tr.r, tr.s_next, alpha, self.gamma)?;
        if self.trace.as_ref().is_some_and(|(_, _, at)| at.last() == Some(&m)) {
            let estimate = self.estimator(m)?;
            let (trace, req, at) = self.trace.as_mut().expect("checked");
            trace.record(m, &estimate, req.reference)?;
            at.pop();
        }
        Ok(())
    }

    fn estimator(&self, m: usize) -> Result<ReturnModel> {
        let model = self.est.to_model();
        match &self.polyak {
            Some(p) => p.average(m, &model),
            None => Ok(model),
        }
    }

    fn finish(self, config: &RunConfig, samples: usize) -> Result<RunResult> {
        Ok(RunResult {
            estimate: self.estimator(config.updates)?,
            trace: self.trace.map(|t| t.0),
            samples,
            updates: config.updates,
            compression_w1: self.compression,
            clipped_mass: 0.0,
            rectification_w1: 0.0,
            seed: config.seed,
        })
    }
}

/// NTD (particle) or CTD (categorical) with one update per sample.
///
/// Each update changes only the visited state. Markov sampling updates on
/// every step of a single trajectory; use [`run_td_datadrop`] for burn-in
/// and thinning.
pub fn run_td(config: &RunConfig, trace: Option<&TraceRequest>) -> Result<RunResult> {
    config.validate()?;
    match &config.sampling {
        Sampling::Generative { mu } => {
            let cfg = GenerativeConfig::new(mu.clone())?;
            let sampler = TransitionSampler::new(config.mdp, config.policy)?;
            let mut rng = stream(config.seed, 0);
            let mut learner = Learner::new(config, trace)?;
            for m in 1..=config.updates {
                let tr = sampler.generative(&mut rng, &cfg);
                learner.update(m, config.schedule.alpha(m), &tr)?;
            }
            learner.finish(config, config.updates)
        }
        Sampling::Markov { initial } => markov_run(config, trace, initial, 0, 1),
    }
}

/// Markovian TD that discards `burn_in` samples and then updates on every
/// `interval`-th sample, for `updates` updates. Consumes
/// `burn_in + interval * updates` samples.
pub fn run_td_datadrop(config: &RunConfig, trace: Option<&TraceRequest>) -> Result<RunResult> {
    config.validate()?;
    let Sampling::Markov { initial } = &config.sampling else {
        return Err(invalid("sampling", "data-drop needs Markov sampling"));
    };
    let kernel = induced_kernel(config.mdp, config.policy)?;
    let p = period(&kernel)?;
    if p != 1 {
        return Err(crate::Error::Periodic(p));
    }
    markov_run(config, trace, initial, config.burn_in, config.interval)
}

fn markov_run(
    config: &RunConfig,
    trace: Option<&TraceRequest>,
    initial: &[f64],
    burn_in: usize,
    interval: usize,
) -> Result<RunResult> {
    let sampler = TransitionSampler::new(config.mdp, config.policy)?;
    let mut rng = stream(config.seed, 0);
    let mut learner = Learner::new(config, trace)?;
    let total = burn_in + interval * config.updates;
    let mut s = draw_state(&mut rng, initial);
    let mut m = 0;
    for i in 0..total {
        let tr = sampler.step(&mut rng, s);
        s = tr.s_next;
        if i >= burn_in && (i - burn_in) % interval == 0 {
            m += 1;
            learner.update(m, config.schedule.alpha(m), &tr)?;
        }
    }
    debug_assert_eq!(m, config.updates);
    learner.finish(config, total)
}
