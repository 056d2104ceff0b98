use super::estimate::compress_to;
use crate::error::{invalid, Result};
use crate::measures::{merge_scaled, CategoricalDist, Distribution, ParticleDist, ReturnModel};

/// `(T - T0)^{-1} sum_{t > T0} eta_t` over `history = [eta_0, ..., eta_T]`.
///
/// Categorical iterates average coordinate-wise; particle iterates are
/// pooled with equal weights (no compression).
pub fn polyak_average(history: &[ReturnModel], t0: usize) -> Result<ReturnModel> {
    if t0 + 1 >= history.len() {
        return Err(invalid("t0", "no iterates after the burn-in"));
    }
    let tail = &history[t0 + 1..];
    let n = tail.len() as f64;
    let n_states = tail[0].n_states();
    let mut states = Vec::with_capacity(n_states);
    for s in 0..n_states {
        let parts: Vec<(f64, &Distribution)> = tail.iter().map(|m| (1.0 / n, m.state(s))).collect();
        states.push(crate::measures::mix(&parts)?);
    }
    ReturnModel::new(states)
}

/// Streaming Polyak average for iterates that change one state at a time.
///
/// Each state's running value is credited for every step it was held once
/// the state changes again (or when the average is read).
#[derive(Debug, Clone)]
pub(crate) struct PolyakAccumulator {
    t0: usize,
    /// first step at which the current value of the state holds
    since: Vec<usize>,
    sums: Sums,
}

#[derive(Debug, Clone)]
enum Sums {
    Categorical(Vec<Vec<f64>>),
    /// normalized pooled distribution and the number of steps it represents
    Particle { budget: usize, pooled: Vec<(ParticleDist, usize)> },
}

impl PolyakAccumulator {
    pub(crate) fn new(t0: usize, model: &ReturnModel, budget: usize) -> Self {
        let n = model.n_states();
        let sums = match model.grid() {
            Some(g) => Sums::Categorical(vec![vec![0.0; g.len()]; n]),
            None => Sums::Particle {
                budget,
                pooled: vec![(ParticleDist::dirac(0.0), 0); n],
            },
        };
        Self { t0, since: vec![0; n], sums }
    }

    fn held(&self, s: usize, until: usize) -> usize {
        // steps tau in [max(since, t0 + 1), until]
        let start = self.since[s].max(self.t0 + 1);
        (until + 1).saturating_sub(start)
    }

    /// Called before state `s` takes a new value at step `t`; `current` is
    /// the value it held up to step `t - 1`.
    pub(crate) fn credit(&mut self, s: usize, t: usize, current: &Distribution) -> Result<f64> {
        let steps = self.held(s, t.saturating_sub(1));
        self.since[s] = t;
        self.add(s, steps, current)
    }

    fn add(&mut self, s: usize, steps: usize, current: &Distribution) -> Result<f64> {
        if steps == 0 {
            return Ok(0.0);
        }
        match &mut self.sums {
            Sums::Categorical(sums) => {
                let c = current.as_categorical().expect("categorical run");
                for (acc, p) in sums[s].iter_mut().zip(c.probs()) {
                    *acc += steps as f64 * p;
                }
                Ok(0.0)
            }
            Sums::Particle { budget, pooled } => {
                let (dist, count) = &pooled[s];
                let total = (count + steps) as f64;
                let merged = if *count == 0 {
                    current.to_particle()
                } else {
                    let cur = current.to_particle();
                    ParticleDist::from_sorted(merge_scaled(
                        dist.atoms(),
                        *count as f64 / total,
                        cur.atoms(),
                        steps as f64 / total,
                    ))
                };
                let (reduced, bound) = compress_to(merged, *budget)?;
                pooled[s] = (reduced, count + steps);
                Ok(bound)
            }
        }
    }

    /// The average over steps `t0 + 1 ..= t` given the current model.
    pub(crate) fn average(&self, t: usize, model: &ReturnModel) -> Result<ReturnModel> {
        let mut copy = self.clone();
        let mut states = Vec::with_capacity(model.n_states());
        for s in 0..model.n_states() {
            let steps = copy.held(s, t);
            copy.add(s, steps, model.state(s))?;
        }
        let n = (t - self.t0) as f64;
        match copy.sums {
            Sums::Categorical(sums) => {
                let grid = model.grid().expect("categorical run");
                for p in sums {
                    states.push(CategoricalDist::from_raw(grid, p.into_iter().map(|x| x / n).collect()));
                }
                Ok(ReturnModel::from_categoricals(states))
            }
            Sums::Particle { pooled, .. } => {
                Ok(ReturnModel::from_particles(pooled.into_iter().map(|(d, _)| d).collect()))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::SupportGrid;

    #[test]
    fn constant_history_is_fixed() {
        let grid = SupportGrid::new(4, 0.5).unwrap();
        let m = ReturnModel::categorical_uniform(2, grid);
        let avg = polyak_average(&vec![m.clone(); 5], 1).unwrap();
        for (a, b) in avg.iter().zip(m.iter()) {
            for (x, y) in a.as_categorical().unwrap().probs().iter().zip(b.as_categorical().unwrap().probs()) {
                assert!((x - y).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn two_categorical_iterates_average_coordinates() {
        let grid = SupportGrid::new(2, 0.5).unwrap();
        let a = ReturnModel::categorical_dirac(1, grid, 0);
        let b = ReturnModel::categorical_dirac(1, grid, 2);
        let avg = polyak_average(&[a.clone(), a, b], 0).unwrap();
        assert_eq!(avg.state(0).as_categorical().unwrap().probs(), &[0.5, 0.0, 0.5]);
    }

    #[test]
    fn empty_tail_is_an_error() {
        let m = ReturnModel::dirac(1, 0.0);
        assert!(polyak_average(&[m.clone(), m], 1).is_err());
    }

    #[test]
    fn streaming_matches_batch() {
        let grid = SupportGrid::new(3, 0.5).unwrap();
        let mut model = ReturnModel::categorical_dirac(2, grid, 0);
        let mut history = vec![model.clone()];
        let mut acc = PolyakAccumulator::new(2, &model, 0);
        let updates = [(0, 1), (1, 3), (0, 2), (0, 3), (1, 0), (1, 2)];
        for (t, &(s, k)) in updates.iter().enumerate() {
            let t = t + 1;
            acc.credit(s, t, model.state(s)).unwrap();
            model.set(s, CategoricalDist::dirac(grid, k).into()).unwrap();
            history.push(model.clone());
            if t >= 3 {
                let streaming = acc.average(t, &model).unwrap();
                let batch = polyak_average(&history, 2).unwrap();
                for (x, y) in streaming.iter().zip(batch.iter()) {
                    for (p, q) in x.as_categorical().unwrap().probs().iter().zip(y.as_categorical().unwrap().probs()) {
                        assert!((p - q).abs() < 1e-12);
                    }
                }
            }
        }
    }
}
