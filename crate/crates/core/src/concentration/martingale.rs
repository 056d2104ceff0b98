use std::io::Write;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::bounds::{freedman_bound_unchecked, FreedmanParams};
use crate::error::{invalid, Result};
use crate::measures::SupportGrid;
use crate::rng::{stream, SimRng};

/// The Hilbert space the martingale lives in.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum Embedding {
    /// `R^dim` with the Euclidean norm.
    Euclidean { dim: usize },
    /// Zero-mass signed measures on a grid under the Cramér norm
    /// `||nu||^2 = int F_nu(x)^2 dx`.
    Cramer { k: usize, gamma: f64 },
}

/// How the scale `s_i = ||X_i||` is chosen. Every generator draws
/// `X_i = eps_i * s_i * d_i` with a Rademacher sign `eps_i` and a random unit
/// direction `d_i`, so `E[X_i | past] = 0` and `E[||X_i||^2 | past] = s_i^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Generator {
    /// `s_i = 0`.
    Zero,
    /// `s_i = b`.
    Iid,
    /// `s_i = b min(1, 0.1 + ||Y_{i-1}|| / (b sqrt(n)))`: the variance grows
    /// as the path drifts away from the origin.
    StateDependent,
    /// `s_i = b / 20` except for a burst of `max(1, n / 50)` steps at full
    /// scale `b` starting at step `n / 2`.
    Burst,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MartingaleSpec {
    pub name: String,
    pub embedding: Embedding,
    pub generator: Generator,
    pub b: f64,
    pub n: usize,
}

/// `||Y_k||` and `W_k` for `k = 0..=n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MartingalePath {
    pub norms: Vec<f64>,
    pub w: Vec<f64>,
}

impl MartingaleSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.b > 0.0 && self.b.is_finite()) {
            return Err(invalid("b", "must be positive"));
        }
        if self.n < 1 {
            return Err(invalid("n", "must be at least 1"));
        }
        match self.embedding {
            Embedding::Euclidean { dim } if dim < 1 => Err(invalid("dim", "must be at least 1")),
            Embedding::Cramer { k, gamma } => SupportGrid::new(k, gamma).map(|_| ()),
            _ => Ok(()),
        }
    }

    fn burst(&self) -> std::ops::Range<usize> {
        let len = (self.n / 50).max(1);
        let start = self.n / 2;
        start..(start + len).min(self.n)
    }

    /// `s_i` for step `i` (1-based) given `||Y_{i-1}||`.
    fn scale(&self, i: usize, prev_norm: f64) -> f64 {
        match self.generator {
            Generator::Zero => 0.0,
            Generator::Iid => self.b,
            Generator::StateDependent => {
                self.b * (0.1 + prev_norm / (self.b * (self.n as f64).sqrt())).min(1.0)
            }
            Generator::Burst => {
                if self.burst().contains(&(i - 1)) {
                    self.b
                } else {
                    self.b / 20.0
                }
            }
        }
    }

    /// An almost-sure bound on `W_n`: exact for the deterministic profiles,
    /// `n b^2` otherwise.
    pub fn sigma2_bound(&self) -> f64 {
        match self.generator {
            Generator::Zero | Generator::Iid | Generator::StateDependent => self.n as f64 * self.b * self.b,
            Generator::Burst => (1..=self.n).map(|i| self.scale(i, 0.0).powi(2)).sum(),
        }
    }

    /// `delta` with `sigma^2` from [`Self::sigma2_bound`] and `H` chosen so
    /// that `sigma^2 / 2^H` is about `b^2`.
    pub fn default_params(&self, delta: f64) -> Result<FreedmanParams> {
        let sigma2 = self.sigma2_bound().max(self.b * self.b);
        let h = ((sigma2 / (self.b * self.b)).log2().ceil() as u32).max(1);
        FreedmanParams::new(delta, h, sigma2, self.b)
    }
}

/// The specs validated by the test suite and the CLI.
pub fn shipped_specs() -> Vec<MartingaleSpec> {
    let e = Embedding::Euclidean { dim: 4 };
    let c = Embedding::Cramer { k: 32, gamma: 0.9 };
    let mut out = Vec::new();
    for n in [100, 1000] {
        out.push(MartingaleSpec { name: "euclid_iid".into(), embedding: e, generator: Generator::Iid, b: 1.0, n });
        out.push(MartingaleSpec { name: "euclid_state".into(), embedding: e, generator: Generator::StateDependent, b: 1.0, n });
        out.push(MartingaleSpec { name: "euclid_burst".into(), embedding: e, generator: Generator::Burst, b: 1.0, n });
        out.push(MartingaleSpec { name: "cramer_iid".into(), embedding: c, generator: Generator::Iid, b: 1.0, n });
        out.push(MartingaleSpec { name: "cramer_burst".into(), embedding: c, generator: Generator::Burst, b: 1.0, n });
    }
    out
}

/// Working vector plus the norm of its space.
struct Space {
    embedding: Embedding,
    /// Euclidean coordinates, or signed masses on the grid atoms.
    y: Vec<f64>,
    dir: Vec<f64>,
    gap: f64,
}

impl Space {
    fn new(embedding: Embedding) -> Self {
        let (len, gap) = match embedding {
            Embedding::Euclidean { dim } => (dim, 1.0),
            Embedding::Cramer { k, gamma } => (k + 1, SupportGrid::new(k, gamma).expect("validated").gap()),
        };
        Self { embedding, y: vec![0.0; len], dir: vec![0.0; len], gap }
    }

    fn norm_of(&self, v: &[f64]) -> f64 {
        match self.embedding {
            Embedding::Euclidean { .. } => v.iter().map(|x| x * x).sum::<f64>().sqrt(),
            Embedding::Cramer { .. } => {
                // F is constant on [x_j, x_{j+1}) with value sum_{i<=j} v_i
                let mut f = 0.0;
                let mut acc = 0.0;
                for x in &v[..v.len() - 1] {
                    f += x;
                    acc += f * f;
                }
                (acc * self.gap).sqrt()
            }
        }
    }

    fn draw_direction(&mut self, rng: &mut SimRng) {
        for d in self.dir.iter_mut() {
            *d = rng.sample(StandardNormal);
        }
        if let Embedding::Cramer { .. } = self.embedding {
            let mean = self.dir.iter().sum::<f64>() / self.dir.len() as f64;
            self.dir.iter_mut().for_each(|d| *d -= mean);
        }
        let norm = self.norm_of(&self.dir);
        self.dir.iter_mut().for_each(|d| *d /= norm);
    }
}

pub fn simulate(spec: &MartingaleSpec, rng: &mut SimRng) -> Result<MartingalePath> {
    spec.validate()?;
    let mut space = Space::new(spec.embedding);
    let mut norms = Vec::with_capacity(spec.n + 1);
    let mut w = Vec::with_capacity(spec.n + 1);
    norms.push(0.0);
    w.push(0.0);
    let mut total = 0.0;
    for i in 1..=spec.n {
        let s = spec.scale(i, *norms.last().expect("nonempty"));
        space.draw_direction(rng);
        let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
        for (y, d) in space.y.iter_mut().zip(&space.dir) {
            *y += sign * s * d;
        }
        total += s * s;
        norms.push(space.norm_of(&space.y));
        w.push(total);
    }
    Ok(MartingalePath { norms, w })
}

/// Does the path ever cross the bound?
pub fn violates(path: &MartingalePath, params: &FreedmanParams) -> bool {
    path.norms
        .iter()
        .zip(&path.w)
        .any(|(&y, &w)| y > freedman_bound_unchecked(w, params))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ViolationReport {
    pub trials: usize,
    pub violations: usize,
    pub rate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

/// 95% Wilson score interval for `k` successes in `n` trials.
pub fn wilson_interval(k: usize, n: usize) -> (f64, f64) {
    const Z: f64 = 1.959_963_984_540_054;
    let n_f = n as f64;
    let p = k as f64 / n_f;
    let denom = 1.0 + Z * Z / n_f;
    let centre = (p + Z * Z / (2.0 * n_f)) / denom;
    let half = Z * (p * (1.0 - p) / n_f + Z * Z / (4.0 * n_f * n_f)).sqrt() / denom;
    let lo = if k == 0 { 0.0 } else { (centre - half).max(0.0) };
    let hi = if k == n { 1.0 } else { (centre + half).min(1.0) };
    (lo, hi)
}

/// Fraction of `trials` independent paths that cross the bound at some
/// `k`. Trial `i` uses stream `i` of `seed`, so the result does not depend
/// on the thread count.
pub fn violation_rate(spec: &MartingaleSpec, params: &FreedmanParams, trials: usize, seed: u64) -> Result<ViolationReport> {
    spec.validate()?;
    params.validate()?;
    if trials < 1 {
        return Err(invalid("trials", "must be at least 1"));
    }
    let violations = (0..trials)
        .into_par_iter()
        .map(|i| {
            let path = simulate(spec, &mut stream(seed, i as u64))?;
            Ok(violates(&path, params) as usize)
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .sum();
    let (ci_low, ci_high) = wilson_interval(violations, trials);
    Ok(ViolationReport {
        trials,
        violations,
        rate: violations as f64 / trials as f64,
        ci_low,
        ci_high,
    })
}

/// Rows `trial, k, norm_Yk, W_k, bound, violated` for the given paths.
pub fn write_paths_csv<W: Write>(out: W, paths: &[(usize, MartingalePath)], params: &FreedmanParams) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["trial", "k", "norm_Yk", "W_k", "bound", "violated"])?;
    for (trial, path) in paths {
        for (k, (&y, &wk)) in path.norms.iter().zip(&path.w).enumerate() {
            let bound = freedman_bound_unchecked(wk, params);
            w.write_record(&[
                trial.to_string(),
                k.to_string(),
                format!("{y:e}"),
                format!("{wk:e}"),
                format!("{bound:e}"),
                (y > bound).to_string(),
            ])?;
        }
    }
    w.flush().map_err(|e| crate::Error::Csv(e.into()))?;
    Ok(())
}
