//! Exact distances between step-function CDFs.
//!
//! Both CDFs are piecewise constant, so every integral below is a finite sum
//! over the merged breakpoint set. On each open interval between consecutive
//! breakpoints the left-continuous CDF equals the mass at or below the left
//! endpoint.

use serde::{Deserialize, Serialize};

use super::distribution::Distribution;
use super::model::ReturnModel;
use crate::error::{invalid, Error, Result};

/// Distance used for supremum reports, stopping rules and error traces.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    W1,
    Cramer,
    /// `W_p` for `p >= 1`.
    Wp(f64),
}

impl Metric {
    pub fn distance(&self, a: &Distribution, b: &Distribution) -> Result<f64> {
        match *self {
            Metric::W1 => Ok(w1(a, b)),
            Metric::Cramer => Ok(cramer(a, b)),
            Metric::Wp(p) => wp(a, b, p),
        }
    }

    pub fn label(&self) -> String {
        match self {
            Metric::W1 => "w1".into(),
            Metric::Cramer => "cramer".into(),
            Metric::Wp(p) => format!("w{p}"),
        }
    }
}

/// Calls `f(length, F_a - F_b)` on every interval where the CDF difference is
/// constant and possibly nonzero.
fn for_each_cdf_gap(a: &[(f64, f64)], b: &[(f64, f64)], mut f: impl FnMut(f64, f64)) {
    let (mut i, mut j) = (0, 0);
    let (mut fa, mut fb) = (0.0, 0.0);
    let mut prev: Option<f64> = None;
    while i < a.len() || j < b.len() {
        let xa = a.get(i).map_or(f64::INFINITY, |p| p.0);
        let xb = b.get(j).map_or(f64::INFINITY, |p| p.0);
        let x = xa.min(xb);
        if let Some(p) = prev {
            if x > p {
                f(x - p, fa - fb);
            }
        }
        while i < a.len() && a[i].0 == x {
            fa += a[i].1;
            i += 1;
        }
        while j < b.len() && b[j].0 == x {
            fb += b[j].1;
            j += 1;
        }
        prev = Some(x);
    }
}

fn same_grid<'a>(a: &'a Distribution, b: &'a Distribution) -> Option<(&'a [f64], &'a [f64], f64)> {
    match (a, b) {
        (Distribution::Categorical(x), Distribution::Categorical(y)) if x.grid() == y.grid() => {
            Some((x.probs(), y.probs(), x.grid().gap()))
        }
        _ => None,
    }
}

/// Sum of `g(cdf gap)` times interval length for two probability vectors on
/// the same grid.
fn grid_integral(p: &[f64], q: &[f64], gap: f64, g: impl Fn(f64) -> f64) -> f64 {
    let (mut fp, mut fq, mut acc) = (0.0, 0.0, 0.0);
    for k in 0..p.len() - 1 {
        fp += p[k];
        fq += q[k];
        acc += g(fp - fq);
    }
    acc * gap
}

/// 1-Wasserstein distance, `int |F_a - F_b|`.
pub fn w1(a: &Distribution, b: &Distribution) -> f64 {
    if let Some((p, q, gap)) = same_grid(a, b) {
        return grid_integral(p, q, gap, f64::abs);
    }
    let mut acc = 0.0;
    for_each_cdf_gap(&a.atoms(), &b.atoms(), |len, d| acc += len * d.abs());
    acc
}

/// Cramér distance, `(int (F_a - F_b)^2)^{1/2}`.
pub fn cramer(a: &Distribution, b: &Distribution) -> f64 {
    if let Some((p, q, gap)) = same_grid(a, b) {
        return grid_integral(p, q, gap, |d| d * d).sqrt();
    }
    let mut acc = 0.0;
    for_each_cdf_gap(&a.atoms(), &b.atoms(), |len, d| acc += len * d * d);
    acc.sqrt()
}

/// p-Wasserstein distance through the quantile coupling,
/// `W_p^p = int_0^1 |F_a^{-1}(u) - F_b^{-1}(u)|^p du`.
pub fn wp(a: &Distribution, b: &Distribution, p: f64) -> Result<f64> {
    if !(p >= 1.0) || !p.is_finite() {
        return Err(invalid("p", format!("need finite p >= 1, got {p}")));
    }
    let pa: Vec<(f64, f64)> = a.atoms().iter().copied().filter(|x| x.1 > 0.0).collect();
    let pb: Vec<(f64, f64)> = b.atoms().iter().copied().filter(|x| x.1 > 0.0).collect();
    let (mut i, mut j) = (0, 0);
    let (mut ra, mut rb) = (pa[0].1, pb[0].1);
    let mut acc = 0.0;
    loop {
        let du = ra.min(rb);
        acc += du * (pa[i].0 - pb[j].0).abs().powf(p);
        ra -= du;
        rb -= du;
        // whichever side ran out of mass advances; rounding can leave a
        // residue of a few ulps on the final atom
        if ra <= 0.0 {
            i += 1;
            if i == pa.len() {
                break;
            }
            ra += pa[i].1;
        }
        if rb <= 0.0 {
            j += 1;
            if j == pb.len() {
                break;
            }
            rb += pb[j].1;
        }
    }
    Ok(acc.powf(1.0 / p))
}

/// Per-state distances between two return models and their maximum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub per_state: Vec<f64>,
    pub sup: f64,
}

impl MetricReport {
    pub fn from_per_state(per_state: Vec<f64>) -> Self {
        let sup = per_state.iter().copied().fold(0.0, f64::max);
        Self { per_state, sup }
    }
}

pub fn sup_metric(m1: &ReturnModel, m2: &ReturnModel, metric: Metric) -> Result<MetricReport> {
    if m1.n_states() != m2.n_states() {
        return Err(Error::StateCountMismatch {
            left: m1.n_states(),
            right: m2.n_states(),
        });
    }
    let per_state = m1
        .iter()
        .zip(m2.iter())
        .map(|(a, b)| metric.distance(a, b))
        .collect::<Result<Vec<_>>>()?;
    Ok(MetricReport::from_per_state(per_state))
}
