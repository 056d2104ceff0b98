#![allow(dead_code)]

use disteval::measures::{CategoricalDist, Distribution, ParticleDist, ReturnModel, SupportGrid};
use proptest::prelude::*;
use rand::Rng;

/// Normalizes raw positive weights into a particle distribution on `[0, upper]`.
pub fn particle_from(raw: &[(f64, f64)], upper: f64) -> ParticleDist {
    let total: f64 = raw.iter().map(|a| a.1).sum();
    ParticleDist::new(raw.iter().map(|&(u, w)| (u * upper, w / total)).collect()).unwrap()
}

pub fn categorical_from(raw: &[f64], grid: SupportGrid) -> CategoricalDist {
    let total: f64 = raw.iter().sum();
    CategoricalDist::new(grid, raw.iter().map(|w| w / total).collect()).unwrap()
}

/// Up to `max_atoms` atoms with unit-interval locations and positive weights.
pub fn raw_atoms(max_atoms: usize) -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((0.0f64..=1.0, 0.01f64..1.0), 1..=max_atoms)
}

pub fn random_particle<R: Rng>(rng: &mut R, atoms: usize, upper: f64) -> ParticleDist {
    let raw: Vec<(f64, f64)> = (0..atoms).map(|_| (rng.random::<f64>(), rng.random::<f64>() + 0.01)).collect();
    particle_from(&raw, upper)
}

pub fn random_categorical<R: Rng>(rng: &mut R, grid: SupportGrid) -> CategoricalDist {
    // sparse vectors exercise the boundary cases better than dense ones
    let raw: Vec<f64> = (0..grid.len())
        .map(|_| if rng.random::<f64>() < 0.5 { 0.0 } else { rng.random::<f64>() })
        .collect();
    if raw.iter().sum::<f64>() == 0.0 {
        return CategoricalDist::dirac(grid, rng.random_range(0..grid.len()));
    }
    categorical_from(&raw, grid)
}

pub fn random_particle_model<R: Rng>(rng: &mut R, n_states: usize, atoms: usize, upper: f64) -> ReturnModel {
    ReturnModel::new((0..n_states).map(|_| Distribution::from(random_particle(rng, atoms, upper))).collect()).unwrap()
}

pub fn random_categorical_model<R: Rng>(rng: &mut R, n_states: usize, grid: SupportGrid) -> ReturnModel {
    ReturnModel::new((0..n_states).map(|_| Distribution::from(random_categorical(rng, grid))).collect()).unwrap()
}

/// `int (F1 - F2)^2` by a midpoint rule on `cells` cells of `[0, upper]`,
/// evaluating the left-continuous CDFs directly from the atom lists.
pub fn dense_cramer_sq(a: &[(f64, f64)], b: &[(f64, f64)], upper: f64, cells: usize) -> f64 {
    let h = upper / cells as f64;
    let f = |atoms: &[(f64, f64)], x: f64| atoms.iter().filter(|p| p.0 < x).map(|p| p.1).sum::<f64>();
    (0..cells)
        .map(|i| {
            let x = (i as f64 + 0.5) * h;
            (f(a, x) - f(b, x)).powi(2) * h
        })
        .sum()
}

/// Minimum-cost transport between two atom lists with cost `|x - y|^p`,
/// solved as a transportation LP.
pub fn coupling_lp(a: &[(f64, f64)], b: &[(f64, f64)], p: f64) -> f64 {
    use minilp::{ComparisonOp, OptimizationDirection, Problem};
    let mut lp = Problem::new(OptimizationDirection::Minimize);
    let vars: Vec<Vec<_>> = a
        .iter()
        .map(|&(x, _)| b.iter().map(|&(y, _)| lp.add_var((x - y).abs().powf(p), (0.0, f64::INFINITY))).collect())
        .collect();
    for (i, &(_, w)) in a.iter().enumerate() {
        let row: Vec<_> = vars[i].iter().map(|&v| (v, 1.0)).collect();
        lp.add_constraint(&row, ComparisonOp::Eq, w);
    }
    for (j, &(_, w)) in b.iter().enumerate() {
        let col: Vec<_> = vars.iter().map(|r| (r[j], 1.0)).collect();
        lp.add_constraint(&col, ComparisonOp::Eq, w);
    }
    lp.solve().expect("transportation LP is feasible").objective()
}
