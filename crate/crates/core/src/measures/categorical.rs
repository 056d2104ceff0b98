use super::grid::SupportGrid;
use crate::error::{Error, Result};

pub(crate) const MASS_TOL: f64 = 1e-12;

/// A distribution on the atoms of a [`SupportGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct CategoricalDist {
    grid: SupportGrid,
    probs: Vec<f64>,
}

impl CategoricalDist {
    pub fn new(grid: SupportGrid, probs: Vec<f64>) -> Result<Self> {
        if probs.len() != grid.len() {
            return Err(Error::InvalidDistribution(format!(
                "expected {} probabilities, got {}",
                grid.len(),
                probs.len()
            )));
        }
        if let Some(p) = probs.iter().find(|p| !(**p >= 0.0) || !p.is_finite()) {
            return Err(Error::InvalidDistribution(format!("bad probability {p}")));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > MASS_TOL {
            return Err(Error::InvalidDistribution(format!(
                "probabilities sum to {total}"
            )));
        }
        Ok(Self { grid, probs })
    }

    pub(crate) fn from_raw(grid: SupportGrid, probs: Vec<f64>) -> Self {
        debug_assert_eq!(probs.len(), grid.len());
        Self { grid, probs }
    }

    /// Point mass on atom `k`.
    pub fn dirac(grid: SupportGrid, k: usize) -> Self {
        let mut probs = vec![0.0; grid.len()];
        probs[k] = 1.0;
        Self { grid, probs }
    }

    pub fn uniform(grid: SupportGrid) -> Self {
        let n = grid.len();
        Self {
            grid,
            probs: vec![1.0 / n as f64; n],
        }
    }

    pub fn grid(&self) -> &SupportGrid {
        &self.grid
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn into_probs(self) -> Vec<f64> {
        self.probs
    }

    pub fn mean(&self) -> f64 {
        self.probs
            .iter()
            .enumerate()
            .map(|(k, p)| p * self.grid.atom(k))
            .sum()
    }

    /// `(location, weight)` pairs in increasing location, zero weights kept.
    pub fn atoms(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.probs
            .iter()
            .enumerate()
            .map(|(k, &p)| (self.grid.atom(k), p))
    }

    /// Checks the probability-vector invariants at tolerance `tol`.
    pub fn is_valid(&self, tol: f64) -> bool {
        self.probs.iter().all(|p| *p >= 0.0)
            && (self.probs.iter().sum::<f64>() - 1.0).abs() <= tol
    }
}
