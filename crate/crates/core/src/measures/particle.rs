use crate::error::{Error, Result};

/// Locations closer than this are treated as one atom.
pub const DEDUP_TOL: f64 = 1e-12;

pub(crate) const WEIGHT_TOL: f64 = 1e-12;

/// A finite mixture of point masses, sorted by location.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleDist {
    atoms: Vec<(f64, f64)>,
}

impl ParticleDist {
    /// Builds a particle distribution from `(location, weight)` pairs in any
    /// order. Zero weights are dropped and near-coincident locations merged.
    pub fn new(mut atoms: Vec<(f64, f64)>) -> Result<Self> {
        for &(x, w) in &atoms {
            if !x.is_finite() || x < -DEDUP_TOL {
                return Err(Error::InvalidDistribution(format!("bad location {x}")));
            }
            if !w.is_finite() || w < 0.0 {
                return Err(Error::InvalidDistribution(format!("bad weight {w}")));
            }
        }
        let total: f64 = atoms.iter().map(|a| a.1).sum();
        if (total - 1.0).abs() > WEIGHT_TOL {
            return Err(Error::InvalidDistribution(format!("weights sum to {total}")));
        }
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        Ok(Self::from_sorted(atoms))
    }

    /// Canonicalizes an already sorted list: merges near-duplicates and drops
    /// zero weights. No mass check.
    pub(crate) fn from_sorted(atoms: Vec<(f64, f64)>) -> Self {
        debug_assert!(atoms.windows(2).all(|w| w[0].0 <= w[1].0));
        let mut out: Vec<(f64, f64)> = Vec::with_capacity(atoms.len());
        for (x, w) in atoms {
            if w <= 0.0 {
                continue;
            }
            match out.last_mut() {
                Some(last) if x - last.0 <= DEDUP_TOL => last.1 += w,
                _ => out.push((x.max(0.0), w)),
            }
        }
        Self { atoms: out }
    }

    pub(crate) fn from_unsorted(mut atoms: Vec<(f64, f64)>) -> Self {
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        Self::from_sorted(atoms)
    }

    pub fn dirac(x: f64) -> Self {
        Self {
            atoms: vec![(x, 1.0)],
        }
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.atoms.iter().map(|(x, w)| x * w).sum()
    }

    pub fn total_weight(&self) -> f64 {
        self.atoms.iter().map(|a| a.1).sum()
    }

    /// Checks the weight invariants at tolerance `tol`.
    pub fn is_valid(&self, tol: f64) -> bool {
        self.atoms.iter().all(|a| a.1 > 0.0)
            && self.atoms.windows(2).all(|w| w[0].0 < w[1].0)
            && (self.total_weight() - 1.0).abs() <= tol
    }
}
