use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Equally spaced atoms `x_k = k * gap` for `k = 0..=K` on `[0, 1/(1-gamma)]`,
/// with `gap = 1 / (K (1 - gamma))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupportGrid {
    k: usize,
    gamma: f64,
}

impl SupportGrid {
    pub fn new(k: usize, gamma: f64) -> Result<Self> {
        if k < 1 {
            return Err(invalid("K", "need at least two atoms (K >= 1)"));
        }
        if !(0.0..1.0).contains(&gamma) {
            return Err(invalid("gamma", format!("{gamma} not in [0, 1)")));
        }
        Ok(Self { k, gamma })
    }

    /// Index of the last atom (the grid has `K + 1` atoms).
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.k + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Upper end of the return range, `1/(1-gamma)`.
    pub fn upper(&self) -> f64 {
        1.0 / (1.0 - self.gamma)
    }

    pub fn gap(&self) -> f64 {
        1.0 / (self.k as f64 * (1.0 - self.gamma))
    }

    pub fn atom(&self, i: usize) -> f64 {
        debug_assert!(i <= self.k);
        if i == self.k {
            self.upper()
        } else {
            i as f64 * self.gap()
        }
    }

    pub fn atoms(&self) -> impl Iterator<Item = f64> + '_ {
        (0..=self.k).map(move |i| self.atom(i))
    }

    /// Splits a location into `(j, frac)` with `x = (j + frac) * gap`,
    /// `j < K` and `frac` in `[0, 1]`. Locations within `1e-10` grid units of
    /// an atom snap onto it so grid-supported inputs project exactly.
    pub(crate) fn locate(&self, x: f64) -> (usize, f64) {
        let pos = (x / self.gap()).clamp(0.0, self.k as f64);
        let nearest = pos.round();
        let pos = if (pos - nearest).abs() < 1e-10 { nearest } else { pos };
        let j = (pos.floor() as usize).min(self.k - 1);
        (j, pos - j as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn atoms_span_the_return_range() {
        for &(k, gamma) in &[(1, 0.5), (7, 0.9), (512, 0.99), (64, 0.0)] {
            let g = SupportGrid::new(k, gamma).unwrap();
            let atoms: Vec<f64> = g.atoms().collect();
            assert_eq!(atoms.len(), k + 1);
            assert_eq!(atoms[0], 0.0);
            assert_eq!(atoms[k], 1.0 / (1.0 - gamma));
            assert!(atoms.windows(2).all(|w| w[0] < w[1]));
            assert!((g.gap() * k as f64 * (1.0 - gamma) - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(SupportGrid::new(0, 0.5).is_err());
        assert!(SupportGrid::new(4, 1.0).is_err());
        assert!(SupportGrid::new(4, -0.1).is_err());
    }

    #[test]
    fn locate_snaps_to_atoms() {
        let g = SupportGrid::new(10, 0.9).unwrap();
        for i in 0..=10 {
            let (j, frac) = g.locate(g.atom(i));
            assert_eq!(j as f64 + frac, i as f64);
        }
        let (j, frac) = g.locate(2.5 * g.gap());
        assert_eq!((j, frac), (2, 0.5));
    }
}
