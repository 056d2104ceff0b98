use super::categorical::CategoricalDist;
use super::distribution::Distribution;
use super::grid::SupportGrid;
use crate::error::{Error, Result};

/// Slack allowed above `1/(1-gamma)` before an atom counts as out of range.
const RANGE_SLACK: f64 = 1e-9;

/// Cramér projection onto the grid:
/// `p_k = E[(1 - |X - x_k| / gap)_+]`.
///
/// Each atom splits its mass between the two neighbouring grid points in
/// proportion to proximity. A categorical input on the same grid is returned
/// unchanged.
pub fn project_categorical(dist: &Distribution, grid: &SupportGrid) -> Result<CategoricalDist> {
    if let Distribution::Categorical(c) = dist {
        if c.grid() == grid {
            return Ok(c.clone());
        }
    }
    let mut probs = vec![0.0; grid.len()];
    for &(x, w) in dist.atoms().iter() {
        if x < -RANGE_SLACK || x > grid.upper() + RANGE_SLACK || !x.is_finite() {
            return Err(Error::OutOfSupport {
                location: x,
                upper: grid.upper(),
            });
        }
        deposit(&mut probs, grid, x, w);
    }
    Ok(CategoricalDist::from_raw(*grid, probs))
}

#[inline]
pub(crate) fn deposit(probs: &mut [f64], grid: &SupportGrid, x: f64, w: f64) {
    let (j, frac) = grid.locate(x);
    if frac == 0.0 {
        probs[j] += w;
    } else if frac == 1.0 {
        probs[j + 1] += w;
    } else {
        probs[j] += w * (1.0 - frac);
        probs[j + 1] += w * frac;
    }
}

/// Adds `scale * Pi_K((b_{r,gamma})_# p)` into `out`, where `p` is a
/// probability vector on `src` and the result lives on `dst`.
///
/// This is the inner loop of the categorical operators and learners.
#[inline]
pub(crate) fn add_projected_pushforward(
    out: &mut [f64],
    dst: &SupportGrid,
    src: &SupportGrid,
    probs: &[f64],
    r: f64,
    gamma: f64,
    scale: f64,
) {
    for (k, &p) in probs.iter().enumerate() {
        if p != 0.0 {
            deposit(out, dst, r + gamma * src.atom(k), scale * p);
        }
    }
}
