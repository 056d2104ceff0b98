//! Particle budget enforcement by greedy adjacent merging.
//!
//! Merging neighbours `(x1, w1)` and `(x2, w2)` into one atom at their
//! weighted mean moves mass by exactly `2 w1 w2 |x1 - x2| / (w1 + w2)` in
//! `W1` and leaves the mean unchanged. Repeatedly merging the cheapest
//! adjacent pair and summing these costs gives a certificate for
//! `W1(input, output)` by the triangle inequality.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::particle::ParticleDist;
use crate::error::{invalid, Result};

#[derive(Debug, PartialEq)]
struct Candidate {
    cost: f64,
    left: usize,
    stamp: u64,
}

impl Eq for Candidate {}

impl Ord for Candidate {
    // min-heap on (cost, left index)
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .cost
            .total_cmp(&self.cost)
            .then_with(|| other.left.cmp(&self.left))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn merge_cost(a: (f64, f64), b: (f64, f64)) -> f64 {
    2.0 * a.1 * b.1 * (b.0 - a.0).abs() / (a.1 + b.1)
}

/// Reduces `dist` to at most `n_max` atoms. Returns the compressed
/// distribution and an upper bound on the `W1` distance to the input.
pub fn compress(dist: &ParticleDist, n_max: usize) -> Result<(ParticleDist, f64)> {
    if n_max < 2 {
        return Err(invalid("n_max", format!("need at least 2 atoms, got {n_max}")));
    }
    let n = dist.len();
    if n <= n_max {
        return Ok((dist.clone(), 0.0));
    }
    let mut atoms: Vec<(f64, f64)> = dist.atoms().to_vec();
    let mut prev: Vec<Option<usize>> = (0..n).map(|i| i.checked_sub(1)).collect();
    let mut next: Vec<Option<usize>> = (0..n).map(|i| (i + 1 < n).then_some(i + 1)).collect();
    let mut alive = vec![true; n];
    let mut stamp = vec![0u64; n];
    let mut heap = BinaryHeap::with_capacity(n);
    for i in 0..n - 1 {
        heap.push(Candidate {
            cost: merge_cost(atoms[i], atoms[i + 1]),
            left: i,
            stamp: 0,
        });
    }
    let mut remaining = n;
    let mut bound = 0.0;
    while remaining > n_max {
        let Some(c) = heap.pop() else { break };
        let i = c.left;
        if !alive[i] || c.stamp != stamp[i] {
            continue;
        }
        let Some(j) = next[i] else { continue };
        let (a, b) = (atoms[i], atoms[j]);
        let w = a.1 + b.1;
        atoms[i] = ((a.0 * a.1 + b.0 * b.1) / w, w);
        bound += c.cost;
        alive[j] = false;
        next[i] = next[j];
        if let Some(k) = next[j] {
            prev[k] = Some(i);
        }
        remaining -= 1;
        stamp[i] += 1;
        if let Some(k) = next[i] {
            heap.push(Candidate {
                cost: merge_cost(atoms[i], atoms[k]),
                left: i,
                stamp: stamp[i],
            });
        }
        if let Some(h) = prev[i] {
            stamp[h] += 1;
            heap.push(Candidate {
                cost: merge_cost(atoms[h], atoms[i]),
                left: h,
                stamp: stamp[h],
            });
        }
    }
    let out = atoms
        .into_iter()
        .zip(alive)
        .filter_map(|(a, keep)| keep.then_some(a))
        .collect();
    Ok((ParticleDist::from_sorted(out), bound))
}
