use std::borrow::Cow;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::categorical::CategoricalDist;
use super::grid::SupportGrid;
use super::particle::ParticleDist;
use crate::error::{Error, Result};

/// A probability measure on `[0, 1/(1-gamma)]` in one of the two concrete
/// representations.
#[derive(Debug, Clone, PartialEq)]
pub enum Distribution {
    Categorical(CategoricalDist),
    Particle(ParticleDist),
}

impl From<CategoricalDist> for Distribution {
    fn from(d: CategoricalDist) -> Self {
        Distribution::Categorical(d)
    }
}

impl From<ParticleDist> for Distribution {
    fn from(d: ParticleDist) -> Self {
        Distribution::Particle(d)
    }
}

impl Distribution {
    pub fn dirac(x: f64) -> Self {
        ParticleDist::dirac(x).into()
    }

    /// Sorted `(location, weight)` pairs. Categorical inputs keep zero-weight
    /// grid atoms.
    pub fn atoms(&self) -> Cow<'_, [(f64, f64)]> {
        match self {
            Distribution::Categorical(c) => Cow::Owned(c.atoms().collect()),
            Distribution::Particle(p) => Cow::Borrowed(p.atoms()),
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            Distribution::Categorical(c) => c.mean(),
            Distribution::Particle(p) => p.mean(),
        }
    }

    /// Left-continuous CDF, `P[X < x]`.
    pub fn cdf(&self, x: f64) -> f64 {
        self.atoms()
            .iter()
            .take_while(|(loc, _)| *loc < x)
            .map(|(_, w)| w)
            .sum::<f64>()
            .min(1.0)
    }

    pub fn as_categorical(&self) -> Option<&CategoricalDist> {
        match self {
            Distribution::Categorical(c) => Some(c),
            Distribution::Particle(_) => None,
        }
    }

    pub fn as_particle(&self) -> Option<&ParticleDist> {
        match self {
            Distribution::Particle(p) => Some(p),
            Distribution::Categorical(_) => None,
        }
    }

    pub fn to_particle(&self) -> ParticleDist {
        match self {
            Distribution::Particle(p) => p.clone(),
            Distribution::Categorical(c) => ParticleDist::from_sorted(c.atoms().collect()),
        }
    }

    pub fn is_valid(&self, tol: f64) -> bool {
        match self {
            Distribution::Categorical(c) => c.is_valid(tol),
            Distribution::Particle(p) => p.is_valid(tol),
        }
    }

    pub fn max_location(&self) -> f64 {
        match self {
            Distribution::Categorical(c) => c
                .atoms()
                .filter(|a| a.1 > 0.0)
                .map(|a| a.0)
                .last()
                .unwrap_or(0.0),
            Distribution::Particle(p) => p.atoms().last().map_or(0.0, |a| a.0),
        }
    }
}

/// `P[X < x]` under `dist`.
pub fn cdf(dist: &Distribution, x: f64) -> f64 {
    dist.cdf(x)
}

pub fn mean(dist: &Distribution) -> f64 {
    dist.mean()
}

/// Law of `r + gamma * X` for `X ~ dist`. Always a particle distribution,
/// since shifted grid atoms leave the grid.
pub fn pushforward(dist: &Distribution, r: f64, gamma: f64) -> Distribution {
    debug_assert!((0.0..=1.0).contains(&r));
    let atoms = dist
        .atoms()
        .iter()
        .filter(|a| a.1 > 0.0)
        .map(|&(x, w)| (r + gamma * x, w))
        .collect::<Vec<_>>();
    if gamma > 0.0 {
        ParticleDist::from_sorted(atoms).into()
    } else {
        ParticleDist::from_unsorted(atoms).into()
    }
}

/// Mixture `sum_i w_i * d_i`. Categorical inputs on a common grid stay
/// categorical; anything else yields a particle distribution.
pub fn mix(components: &[(f64, &Distribution)]) -> Result<Distribution> {
    if components.is_empty() {
        return Err(Error::MixtureWeights(0.0));
    }
    let total: f64 = components.iter().map(|c| c.0).sum();
    if components.iter().any(|c| !(c.0 >= 0.0)) || (total - 1.0).abs() > 1e-9 {
        return Err(Error::MixtureWeights(total));
    }
    let common_grid = match components[0].1 {
        Distribution::Categorical(c) => Some(*c.grid()),
        Distribution::Particle(_) => None,
    }
    .filter(|g| {
        components
            .iter()
            .all(|(_, d)| d.as_categorical().is_some_and(|c| c.grid() == g))
    });
    if let Some(grid) = common_grid {
        let mut probs = vec![0.0; grid.len()];
        for (w, d) in components {
            let c = d.as_categorical().expect("checked above");
            for (acc, p) in probs.iter_mut().zip(c.probs()) {
                *acc += w * p;
            }
        }
        return Ok(CategoricalDist::from_raw(grid, probs).into());
    }
    let atoms = components
        .iter()
        .flat_map(|(w, d)| d.atoms().iter().map(|&(x, p)| (x, w * p)).collect::<Vec<_>>())
        .collect();
    Ok(ParticleDist::from_unsorted(atoms).into())
}

/// Merges two sorted atom lists with weights scaled by `a` and `b`.
pub(crate) fn merge_scaled(
    left: &[(f64, f64)],
    a: f64,
    right: &[(f64, f64)],
    b: f64,
) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(left.len() + right.len());
    let (mut i, mut j) = (0, 0);
    while i < left.len() || j < right.len() {
        let take_left = j == right.len() || (i < left.len() && left[i].0 <= right[j].0);
        if take_left {
            out.push((left[i].0, a * left[i].1));
            i += 1;
        } else {
            out.push((right[j].0, b * right[j].1));
            j += 1;
        }
    }
    out
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
enum DistributionRepr {
    Categorical {
        #[serde(rename = "K")]
        k: usize,
        gamma: f64,
        probs: Vec<f64>,
    },
    Particle {
        atoms: Vec<[f64; 2]>,
    },
}

impl Serialize for Distribution {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let repr = match self {
            Distribution::Categorical(c) => DistributionRepr::Categorical {
                k: c.grid().k(),
                gamma: c.grid().gamma(),
                probs: c.probs().to_vec(),
            },
            Distribution::Particle(p) => DistributionRepr::Particle {
                atoms: p.atoms().iter().map(|&(x, w)| [x, w]).collect(),
            },
        };
        repr.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Distribution {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let repr = DistributionRepr::deserialize(deserializer)?;
        let dist = match repr {
            DistributionRepr::Categorical { k, gamma, probs } => {
                let grid = SupportGrid::new(k, gamma).map_err(D::Error::custom)?;
                CategoricalDist::new(grid, probs)
                    .map_err(D::Error::custom)?
                    .into()
            }
            DistributionRepr::Particle { atoms } => {
                ParticleDist::new(atoms.into_iter().map(|[x, w]| (x, w)).collect())
                    .map_err(D::Error::custom)?
                    .into()
            }
        };
        Ok(dist)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_point(a: f64, b: f64, wa: f64) -> Distribution {
        ParticleDist::new(vec![(a, wa), (b, 1.0 - wa)]).unwrap().into()
    }

    #[test]
    fn cdf_is_left_continuous() {
        let d0 = Distribution::dirac(0.0);
        assert_eq!(cdf(&d0, 0.0), 0.0);
        assert_eq!(cdf(&d0, 0.5), 1.0);
        let d = two_point(0.0, 2.0, 0.25);
        assert_eq!(cdf(&d, 1.0), 0.25);
        assert_eq!(cdf(&d, 2.0), 0.25);
        assert_eq!(cdf(&d, 2.0 + 1e-9), 1.0);
        assert_eq!(cdf(&d, -3.0), 0.0);
    }

    #[test]
    fn pushforward_examples() {
        let d = pushforward(&Distribution::dirac(0.7), 0.3, 0.5);
        assert_eq!(d, Distribution::dirac(0.3 + 0.35));

        let gamma = 0.8;
        let upper = 1.0 / (1.0 - gamma);
        let d = pushforward(&two_point(0.0, upper, 0.5), 1.0, gamma);
        let atoms = d.atoms();
        assert_eq!(atoms.len(), 2);
        assert_eq!(atoms[0], (1.0, 0.5));
        assert!((atoms[1].0 - upper).abs() < 1e-12);
        assert_eq!(atoms[1].1, 0.5);
    }

    #[test]
    fn categorical_pushforward_leaves_the_grid() {
        let grid = SupportGrid::new(4, 0.5).unwrap();
        let d: Distribution = CategoricalDist::uniform(grid).into();
        let pushed = pushforward(&d, 0.5, 0.5);
        assert!(pushed.as_particle().is_some());
        assert!((pushed.mean() - (0.5 + 0.5 * d.mean())).abs() < 1e-14);
    }

    #[test]
    fn mix_examples() {
        let d = two_point(0.1, 0.9, 0.3);
        assert_eq!(mix(&[(1.0, &d)]).unwrap(), d);

        let m = mix(&[(0.5, &Distribution::dirac(0.0)), (0.5, &Distribution::dirac(1.0))]).unwrap();
        assert_eq!(m.atoms().as_ref(), &[(0.0, 0.5), (1.0, 0.5)]);

        assert!(matches!(
            mix(&[(0.6, &d), (0.6, &d)]),
            Err(Error::MixtureWeights(_))
        ));
        assert!(mix(&[(1.2, &d), (-0.2, &d)]).is_err());
    }

    #[test]
    fn categorical_mix_stays_categorical() {
        let grid = SupportGrid::new(2, 0.5).unwrap();
        let a: Distribution = CategoricalDist::dirac(grid, 0).into();
        let b: Distribution = CategoricalDist::dirac(grid, 2).into();
        let m = mix(&[(0.25, &a), (0.75, &b)]).unwrap();
        assert_eq!(m.as_categorical().unwrap().probs(), &[0.25, 0.0, 0.75]);
    }

    #[test]
    fn mean_examples() {
        assert_eq!(mean(&Distribution::dirac(1.25)), 1.25);
        let grid = SupportGrid::new(2, 0.5).unwrap();
        let u: Distribution = CategoricalDist::uniform(grid).into();
        assert!((mean(&u) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn json_shape() {
        let grid = SupportGrid::new(2, 0.5).unwrap();
        let c: Distribution = CategoricalDist::dirac(grid, 1).into();
        let s = serde_json::to_string(&c).unwrap();
        assert_eq!(s, r#"{"kind":"categorical","K":2,"gamma":0.5,"probs":[0.0,1.0,0.0]}"#);
        assert_eq!(serde_json::from_str::<Distribution>(&s).unwrap(), c);

        let p = two_point(0.0, 1.5, 0.25);
        let s = serde_json::to_string(&p).unwrap();
        assert_eq!(s, r#"{"kind":"particle","atoms":[[0.0,0.25],[1.5,0.75]]}"#);
        assert_eq!(serde_json::from_str::<Distribution>(&s).unwrap(), p);

        assert!(serde_json::from_str::<Distribution>(r#"{"kind":"particle","atoms":[[0.0,0.5]]}"#).is_err());
        assert!(serde_json::from_str::<Distribution>(
            r#"{"kind":"particle","atoms":[[0.0,1.0]],"extra":1}"#
        )
        .is_err());
    }
}
