//! Moments of Gaussian location mixtures `X = μ + ζ`, with `ζ ~ N(0, R)`
//! independent of the random location `μ`.
//!
//! Expanding `(μ + ζ)_A` over position subsets `S ⊂ A` and dropping the terms
//! where `|A∖S|` is odd gives
//!
//! ```text
//! E[X_A] = Σ_{k=0}^{N} Σ_{S ⊂ A, |S| = 2k+ε} E[μ_S] · Wick_R(A∖S)
//! ```
//!
//! The mixing law only enters through the mixed moments `E[μ_S]`, so no
//! density for `μ` is needed.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use crate::combinatorics::{binomial, enumerate_subsets, pairing_count, positions_key, MultiIndex, MultisetKey};
use crate::error::{Error, Result};
use crate::gaussian::{CovarianceMatrix, WickCache};

/// Tolerance on `Σ p_i = 1` for discrete mixing laws.
pub const PROBABILITY_SUM_TOLERANCE: f64 = 1e-12;

/// User-supplied mixed moments `S ↦ E[μ_S]`. The argument is the sorted list
/// of 0-based components of `S` and is never empty.
pub type MomentOracle = Arc<dyn Fn(&[usize]) -> f64 + Send + Sync>;

/// Law of the random location `μ`.
#[derive(Clone)]
pub struct MixingDistribution {
    dim: usize,
    pub(crate) law: Law,
}

#[derive(Clone)]
pub(crate) enum Law {
    Deterministic(Vec<f64>),
    /// `ε·μ` with `ε = ±1` equally likely.
    Bernoulli(Vec<f64>),
    Atoms {
        locations: Vec<Vec<f64>>,
        probabilities: Vec<f64>,
    },
    Oracle(MomentOracle),
}

fn check_vector(v: &[f64], what: &'static str) -> Result<()> {
    if v.is_empty() {
        return Err(Error::ZeroDimension);
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite(what));
    }
    Ok(())
}

impl MixingDistribution {
    /// Point mass at `m`.
    pub fn deterministic(m: Vec<f64>) -> Result<Self> {
        check_vector(&m, "deterministic location")?;
        Ok(Self {
            dim: m.len(),
            law: Law::Deterministic(m),
        })
    }

    /// `ε·μ` with a symmetric random sign `ε`.
    pub fn bernoulli(mu: Vec<f64>) -> Result<Self> {
        check_vector(&mu, "Bernoulli location")?;
        Ok(Self {
            dim: mu.len(),
            law: Law::Bernoulli(mu),
        })
    }

    /// Finitely many atoms `μ_i` with probabilities `p_i > 0` summing to 1.
    pub fn discrete(locations: Vec<Vec<f64>>, probabilities: Vec<f64>) -> Result<Self> {
        if locations.is_empty() {
            return Err(Error::InvalidProbabilities("no atoms given".into()));
        }
        if locations.len() != probabilities.len() {
            return Err(Error::InvalidProbabilities(format!(
                "{} atoms but {} probabilities",
                locations.len(),
                probabilities.len()
            )));
        }
        let dim = locations[0].len();
        for loc in &locations {
            check_vector(loc, "atom location")?;
            if loc.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: loc.len(),
                });
            }
        }
        if let Some(p) = probabilities.iter().find(|p| !(p.is_finite() && **p > 0.0)) {
            return Err(Error::InvalidProbabilities(format!(
                "probability {p} is not strictly positive"
            )));
        }
        let total: f64 = probabilities.iter().sum();
        if (total - 1.0).abs() > PROBABILITY_SUM_TOLERANCE {
            return Err(Error::InvalidProbabilities(format!(
                "probabilities sum to {total}, not 1"
            )));
        }
        Ok(Self {
            dim,
            law: Law::Atoms {
                locations,
                probabilities,
            },
        })
    }

    /// Atoms of a vector with independent components, given each component's
    /// marginal as `(value, probability)` pairs.
    pub fn product_of_marginals(marginals: &[Vec<(f64, f64)>]) -> Result<Self> {
        let mut locations = vec![Vec::new()];
        let mut probabilities = vec![1.0];
        for marginal in marginals {
            let mut next_loc = Vec::new();
            let mut next_p = Vec::new();
            for (loc, p) in locations.iter().zip(&probabilities) {
                for &(v, q) in marginal {
                    let mut l = loc.clone();
                    l.push(v);
                    next_loc.push(l);
                    next_p.push(p * q);
                }
            }
            locations = next_loc;
            probabilities = next_p;
        }
        Self::discrete(locations, probabilities)
    }

    /// Mixed moments supplied by a trusted oracle. Every moment the oracle is
    /// asked for must be finite; countably infinite atom families belong here.
    pub fn oracle(dimension: usize, oracle: MomentOracle) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::ZeroDimension);
        }
        Ok(Self {
            dim: dimension,
            law: Law::Oracle(oracle),
        })
    }

    pub fn dimension(&self) -> usize {
        self.dim
    }

    pub fn kind_name(&self) -> &'static str {
        match self.law {
            Law::Deterministic(_) => "deterministic",
            Law::Bernoulli(_) => "bernoulli",
            Law::Atoms { .. } => "discrete",
            Law::Oracle(_) => "oracle",
        }
    }

    /// `E[μ]`, component-wise.
    pub fn mean(&self) -> Vec<f64> {
        match &self.law {
            Law::Deterministic(m) => m.clone(),
            Law::Bernoulli(mu) => vec![0.0; mu.len()],
            Law::Atoms {
                locations,
                probabilities,
            } => (0..self.dim)
                .map(|k| locations.iter().zip(probabilities).map(|(l, p)| p * l[k]).sum())
                .collect(),
            Law::Oracle(f) => (0..self.dim).map(|k| f(&[k])).collect(),
        }
    }

    fn moment_of_key(&self, key: &MultisetKey) -> f64 {
        let comps = key.components();
        if comps.is_empty() {
            return 1.0;
        }
        let mono = |x: &[f64]| comps.iter().fold(1.0, |acc, &c| acc * x[c]);
        match &self.law {
            Law::Deterministic(m) => mono(m),
            Law::Bernoulli(mu) => {
                if comps.len() % 2 == 1 {
                    0.0
                } else {
                    mono(mu)
                }
            }
            Law::Atoms {
                locations,
                probabilities,
            } => locations.iter().zip(probabilities).map(|(l, p)| p * mono(l)).sum(),
            Law::Oracle(f) => f(comps),
        }
    }
}

impl fmt::Debug for MixingDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.law {
            Law::Deterministic(m) => f.debug_tuple("Deterministic").field(m).finish(),
            Law::Bernoulli(mu) => f.debug_tuple("Bernoulli").field(mu).finish(),
            Law::Atoms {
                locations,
                probabilities,
            } => f
                .debug_struct("DiscreteAtoms")
                .field("locations", locations)
                .field("probabilities", probabilities)
                .finish(),
            Law::Oracle(_) => f.debug_struct("MomentOracle").field("dimension", &self.dim).finish(),
        }
    }
}

/// `E[μ_S]` for the sub-index `S`; the empty index gives 1.
pub fn mixing_moment(mixing: &MixingDistribution, sub: &MultiIndex) -> Result<f64> {
    sub.check_dimension(mixing.dim)?;
    Ok(mixing.moment_of_key(&MultisetKey::from(sub)))
}

/// `X = μ + ζ` with `ζ ~ N(0, R)` independent of `μ`.
#[derive(Debug, Clone)]
pub struct LocationMixtureModel {
    mixing: MixingDistribution,
    noise: CovarianceMatrix,
}

impl LocationMixtureModel {
    pub fn new(mixing: MixingDistribution, noise: CovarianceMatrix) -> Result<Self> {
        if mixing.dimension() != noise.dimension() {
            return Err(Error::DimensionMismatch {
                expected: noise.dimension(),
                found: mixing.dimension(),
            });
        }
        Ok(Self { mixing, noise })
    }

    pub fn mixing(&self) -> &MixingDistribution {
        &self.mixing
    }

    pub fn noise(&self) -> &CovarianceMatrix {
        &self.noise
    }

    pub fn dimension(&self) -> usize {
        self.noise.dimension()
    }
}

/// `E[X_A]` for a location mixture.
pub fn location_mixture_moment(model: &LocationMixtureModel, index: &MultiIndex) -> Result<f64> {
    location_mixture_moment_cached(model, index, &mut WickCache::new())
}

/// [`location_mixture_moment`] sharing a Wick cache across calls with the same
/// model.
pub fn location_mixture_moment_cached(
    model: &LocationMixtureModel,
    index: &MultiIndex,
    cache: &mut WickCache,
) -> Result<f64> {
    index.check_dimension(model.dimension())?;
    let mut mixing_cache: HashMap<MultisetKey, f64> = HashMap::new();
    subset_sum(model, index, cache, |key| {
        *mixing_cache
            .entry(key.clone())
            .or_insert_with(|| model.mixing.moment_of_key(key))
    })
}

/// The simplified sum using `(Eμ)_S = Π E[μ_{α_i}]` in place of `E[μ_S]`.
///
/// Valid when the entries of `A` are distinct and `μ` has independent
/// components; the caller vouches for the latter. Repeated entries are
/// rejected.
pub fn location_mixture_moment_independent(
    model: &LocationMixtureModel,
    index: &MultiIndex,
) -> Result<f64> {
    index.check_dimension(model.dimension())?;
    if let Some(rep) = index.first_repeat() {
        return Err(Error::RepeatedIndex { index: rep + 1 });
    }
    let mean = model.mixing.mean();
    subset_sum(model, index, &mut WickCache::new(), |key| {
        key.components().iter().fold(1.0, |acc, &c| acc * mean[c])
    })
}

/// Parity-filtered double sum shared by both formulas: only subsets with
/// `|S| ≡ |A| (mod 2)` are enumerated, in increasing size and lexicographic
/// order.
fn subset_sum(
    model: &LocationMixtureModel,
    index: &MultiIndex,
    cache: &mut WickCache,
    mut location_moment: impl FnMut(&MultisetKey) -> f64,
) -> Result<f64> {
    let n = index.len();
    let eps = index.parity();
    let mut total = 0.0;
    for k in 0..=index.half_len() {
        for s in enumerate_subsets(n, 2 * k + eps) {
            let m = location_moment(&positions_key(index, s.positions()));
            let w = cache.get_or_compute(positions_key(index, s.complement()), &model.noise)?;
            total += m * w;
        }
    }
    Ok(total)
}

/// Number of products folded by [`location_mixture_moment`] for `|A| = n`.
pub fn term_count(n: usize) -> u128 {
    (n % 2..=n)
        .step_by(2)
        .map(|s| binomial(n, s) * pairing_count(n - s))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::wick_moment;

    fn idx(a: &[usize], d: usize) -> MultiIndex {
        MultiIndex::from_one_based(a, d).unwrap()
    }

    #[test]
    fn mixing_moment_examples() {
        let b = MixingDistribution::bernoulli(vec![1.5, -2.0]).unwrap();
        assert_eq!(mixing_moment(&b, &idx(&[1, 2], 2)).unwrap(), -3.0);
        assert_eq!(mixing_moment(&b, &idx(&[1], 2)).unwrap(), 0.0);
        assert_eq!(mixing_moment(&b, &MultiIndex::empty(2).unwrap()).unwrap(), 1.0);

        let atoms = MixingDistribution::discrete(vec![vec![1.0], vec![2.0]], vec![0.3, 0.7]).unwrap();
        let v = mixing_moment(&atoms, &idx(&[1, 1], 1)).unwrap();
        assert!((v - 3.1).abs() < 1e-15);

        let det = MixingDistribution::deterministic(vec![2.0, 3.0]).unwrap();
        assert_eq!(mixing_moment(&det, &idx(&[1, 2, 2], 2)).unwrap(), 18.0);
    }

    #[test]
    fn zero_location_reduces_to_wick() {
        let r = CovarianceMatrix::new(2, vec![1.3, 0.4, 0.4, 0.9]).unwrap();
        let model =
            LocationMixtureModel::new(MixingDistribution::deterministic(vec![0.0, 0.0]).unwrap(), r.clone())
                .unwrap();
        for a in [&[1, 2, 1, 2][..], &[1, 1, 1, 1, 2, 2], &[2]] {
            let i = idx(a, 2);
            assert_eq!(
                location_mixture_moment(&model, &i).unwrap(),
                wick_moment(&i, &r).unwrap()
            );
        }
    }

    #[test]
    fn bernoulli_second_moment() {
        // E X² = μ² + σ² for the symmetric two-point location mixture
        let model = LocationMixtureModel::new(
            MixingDistribution::bernoulli(vec![1.0]).unwrap(),
            CovarianceMatrix::identity(1).unwrap(),
        )
        .unwrap();
        assert_eq!(location_mixture_moment(&model, &idx(&[1, 1], 1)).unwrap(), 2.0);
        assert_eq!(location_mixture_moment(&model, &idx(&[1, 1, 1], 1)).unwrap(), 0.0);
    }

    #[test]
    fn discrete_cross_moment() {
        let atoms = MixingDistribution::discrete(
            vec![vec![1.0, 2.0], vec![-1.0, 0.5], vec![0.0, 3.0]],
            vec![0.2, 0.5, 0.3],
        )
        .unwrap();
        let r = CovarianceMatrix::new(2, vec![1.0, 0.0, 0.0, 2.0]).unwrap();
        let model = LocationMixtureModel::new(atoms.clone(), r).unwrap();
        let expected = mixing_moment(&atoms, &idx(&[1, 2], 2)).unwrap() + 0.0;
        assert!((location_mixture_moment(&model, &idx(&[1, 2], 2)).unwrap() - expected).abs() < 1e-15);
    }

    #[test]
    fn independent_formula_matches_general_one() {
        let mixing =
            MixingDistribution::product_of_marginals(&[vec![(1.0, 0.4), (-0.5, 0.6)], vec![(2.0, 0.5), (0.0, 0.5)]])
                .unwrap();
        let r = CovarianceMatrix::new(2, vec![1.0, 0.3, 0.3, 0.5]).unwrap();
        let model = LocationMixtureModel::new(mixing.clone(), r.clone()).unwrap();
        let i = idx(&[1, 2], 2);
        let mean = mixing.mean();
        let expected = mean[0] * mean[1] + r.get(0, 1);
        let general = location_mixture_moment(&model, &i).unwrap();
        let simplified = location_mixture_moment_independent(&model, &i).unwrap();
        assert!((general - expected).abs() < 1e-14);
        assert!((simplified - expected).abs() < 1e-14);
        assert_eq!(
            location_mixture_moment_independent(&model, &idx(&[1, 1], 2)).unwrap_err(),
            Error::RepeatedIndex { index: 1 }
        );
    }

    #[test]
    fn oracle_is_consulted_with_sorted_keys() {
        let oracle: MomentOracle = Arc::new(|s: &[usize]| {
            assert!(s.windows(2).all(|w| w[0] <= w[1]));
            s.len() as f64
        });
        let model = LocationMixtureModel::new(
            MixingDistribution::oracle(2, oracle).unwrap(),
            CovarianceMatrix::identity(2).unwrap(),
        )
        .unwrap();
        // E X_{(2,1)} = E[μ_2 μ_1] + R_12 = 2 + 0
        assert_eq!(location_mixture_moment(&model, &idx(&[2, 1], 2)).unwrap(), 2.0);
    }

    #[test]
    fn discrete_validation() {
        assert!(MixingDistribution::discrete(vec![vec![1.0]], vec![0.9]).is_err());
        assert!(MixingDistribution::discrete(vec![vec![1.0], vec![2.0]], vec![1.0, 0.0]).is_err());
        assert!(MixingDistribution::discrete(vec![vec![1.0], vec![2.0, 1.0]], vec![0.5, 0.5]).is_err());
        assert!(MixingDistribution::discrete(vec![], vec![]).is_err());
        assert!(LocationMixtureModel::new(
            MixingDistribution::deterministic(vec![0.0]).unwrap(),
            CovarianceMatrix::identity(2).unwrap()
        )
        .is_err());
    }

    #[test]
    fn term_counts() {
        // n = 2: S=∅ (1 pairing) + |S|=2 (1 term)
        assert_eq!(term_count(2), 2);
        // n = 3: |S|=1 (3 subsets × 1 pairing) + |S|=3 (1)
        assert_eq!(term_count(3), 4);
        assert_eq!(term_count(0), 1);
    }
}
