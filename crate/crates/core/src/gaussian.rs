//! Isserlis/Wick moments of zero-mean Gaussian vectors.
//!
//! For `|A| = 2N` the moment `E[X_A]` is the sum, over all pairings of the
//! positions of `A`, of the product of covariances of the paired components.
//! Odd `|A|` gives exactly 0 and the empty index gives 1.

use std::collections::HashMap;

use crate::combinatorics::{MultiIndex, MultisetKey};
use crate::error::{Error, Result};
use crate::linalg;

/// Relative tolerance of the positive-semidefinite check, against the
/// spectral norm.
pub const PSD_TOLERANCE: f64 = 1e-10;

/// Symmetric `d×d` covariance matrix, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl CovarianceMatrix {
    /// Validated constructor: square, finite, exactly symmetric and positive
    /// semidefinite within [`PSD_TOLERANCE`].
    pub fn new(dim: usize, data: Vec<f64>) -> Result<Self> {
        let m = Self::symmetric(dim, data)?;
        let min = m.min_eigenvalue();
        if min < -PSD_TOLERANCE * m.spectral_norm() {
            return Err(Error::NotPositiveSemidefinite {
                min_eigenvalue: min,
            });
        }
        Ok(m)
    }

    /// Skips the semidefiniteness check; symmetry is still enforced.
    /// The Wick sum only needs symmetry, which makes this useful for exact
    /// integer test matrices.
    pub fn symmetric(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::ZeroDimension);
        }
        if data.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                found: data.len(),
            });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("covariance matrix"));
        }
        for i in 0..dim {
            for j in i + 1..dim {
                if data[i * dim + j] != data[j * dim + i] {
                    return Err(Error::Asymmetric { row: i, col: j });
                }
            }
        }
        Ok(Self { dim, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Self::new(rows.len(), flatten(rows)?)
    }

    pub fn identity(dim: usize) -> Result<Self> {
        let mut data = vec![0.0; dim * dim];
        for i in 0..dim {
            data[i * dim + i] = 1.0;
        }
        Self::new(dim, data)
    }

    pub fn dimension(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.dim).map(<[f64]>::to_vec).collect()
    }

    /// `c·R`; symmetry is preserved exactly.
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|v| c * v).collect(),
        }
    }

    pub fn min_eigenvalue(&self) -> f64 {
        linalg::symmetric_eigenvalues(self.dim, &self.data)[0]
    }

    pub fn spectral_norm(&self) -> f64 {
        let ev = linalg::symmetric_eigenvalues(self.dim, &self.data);
        ev[0].abs().max(ev[ev.len() - 1].abs())
    }

    pub fn determinant(&self) -> f64 {
        linalg::determinant(self.dim, &self.data)
    }
}

pub(crate) fn flatten(rows: &[Vec<f64>]) -> Result<Vec<f64>> {
    let d = rows.len();
    if let Some(bad) = rows.iter().find(|r| r.len() != d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: bad.len(),
        });
    }
    Ok(rows.iter().flatten().copied().collect())
}

/// Accumulation scheme for the sum over pairings.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Summation {
    #[default]
    Plain,
    /// Neumaier's compensated summation.
    Compensated,
}

struct Accumulator {
    mode: Summation,
    sum: f64,
    comp: f64,
}

impl Accumulator {
    fn new(mode: Summation) -> Self {
        Self {
            mode,
            sum: 0.0,
            comp: 0.0,
        }
    }

    #[inline]
    fn add(&mut self, x: f64) {
        match self.mode {
            Summation::Plain => self.sum += x,
            Summation::Compensated => {
                let t = self.sum + x;
                if self.sum.abs() >= x.abs() {
                    self.comp += (self.sum - t) + x;
                } else {
                    self.comp += (x - t) + self.sum;
                }
                self.sum = t;
            }
        }
    }

    fn total(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Largest index length the bitmask enumeration supports.
const MAX_LEN: usize = 64;

/// `E[X_A]` for `X ~ N(0, R)`.
pub fn wick_moment(index: &MultiIndex, cov: &CovarianceMatrix) -> Result<f64> {
    wick_moment_with(index, cov, Summation::Plain)
}

/// [`wick_moment`] with an explicit accumulation scheme.
///
/// The index is sorted before enumeration, so the result is bitwise invariant
/// under reordering of `A` and identical to the memoized path.
pub fn wick_moment_with(
    index: &MultiIndex,
    cov: &CovarianceMatrix,
    summation: Summation,
) -> Result<f64> {
    index.check_dimension(cov.dimension())?;
    let key = MultisetKey::from(index);
    wick_sorted(key.components(), cov, summation)
}

fn wick_sorted(entries: &[usize], cov: &CovarianceMatrix, summation: Summation) -> Result<f64> {
    let n = entries.len();
    if n % 2 == 1 {
        return Ok(0.0);
    }
    if n == 0 {
        return Ok(1.0);
    }
    if n > MAX_LEN {
        return Err(Error::InvalidParameter(format!(
            "index of length {n} exceeds the supported maximum {MAX_LEN}"
        )));
    }
    let mut acc = Accumulator::new(summation);
    let full = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    fold_pairings(entries, cov, 0, full, 1.0, &mut acc);
    Ok(acc.total())
}

/// Depth-first walk in the same order as `enumerate_pairings`: the lowest free
/// position pairs with each higher free position in ascending order. The
/// running product is formed left to right over the pairs.
fn fold_pairings(
    entries: &[usize],
    cov: &CovarianceMatrix,
    used: u64,
    full: u64,
    prod: f64,
    acc: &mut Accumulator,
) {
    if used == full {
        acc.add(prod);
        return;
    }
    let first = (!used).trailing_zeros() as usize;
    let used = used | (1 << first);
    let mut rest = !used & full;
    while rest != 0 {
        let partner = rest.trailing_zeros() as usize;
        rest &= rest - 1;
        let term = prod * cov.get(entries[first], entries[partner]);
        fold_pairings(entries, cov, used | (1 << partner), full, term, acc);
    }
}

/// Cache of Wick values keyed by the sorted component multiset.
#[derive(Debug, Default)]
pub struct WickCache {
    map: HashMap<MultisetKey, f64>,
    summation: Summation,
    hits: u64,
    misses: u64,
}

impl WickCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_summation(summation: Summation) -> Self {
        Self {
            summation,
            ..Self::default()
        }
    }

    pub fn hits(&self) -> u64 {
        self.hits
    }

    pub fn misses(&self) -> u64 {
        self.misses
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub(crate) fn get_or_compute(&mut self, key: MultisetKey, cov: &CovarianceMatrix) -> Result<f64> {
        if let Some(&v) = self.map.get(&key) {
            self.hits += 1;
            return Ok(v);
        }
        self.misses += 1;
        let v = wick_sorted(key.components(), cov, self.summation)?;
        self.map.insert(key, v);
        Ok(v)
    }
}

/// [`wick_moment`] through a shared cache. A cache must only ever be used
/// with one covariance matrix.
pub fn wick_moment_memoized(
    index: &MultiIndex,
    cov: &CovarianceMatrix,
    cache: &mut WickCache,
) -> Result<f64> {
    index.check_dimension(cov.dimension())?;
    cache.get_or_compute(MultisetKey::from(index), cov)
}

/// Number of products folded by [`wick_moment`] for an index of length `n`.
pub fn term_count(n: usize) -> u128 {
    crate::combinatorics::pairing_count(n)
}
