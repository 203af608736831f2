//! Multi-indices, pairings of position sets and position subsets.
//!
//! Everything here works on *positions* of a multi-index, never on the
//! component values stored there. A multi-index such as `(1,1,2,4)` has four
//! distinct positions even though component 1 repeats, so enumerating pairings
//! or subsets of positions produces every term of the moment expansions with
//! its correct multiplicity.

use std::fmt;

use crate::error::{Error, Result};

/// Ordered list of component indices `α_1, …, α_n` over a `d`-dimensional
/// vector. Entries are 0-based and may repeat. The empty index is valid and
/// stands for the constant monomial 1.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MultiIndex {
    entries: Vec<usize>,
    dimension: usize,
}

impl MultiIndex {
    /// Builds a multi-index from 0-based component indices.
    pub fn new(entries: Vec<usize>, dimension: usize) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::ZeroDimension);
        }
        if let Some(&bad) = entries.iter().find(|&&e| e >= dimension) {
            return Err(Error::IndexOutOfRange {
                index: bad + 1,
                dimension,
            });
        }
        Ok(Self { entries, dimension })
    }

    /// Builds a multi-index from 1-based component indices, the convention
    /// used by problem files and printed output.
    pub fn from_one_based(entries: &[usize], dimension: usize) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::ZeroDimension);
        }
        let mut zero_based = Vec::with_capacity(entries.len());
        for &e in entries {
            if e == 0 || e > dimension {
                return Err(Error::IndexOutOfRange {
                    index: e,
                    dimension,
                });
            }
            zero_based.push(e - 1);
        }
        Ok(Self {
            entries: zero_based,
            dimension,
        })
    }

    pub fn empty(dimension: usize) -> Result<Self> {
        Self::new(Vec::new(), dimension)
    }

    pub fn entries(&self) -> &[usize] {
        &self.entries
    }

    pub fn one_based(&self) -> Vec<usize> {
        self.entries.iter().map(|e| e + 1).collect()
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// `ε` in `|A| = 2N + ε`.
    pub fn parity(&self) -> usize {
        self.entries.len() % 2
    }

    /// `N` in `|A| = 2N + ε`.
    pub fn half_len(&self) -> usize {
        self.entries.len() / 2
    }

    /// Sorted copy of the index. Sorting is idempotent and the result denotes
    /// the same monomial.
    pub fn canonical(&self) -> MultiIndex {
        let mut entries = self.entries.clone();
        entries.sort_unstable();
        MultiIndex {
            entries,
            dimension: self.dimension,
        }
    }

    /// The sub-index at the given positions (in the order listed).
    pub fn select(&self, positions: &[usize]) -> MultiIndex {
        MultiIndex {
            entries: positions.iter().map(|&p| self.entries[p]).collect(),
            dimension: self.dimension,
        }
    }

    /// First component that appears more than once, if any.
    pub fn first_repeat(&self) -> Option<usize> {
        let mut seen = vec![false; self.dimension];
        for &e in &self.entries {
            if seen[e] {
                return Some(e);
            }
            seen[e] = true;
        }
        None
    }

    /// Evaluates the monomial `X_A = Π x_{α_i}` at `x`.
    pub fn monomial(&self, x: &[f64]) -> f64 {
        self.entries.iter().fold(1.0, |acc, &e| acc * x[e])
    }

    pub(crate) fn check_dimension(&self, dimension: usize) -> Result<()> {
        if self.dimension != dimension {
            return Err(Error::DimensionMismatch {
                expected: dimension,
                found: self.dimension,
            });
        }
        Ok(())
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, e) in self.entries.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}", e + 1)?;
        }
        write!(f, ")")
    }
}

/// A perfect matching of a position set into disjoint unordered pairs.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Pairing {
    pairs: Vec<(usize, usize)>,
}

impl Pairing {
    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

/// Lazy stream over all pairings of a position set.
///
/// Order is deterministic: the first free position is paired with each later
/// free position in ascending order, recursively. Internally this is an
/// odometer over "which later free position" choices, so memory stays `O(n)`.
#[derive(Debug, Clone)]
pub struct Pairings {
    positions: Vec<usize>,
    choices: Vec<usize>,
    started: bool,
    done: bool,
}

impl Pairings {
    /// Total number of pairings this stream yields in full, `(2N-1)!!`.
    pub fn total(&self) -> u128 {
        pairing_count(self.positions.len())
    }

    fn radix(&self, level: usize) -> usize {
        self.positions.len() - 1 - 2 * level
    }

    fn build(&self) -> Pairing {
        let mut free = self.positions.clone();
        let mut pairs = Vec::with_capacity(self.choices.len());
        for &c in &self.choices {
            let a = free.remove(0);
            let b = free.remove(c);
            pairs.push((a, b));
        }
        Pairing { pairs }
    }
}

impl Iterator for Pairings {
    type Item = Pairing;

    fn next(&mut self) -> Option<Pairing> {
        if self.done {
            return None;
        }
        if !self.started {
            self.started = true;
            return Some(self.build());
        }
        for level in (0..self.choices.len()).rev() {
            self.choices[level] += 1;
            if self.choices[level] < self.radix(level) {
                for c in &mut self.choices[level + 1..] {
                    *c = 0;
                }
                return Some(self.build());
            }
        }
        self.done = true;
        None
    }
}

/// Streams every pairing of `positions`.
///
/// An odd-sized set has no pairings at all; this is reported as
/// [`Error::OddPositionSet`] so callers can map it to a zero moment. The empty
/// set yields exactly one empty pairing.
pub fn enumerate_pairings(positions: &[usize]) -> Result<Pairings> {
    if positions.len() % 2 == 1 {
        return Err(Error::OddPositionSet {
            len: positions.len(),
        });
    }
    Ok(Pairings {
        positions: positions.to_vec(),
        choices: vec![0; positions.len() / 2],
        started: false,
        done: false,
    })
}

/// A subset of the positions `0..n` together with its complement, both sorted.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SubsetSelection {
    positions: Vec<usize>,
    complement: Vec<usize>,
}

impl SubsetSelection {
    pub fn new(mut positions: Vec<usize>, n: usize) -> Result<Self> {
        positions.sort_unstable();
        positions.dedup();
        if positions.last().is_some_and(|&p| p >= n) {
            return Err(Error::InvalidParameter(format!(
                "subset position out of range for {n} positions"
            )));
        }
        let mut complement = Vec::with_capacity(n - positions.len());
        let mut it = positions.iter().peekable();
        for p in 0..n {
            if it.peek() == Some(&&p) {
                it.next();
            } else {
                complement.push(p);
            }
        }
        Ok(Self {
            positions,
            complement,
        })
    }

    pub fn positions(&self) -> &[usize] {
        &self.positions
    }

    pub fn complement(&self) -> &[usize] {
        &self.complement
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }
}

/// Lazy stream over all `k`-subsets of `0..n` in lexicographic order.
#[derive(Debug, Clone)]
pub struct Subsets {
    n: usize,
    current: Vec<usize>,
    done: bool,
    started: bool,
}

impl Subsets {
    fn emit(&self) -> SubsetSelection {
        let mut complement = Vec::with_capacity(self.n - self.current.len());
        let mut j = 0;
        for p in 0..self.n {
            if j < self.current.len() && self.current[j] == p {
                j += 1;
            } else {
                complement.push(p);
            }
        }
        SubsetSelection {
            positions: self.current.clone(),
            complement,
        }
    }
}

impl Iterator for Subsets {
    type Item = SubsetSelection;

    fn next(&mut self) -> Option<SubsetSelection> {
        if self.done {
            return None;
        }
        if !self.started {
            self.started = true;
            return Some(self.emit());
        }
        let k = self.current.len();
        let mut i = k;
        while i > 0 {
            i -= 1;
            if self.current[i] < self.n - k + i {
                self.current[i] += 1;
                for j in i + 1..k {
                    self.current[j] = self.current[j - 1] + 1;
                }
                return Some(self.emit());
            }
        }
        self.done = true;
        None
    }
}

/// Streams all `C(n, k)` position subsets of size `k`; empty when `k > n`.
pub fn enumerate_subsets(n: usize, k: usize) -> Subsets {
    Subsets {
        n,
        current: (0..k.min(n)).collect(),
        done: k > n,
        started: false,
    }
}

/// Sorted multiset of component indices, used as a memoization key.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultisetKey(Vec<usize>);

impl MultisetKey {
    pub fn components(&self) -> &[usize] {
        &self.0
    }
}

impl From<&MultiIndex> for MultisetKey {
    fn from(index: &MultiIndex) -> Self {
        let mut v = index.entries.clone();
        v.sort_unstable();
        MultisetKey(v)
    }
}

/// Key of the multiset of components selected by `selection`. Two selections
/// get equal keys exactly when they pick the same components with the same
/// multiplicities.
pub fn canonical_key(index: &MultiIndex, selection: &SubsetSelection) -> MultisetKey {
    positions_key(index, &selection.positions)
}

/// Key of the multiset of components found at `positions` of `index`.
pub fn positions_key(index: &MultiIndex, positions: &[usize]) -> MultisetKey {
    let mut v: Vec<usize> = positions.iter().map(|&p| index.entries[p]).collect();
    v.sort_unstable();
    MultisetKey(v)
}

/// Number of pairings of `len` items: `(len-1)!!` for even `len`, 0 for odd.
pub fn pairing_count(len: usize) -> u128 {
    if len % 2 == 1 {
        return 0;
    }
    (1..len as u128).step_by(2).product()
}

pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k as u128).fold(1, |acc, i| acc * (n as u128 - i) / (i + 1))
}
