//! Permutation sequences represented by sign classes.
//!
//! The test statistic of one interim only depends on which of the `2N`
//! concatenated scores land in the first group, and with the absolute value
//! a split and its complement give the same value at interim one. A
//! permutation of `2N` elements is therefore stored as the `N`-subset of
//! positions it sends to the first group.
//!
//! Across interims only the global sign flip leaves the accumulated
//! statistic unchanged, so the distinct sequences of length `k` are the
//! sequences whose first class is canonical and whose later classes are
//! arbitrary: `½·C(2N,N)^k` of them.

use itertools::Itertools;
use rand::seq::index;
use rand::Rng;
use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::rng::InterimStream;

pub const DEFAULT_PERMUTATIONS: usize = 10_000;
pub const DEFAULT_ENUMERATION_CAP: u64 = 1_000_000;

/// Exact binomial coefficient, `None` on overflow.
pub fn binomial(n: u64, k: u64) -> Option<u128> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) / (i + 1) stays integral at every step
        acc = acc.checked_mul((n - i) as u128)? / (i as u128 + 1);
    }
    Some(acc)
}

/// Number of permutation sequences of length `k` that give distinct
/// statistic values, `½·C(2N,N)^k`, saturating at `u64::MAX`.
pub fn count_unique_classes(group_size: usize, interim: usize) -> u64 {
    assert!(group_size >= 1 && interim >= 1);
    let Some(c) = binomial(2 * group_size as u64, group_size as u64) else {
        return u64::MAX;
    };
    let mut acc = c / 2;
    for _ in 1..interim {
        match acc.checked_mul(c) {
            Some(v) if v <= u64::MAX as u128 => acc = v,
            _ => return u64::MAX,
        }
    }
    u64::try_from(acc).unwrap_or(u64::MAX)
}

/// Which `N` of the `2N` concatenated positions play the first-group role.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SignClass {
    group_size: u32,
    bits: SmallVec<[u64; 1]>,
}

fn words_for(group_size: usize) -> usize {
    (2 * group_size).div_ceil(64)
}

impl SignClass {
    /// The split that keeps every score with its own agent.
    pub fn identity(group_size: usize) -> Self {
        Self::from_iter_unchecked(group_size, 0..group_size)
    }

    /// Builds a class from 0-based positions in `0..2N`.
    pub fn from_selection(group_size: usize, selection: &[usize]) -> Result<Self> {
        if selection.len() != group_size {
            return Err(Error::LengthMismatch(format!(
                "sign class needs {group_size} positions, got {}",
                selection.len()
            )));
        }
        let class = Self::from_iter_unchecked(group_size, selection.iter().copied());
        if selection.iter().any(|&i| i >= 2 * group_size) || class.len() != group_size {
            return Err(Error::LengthMismatch(format!(
                "sign class positions must be distinct and below {}",
                2 * group_size
            )));
        }
        Ok(class)
    }

    fn from_iter_unchecked(group_size: usize, positions: impl IntoIterator<Item = usize>) -> Self {
        let mut bits: SmallVec<[u64; 1]> = SmallVec::from_elem(0, words_for(group_size));
        for i in positions {
            bits[i / 64] |= 1 << (i % 64);
        }
        Self {
            group_size: group_size as u32,
            bits,
        }
    }

    /// Uniformly random `N`-subset of `0..2N`.
    pub fn random<R: Rng + ?Sized>(group_size: usize, rng: &mut R) -> Self {
        let picked = index::sample(rng, 2 * group_size, group_size);
        Self::from_iter_unchecked(group_size, picked)
    }

    pub fn group_size(&self) -> usize {
        self.group_size as usize
    }

    fn len(&self) -> usize {
        self.bits.iter().map(|w| w.count_ones() as usize).sum()
    }

    #[inline]
    pub fn contains(&self, position: usize) -> bool {
        self.bits[position / 64] >> (position % 64) & 1 == 1
    }

    /// Selected positions in increasing order.
    pub fn selection(&self) -> Vec<usize> {
        (0..2 * self.group_size()).filter(|&i| self.contains(i)).collect()
    }

    pub fn complement(&self) -> Self {
        let n = self.group_size();
        Self::from_iter_unchecked(n, (0..2 * n).filter(|&i| !self.contains(i)))
    }

    /// Canonical representative of `{S, Sᶜ}`: the one holding position 0.
    pub fn is_canonical(&self) -> bool {
        self.contains(0)
    }

    pub fn canonical(self) -> Self {
        if self.is_canonical() {
            self
        } else {
            self.complement()
        }
    }

    pub fn is_identity(&self) -> bool {
        *self == Self::identity(self.group_size())
    }

    /// Selection restricted to each half, as bit masks over `0..N`.
    /// Only available when `N <= 32`.
    #[inline]
    pub fn half_masks(&self) -> Option<(u32, u32)> {
        let n = self.group_size();
        if n > 32 {
            return None;
        }
        let word = self.bits[0];
        let low = if n == 32 { u32::MAX as u64 } else { (1u64 << n) - 1 };
        Some(((word & low) as u32, ((word >> n) & low) as u32))
    }
}

/// Canonical classes of `N`-subsets of `0..2N` in lexicographic order,
/// identity first.
pub fn enumerate_classes(group_size: usize, cap: u64) -> Result<Vec<SignClass>> {
    let count = count_unique_classes(group_size, 1);
    if count > cap {
        return Err(Error::EnumerationCap {
            requested: count,
            cap,
        });
    }
    Ok((1..2 * group_size)
        .combinations(group_size - 1)
        .map(|rest| SignClass::from_iter_unchecked(group_size, std::iter::once(0).chain(rest)))
        .collect())
}

/// All `C(2N,N)` subsets in lexicographic order, identity first.
pub fn enumerate_subsets(group_size: usize, cap: u64) -> Result<Vec<SignClass>> {
    let count = binomial(2 * group_size as u64, group_size as u64)
        .and_then(|c| u64::try_from(c).ok())
        .unwrap_or(u64::MAX);
    if count > cap {
        return Err(Error::EnumerationCap {
            requested: count,
            cap,
        });
    }
    Ok((0..2 * group_size)
        .combinations(group_size)
        .map(|s| SignClass::from_iter_unchecked(group_size, s))
        .collect())
}

/// One class per interim: σ₁, …, σₖ.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PermutationSequence {
    pub classes: Vec<SignClass>,
}

impl PermutationSequence {
    pub fn identity(group_size: usize, interims: usize) -> Self {
        Self {
            classes: vec![SignClass::identity(group_size); interims],
        }
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PoolMode {
    Exact,
    MonteCarlo,
}

/// The permutation sequences a test evaluates its boundaries on.
///
/// Storage is interim-major: `layers[i][s]` is the class applied at interim
/// `i + 1` by sequence `s`. Sequence 0 is always the identity.
#[derive(Clone, Debug)]
pub struct PermutationPool {
    group_size: usize,
    requested: usize,
    enumeration_cap: u64,
    mode: PoolMode,
    layers: Vec<Vec<SignClass>>,
    survivors: Vec<bool>,
    parents: Option<Vec<usize>>,
}

impl PermutationPool {
    pub fn new(group_size: usize, requested: usize, enumeration_cap: u64) -> Result<Self> {
        if group_size == 0 {
            return Err(Error::Config("group size must be at least 1".into()));
        }
        if requested == 0 {
            return Err(Error::Config("permutation count must be at least 1".into()));
        }
        Ok(Self {
            group_size,
            requested,
            enumeration_cap,
            mode: PoolMode::Exact,
            layers: Vec::new(),
            survivors: Vec::new(),
            parents: None,
        })
    }

    pub fn group_size(&self) -> usize {
        self.group_size
    }

    pub fn requested(&self) -> usize {
        self.requested
    }

    pub fn mode(&self) -> PoolMode {
        self.mode
    }

    /// Current interim `k` (length of every sequence).
    pub fn interim(&self) -> usize {
        self.layers.len()
    }

    /// `m_k`, the number of sequences at the current interim.
    pub fn len(&self) -> usize {
        self.layers.last().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn layer(&self, interim: usize) -> &[SignClass] {
        &self.layers[interim - 1]
    }

    pub fn class(&self, interim: usize, sequence: usize) -> &SignClass {
        &self.layers[interim - 1][sequence]
    }

    pub fn sequence(&self, index: usize) -> PermutationSequence {
        PermutationSequence {
            classes: self.layers.iter().map(|l| l[index].clone()).collect(),
        }
    }

    pub fn sequences(&self) -> impl Iterator<Item = PermutationSequence> + '_ {
        (0..self.len()).map(|s| self.sequence(s))
    }

    /// For the last extension, the index each sequence was extended from,
    /// or `None` when indices were preserved.
    pub fn parents(&self) -> Option<&[usize]> {
        self.parents.as_deref()
    }

    pub fn survivors(&self) -> &[bool] {
        &self.survivors
    }

    pub fn set_survivors(&mut self, mask: Vec<bool>) {
        assert_eq!(mask.len(), self.len());
        self.survivors = mask;
    }

    /// Appends interim `k` to every sequence.
    pub fn extend(&mut self, stream: &InterimStream) -> Result<()> {
        let k = self.interim() + 1;
        if stream.interim() != k {
            return Err(Error::InvalidStream {
                stream: stream.interim(),
                expected: k,
            });
        }
        let n = self.group_size;
        let unique = count_unique_classes(n, k);
        let fits = unique <= self.requested as u64 && unique <= self.enumeration_cap;

        if self.mode == PoolMode::Exact && fits {
            if k == 1 {
                self.layers.push(enumerate_classes(n, self.enumeration_cap)?);
                self.parents = None;
            } else {
                let subsets = enumerate_subsets(n, self.enumeration_cap)?;
                let c = subsets.len();
                let parents: Vec<usize> = (0..self.len() * c).map(|s| s / c).collect();
                let last = (0..parents.len()).map(|s| subsets[s % c].clone()).collect();
                self.regather(&parents);
                self.layers.push(last);
                self.parents = Some(parents);
            }
        } else if self.mode == PoolMode::Exact {
            self.mode = PoolMode::MonteCarlo;
            if k == 1 {
                let layer = (0..self.requested)
                    .map(|s| {
                        if s == 0 {
                            SignClass::identity(n)
                        } else {
                            SignClass::random(n, &mut stream.sequence(s)).canonical()
                        }
                    })
                    .collect();
                self.layers.push(layer);
                self.parents = None;
            } else {
                self.subsample_product(stream)?;
            }
        } else {
            let layer = (0..self.len())
                .map(|s| {
                    if s == 0 {
                        SignClass::identity(n)
                    } else {
                        SignClass::random(n, &mut stream.sequence(s))
                    }
                })
                .collect();
            self.layers.push(layer);
            self.parents = None;
        }
        if let Some(parents) = &self.parents {
            let old = std::mem::take(&mut self.survivors);
            self.survivors = parents.iter().map(|&p| old.get(p).copied().unwrap_or(true)).collect();
        } else if self.survivors.len() != self.len() {
            self.survivors = vec![true; self.len()];
        }
        Ok(())
    }

    /// Exact prefixes times all subsets exceeds `m`: keep the identity and
    /// `m - 1` distinct members of the product, uniformly.
    fn subsample_product(&mut self, stream: &InterimStream) -> Result<()> {
        let n = self.group_size;
        let subsets = enumerate_subsets(n, self.enumeration_cap.saturating_mul(2))?;
        let c = subsets.len();
        let total = self
            .len()
            .checked_mul(c)
            .ok_or_else(|| Error::Config("permutation product overflows".into()))?;
        let mut picked: Vec<usize> = index::sample(&mut stream.transition(), total - 1, self.requested - 1)
            .into_iter()
            .map(|i| i + 1)
            .collect();
        picked.sort_unstable();
        picked.insert(0, 0);
        let parents: Vec<usize> = picked.iter().map(|&i| i / c).collect();
        let last = picked.iter().map(|&i| subsets[i % c].clone()).collect();
        self.regather(&parents);
        self.layers.push(last);
        self.parents = Some(parents);
        Ok(())
    }

    fn regather(&mut self, parents: &[usize]) {
        for layer in &mut self.layers {
            *layer = parents.iter().map(|&p| layer[p].clone()).collect();
        }
    }
}

/// Extends a pool by one interim, returning the new pool.
pub fn extend_pool(mut pool: PermutationPool, stream: &InterimStream) -> Result<PermutationPool> {
    pool.extend(stream)?;
    Ok(pool)
}
