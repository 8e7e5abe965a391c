//! Sets of boundary node pairs, the state space of the block tables.
//!
//! A pair set `P` prescribes vertex-disjoint paths inside a block: `(a, b)`
//! with `a < b` asks for a path from `a` to `b`, `(a, a)` for the zero-length
//! path consisting of `a` alone. A vertex occurring in two pairs makes `P`
//! unsolvable, so canonical sets never contain one.

use std::fmt;

use crate::error::{Error, Result};
use crate::graph::VertexId;

/// Canonical pair set: pairs ordered internally (`a <= b`) and sorted.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct BoundaryPairSet {
    pairs: Vec<(VertexId, VertexId)>,
}

impl BoundaryPairSet {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn pairs(&self) -> &[(VertexId, VertexId)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Proper pairs `(a, b)` with `a < b`.
    pub fn matching(&self) -> impl Iterator<Item = (VertexId, VertexId)> + '_ {
        self.pairs.iter().copied().filter(|&(a, b)| a != b)
    }

    /// Vertices paired with themselves.
    pub fn singletons(&self) -> impl Iterator<Item = VertexId> + '_ {
        self.pairs.iter().filter(|&&(a, b)| a == b).map(|&(a, _)| a)
    }

    /// True when no proper pair is present; such sets always have weight 0.
    pub fn is_trivial(&self) -> bool {
        self.pairs.iter().all(|&(a, b)| a == b)
    }

    pub fn contains_vertex(&self, v: VertexId) -> bool {
        self.pairs.iter().any(|&(a, b)| a == v || b == v)
    }

    pub fn is_subset_of(&self, other: &BoundaryPairSet) -> bool {
        self.pairs.iter().all(|p| other.pairs.binary_search(p).is_ok())
    }
}

impl fmt::Display for BoundaryPairSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, (a, b)) in self.pairs.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{{{a},{b}}}")?;
        }
        write!(f, "}}")
    }
}

/// Canonical form of `raw`, or `None` when some vertex occurs in two pairs.
///
/// Repeated identical pairs count as a repeated vertex.
pub fn canonicalize<I>(raw: I) -> Option<BoundaryPairSet>
where
    I: IntoIterator<Item = (VertexId, VertexId)>,
{
    let mut pairs: Vec<(VertexId, VertexId)> =
        raw.into_iter().map(|(a, b)| (a.min(b), a.max(b))).collect();
    pairs.sort_unstable();
    let mut ends: Vec<VertexId> = pairs
        .iter()
        .flat_map(|&(a, b)| if a == b { vec![a] } else { vec![a, b] })
        .collect();
    let total = ends.len();
    ends.sort_unstable();
    ends.dedup();
    if ends.len() != total {
        return None;
    }
    Some(BoundaryPairSet { pairs })
}

fn factorial(n: u32) -> Option<u128> {
    (1..=n as u128).try_fold(1u128, |acc, x| acc.checked_mul(x))
}

/// Matchings with exactly `k` edges in the clique on `n` vertices:
/// `n! / (2^k (n - 2k)! k!)`.
fn matchings_with(n: u32, k: u32) -> Option<u128> {
    let num = factorial(n)?;
    let den = (1u128 << k).checked_mul(factorial(n - 2 * k)?)?.checked_mul(factorial(k)?)?;
    Some(num / den)
}

const COUNT_LIMIT: usize = 30;

/// Number of matchings in the complete graph on `n` vertices (telephone or
/// involution numbers): `T(n) = sum_k n! / (2^k (n-2k)! k!)`.
pub fn telephone_number(n: usize) -> Result<u64> {
    if n > COUNT_LIMIT {
        return Err(Error::OutOfRange(format!("telephone_number({n}) exceeds the supported range")));
    }
    let n = n as u32;
    (0..=n / 2)
        .try_fold(0u128, |acc, k| acc.checked_add(matchings_with(n, k)?))
        .and_then(|t| u64::try_from(t).ok())
        .ok_or_else(|| Error::OutOfRange(format!("telephone_number({n}) overflows")))
}

/// Upper bound on the number of solvable pair sets over `n` boundary nodes,
/// `sum_k n! 2^(n-3k) / ((n-2k)! k!)`; exact for blocks inducing a clique.
///
/// Each `k`-edge matching combines with `2^(n-2k)` singleton sets, which keeps
/// the terms integral even where `n - 3k` is negative.
pub fn solvable_upper_bound(n: usize) -> Result<u64> {
    if n > COUNT_LIMIT {
        return Err(Error::OutOfRange(format!("solvable_upper_bound({n}) exceeds the supported range")));
    }
    let n = n as u32;
    (0..=n / 2)
        .try_fold(0u128, |acc, k| {
            let term = matchings_with(n, k)?.checked_mul(1u128 << (n - 2 * k))?;
            acc.checked_add(term)
        })
        .and_then(|t| u64::try_from(t).ok())
        .ok_or_else(|| Error::OutOfRange(format!("solvable_upper_bound({n}) overflows")))
}

pub const ENUMERATION_LIMIT: usize = 12;

/// Every canonical pair set over `boundary`, each exactly once.
pub fn enumerate_pair_sets(boundary: &[VertexId]) -> Result<PairSetIter> {
    if boundary.len() > ENUMERATION_LIMIT {
        return Err(Error::OutOfRange(format!(
            "enumeration over {} boundary nodes (limit {ENUMERATION_LIMIT})",
            boundary.len()
        )));
    }
    let mut sorted = boundary.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    let n = sorted.len();
    Ok(PairSetIter { boundary: sorted, choice: vec![0; n], taken: vec![false; n], started: false, done: false })
}

/// Odometer over per-position choices: 0 = unused, 1 = singleton,
/// `2 + d` = paired with position `i + 1 + d`.
pub struct PairSetIter {
    boundary: Vec<VertexId>,
    choice: Vec<usize>,
    taken: Vec<bool>,
    started: bool,
    done: bool,
}

impl PairSetIter {
    fn undo(&mut self, i: usize) {
        if !self.taken[i] && self.choice[i] >= 2 {
            let j = i + 1 + (self.choice[i] - 2);
            self.taken[j] = false;
        }
    }

    fn advance(&mut self, i: usize) -> bool {
        if self.taken[i] {
            return false;
        }
        let n = self.boundary.len();
        let mut c = self.choice[i] + 1;
        loop {
            if c == 1 {
                self.choice[i] = 1;
                return true;
            }
            let j = i + 1 + (c - 2);
            if j >= n {
                return false;
            }
            if !self.taken[j] {
                self.taken[j] = true;
                self.choice[i] = c;
                return true;
            }
            c += 1;
        }
    }

    fn current(&self) -> BoundaryPairSet {
        let mut pairs = Vec::new();
        for (i, &c) in self.choice.iter().enumerate() {
            if self.taken[i] {
                continue;
            }
            match c {
                0 => {}
                1 => pairs.push((self.boundary[i], self.boundary[i])),
                _ => pairs.push((self.boundary[i], self.boundary[i + 1 + (c - 2)])),
            }
        }
        BoundaryPairSet { pairs }
    }
}

impl Iterator for PairSetIter {
    type Item = BoundaryPairSet;

    fn next(&mut self) -> Option<BoundaryPairSet> {
        if self.done {
            return None;
        }
        if !self.started {
            self.started = true;
            return Some(self.current());
        }
        let n = self.boundary.len();
        for i in (0..n).rev() {
            self.undo(i);
            if self.advance(i) {
                for k in i + 1..n {
                    // positions after i restart at "unused"; taken ones stay taken
                    self.choice[k] = 0;
                }
                return Some(self.current());
            }
            self.choice[i] = 0;
        }
        self.done = true;
        None
    }
}

/// Packed table key: the canonical pair list with each vertex replaced by its
/// position in the block's ordered boundary list, one byte per position.
pub type PairKey = Box<[u8]>;

pub const MAX_BOUNDARY: usize = 255;

/// Packs `set` relative to `boundary` (ascending). Fails if a vertex is not a
/// boundary node.
pub fn encode_key(set: &BoundaryPairSet, boundary: &[VertexId]) -> Option<PairKey> {
    let pos = |v: VertexId| boundary.binary_search(&v).ok().and_then(|p| u8::try_from(p).ok());
    let mut out = Vec::with_capacity(set.len() * 2);
    for &(a, b) in set.pairs() {
        out.push(pos(a)?);
        out.push(pos(b)?);
    }
    Some(out.into_boxed_slice())
}

pub fn decode_key(key: &[u8], boundary: &[VertexId]) -> BoundaryPairSet {
    BoundaryPairSet {
        pairs: key.chunks_exact(2).map(|c| (boundary[c[0] as usize], boundary[c[1] as usize])).collect(),
    }
}

/// True when the packed key contains no proper pair.
#[inline]
pub fn key_is_trivial(key: &[u8]) -> bool {
    key.chunks_exact(2).all(|c| c[0] == c[1])
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Independent matching count of K_n by recursion on the lowest vertex.
    fn brute_matchings(free: &mut Vec<bool>) -> u64 {
        let Some(i) = free.iter().position(|&f| f) else { return 1 };
        free[i] = false;
        let mut total = brute_matchings(free);
        for j in i + 1..free.len() {
            if free[j] {
                free[j] = false;
                total += brute_matchings(free);
                free[j] = true;
            }
        }
        free[i] = true;
        total
    }

    #[test]
    fn mixed_pairs_canonicalize() {
        let green = canonicalize([(3, 2), (1, 0)]).unwrap();
        assert_eq!(green.pairs(), &[(0, 1), (2, 3)]);
        let blue = canonicalize([(9, 8), (7, 7)]).unwrap();
        assert_eq!(blue.pairs(), &[(7, 7), (8, 9)]);
        assert_eq!(blue.singletons().collect::<Vec<_>>(), vec![7]);
        assert_eq!(blue.matching().collect::<Vec<_>>(), vec![(8, 9)]);
    }

    #[test]
    fn repeated_vertex_is_unsolvable() {
        assert!(canonicalize([(1, 2), (2, 3)]).is_none());
        assert!(canonicalize([(1, 1), (1, 2)]).is_none());
        assert!(canonicalize([(4, 4), (4, 4)]).is_none());
    }

    #[test]
    fn telephone_values() {
        assert_eq!(telephone_number(0).unwrap(), 1);
        assert_eq!(telephone_number(4).unwrap(), 10);
        assert_eq!(telephone_number(6).unwrap(), 76);
        for n in 0..=10 {
            assert_eq!(telephone_number(n).unwrap(), brute_matchings(&mut vec![true; n]), "n={n}");
        }
        assert!(telephone_number(1000).is_err());
    }

    #[test]
    fn solvable_bound_values() {
        assert_eq!(solvable_upper_bound(0).unwrap(), 1);
        assert_eq!(solvable_upper_bound(2).unwrap(), 5);
        assert_eq!(solvable_upper_bound(4).unwrap(), 43);
        assert!(solvable_upper_bound(64).is_err());
    }

    #[test]
    fn enumeration_small_cases() {
        let one: Vec<_> = enumerate_pair_sets(&[5]).unwrap().collect();
        assert_eq!(one, vec![BoundaryPairSet::empty(), canonicalize([(5, 5)]).unwrap()]);
        assert_eq!(enumerate_pair_sets(&[1, 2]).unwrap().count(), 5);
        assert_eq!(enumerate_pair_sets(&[0, 3, 6, 9]).unwrap().count(), 43);
        assert_eq!(enumerate_pair_sets(&[]).unwrap().count(), 1);
        assert!(enumerate_pair_sets(&(0..13).collect::<Vec<_>>()).is_err());
    }

    #[test]
    fn enumeration_is_canonical_and_distinct() {
        for n in 0..=7 {
            let boundary: Vec<_> = (0..n).map(|v| v * 2).collect();
            let mut all: Vec<_> = enumerate_pair_sets(&boundary).unwrap().collect();
            for s in &all {
                assert_eq!(canonicalize(s.pairs().iter().copied()).as_ref(), Some(s));
            }
            let count = all.len();
            all.sort();
            all.dedup();
            assert_eq!(all.len(), count);
            assert_eq!(count as u64, solvable_upper_bound(n).unwrap());
        }
    }

    #[test]
    fn key_roundtrip_and_triviality() {
        let boundary = [3, 8, 11, 20];
        let set = canonicalize([(20, 3), (8, 8)]).unwrap();
        let key = encode_key(&set, &boundary).unwrap();
        assert_eq!(&*key, &[0, 3, 1, 1]);
        assert_eq!(decode_key(&key, &boundary), set);
        assert!(!key_is_trivial(&key));
        assert!(key_is_trivial(&[1, 1, 2, 2]));
        assert!(encode_key(&canonicalize([(4, 4)]).unwrap(), &boundary).is_none());
    }

    proptest! {
        #[test]
        fn canonicalize_ignores_order(mut pairs in prop::collection::vec((0usize..12, 0usize..12), 0..6), seed in any::<u64>()) {
            let base = canonicalize(pairs.iter().copied());
            // permute pair order and flip pairs
            let k = pairs.len().max(1);
            pairs.rotate_left((seed as usize) % k);
            let flipped: Vec<_> = pairs.iter().enumerate()
                .map(|(i, &(a, b))| if (seed >> (i % 64)) & 1 == 1 { (b, a) } else { (a, b) })
                .collect();
            prop_assert_eq!(canonicalize(flipped), base.clone());
            if let Some(set) = base {
                prop_assert_eq!(canonicalize(set.pairs().iter().copied()), Some(set));
            }
        }
    }
}
