//! Fixed-width bit vectors used for set-system members and token sets.

use std::fmt;

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitSet {
    len: usize,
    words: Vec<u64>,
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum BitSetError {
    #[error("expected {expected} hex digits, found {found}")]
    Width { expected: usize, found: usize },
    #[error("invalid hex: {0}")]
    Hex(String),
    #[error("bit set beyond declared width {0}")]
    Overflow(usize),
}

impl BitSet {
    pub fn new(len: usize) -> Self {
        BitSet { len, words: vec![0; len.div_ceil(64)] }
    }

    pub fn from_indices(len: usize, indices: impl IntoIterator<Item = usize>) -> Self {
        let mut s = BitSet::new(len);
        for i in indices {
            s.insert(i);
        }
        s
    }

    pub fn full(len: usize) -> Self {
        BitSet::from_indices(len, 0..len)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn insert(&mut self, i: usize) {
        assert!(i < self.len, "bit {i} out of range {}", self.len);
        self.words[i / 64] |= 1 << (i % 64);
    }

    pub fn remove(&mut self, i: usize) {
        assert!(i < self.len, "bit {i} out of range {}", self.len);
        self.words[i / 64] &= !(1 << (i % 64));
    }

    pub fn toggle(&mut self, i: usize) {
        assert!(i < self.len, "bit {i} out of range {}", self.len);
        self.words[i / 64] ^= 1 << (i % 64);
    }

    pub fn contains(&self, i: usize) -> bool {
        i < self.len && self.words[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn count(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// `|self ∩ other|` without allocating.
    pub fn and_count(&self, other: &BitSet) -> usize {
        debug_assert_eq!(self.len, other.len);
        self.words.iter().zip(&other.words).map(|(a, b)| (a & b).count_ones() as usize).sum()
    }

    pub fn intersect_with(&mut self, other: &BitSet) {
        debug_assert_eq!(self.len, other.len);
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a &= b;
        }
    }

    pub fn union_with(&mut self, other: &BitSet) {
        debug_assert_eq!(self.len, other.len);
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a |= b;
        }
    }

    pub fn intersection(&self, other: &BitSet) -> BitSet {
        let mut s = self.clone();
        s.intersect_with(other);
        s
    }

    pub fn union(&self, other: &BitSet) -> BitSet {
        let mut s = self.clone();
        s.union_with(other);
        s
    }

    pub fn is_subset(&self, other: &BitSet) -> bool {
        self.words.iter().zip(&other.words).all(|(a, b)| a & !b == 0)
    }

    pub fn is_disjoint(&self, other: &BitSet) -> bool {
        self.words.iter().zip(&other.words).all(|(a, b)| a & b == 0)
    }

    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let b = w.trailing_zeros() as usize;
                w &= w - 1;
                Some(wi * 64 + b)
            })
        })
    }

    /// Copy into a wider (or equal) width, keeping bit positions.
    pub fn widened(&self, len: usize) -> BitSet {
        assert!(len >= self.len);
        let mut s = BitSet::new(len);
        s.words[..self.words.len()].copy_from_slice(&self.words);
        s
    }

    /// Fixed-width hex: byte `j` holds bits `8j..8j+8`, least significant first.
    pub fn to_hex(&self) -> String {
        let nbytes = self.len.div_ceil(8);
        let bytes: Vec<u8> = (0..nbytes).map(|j| (self.words[j / 8] >> (8 * (j % 8))) as u8).collect();
        hex::encode(bytes)
    }

    pub fn from_hex(len: usize, s: &str) -> Result<BitSet, BitSetError> {
        let expected = 2 * len.div_ceil(8);
        if s.len() != expected {
            return Err(BitSetError::Width { expected, found: s.len() });
        }
        let bytes = hex::decode(s).map_err(|e| BitSetError::Hex(e.to_string()))?;
        let mut out = BitSet::new(len);
        for (j, b) in bytes.into_iter().enumerate() {
            out.words[j / 8] |= (b as u64) << (8 * (j % 8));
        }
        if out.ones().any(|i| i >= len) {
            return Err(BitSetError::Overflow(len));
        }
        Ok(out)
    }
}

#[derive(serde::Serialize, serde::Deserialize)]
struct Wire {
    bits: usize,
    hex: String,
}

impl serde::Serialize for BitSet {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        Wire { bits: self.len, hex: self.to_hex() }.serialize(s)
    }
}

impl<'de> serde::Deserialize<'de> for BitSet {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let w = Wire::deserialize(d)?;
        BitSet::from_hex(w.bits, &w.hex).map_err(serde::de::Error::custom)
    }
}

impl fmt::Debug for BitSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitSet[{}]", self.len)?;
        f.debug_set().entries(self.ones()).finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn basic_ops() {
        let a = BitSet::from_indices(130, [0, 5, 64, 129]);
        let b = BitSet::from_indices(130, [5, 64, 100]);
        assert_eq!(a.count(), 4);
        assert_eq!(a.and_count(&b), 2);
        assert_eq!(a.intersection(&b).ones().collect::<Vec<_>>(), vec![5, 64]);
        assert_eq!(a.union(&b).count(), 5);
        assert!(a.intersection(&b).is_subset(&a));
        assert!(!a.is_subset(&b));
    }

    #[test]
    fn hex_rejects_bad_input() {
        assert!(matches!(BitSet::from_hex(12, "ff"), Err(BitSetError::Width { .. })));
        assert!(matches!(BitSet::from_hex(12, "zzzz"), Err(BitSetError::Hex(_))));
        assert_eq!(BitSet::from_hex(12, "ff1f"), Err(BitSetError::Overflow(12)));
    }

    proptest! {
        #[test]
        fn hex_round_trip(len in 1usize..300, seed in proptest::collection::vec(any::<usize>(), 0..40)) {
            let s = BitSet::from_indices(len, seed.into_iter().map(|i| i % len));
            prop_assert_eq!(BitSet::from_hex(len, &s.to_hex()).unwrap(), s);
        }
    }
}
