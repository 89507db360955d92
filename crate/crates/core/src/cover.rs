//! Covering vectors: characteristic vectors of set-system members over
//! `Z_m^h`, with inner products and multilinear forms that recover
//! intersection and union sizes.

use std::collections::BTreeSet;

use crate::par::{map_range, Execution};
use crate::setsys::SetSystem;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum CoverError {
    #[error("vector lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("entry {value} at position {position} is not 0 or 1")]
    NonBoolean { position: usize, value: u32 },
    #[error("family has no companion")]
    CompanionAbsent,
    #[error("companion has {found} vectors, expected {expected}")]
    CompanionSize { expected: usize, found: usize },
    #[error("index {0} out of range")]
    Index(usize),
    #[error("multilinear form needs at least one vector")]
    Empty,
    #[error("inclusion-exclusion over {0} sets is too large")]
    TooManySets(usize),
}

/// A dense residue vector together with the member it came from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoveringVector {
    pub entries: Vec<u32>,
    pub source: usize,
}

impl CoveringVector {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn weight(&self) -> usize {
        self.entries.iter().filter(|&&e| e != 0).count()
    }
}

/// Integer inner product.
pub fn inner_product(u: &CoveringVector, v: &CoveringVector) -> Result<u64, CoverError> {
    if u.len() != v.len() {
        return Err(CoverError::LengthMismatch(u.len(), v.len()));
    }
    Ok(u.entries.iter().zip(&v.entries).map(|(&a, &b)| a as u64 * b as u64).sum())
}

/// Per-index companion data: `v'_i = v_i + delta_i` over the integers.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Companion {
    pub modulus: u64,
    pub deltas: Vec<Vec<i8>>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VectorFamily {
    pub modulus: u64,
    pub vectors: Vec<CoveringVector>,
    pub companion: Option<Companion>,
}

pub fn to_covering_family(h: &SetSystem) -> VectorFamily {
    let w = h.universe();
    let vectors = h
        .sets()
        .iter()
        .enumerate()
        .map(|(source, s)| {
            let mut entries = vec![0u32; w];
            for i in s.ones() {
                entries[i] = 1;
            }
            CoveringVector { entries, source }
        })
        .collect();
    VectorFamily { modulus: h.modulus().value(), vectors, companion: None }
}

impl VectorFamily {
    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn inner_mod(&self, i: usize, j: usize) -> u64 {
        inner_product(&self.vectors[i], &self.vectors[j]).expect("family vectors share a length") % self.modulus
    }

    /// Attaches `other` (same length, same member count) as the companion.
    pub fn with_companion(mut self, other: &VectorFamily) -> Result<Self, CoverError> {
        if other.len() != self.len() {
            return Err(CoverError::CompanionSize { expected: self.len(), found: other.len() });
        }
        let deltas = self
            .vectors
            .iter()
            .zip(&other.vectors)
            .map(|(v, w)| {
                if v.len() != w.len() {
                    return Err(CoverError::LengthMismatch(v.len(), w.len()));
                }
                Ok(v.entries.iter().zip(&w.entries).map(|(&a, &b)| (b as i64 - a as i64) as i8).collect())
            })
            .collect::<Result<_, _>>()?;
        self.companion = Some(Companion { modulus: other.modulus, deltas });
        Ok(self)
    }

    /// `⟨u, v_i⟩ + ⟨u, δ_i⟩`, which equals `⟨u, v'_i⟩`.
    pub fn hop(&self, u: &CoveringVector, index: usize) -> Result<i64, CoverError> {
        let c = self.companion.as_ref().ok_or(CoverError::CompanionAbsent)?;
        let v = self.vectors.get(index).ok_or(CoverError::Index(index))?;
        hop(u, v, &c.deltas[index])
    }

    /// Distinct nonzero residues of `⟨v_i, v_j⟩` over pairs where neither
    /// source set contains the other.
    pub fn residue_set(&self, exec: Execution) -> BTreeSet<u64> {
        let n = self.len();
        map_range(exec, n, |i| {
            let mut seen = BTreeSet::new();
            let wi = self.vectors[i].weight() as u64;
            for j in i + 1..n {
                let ip = inner_product(&self.vectors[i], &self.vectors[j]).unwrap();
                let wj = self.vectors[j].weight() as u64;
                if ip != wi && ip != wj && !ip.is_multiple_of(self.modulus) {
                    seen.insert(ip % self.modulus);
                }
            }
            seen
        })
        .into_iter()
        .flatten()
        .collect()
    }
}

pub fn hop(u: &CoveringVector, v: &CoveringVector, delta: &[i8]) -> Result<i64, CoverError> {
    if delta.len() != u.len() {
        return Err(CoverError::LengthMismatch(u.len(), delta.len()));
    }
    let base = inner_product(u, v)? as i64;
    let shift: i64 = u.entries.iter().zip(delta).map(|(&a, &d)| a as i64 * d as i64).sum();
    Ok(base + shift)
}

fn check_boolean(v: &CoveringVector) -> Result<(), CoverError> {
    match v.entries.iter().position(|&e| e > 1) {
        Some(position) => Err(CoverError::NonBoolean { position, value: v.entries[position] }),
        None => Ok(()),
    }
}

/// `Σ_j ∏_i v_i[j]`: the size of the intersection of the source sets.
pub fn multilinear_form(vs: &[&CoveringVector]) -> Result<u64, CoverError> {
    let first = vs.first().ok_or(CoverError::Empty)?;
    for v in vs {
        if v.len() != first.len() {
            return Err(CoverError::LengthMismatch(first.len(), v.len()));
        }
        check_boolean(v)?;
    }
    Ok((0..first.len()).filter(|&j| vs.iter().all(|v| v.entries[j] == 1)).count() as u64)
}

/// `x + y - z`.
pub fn union_size_via_f(x: i64, y: i64, z: i64) -> i64 {
    x + y - z
}

/// `|V ∩ (W_1 ∪ … ∪ W_w)|` by inclusion-exclusion over multilinear forms.
pub fn iterated_union_form(v: &CoveringVector, ws: &[&CoveringVector]) -> Result<i64, CoverError> {
    if ws.len() > 20 {
        return Err(CoverError::TooManySets(ws.len()));
    }
    let mut total = 0i64;
    let mut args = Vec::with_capacity(ws.len() + 1);
    for mask in 1u32..(1 << ws.len()) {
        args.clear();
        args.push(v);
        args.extend((0..ws.len()).filter(|i| mask >> i & 1 == 1).map(|i| ws[i]));
        let f = multilinear_form(&args)? as i64;
        total += if mask.count_ones() % 2 == 1 { f } else { -f };
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bitset::BitSet;
    use crate::numt::Modulus;
    use crate::setsys::{align_companion, build_merged_system, GrolmuszParams};

    fn cv(w: usize, idx: &[usize]) -> CoveringVector {
        let mut entries = vec![0; w];
        for &i in idx {
            entries[i] = 1;
        }
        CoveringVector { entries, source: 0 }
    }

    #[test]
    fn singleton_family() {
        let h = SetSystem::new(Modulus::new(15).unwrap(), 15, vec![BitSet::full(15)]).unwrap();
        let f = to_covering_family(&h);
        assert_eq!(f.vectors[0].weight(), 15);
        assert_eq!(f.inner_mod(0, 0), 0);
    }

    #[test]
    fn forms_small_cases() {
        let a = cv(10, &[0, 1, 2, 3]);
        let b = cv(10, &[2, 3, 4]);
        let c = cv(10, &[7, 8]);
        assert_eq!(multilinear_form(&[&a]), Ok(4));
        assert_eq!(multilinear_form(&[&a, &b]), Ok(2));
        assert_eq!(multilinear_form(&[&a, &c]), Ok(0));
        assert_eq!(multilinear_form(&[&a, &b]), multilinear_form(&[&b, &a]));
        assert_eq!(union_size_via_f(6, 10, 1), 15);
        assert_eq!(union_size_via_f(7, 7, 7), 7);
        assert_eq!(iterated_union_form(&a, &[&b]), Ok(2));
        let x = multilinear_form(&[&a, &b]).unwrap() as i64;
        let y = multilinear_form(&[&a, &c]).unwrap() as i64;
        let z = multilinear_form(&[&a, &b, &c]).unwrap() as i64;
        assert_eq!(iterated_union_form(&a, &[&b, &c]), Ok(union_size_via_f(x, y, z)));
        assert_eq!(multilinear_form(&[]), Err(CoverError::Empty));
        assert_eq!(multilinear_form(&[&a, &cv(9, &[])]), Err(CoverError::LengthMismatch(10, 9)));
        let mut bad = a.clone();
        bad.entries[5] = 2;
        assert_eq!(multilinear_form(&[&bad]), Err(CoverError::NonBoolean { position: 5, value: 2 }));
    }

    #[test]
    fn hop_identities() {
        let u = cv(6, &[0, 1, 2]);
        let v = cv(6, &[1, 2, 3]);
        assert_eq!(hop(&u, &v, &[0; 6]), Ok(2));
        let delta = [1, 0, 0, 0, 1, 0];
        let there = hop(&u, &v, &delta).unwrap();
        assert_eq!(there, 3);
        let v2 = cv(6, &[0, 1, 2, 3, 4]);
        let back: Vec<i8> = delta.iter().map(|d| -d).collect();
        assert_eq!(hop(&u, &v2, &back), Ok(2));
        let fam = VectorFamily { modulus: 15, vectors: vec![v], companion: None };
        assert_eq!(fam.hop(&u, 0), Err(CoverError::CompanionAbsent));
    }

    #[test]
    fn hop_to_companion_superset_grows() {
        let p = GrolmuszParams::new(15, 3, 3, 2).unwrap();
        let h = build_merged_system(&p).unwrap();
        let hp = build_merged_system(&p.with_extra_prime(7).unwrap()).unwrap();
        let (h, hp) = align_companion(&h, &hp, 0, 0).unwrap();
        let v = to_covering_family(&h);
        let vp = to_covering_family(&hp);
        let fam = v.clone().with_companion(&vp).unwrap();
        for ui in [0usize, 5, 60, 700] {
            let u = &v.vectors[ui];
            let hopped = fam.hop(u, 0).unwrap();
            assert_eq!(hopped, inner_product(u, &vp.vectors[0]).unwrap() as i64);
            let direct = h.sets()[ui].and_count(&hp.sets()[0]) as i64;
            assert_eq!(hopped, direct);
            assert!(hopped >= inner_product(u, &v.vectors[0]).unwrap() as i64);
        }
    }
}
