//! Access-structure tokens for `Γ = cl(Ω)`.
//!
//! Every party receives a permuted element set. A coalition intersects its
//! sets; the intersection size is a multiple of `m` (or `m'`) exactly when the
//! coalition contains `Ω`, and in that case the intersection is always the
//! same set `γ(H)`.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bitset::BitSet;
use crate::numt::Modulus;
use crate::par::Execution;
use crate::setsys::{Provenance, SetSystem};

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum TokenError {
    #[error("party count must be at least 1")]
    NoParties,
    #[error("Ω must be nonempty")]
    EmptyOmega,
    #[error("party {0} outside 1..={1}")]
    PartyRange(usize, usize),
    #[error("party {0} listed twice in Ω")]
    DuplicateParty(usize),
    #[error("need {needed} distinct supersets of H, only {available} exist")]
    NotEnoughSupersets { needed: usize, available: usize },
    #[error("no pad size keeps unauthorized intersections off multiples of {modulus} for |Ω|={omega}")]
    KappaUnsatisfiable { omega: usize, modulus: u64 },
    #[error("set-system has no member that is a proper subset of exactly {0} members")]
    NoCandidates(usize),
    #[error("token set-system must come from a merge")]
    NotMerged,
    #[error("m={m} must divide m'={m_prime}")]
    Moduli { m: u64, m_prime: u64 },
    #[error("token packs come from different instances")]
    MixedInstances,
    #[error("no token packs given")]
    NoPacks,
}

/// Dealer-side record of one token instance.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AccessStructureInstance {
    pub instance: u64,
    pub party_count: usize,
    /// Sorted, 1-based.
    pub omega: Vec<usize>,
    /// `roles[r]` is the party playing role `r + 1` of the construction.
    pub roles: Vec<usize>,
    pub kappa: usize,
    /// Index of `H` in the set-system.
    pub h_index: usize,
    /// Indices of the members strictly containing `H`.
    pub supersets: Vec<usize>,
    /// Set-system member behind each party's set, in party order.
    pub assigned: Vec<usize>,
    pub boundary: usize,
    /// `S_1..S_ℓ` over the token universe.
    pub assigned_sets: Vec<BitSet>,
    /// `γ`, as the image of each universe element.
    pub permutation: Vec<u32>,
    pub m: u64,
    pub m_prime: u64,
}

impl AccessStructureInstance {
    pub fn pad_len(&self) -> usize {
        self.omega.len() + self.kappa
    }

    pub fn width(&self) -> usize {
        self.permutation.len()
    }

    /// `γ(S)` for a set over the token universe.
    pub fn permute(&self, s: &BitSet) -> BitSet {
        BitSet::from_indices(s.len(), s.ones().map(|i| self.permutation[i] as usize))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenPack {
    pub party: usize,
    pub instance: u64,
    pub elements: BitSet,
}

/// Pre-computed containment data for drawing token instances from `H`.
#[derive(Clone, Debug)]
pub struct TokenEncoder {
    h: SetSystem,
    l: usize,
    m_prime: u64,
    candidates: Vec<usize>,
    supersets: Vec<Vec<usize>>,
}

impl TokenEncoder {
    pub fn new(h: SetSystem, h_prime: &SetSystem) -> Result<Self, TokenError> {
        let Provenance::Merged { base_sets, l, .. } = *h.provenance() else {
            return Err(TokenError::NotMerged);
        };
        let m = h.modulus().value();
        let m_prime = h_prime.modulus().value();
        if !m_prime.is_multiple_of(m) {
            return Err(TokenError::Moduli { m, m_prime });
        }
        let want = base_sets.pow(l as u32 - 1);
        let containment = h.containment(Execution::Parallel);
        let candidates = containment.minimal_with_supersets(want);
        if candidates.is_empty() {
            return Err(TokenError::NoCandidates(want));
        }
        Ok(TokenEncoder { h, l, m_prime, candidates, supersets: containment.supersets })
    }

    pub fn system(&self) -> &SetSystem {
        &self.h
    }

    pub fn m_prime(&self) -> u64 {
        self.m_prime
    }

    /// Members eligible as `H`.
    pub fn candidates(&self) -> &[usize] {
        &self.candidates
    }

    pub fn encode<R: Rng + ?Sized>(
        &self,
        parties: usize,
        omega: &[usize],
        instance: u64,
        rng: &mut R,
    ) -> Result<(AccessStructureInstance, Vec<TokenPack>), TokenError> {
        let omega = normalize_omega(parties, omega)?;
        let kappa = choose_kappa(self.h.modulus(), self.l, omega.len())?;
        let n_pad = omega.len() + kappa;
        let hw = self.h.universe();
        let width = hw + n_pad.max(parties + 1);

        let h_index = *self.candidates.choose(rng).expect("candidates nonempty");
        let mut pool = self.supersets[h_index].clone();
        if pool.len() < parties {
            return Err(TokenError::NotEnoughSupersets { needed: parties, available: pool.len() });
        }
        pool.shuffle(rng);
        let mut roles = omega.clone();
        roles.shuffle(rng);

        let pad = |js: &mut dyn Iterator<Item = usize>| -> Vec<usize> { js.map(|j| hw + j - 1).collect() };
        let k = omega.len();
        let mut next = pool.iter().copied();
        let mut assigned = Vec::with_capacity(parties);
        let mut assigned_sets = Vec::with_capacity(parties);
        for party in 1..=parties {
            let (member, pad_elems) = match roles.iter().position(|&p| p == party) {
                Some(0) if k == 1 => (h_index, vec![]),
                Some(0) => (h_index, pad(&mut (2..=n_pad))),
                Some(r) if r + 1 == k => (next.next().unwrap(), pad(&mut (1..k))),
                Some(r) => (next.next().unwrap(), pad(&mut (1..=n_pad).filter(|&j| j != r + 1))),
                None => (next.next().unwrap(), pad(&mut (1..=n_pad))),
            };
            let mut s = self.h.sets()[member].widened(width);
            for e in pad_elems {
                s.insert(e);
            }
            assigned.push(member);
            assigned_sets.push(s);
        }
        let boundary = next.next().unwrap();
        let mut h0 = self.h.sets()[boundary].widened(width);
        for j in 1..=n_pad {
            h0.insert(hw + j - 1);
        }

        let mut permutation: Vec<u32> = (0..width as u32).collect();
        permutation.shuffle(rng);
        let inst = AccessStructureInstance {
            instance,
            party_count: parties,
            omega,
            roles,
            kappa,
            h_index,
            supersets: self.supersets[h_index].clone(),
            assigned,
            boundary,
            assigned_sets,
            permutation,
            m: self.h.modulus().value(),
            m_prime: self.m_prime,
        };
        let packs = inst
            .assigned_sets
            .iter()
            .enumerate()
            .map(|(i, s)| TokenPack { party: i + 1, instance, elements: inst.permute(&h0.intersection(s)) })
            .collect();
        Ok((inst, packs))
    }
}

/// One-shot form of [`TokenEncoder::encode`] with instance id 0.
pub fn encode_access_structure<R: Rng + ?Sized>(
    parties: usize,
    omega: &[usize],
    h_system: &SetSystem,
    h_prime_system: &SetSystem,
    rng: &mut R,
) -> Result<(AccessStructureInstance, Vec<TokenPack>), TokenError> {
    TokenEncoder::new(h_system.clone(), h_prime_system)?.encode(parties, omega, 0, rng)
}

fn normalize_omega(parties: usize, omega: &[usize]) -> Result<Vec<usize>, TokenError> {
    if parties == 0 {
        return Err(TokenError::NoParties);
    }
    if omega.is_empty() {
        return Err(TokenError::EmptyOmega);
    }
    let mut o = omega.to_vec();
    o.sort_unstable();
    for w in o.windows(2) {
        if w[0] == w[1] {
            return Err(TokenError::DuplicateParty(w[0]));
        }
    }
    if let Some(&bad) = o.iter().find(|&&p| p == 0 || p > parties) {
        return Err(TokenError::PartyRange(bad, parties));
    }
    Ok(o)
}

/// Residues mod `m` that an intersection of distinct supersets of `H` (or
/// `H` itself) can take: `0`, plus every nonzero `μ` with `μ mod p < l` for
/// each prime `p | m`.
pub fn intersection_residues(m: &Modulus, l: usize) -> Vec<u64> {
    (0..m.value()).filter(|&mu| mu == 0 || m.primes().all(|p| mu % p < l as u64)).collect()
}

/// Smallest `κ >= 1` for which no reachable residue plus a pad count in
/// `1..=|Ω|+κ` is a multiple of `m`.
pub fn choose_kappa(m: &Modulus, l: usize, omega: usize) -> Result<usize, TokenError> {
    let residues = intersection_residues(m, l);
    let mv = m.value();
    let ok = |n_pad: usize| residues.iter().all(|&mu| (1..=n_pad as u64).all(|k| (mu + k) % mv != 0));
    // Larger κ only adds pad counts to avoid, so κ = 1 is the only candidate.
    if ok(omega + 1) {
        Ok(1)
    } else {
        Err(TokenError::KappaUnsatisfiable { omega, modulus: mv })
    }
}

pub fn combine_tokens(packs: &[&TokenPack]) -> Result<BitSet, TokenError> {
    let first = packs.first().ok_or(TokenError::NoPacks)?;
    let mut acc = first.elements.clone();
    for p in &packs[1..] {
        if p.instance != first.instance || p.elements.len() != acc.len() {
            return Err(TokenError::MixedInstances);
        }
        acc.intersect_with(&p.elements);
    }
    Ok(acc)
}

pub fn membership_test(combined: &BitSet, m: u64, m_prime: u64) -> bool {
    let c = combined.count() as u64;
    c.is_multiple_of(m) || c.is_multiple_of(m_prime)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::setsys::{build_merged_system, GrolmuszParams};
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn encoder() -> TokenEncoder {
        let p = GrolmuszParams::new(15, 3, 3, 2).unwrap();
        let h = build_merged_system(&p).unwrap();
        let hp = build_merged_system(&p.with_extra_prime(7).unwrap()).unwrap();
        TokenEncoder::new(h, &hp).unwrap()
    }

    fn coalition_packs(packs: &[TokenPack], mask: u32) -> Vec<&TokenPack> {
        packs.iter().filter(|p| mask >> (p.party - 1) & 1 == 1).collect()
    }

    #[test]
    fn membership_examples() {
        assert!(membership_test(&BitSet::from_indices(40, 0..30), 15, 105));
        assert!(!membership_test(&BitSet::from_indices(40, 0..31), 15, 105));
    }

    #[test]
    fn residues_and_kappa() {
        let m = Modulus::new(15).unwrap();
        assert_eq!(intersection_residues(&m, 2), vec![0, 1, 6, 10]);
        assert_eq!(choose_kappa(&m, 2, 3), Ok(1));
        assert_eq!(choose_kappa(&m, 2, 4), Err(TokenError::KappaUnsatisfiable { omega: 4, modulus: 15 }));
    }

    #[test]
    fn lemma_examples_l5() {
        let enc = encoder();
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let (inst, packs) = enc.encode(5, &[1, 2, 3], 0, &mut rng).unwrap();
        let gamma_h = inst.permute(&enc.system().sets()[inst.h_index].widened(inst.width()));
        for mask in 1u32..32 {
            let c = combine_tokens(&coalition_packs(&packs, mask)).unwrap();
            let authorized = mask & 0b111 == 0b111;
            assert_eq!(membership_test(&c, 15, 105), authorized, "mask {mask:05b}");
            if authorized {
                assert_eq!(c, gamma_h);
            } else {
                assert_ne!(c, gamma_h);
                assert_ne!(c.count() % 15, 0);
                assert_ne!(c.count() % 105, 0);
            }
        }
        assert!(packs.iter().all(|p| !p.elements.is_empty()));
    }

    #[test]
    fn single_member_omega() {
        let enc = encoder();
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        let (_, packs) = enc.encode(4, &[3], 0, &mut rng).unwrap();
        for mask in 1u32..16 {
            let c = combine_tokens(&coalition_packs(&packs, mask)).unwrap();
            assert_eq!(membership_test(&c, 15, 105), mask & 0b100 != 0);
        }
    }

    #[test]
    fn errors() {
        let enc = encoder();
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        assert_eq!(enc.encode(5, &[], 0, &mut rng).unwrap_err(), TokenError::EmptyOmega);
        assert_eq!(enc.encode(5, &[6], 0, &mut rng).unwrap_err(), TokenError::PartyRange(6, 5));
        assert_eq!(enc.encode(5, &[2, 2], 0, &mut rng).unwrap_err(), TokenError::DuplicateParty(2));
        assert_eq!(
            enc.encode(30, &[1], 0, &mut rng).unwrap_err(),
            TokenError::NotEnoughSupersets { needed: 30, available: 27 }
        );
        let (_, a) = enc.encode(3, &[1], 0, &mut rng).unwrap();
        let (_, b) = enc.encode(3, &[1], 1, &mut rng).unwrap();
        assert_eq!(combine_tokens(&[&a[0], &b[1]]), Err(TokenError::MixedInstances));
        assert_eq!(combine_tokens(&[]), Err(TokenError::NoPacks));
    }
}
