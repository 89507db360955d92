use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::bundle::{PublicParams, ShareBundle};
use super::chain::{apply_chain, invert_chain};
use super::header::{open, InstanceHeader};
use super::{Secret, VssError};
use crate::lattice::{Mat, TrapdoorMatrix};
use crate::numt::pow_mod;
use crate::tokens::{combine_tokens, membership_test};

/// Bundles of one dealing, keyed by party.
#[derive(Clone, Debug)]
pub struct Coalition<'a> {
    public: &'a PublicParams,
    dealing: &'a str,
    members: BTreeMap<usize, &'a ShareBundle>,
    instances: Vec<u64>,
}

/// A header this coalition could decrypt.
#[derive(Clone, Debug)]
pub struct Unlocked {
    /// Index into each bundle's instance list.
    pub slot: usize,
    pub header: InstanceHeader,
    pub terminal: TrapdoorMatrix,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Reconstruction {
    pub secret: Secret,
    pub instance: u64,
    /// The recovered product `S_L ⋯ S_1`.
    pub m: Mat,
    /// `‖E'‖∞` of the combined chain.
    pub error_norm: i64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdicts {
    pub instance: u64,
    /// `true` when the party's encoding is consistent; parties off the chain pass.
    pub verdicts: BTreeMap<usize, bool>,
}

impl Verdicts {
    pub fn all_pass(&self) -> bool {
        self.verdicts.values().all(|&v| v)
    }

    pub fn flagged(&self) -> Vec<usize> {
        self.verdicts.iter().filter(|(_, &v)| !v).map(|(&p, _)| p).collect()
    }
}

impl<'a> Coalition<'a> {
    pub fn new(bundles: &'a [ShareBundle]) -> Result<Self, VssError> {
        let first = bundles.first().ok_or(VssError::NoBundles)?;
        let instances: Vec<u64> = first.instances.iter().map(|s| s.instance).collect();
        let mut members = BTreeMap::new();
        for b in bundles {
            if b.dealing != first.dealing || b.public != first.public {
                return Err(VssError::MixedDealings);
            }
            if b.instances.iter().map(|s| s.instance).ne(instances.iter().copied()) {
                return Err(VssError::Corrupt(format!("party {} lists different instances", b.party)));
            }
            if let Some(prev) = members.insert(b.party, b) {
                if prev != b {
                    return Err(VssError::DuplicateParty(b.party));
                }
            }
        }
        Ok(Coalition { public: &first.public, dealing: &first.dealing, members, instances })
    }

    pub fn parties(&self) -> Vec<usize> {
        self.members.keys().copied().collect()
    }

    /// The first instance whose membership test passes and whose header
    /// decrypts under the combined tokens.
    pub fn unlock(&self) -> Result<Unlocked, VssError> {
        let lwe = &self.public.lwe;
        for (slot, &instance) in self.instances.iter().enumerate() {
            let packs: Vec<_> = self.members.iter().map(|(&p, b)| b.instances[slot].token_pack(p)).collect();
            let refs: Vec<_> = packs.iter().collect();
            let combined = combine_tokens(&refs).map_err(|e| VssError::Corrupt(e.to_string()))?;
            if !membership_test(&combined, self.public.m, self.public.m_prime) {
                continue;
            }
            let ciphertext = &self.members.values().next().expect("nonempty").instances[slot].header;
            let Some(header) = open(ciphertext, &combined, self.dealing, instance, self.public.parties, lwe)? else {
                continue;
            };
            if header.order.iter().any(|p| !self.members.contains_key(p)) {
                continue;
            }
            let terminal = header.terminal(lwe)?;
            return Ok(Unlocked { slot, header, terminal });
        }
        Err(VssError::Unauthorized)
    }

    /// `D_L ⋯ D_j · A_j mod q` for 0-based chain position `j`.
    pub fn apply_from(&self, u: &Unlocked, j: usize) -> Mat {
        let share = |pos: usize| &self.members[&u.header.order[pos]].instances[u.slot];
        let encodings: Vec<Mat> = (j..u.header.order.len()).map(|pos| share(pos).d.clone()).collect();
        apply_chain(&share(j).a, &encodings, self.public.lwe.q)
    }
}

pub fn reconstruct(bundles: &[ShareBundle]) -> Result<Secret, VssError> {
    reconstruct_detailed(bundles).map(|r| r.secret)
}

pub fn reconstruct_detailed(bundles: &[ShareBundle]) -> Result<Reconstruction, VssError> {
    let c = Coalition::new(bundles)?;
    let u = c.unlock()?;
    let (m, error_norm) = invert_chain(&u.terminal, &c.apply_from(&u, 0))?;
    let p = c.public.lwe.p;
    let k = m.det_mod_p(p);
    let secret = Secret::new(k, p).map_err(|_| VssError::Corrupt(format!("recovered {k} is not a primitive root")))?;
    Ok(Reconstruction { secret, instance: u.header.instance, m, error_norm })
}

/// Position `j` passes iff `det M_j ≡ det M_{j+1} · k^{e_j} (mod p)`, where
/// `M_j` is recovered from the suffix `D_L ⋯ D_j · A_j` and `M_{L+1} = I`.
/// When the suffix from `j` fails to invert but the one from `j+1` does not,
/// position `j` fails; positions before a broken suffix cannot be judged and pass.
pub fn verify_shares(bundles: &[ShareBundle], k: &Secret) -> Result<Verdicts, VssError> {
    let c = Coalition::new(bundles)?;
    let u = c.unlock()?;
    let p = c.public.lwe.p;
    let len = u.header.order.len();
    let mut dets: Vec<Option<u64>> =
        (0..len).map(|j| invert_chain(&u.terminal, &c.apply_from(&u, j)).ok().map(|(m, _)| m.det_mod_p(p))).collect();
    dets.push(Some(1));
    let mut verdicts: BTreeMap<usize, bool> = c.parties().into_iter().map(|q| (q, true)).collect();
    for (j, &party) in u.header.order.iter().enumerate() {
        let ok = match (dets[j], dets[j + 1]) {
            (Some(dj), Some(next)) => dj == next * pow_mod(k.value(), u.header.exponents[j], p) % p,
            (None, Some(_)) => false,
            (_, None) => true,
        };
        verdicts.insert(party, ok);
    }
    Ok(Verdicts { instance: u.header.instance, verdicts })
}
