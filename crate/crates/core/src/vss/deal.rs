use rand::{Rng, RngCore};

use super::bundle::{InstanceShare, PublicParams, ShareBundle};
use super::chain::{decoy_link, random_order, Chain};
use super::header::{seal, InstanceHeader};
use super::{Secret, VssError, VssParams};
use crate::bitset::BitSet;
use crate::par::{map_range, Execution};
use crate::rng::Streams;
use crate::setsys::build_merged_system;
use crate::tokens::{combine_tokens, membership_test, AccessStructureInstance, TokenEncoder};

/// Holds the token set-system so repeated dealings skip its construction.
#[derive(Clone, Debug)]
pub struct Dealer {
    params: VssParams,
    encoder: TokenEncoder,
    exec: Execution,
}

/// Everything the dealer knows about one minimal authorized subset.
#[derive(Clone, Debug)]
pub struct ChainInstance {
    pub instance: u64,
    pub omega: Vec<usize>,
    /// Party ids by chain position.
    pub order: Vec<usize>,
    pub chain: Chain,
    pub tokens: AccessStructureInstance,
    /// `γ(H)`, the common token intersection of every authorized coalition.
    pub key_set: BitSet,
    pub header: InstanceHeader,
    pub ciphertext: Vec<u8>,
}

impl ChainInstance {
    /// 0-based chain position of `party`.
    pub fn position(&self, party: usize) -> Option<usize> {
        self.order.iter().position(|&p| p == party)
    }
}

#[derive(Clone, Debug)]
pub struct DealerView {
    pub dealing: String,
    pub secret: Secret,
    pub instances: Vec<ChainInstance>,
}

#[derive(Clone, Debug)]
pub struct Dealing {
    /// Indexed by party id minus one.
    pub bundles: Vec<ShareBundle>,
    pub view: DealerView,
}

impl Dealer {
    pub fn new(params: VssParams) -> Result<Self, VssError> {
        params.validate()?;
        let h = build_merged_system(&params.set_system)?;
        let h_prime = build_merged_system(&params.set_system.with_extra_prime(params.extra_prime)?)?;
        let encoder = TokenEncoder::new(h, &h_prime)?;
        Ok(Dealer { params, encoder, exec: Execution::Parallel })
    }

    pub fn with_execution(mut self, exec: Execution) -> Self {
        self.exec = exec;
        self
    }

    pub fn params(&self) -> &VssParams {
        &self.params
    }

    pub fn encoder(&self) -> &TokenEncoder {
        &self.encoder
    }

    pub fn public(&self, parties: usize) -> PublicParams {
        PublicParams {
            lwe: self.params.lwe.clone(),
            m: self.encoder.system().modulus().value(),
            m_prime: self.encoder.m_prime(),
            parties,
        }
    }

    /// One chain instance per `Ω` in `gamma0`; instances are dealt in
    /// parallel from independent streams.
    pub fn deal<R: Rng + ?Sized>(
        &self,
        k: &Secret,
        gamma0: &[Vec<usize>],
        parties: usize,
        rng: &mut R,
    ) -> Result<Dealing, VssError> {
        if gamma0.is_empty() {
            return Err(VssError::EmptyGamma);
        }
        if k.p() != self.params.lwe.p {
            return Err(VssError::Params(format!("secret is mod {}, lattice uses p={}", k.p(), self.params.lwe.p)));
        }
        let streams = Streams::new(rng.next_u64());
        let mut id = [0u8; 16];
        streams.rng("dealing-id").fill_bytes(&mut id);
        let dealing = hex::encode(id);

        let results = map_range(self.exec, gamma0.len(), |i| {
            self.deal_instance(k, &gamma0[i], parties, i as u64, &dealing, &streams.child(&format!("instance/{i}")))
        });
        let mut instances = Vec::with_capacity(gamma0.len());
        let mut shares: Vec<Vec<InstanceShare>> = vec![Vec::with_capacity(gamma0.len()); parties];
        for r in results {
            let (inst, per_party) = r?;
            for (slot, s) in shares.iter_mut().zip(per_party) {
                slot.push(s);
            }
            instances.push(inst);
        }
        let public = self.public(parties);
        let bundles = shares
            .into_iter()
            .enumerate()
            .map(|(i, instances)| ShareBundle {
                public: public.clone(),
                dealing: dealing.clone(),
                party: i + 1,
                instances,
            })
            .collect();
        Ok(Dealing { bundles, view: DealerView { dealing, secret: *k, instances } })
    }

    fn deal_instance(
        &self,
        k: &Secret,
        omega: &[usize],
        parties: usize,
        instance: u64,
        dealing: &str,
        streams: &Streams,
    ) -> Result<(ChainInstance, Vec<InstanceShare>), VssError> {
        let lwe = &self.params.lwe;
        let (tokens, packs) = self.encoder.encode(parties, omega, instance, &mut streams.rng("tokens"))?;
        let omega = tokens.omega.clone();
        let members: Vec<_> = packs.iter().filter(|p| omega.contains(&p.party)).collect();
        let key_set = combine_tokens(&members)?;
        debug_assert!(membership_test(&key_set, tokens.m, tokens.m_prime));

        let mut rng = streams.rng("chain");
        let order = random_order(&omega, &mut rng);
        let chain = Chain::generate(lwe, k, order.len(), &mut rng)?;
        let terminal = chain.terminal();
        let header = InstanceHeader {
            dealing: dealing.to_string(),
            instance,
            order: order.clone(),
            exponents: chain.exponents.clone(),
            terminal_a: terminal.a.clone(),
            terminal_r: terminal.r.clone(),
            terminal_tag: terminal.tag.clone(),
        };
        let ciphertext = seal(&header, &key_set, parties, lwe);

        let mut shares = Vec::with_capacity(parties);
        for (i, pack) in packs.into_iter().enumerate() {
            let party = i + 1;
            let (a, d) = match order.iter().position(|&p| p == party) {
                Some(j) => (chain.trapdoors[j].a.clone(), chain.encodings[j].reduced(lwe.q)),
                None => {
                    let (a, d) = decoy_link(lwe, &mut streams.indexed("decoy", party as u64))?;
                    (a, d.reduced(lwe.q))
                }
            };
            shares.push(InstanceShare { instance, token: pack.elements, a, d, header: ciphertext.clone() });
        }
        let inst = ChainInstance { instance, omega, order, chain, tokens, key_set, header, ciphertext };
        Ok((inst, shares))
    }
}

/// One-shot dealing with a freshly built [`Dealer`].
pub fn deal<R: Rng + ?Sized>(
    k: &Secret,
    gamma0: &[Vec<usize>],
    parties: usize,
    params: &VssParams,
    rng: &mut R,
) -> Result<Vec<ShareBundle>, VssError> {
    Ok(Dealer::new(params.clone())?.deal(k, gamma0, parties, rng)?.bundles)
}
