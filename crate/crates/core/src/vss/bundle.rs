//! What each party receives.

use serde::{Deserialize, Serialize};

use super::VssError;
use crate::bitset::BitSet;
use crate::codec::{self, schema, HexMat};
use crate::lattice::{LweParams, Mat};
use crate::tokens::TokenPack;

/// Parameters every party needs to combine shares.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PublicParams {
    pub lwe: LweParams,
    pub m: u64,
    pub m_prime: u64,
    pub parties: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InstanceShare {
    pub instance: u64,
    pub token: BitSet,
    /// This party's chain matrix, or a decoy.
    pub a: Mat,
    /// This party's encoding, or a decoy; entries mod `q`.
    pub d: Mat,
    pub header: Vec<u8>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "BundleWire", try_from = "BundleWire")]
pub struct ShareBundle {
    pub public: PublicParams,
    pub dealing: String,
    pub party: usize,
    pub instances: Vec<InstanceShare>,
}

impl InstanceShare {
    pub fn token_pack(&self, party: usize) -> TokenPack {
        TokenPack { party, instance: self.instance, elements: self.token.clone() }
    }
}

impl ShareBundle {
    pub fn to_bytes(&self) -> Vec<u8> {
        codec::to_bytes(schema::SHARE, self).expect("bundles serialize")
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, VssError> {
        Ok(codec::from_bytes(schema::SHARE, bytes)?)
    }
}

#[derive(Clone, Serialize, Deserialize)]
struct InstanceWire {
    instance: u64,
    token: BitSet,
    a: HexMat,
    d: HexMat,
    header: String,
}

/// The party id is zero-padded to the width of the largest id so that all
/// bundles of a dealing have the same length.
#[derive(Clone, Serialize, Deserialize)]
struct BundleWire {
    public: PublicParams,
    dealing: String,
    party: String,
    instances: Vec<InstanceWire>,
}

impl From<ShareBundle> for BundleWire {
    fn from(b: ShareBundle) -> Self {
        let q = b.public.lwe.q;
        let width = b.public.parties.to_string().len();
        BundleWire {
            party: format!("{:0width$}", b.party),
            dealing: b.dealing,
            instances: b
                .instances
                .iter()
                .map(|s| InstanceWire {
                    instance: s.instance,
                    token: s.token.clone(),
                    a: HexMat::encode(&s.a, q),
                    d: HexMat::encode(&s.d, q),
                    header: hex::encode(&s.header),
                })
                .collect(),
            public: b.public,
        }
    }
}

impl TryFrom<BundleWire> for ShareBundle {
    type Error = String;

    fn try_from(w: BundleWire) -> Result<Self, String> {
        let lwe = &w.public.lwe;
        lwe.validate().map_err(|e| e.to_string())?;
        let party: usize = w.party.parse().map_err(|_| format!("bad party id {:?}", w.party))?;
        if party == 0 || party > w.public.parties {
            return Err(format!("party {party} outside 1..={}", w.public.parties));
        }
        let (q, n, width) = (lwe.q, lwe.n, lwe.w);
        let mut instances = Vec::with_capacity(w.instances.len());
        for s in w.instances {
            let a = s.a.decode(q).map_err(|e| e.to_string())?;
            let d = s.d.decode(q).map_err(|e| e.to_string())?;
            if (a.rows(), a.cols()) != (width, n) || (d.rows(), d.cols()) != (width, width) {
                return Err(format!("instance {}: matrix shapes do not match the parameters", s.instance));
            }
            let header = hex::decode(&s.header).map_err(|e| e.to_string())?;
            instances.push(InstanceShare { instance: s.instance, token: s.token, a, d, header });
        }
        Ok(ShareBundle { public: w.public, dealing: w.dealing, party, instances })
    }
}
