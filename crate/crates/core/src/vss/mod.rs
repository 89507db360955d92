//! Dealing, reconstruction and verification over one encoding chain per
//! minimal authorized subset.
//!
//! Membership is decided by access-structure tokens alone. A coalition that
//! passes the token test derives the header key from its combined tokens,
//! learns the chain order, exponents and terminal trapdoor, multiplies its
//! encodings in order and inverts the result. The determinant of the
//! recovered matrix is `k^{Σe+1} = k (mod p)`.

mod bundle;
mod chain;
mod deal;
mod header;
mod recon;

pub use bundle::{InstanceShare, PublicParams, ShareBundle};
pub use chain::{
    apply_chain, decoy_link, encode_link, invert_chain, link_product, random_order, sample_error, sample_exponents,
    Chain,
};
pub use deal::{deal, ChainInstance, Dealer, DealerView, Dealing};
pub use header::{open as open_header, seal as seal_header, InstanceHeader};
pub use recon::{reconstruct, reconstruct_detailed, verify_shares, Coalition, Reconstruction, Unlocked, Verdicts};

use num_bigint::BigInt;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use crate::codec::CodecError;
use crate::lattice::{LatticeError, LweParams};
use crate::numt::{is_primitive_root, NumtError};
use crate::setsys::{GrolmuszParams, SetSysError};
use crate::tokens::TokenError;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum VssError {
    #[error("invalid parameters: {0}")]
    Params(String),
    #[error("{k} is not a primitive root mod {p}")]
    NotPrimitive { k: u64, p: u64 },
    #[error("the access structure lists no authorized subsets")]
    EmptyGamma,
    #[error("integer product of the link matrices reaches {max}, not below q={q}")]
    EntryOverflow { max: i64, q: u64 },
    #[error("unauthorized")]
    Unauthorized,
    #[error("corrupt shares: {0}")]
    Corrupt(String),
    #[error("shares come from different dealings")]
    MixedDealings,
    #[error("party {0} supplied two different bundles")]
    DuplicateParty(usize),
    #[error("no shares given")]
    NoBundles,
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error(transparent)]
    Token(#[from] TokenError),
    #[error(transparent)]
    SetSys(#[from] SetSysError),
    #[error(transparent)]
    Numt(#[from] NumtError),
    #[error(transparent)]
    Codec(#[from] CodecError),
}

impl VssError {
    /// Failures caused by the shares presented rather than by the inputs.
    pub fn is_protocol_failure(&self) -> bool {
        matches!(
            self,
            VssError::Unauthorized
                | VssError::Corrupt(_)
                | VssError::MixedDealings
                | VssError::DuplicateParty(_)
                | VssError::Lattice(LatticeError::ResidualTooLarge { .. })
        )
    }
}

/// A primitive root mod `p`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "SecretWire")]
pub struct Secret {
    k: u64,
    p: u64,
}

#[derive(Deserialize)]
struct SecretWire {
    k: u64,
    p: u64,
}

impl TryFrom<SecretWire> for Secret {
    type Error = VssError;

    fn try_from(w: SecretWire) -> Result<Self, VssError> {
        Secret::new(w.k, w.p)
    }
}

impl Secret {
    pub fn new(k: u64, p: u64) -> Result<Self, VssError> {
        if k.is_multiple_of(p) || !is_primitive_root(k % p, p)? {
            return Err(VssError::NotPrimitive { k, p });
        }
        Ok(Secret { k: k % p, p })
    }

    pub fn value(&self) -> u64 {
        self.k
    }

    pub fn p(&self) -> u64 {
        self.p
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VssParams {
    pub lwe: LweParams,
    /// Token set-system `H`.
    pub set_system: GrolmuszParams,
    /// `m' = m · extra_prime` for the companion system.
    pub extra_prime: u64,
}

impl VssParams {
    /// Lattice desk parameters with tokens over `m = 15`, `n = 3`, `l = 2`,
    /// `m' = 105`.
    pub fn desk() -> Self {
        VssParams {
            lwe: LweParams::desk(),
            set_system: GrolmuszParams::new(15, 3, 3, 2).expect("desk set-system parameters are valid"),
            extra_prime: 7,
        }
    }

    pub fn validate(&self) -> Result<(), VssError> {
        self.lwe.validate()?;
        self.set_system.validate()?;
        Ok(())
    }
}

/// Constant in front of `h` in the share-size bound.
pub const SHARE_SIZE_CH: f64 = 1.0;

/// `ϱ` with `q^ϱ = m·n`.
pub fn share_rho(m: u64, n: usize, q: u64) -> f64 {
    ((m * n as u64) as f64).ln() / (q as f64).ln()
}

/// `C(ℓ, ⌊ℓ/2⌋) · (√q·(2q^ϱ + 1) + c_h·h)`, rounded up.
pub fn max_share_size(parties: usize, q: u64, h: usize, rho: f64) -> u64 {
    assert!(rho <= 1.0, "ϱ must be at most 1");
    let binom = crate::numt::binomial(&BigInt::from(parties), parties / 2).to_f64().expect("finite binomial");
    let inner = (q as f64).sqrt() * (2.0 * (q as f64).powf(rho) + 1.0) + SHARE_SIZE_CH * h as f64;
    (binom * inner).ceil() as u64
}
