//! The per-instance header, sealed under a key derived from `γ(H)`.
//!
//! Key: HKDF-SHA256 over the sorted element ids (`u32`, big-endian) of the
//! combined token set, with the dealing and instance ids as info. Nonce: the
//! instance id, big-endian, zero-padded to 12 bytes.

use chacha20poly1305::aead::{Aead, KeyInit};
use chacha20poly1305::{ChaCha20Poly1305, Key, Nonce};
use hkdf::Hkdf;
use serde::{Deserialize, Serialize};
use sha2::Sha256;

use super::VssError;
use crate::bitset::BitSet;
use crate::codec::{hex_width, HexMat};
use crate::lattice::{LweParams, Mat, TrapdoorMatrix};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InstanceHeader {
    pub dealing: String,
    pub instance: u64,
    /// Party ids by chain position.
    pub order: Vec<usize>,
    /// `e_j` by chain position, including the bump.
    pub exponents: Vec<u64>,
    pub terminal_a: Mat,
    pub terminal_r: Mat,
    pub terminal_tag: Mat,
}

/// Fixed-size plaintext: positions and exponents are listed for every party
/// (zero for parties off the chain), so the length does not reveal `|Ω|`.
#[derive(Serialize, Deserialize)]
struct Wire {
    dealing: String,
    instance: u64,
    positions: String,
    exponents: String,
    terminal_a: HexMat,
    terminal_r: HexMat,
    terminal_tag: HexMat,
}

const POS_WIDTH: usize = 4;

impl InstanceHeader {
    pub fn terminal(&self, params: &LweParams) -> Result<TrapdoorMatrix, VssError> {
        let q = params.q;
        let r = self.terminal_r.centered(q);
        Ok(TrapdoorMatrix::from_parts(params.clone(), self.terminal_a.clone(), r, self.terminal_tag.clone())?)
    }

    fn to_wire(&self, parties: usize, params: &LweParams) -> Wire {
        let ew = hex_width(params.p + 1);
        let mut positions = String::new();
        let mut exponents = String::new();
        for party in 1..=parties {
            match self.order.iter().position(|&x| x == party) {
                Some(j) => {
                    positions.push_str(&format!("{:0POS_WIDTH$x}", j + 1));
                    exponents.push_str(&format!("{:0ew$x}", self.exponents[j]));
                }
                None => {
                    positions.push_str(&"0".repeat(POS_WIDTH));
                    exponents.push_str(&"0".repeat(ew));
                }
            }
        }
        Wire {
            dealing: self.dealing.clone(),
            instance: self.instance,
            positions,
            exponents,
            terminal_a: HexMat::encode(&self.terminal_a, params.q),
            terminal_r: HexMat::encode(&self.terminal_r, params.q),
            terminal_tag: HexMat::encode(&self.terminal_tag, params.q),
        }
    }

    fn from_wire(w: Wire, parties: usize, params: &LweParams) -> Result<Self, VssError> {
        let bad = |s: &str| VssError::Corrupt(format!("header: {s}"));
        let ew = hex_width(params.p + 1);
        if w.positions.len() != parties * POS_WIDTH
            || w.exponents.len() != parties * ew
            || !w.positions.is_ascii()
            || !w.exponents.is_ascii()
        {
            return Err(bad("field widths"));
        }
        let parse = |s: &str| u64::from_str_radix(s, 16).map_err(|_| bad("hex"));
        let mut slots = vec![None; parties];
        for party in 1..=parties {
            let pos = parse(&w.positions[(party - 1) * POS_WIDTH..party * POS_WIDTH])? as usize;
            let e = parse(&w.exponents[(party - 1) * ew..party * ew])?;
            if pos > 0 {
                let slot = slots.get_mut(pos - 1).ok_or_else(|| bad("position out of range"))?;
                if slot.is_some() {
                    return Err(bad("repeated position"));
                }
                *slot = Some((party, e));
            }
        }
        let len = slots.iter().take_while(|s| s.is_some()).count();
        if len == 0 || slots[len..].iter().any(Option::is_some) {
            return Err(bad("chain positions are not contiguous"));
        }
        let (order, exponents) = slots.into_iter().flatten().unzip();
        let q = params.q;
        Ok(InstanceHeader {
            dealing: w.dealing,
            instance: w.instance,
            order,
            exponents,
            terminal_a: w.terminal_a.decode(q)?,
            terminal_r: w.terminal_r.decode(q)?,
            terminal_tag: w.terminal_tag.decode(q)?,
        })
    }
}

fn cipher(combined: &BitSet, dealing: &str, instance: u64) -> (ChaCha20Poly1305, [u8; 12]) {
    let ikm: Vec<u8> = combined.ones().flat_map(|i| (i as u32).to_be_bytes()).collect();
    let mut info = b"ashvss/header/".to_vec();
    info.extend_from_slice(dealing.as_bytes());
    info.extend_from_slice(&instance.to_be_bytes());
    let mut key = [0u8; 32];
    Hkdf::<Sha256>::new(None, &ikm).expand(&info, &mut key).expect("32 bytes is a valid HKDF length");
    let mut nonce = [0u8; 12];
    nonce[..8].copy_from_slice(&instance.to_be_bytes());
    (ChaCha20Poly1305::new(Key::from_slice(&key)), nonce)
}

pub fn seal(header: &InstanceHeader, combined: &BitSet, parties: usize, params: &LweParams) -> Vec<u8> {
    let plain = serde_json::to_vec(&header.to_wire(parties, params)).expect("header serializes");
    let (c, nonce) = cipher(combined, &header.dealing, header.instance);
    c.encrypt(Nonce::from_slice(&nonce), plain.as_slice()).expect("encryption cannot fail")
}

/// `None` when the key is wrong or the ciphertext was altered.
pub fn open(
    ciphertext: &[u8],
    combined: &BitSet,
    dealing: &str,
    instance: u64,
    parties: usize,
    params: &LweParams,
) -> Result<Option<InstanceHeader>, VssError> {
    let (c, nonce) = cipher(combined, dealing, instance);
    let Ok(plain) = c.decrypt(Nonce::from_slice(&nonce), ciphertext) else {
        return Ok(None);
    };
    let wire: Wire = serde_json::from_slice(&plain).map_err(|e| VssError::Corrupt(format!("header: {e}")))?;
    let h = InstanceHeader::from_wire(wire, parties, params)?;
    if h.dealing != dealing || h.instance != instance {
        return Err(VssError::Corrupt("header belongs to another instance".into()));
    }
    Ok(Some(h))
}
