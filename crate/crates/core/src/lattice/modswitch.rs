//! Reading small-entry matrices across two moduli `q < q'`.

use num_integer::Integer;

use super::matrix::Mat;
use super::LatticeError;

/// `round(num / den)` with halves rounded up; `den > 0`.
pub fn round_div(num: i128, den: i128) -> i128 {
    assert!(den > 0, "denominator must be positive");
    Integer::div_floor(&(2 * num + den), &(2 * den))
}

/// Whether `(2p-1)/2p < q/q' < 2p/(2p+1)`.
pub fn compliant_ratio(q: u64, q_prime: u64, p: u64) -> bool {
    let (q, qp, p) = (q as u128, q_prime as u128, p as u128);
    (2 * p - 1) * qp < 2 * p * q && q * (2 * p + 1) < 2 * p * qp
}

/// `round((q'/q)·a) = a` and `round((q/q')·a) = a` for every entry, with the
/// ratio window enforced.
pub fn modswitch_roundtrip(a: &Mat, p: u64, q: u64, q_prime: u64) -> Result<bool, LatticeError> {
    if !compliant_ratio(q, q_prime, p) {
        return Err(LatticeError::RatioWindow { q, q_prime, p });
    }
    Ok(modswitch_roundtrip_unchecked(a, q, q_prime))
}

/// The same entrywise check at any ratio.
pub fn modswitch_roundtrip_unchecked(a: &Mat, q: u64, q_prime: u64) -> bool {
    let (q, qp) = (q as i128, q_prime as i128);
    a.data().iter().all(|&x| {
        let x = x as i128;
        round_div(qp * x, q) == x && round_div(q * x, qp) == x
    })
}
