//! PRIM-LWE secrets: matrices over `Z_p` whose determinant generates `Z_p^*`.

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::matrix::Mat;
use super::LatticeError;
use crate::numt::{euler_phi, is_prime, is_primitive_root};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrimSecret {
    pub s: Mat,
    pub k: u64,
}

pub const DEFAULT_RETRY_CAP: u32 = 10_000;

pub fn uniform_matrix<R: Rng + ?Sized>(n: usize, p: u64, rng: &mut R) -> Mat {
    Mat::from_fn(n, n, |_, _| rng.gen_range(0..p) as i64)
}

fn check_prime(p: u64) -> Result<(), LatticeError> {
    if p < 3 || !is_prime(p) {
        return Err(LatticeError::Params(format!("p={p} must be an odd prime")));
    }
    Ok(())
}

/// Uniform over `n×n` matrices whose determinant is a primitive root mod `p`.
pub fn sample_prim_secret<R: Rng + ?Sized>(
    n: usize,
    p: u64,
    retry_cap: u32,
    rng: &mut R,
) -> Result<PrimSecret, LatticeError> {
    check_prime(p)?;
    for _ in 0..retry_cap {
        let s = uniform_matrix(n, p, rng);
        let k = s.det_mod_p(p);
        if k != 0 && is_primitive_root(k, p)? {
            return Ok(PrimSecret { s, k });
        }
    }
    Err(LatticeError::RetryCap(retry_cap))
}

/// Uniform over matrices with `det = k` exactly.
pub fn sample_with_det<R: Rng + ?Sized>(
    n: usize,
    p: u64,
    k: u64,
    retry_cap: u32,
    rng: &mut R,
) -> Result<PrimSecret, LatticeError> {
    check_prime(p)?;
    for _ in 0..retry_cap {
        let s = uniform_matrix(n, p, rng);
        if s.det_mod_p(p) == k % p {
            return Ok(PrimSecret { s, k: k % p });
        }
    }
    Err(LatticeError::RetryCap(retry_cap))
}

/// Uniform invertible matrix mod `p`.
pub fn sample_invertible<R: Rng + ?Sized>(n: usize, p: u64, rng: &mut R) -> Mat {
    loop {
        let s = uniform_matrix(n, p, rng);
        if s.det_mod_p(p) != 0 {
            return s;
        }
    }
}

/// `(#{det = 0}, #{det = α})` for any fixed `α != 0`, over `n×n` matrices mod `p`.
pub fn det_count_formulas(p: u64, n: u32) -> (BigUint, BigUint) {
    let pb = BigUint::from(p);
    let pn = pb.pow(n);
    let gl: BigUint = (0..n).map(|k| &pn - pb.pow(k)).product();
    let zero = pb.pow(n * n) - &gl;
    let per_alpha = pb.pow(n - 1) * (0..n.saturating_sub(1)).map(|k| &pn - pb.pow(k)).product::<BigUint>();
    (zero, per_alpha)
}

fn ratio(num: &BigUint, den: &BigUint) -> f64 {
    let scale = BigUint::from(10u64).pow(18);
    (num * &scale / den).to_f64().unwrap() / 1e18
}

/// `f_p(n) = ∏_{k=2}^{n} (p^k - 1) / p^{n(n+1)/2}` as an exact fraction.
pub fn f_p_ratio(p: u64, n: u32) -> (BigUint, BigUint) {
    let pb = BigUint::from(p);
    let num: BigUint = (2..=n).map(|k| pb.pow(k) - BigUint::one()).product();
    (num, pb.pow(n * (n + 1) / 2))
}

pub fn f_p(p: u64, n: u32) -> f64 {
    let (num, den) = f_p_ratio(p, n);
    ratio(&num, &den)
}

/// Exact fraction of `n×n` matrices mod `p` with primitive-root determinant,
/// `φ(p-1)·f_p(n)`.
pub fn prim_fraction(p: u64, n: u32) -> f64 {
    euler_phi(p - 1) as f64 * f_p(p, n)
}

/// Brute-force `(#{det = 0}, #{det = α} for each α)` by enumeration.
pub fn enumerate_det_counts(p: u64, n: usize) -> (u64, Vec<u64>) {
    let cells = n * n;
    let total = p.pow(cells as u32);
    let mut zero = 0u64;
    let mut per = vec![0u64; p as usize];
    for idx in 0..total {
        let mut x = idx;
        let m = Mat::from_fn(n, n, |_, _| {
            let d = (x % p) as i64;
            x /= p;
            d
        });
        let d = m.det_mod_p(p);
        if d == 0 {
            zero += 1;
        }
        per[d as usize] += 1;
    }
    (zero, per)
}
