//! Exact modular and polynomial arithmetic.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum NumtError {
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("residue must be in [1, p-1], got {0}")]
    ZeroResidue(u64),
    #[error("duplicate prime {0} in CRT input")]
    DuplicatePrime(u64),
    #[error("expected {expected} variables, got {found}")]
    Arity { expected: usize, found: usize },
    #[error("monomial {0:?} is not a sorted subset of the variables")]
    BadMonomial(Vec<usize>),
    #[error("modulus must be at least 2, got {0}")]
    BadModulus(u64),
}

pub fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

pub fn pow_mod(mut b: u64, mut e: u64, m: u64) -> u64 {
    if m == 1 {
        return 0;
    }
    let mut r = 1u64;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            r = mul_mod(r, b, m);
        }
        b = mul_mod(b, b, m);
        e >>= 1;
    }
    r
}

/// Inverse of `a` mod `m`, if `gcd(a, m) = 1`.
pub fn inv_mod(a: u64, m: u64) -> Option<u64> {
    let e = (a as i128).extended_gcd(&(m as i128));
    (e.gcd == 1).then(|| e.x.rem_euclid(m as i128) as u64)
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2u64;
    while d.saturating_mul(d) <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

/// Prime factorisation by trial division.
pub fn factorize(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut d = 2u64;
    while d.saturating_mul(d) <= n {
        if n.is_multiple_of(d) {
            let mut e = 0;
            while n.is_multiple_of(d) {
                n /= d;
                e += 1;
            }
            out.push((d, e));
        }
        d += 1;
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

pub fn euler_phi(y: u64) -> u64 {
    assert!(y >= 1, "euler_phi is defined for y >= 1");
    factorize(y).into_iter().fold(y, |acc, (p, _)| acc / p * (p - 1))
}

/// Order test via `k^((p-1)/r) != 1` for every prime `r | p-1`.
pub fn is_primitive_root(k: u64, p: u64) -> Result<bool, NumtError> {
    if !is_prime(p) {
        return Err(NumtError::NotPrime(p));
    }
    if k.is_multiple_of(p) {
        return Err(NumtError::ZeroResidue(k));
    }
    Ok(factorize(p - 1).iter().all(|&(r, _)| pow_mod(k, (p - 1) / r, p) != 1))
}

/// Combines `(residue, prime)` pairs into `(x, ∏ primes)`.
pub fn crt_combine(residues: &[(u64, u64)]) -> Result<(u64, u64), NumtError> {
    let mut x = 0u64;
    let mut m = 1u64;
    for (i, &(r, p)) in residues.iter().enumerate() {
        if residues[..i].iter().any(|&(_, q)| q == p) {
            return Err(NumtError::DuplicatePrime(p));
        }
        if !is_prime(p) {
            return Err(NumtError::NotPrime(p));
        }
        let inv = inv_mod(m % p, p).ok_or(NumtError::DuplicatePrime(p))?;
        let t = mul_mod((r % p + p - x % p) % p, inv, p);
        x += m * t;
        m *= p;
    }
    Ok((x % m, m))
}

/// A positive integer with its prime factorisation.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u64", into = "u64")]
pub struct Modulus {
    m: u64,
    factors: Vec<(u64, u32)>,
}

impl TryFrom<u64> for Modulus {
    type Error = NumtError;

    fn try_from(m: u64) -> Result<Self, NumtError> {
        Modulus::new(m)
    }
}

impl From<Modulus> for u64 {
    fn from(m: Modulus) -> u64 {
        m.m
    }
}

impl Modulus {
    pub fn new(m: u64) -> Result<Self, NumtError> {
        if m < 2 {
            return Err(NumtError::BadModulus(m));
        }
        Ok(Modulus { m, factors: factorize(m) })
    }

    pub fn value(&self) -> u64 {
        self.m
    }

    pub fn factorization(&self) -> &[(u64, u32)] {
        &self.factors
    }

    pub fn primes(&self) -> impl Iterator<Item = u64> + '_ {
        self.factors.iter().map(|&(p, _)| p)
    }

    /// Number of distinct prime divisors.
    pub fn r(&self) -> usize {
        self.factors.len()
    }

    pub fn is_squarefree(&self) -> bool {
        self.factors.iter().all(|&(_, e)| e == 1)
    }

    pub fn min_prime(&self) -> u64 {
        self.factors[0].0
    }

    pub fn max_prime(&self) -> u64 {
        self.factors.last().unwrap().0
    }

    pub fn reduce(&self, x: &BigInt) -> u64 {
        x.mod_floor(&BigInt::from(self.m)).to_u64().unwrap()
    }
}

impl fmt::Display for Modulus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.m)
    }
}

/// Multilinear polynomial over `Z_m`, keyed by sorted variable subsets.
///
/// Keys are ordered lexicographically and zero coefficients are never stored.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MultilinearPoly {
    n_vars: usize,
    modulus: Modulus,
    coeffs: BTreeMap<Vec<usize>, u64>,
}

impl MultilinearPoly {
    pub fn new(
        n_vars: usize,
        modulus: Modulus,
        terms: impl IntoIterator<Item = (Vec<usize>, u64)>,
    ) -> Result<Self, NumtError> {
        let m = modulus.value();
        let mut coeffs = BTreeMap::new();
        for (key, c) in terms {
            if key.windows(2).any(|w| w[0] >= w[1]) || key.iter().any(|&i| i >= n_vars) {
                return Err(NumtError::BadMonomial(key));
            }
            let e: &mut u64 = coeffs.entry(key).or_default();
            *e = (*e + c % m) % m;
        }
        coeffs.retain(|_, c| *c != 0);
        Ok(MultilinearPoly { n_vars, modulus, coeffs })
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn modulus(&self) -> &Modulus {
        &self.modulus
    }

    pub fn coeff(&self, monomial: &[usize]) -> u64 {
        self.coeffs.get(monomial).copied().unwrap_or(0)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&[usize], u64)> {
        self.coeffs.iter().map(|(k, &c)| (k.as_slice(), c))
    }

    pub fn degree(&self) -> usize {
        self.coeffs.keys().map(Vec::len).max().unwrap_or(0)
    }

    /// Value at `x` over the integers, with coefficients as least residues.
    pub fn eval_integer(&self, x: &[bool]) -> u64 {
        self.terms().filter(|(k, _)| k.iter().all(|&i| x[i])).map(|(_, c)| c).sum()
    }

    pub fn eval(&self, x: &[bool]) -> Result<u64, NumtError> {
        if x.len() != self.n_vars {
            return Err(NumtError::Arity { expected: self.n_vars, found: x.len() });
        }
        Ok(self.eval_integer(x) % self.modulus.value())
    }
}

pub fn poly_eval(p: &MultilinearPoly, x: &[bool]) -> Result<u64, NumtError> {
    p.eval(x)
}

/// Univariate polynomial with integer coefficients in the power basis.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UniPoly {
    coeffs: Vec<BigInt>,
}

impl UniPoly {
    pub fn new(coeffs: impl IntoIterator<Item = BigInt>) -> Self {
        let mut coeffs: Vec<BigInt> = coeffs.into_iter().collect();
        while coeffs.last().is_some_and(Zero::is_zero) {
            coeffs.pop();
        }
        UniPoly { coeffs }
    }

    pub fn from_i64(coeffs: &[i64]) -> Self {
        UniPoly::new(coeffs.iter().map(|&c| BigInt::from(c)))
    }

    pub fn eval(&self, y: &BigInt) -> BigInt {
        self.coeffs.iter().rev().fold(BigInt::zero(), |acc, c| acc * y + c)
    }
}

/// Integer-valued polynomial `P(y) = Σ c_j·C(y, j)` in the binomial basis.
///
/// This is the natural home for the digit-test polynomials `C(y, p^t)`, whose
/// power-basis coefficients are not integral.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BinomialPoly {
    coeffs: Vec<BigInt>,
}

pub fn binomial(n: &BigInt, k: usize) -> BigInt {
    let mut num = BigInt::one();
    let mut den = BigInt::one();
    for i in 0..k {
        num *= n - BigInt::from(i);
        den *= BigInt::from(i + 1);
    }
    num / den
}

impl BinomialPoly {
    /// Interpolates from values at `y = 0, 1, …, len-1` by forward differences.
    pub fn from_values(values: &[BigInt]) -> Self {
        let mut diffs = values.to_vec();
        let mut coeffs = Vec::with_capacity(values.len());
        while !diffs.is_empty() {
            coeffs.push(diffs[0].clone());
            diffs = diffs.windows(2).map(|w| &w[1] - &w[0]).collect();
        }
        while coeffs.last().is_some_and(Zero::is_zero) {
            coeffs.pop();
        }
        BinomialPoly { coeffs }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn coeffs(&self) -> &[BigInt] {
        &self.coeffs
    }

    pub fn eval(&self, y: &BigInt) -> BigInt {
        self.coeffs.iter().enumerate().map(|(j, c)| c * binomial(y, j)).sum()
    }

    pub fn eval_u64(&self, y: u64) -> BigInt {
        self.eval(&BigInt::from(y))
    }
}

/// Multilinear form of a symmetric function of `Σ x_i` on `{0,1}^n`.
///
/// `value(v)` gives the polynomial at any point of Hamming weight `v`. The
/// coefficient of a monomial of size `u` is the Möbius sum
/// `Σ_{v ≤ u} (-1)^{u-v} C(u,v) value(v)`.
pub fn symmetric_multilinear(n_vars: usize, modulus: &Modulus, value: impl Fn(usize) -> BigInt) -> MultilinearPoly {
    let vals: Vec<BigInt> = (0..=n_vars).map(value).collect();
    let mut terms = Vec::new();
    for u in 0..=n_vars {
        let mut c = BigInt::zero();
        for (v, val) in vals.iter().enumerate().take(u + 1) {
            let term = binomial(&BigInt::from(u), v) * val;
            if (u - v) % 2 == 0 {
                c += term;
            } else {
                c -= term;
            }
        }
        let c = modulus.reduce(&c);
        if c != 0 {
            for key in subsets_of_size(n_vars, u) {
                terms.push((key, c));
            }
        }
    }
    MultilinearPoly::new(n_vars, modulus.clone(), terms).expect("subsets are well formed")
}

/// Expands `P(y)` with `y = Σ x_i` into multilinear form mod `m`.
pub fn multilinear_reduce(poly: &UniPoly, n_vars: usize, modulus: &Modulus) -> MultilinearPoly {
    symmetric_multilinear(n_vars, modulus, |v| poly.eval(&BigInt::from(v)))
}

/// All `k`-subsets of `0..n` in lexicographic order.
pub fn subsets_of_size(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            go(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if k <= n {
        go(0, n, k, &mut Vec::with_capacity(k), &mut out);
    }
    out
}

/// Smallest `c` with `c^r >= n`.
pub fn ceil_root(n: u64, r: u32) -> u64 {
    let mut c = 1u64;
    while (c as u128).pow(r) < n as u128 {
        c += 1;
    }
    c
}
