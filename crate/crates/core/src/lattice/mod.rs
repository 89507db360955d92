//! PRIM-LWE secrets, gadget trapdoors, LWE inversion, preimage sampling and
//! modulus switching.

mod gaussian;
mod matrix;
mod modswitch;
mod prim;
mod trapdoor;

pub use gaussian::DiscreteGaussian;
pub use matrix::{center, reduce, Mat};
pub use modswitch::{compliant_ratio, modswitch_roundtrip, modswitch_roundtrip_unchecked, round_div};
pub use prim::{
    det_count_formulas, enumerate_det_counts, f_p, f_p_ratio, prim_fraction, sample_invertible, sample_prim_secret,
    sample_with_det, uniform_matrix, PrimSecret, DEFAULT_RETRY_CAP,
};
pub use trapdoor::{gadget, lwe_invert, sample_preimage, trapdoor_gen, Inversion, TrapdoorMatrix};

use serde::{Deserialize, Serialize};

use crate::numt::is_prime;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum LatticeError {
    #[error("invalid parameters: {0}")]
    Params(String),
    #[error("tag matrix is not invertible mod q")]
    SingularTag,
    #[error("decoding residual {residual} exceeds the bound {bound}")]
    ResidualTooLarge { residual: i64, bound: i64 },
    #[error("matrix shape {found:?}, expected {expected:?}")]
    Shape { expected: (usize, usize), found: (usize, usize) },
    #[error("no acceptable sample within {0} attempts")]
    RetryCap(u32),
    #[error("q/q' = {q}/{q_prime} lies outside ((2p-1)/2p, 2p/(2p+1)) for p={p}")]
    RatioWindow { q: u64, q_prime: u64, p: u64 },
    #[error(transparent)]
    Numt(#[from] crate::numt::NumtError),
}

/// LWE dimensions, moduli and sampler widths.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LweParams {
    /// Secret dimension.
    pub n: usize,
    /// Sample dimension; at least `n(1 + d)`.
    pub w: usize,
    pub q: u64,
    pub q_prime: u64,
    pub p: u64,
    pub lambda: u32,
    /// Decoding-margin constant `C`: gadget residuals must stay below `q/2C`.
    pub c: u64,
    /// Overrides the default encoding norm cap `σ√λ` when set.
    pub sigma_cap: Option<i64>,
    pub retry_cap: u32,
}

impl LweParams {
    /// `n = 4`, `p = 31`, `q = q' = 31·2^18`.
    pub fn desk() -> Self {
        LweParams::with_modulus(4, 31, 31 << 18)
    }

    /// Minimal sample dimension for the given `n`, `p`, `q`.
    pub fn with_modulus(n: usize, p: u64, q: u64) -> Self {
        let d = bits(q);
        LweParams { n, w: n * (1 + d), q, q_prime: q, p, lambda: 16, c: 4, sigma_cap: None, retry_cap: 1000 }
    }

    pub fn validate(&self) -> Result<(), LatticeError> {
        let bad = |s: String| Err(LatticeError::Params(s));
        if self.n == 0 {
            return bad("n must be positive".into());
        }
        if self.p < 3 || !is_prime(self.p) {
            return bad(format!("p={} must be an odd prime", self.p));
        }
        for (name, q) in [("q", self.q), ("q'", self.q_prime)] {
            if q % self.p != 0 || (q / self.p).is_multiple_of(self.p) {
                return bad(format!("{name}={q} must be p·c with p ∤ c"));
            }
            if q >= 1 << 62 {
                return bad(format!("{name}={q} must be below 2^62"));
            }
        }
        if self.w < self.n * (1 + self.d()) {
            return bad(format!("w={} is below n(1+d)={}", self.w, self.n * (1 + self.d())));
        }
        if self.c == 0 || self.lambda == 0 || self.retry_cap == 0 {
            return bad("C, λ and retry cap must be positive".into());
        }
        Ok(())
    }

    /// Gadget digit count `⌈log₂ q⌉`.
    pub fn d(&self) -> usize {
        bits(self.q)
    }

    /// Rows of the uniform block.
    pub fn w_bar(&self) -> usize {
        self.w - self.n * self.d()
    }

    /// `s = √n`.
    pub fn s(&self) -> f64 {
        (self.n as f64).sqrt()
    }

    /// `σ = ⌈√(n·log₂ q)⌉`.
    pub fn sigma(&self) -> f64 {
        (self.n as f64 * (self.q as f64).log2()).sqrt().ceil()
    }

    /// `‖E‖∞` must stay below `s√λ`.
    pub fn error_cap(&self) -> i64 {
        (self.s() * (self.lambda as f64).sqrt()).ceil() as i64
    }

    /// `‖D‖∞` must stay below `σ√λ` (or the configured cap).
    pub fn encoding_cap(&self) -> i64 {
        self.sigma_cap.unwrap_or((self.sigma() * (self.lambda as f64).sqrt()).ceil() as i64)
    }

    /// The planted-error radius `q/(C·p·d)`.
    pub fn inversion_bound(&self) -> i64 {
        (self.q / (self.c * self.p * self.d() as u64)) as i64
    }

    /// Largest gadget residual accepted while decoding, `q/2C`.
    pub fn decoding_margin(&self) -> i64 {
        (self.q / (2 * self.c)) as i64
    }
}

/// `⌈log₂ q⌉`.
pub fn bits(q: u64) -> usize {
    (64 - (q - 1).leading_zeros()) as usize
}
