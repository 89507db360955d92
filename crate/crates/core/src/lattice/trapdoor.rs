//! Gadget trapdoors with base-2 digits.
//!
//! `A = [Ā ; G·H - Rᵀ·Ā]` with `Ā` uniform (`w̄×n`), `R` small (`w̄×nd`),
//! `G = I_n ⊗ (1, 2, …, 2^{d-1})ᵀ` and tag `H`, so that
//! `[Rᵀ | I]·A = G·H (mod q)`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::gaussian::DiscreteGaussian;
use super::matrix::{center, reduce, Mat};
use super::{LatticeError, LweParams};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrapdoorMatrix {
    pub params: LweParams,
    /// Public `w×n` matrix mod `q`.
    pub a: Mat,
    /// Trapdoor, `w̄×nd`.
    pub r: Mat,
    pub tag: Mat,
    tag_inv: Mat,
}

/// The `nd×n` gadget: row `(i, b)` is `2^b·e_i`.
pub fn gadget(params: &LweParams) -> Mat {
    let d = params.d();
    Mat::from_fn(params.n * d, params.n, |row, j| if row / d == j { 1i64 << (row % d) } else { 0 })
}

pub fn trapdoor_gen<R: Rng + ?Sized>(
    params: &LweParams,
    tag: &Mat,
    rng: &mut R,
) -> Result<TrapdoorMatrix, LatticeError> {
    params.validate()?;
    let (n, q) = (params.n, params.q);
    if (tag.rows(), tag.cols()) != (n, n) {
        return Err(LatticeError::Shape { expected: (n, n), found: (tag.rows(), tag.cols()) });
    }
    let tag = tag.reduced(q);
    let tag_inv = tag.inverse_mod(q).ok_or(LatticeError::SingularTag)?;
    let wb = params.w_bar();
    let nd = n * params.d();
    let a_bar = Mat::from_fn(wb, n, |_, _| rng.gen_range(0..q) as i64);
    let g = DiscreteGaussian::new(params.s());
    let r = Mat::from_fn(wb, nd, |_, _| g.sample(rng));
    let lower = gadget(params).mul_mod(&tag, q).sub_mod(&r.transpose().mul_mod(&a_bar, q), q);
    Ok(TrapdoorMatrix { params: params.clone(), a: a_bar.vstack(&lower), r, tag, tag_inv })
}

/// Recovered secret and error of an LWE instance.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Inversion {
    /// `S mod q`.
    pub s: Mat,
    /// `E` over the integers, centred.
    pub e: Mat,
}

impl TrapdoorMatrix {
    /// Reassembles a trapdoor from stored parts, checking shapes and the tag.
    pub fn from_parts(params: LweParams, a: Mat, r: Mat, tag: Mat) -> Result<Self, LatticeError> {
        params.validate()?;
        let (n, w) = (params.n, params.w);
        let nd = n * params.d();
        for (m, want) in [(&a, (w, n)), (&r, (params.w_bar(), nd)), (&tag, (n, n))] {
            if (m.rows(), m.cols()) != want {
                return Err(LatticeError::Shape { expected: want, found: (m.rows(), m.cols()) });
            }
        }
        let tag = tag.reduced(params.q);
        let tag_inv = tag.inverse_mod(params.q).ok_or(LatticeError::SingularTag)?;
        Ok(TrapdoorMatrix { a: a.reduced(params.q), r, tag, tag_inv, params })
    }

    /// `[Rᵀ | I]·A - G·H mod q`; zero for a well-formed trapdoor.
    pub fn gadget_residual(&self) -> Mat {
        let q = self.params.q;
        self.project(&self.a).sub_mod(&gadget(&self.params).mul_mod(&self.tag, q), q)
    }

    /// `[Rᵀ | I]·B mod q` for a `w×c` matrix `B`.
    fn project(&self, b: &Mat) -> Mat {
        let q = self.params.q;
        let wb = self.params.w_bar();
        let top = self.r.transpose().mul_mod(&b.row_block(0, wb), q);
        top.add_mod(&b.row_block(wb, b.rows()), q)
    }

    pub fn tag_inverse(&self) -> &Mat {
        &self.tag_inv
    }
}

/// Recovers `x mod q` from noisy `y_b ≈ 2^b·x (mod q)`, `b = 0..d`.
///
/// Works top-down on `θ = x/q`: `y_{d-1}` pins `frac(2^{d-1}θ)`, and each lower
/// digit picks between the two halvings of the current estimate. Values are
/// carried exactly as multiples of `1/(q·2^d)`. Returns `x` and the largest
/// residual `|y_b - 2^b x|`.
fn decode_gadget(ys: &[i64], q: u64) -> (i64, i64) {
    let d = ys.len();
    let z: u128 = (q as u128) << d;
    let half = z / 2;
    let scaled = |y: i64| (y as u128) << d;
    let circ = |a: u128, b: u128| {
        let diff = a.abs_diff(b);
        diff.min(z - diff)
    };
    let mut t = scaled(ys[d - 1]);
    for b in (0..d - 1).rev() {
        let m = scaled(ys[b]);
        let c0 = t / 2;
        let c1 = c0 + half;
        t = if circ(c0, m) <= circ(c1, m) { c0 } else { c1 };
    }
    let x = ((t + (1u128 << (d - 1))) >> d) as u64 % q;
    let worst = ys
        .iter()
        .enumerate()
        .map(|(b, &y)| {
            let expect = reduce((x as i128) << b, q);
            center(y - expect, q).abs()
        })
        .max()
        .unwrap_or(0);
    (x as i64, worst)
}

/// Recovers `(S, E)` from `B = A·S + E`.
///
/// Fails with `ResidualTooLarge` when a gadget residual exceeds `q/2C`,
/// the regime where digit decoding is no longer guaranteed.
pub fn lwe_invert(t: &TrapdoorMatrix, b: &Mat) -> Result<Inversion, LatticeError> {
    let p = &t.params;
    let (n, q, d) = (p.n, p.q, p.d());
    if b.rows() != p.w {
        return Err(LatticeError::Shape { expected: (p.w, b.cols()), found: (b.rows(), b.cols()) });
    }
    let proj = t.project(&b.reduced(q));
    let bound = p.decoding_margin();
    let mut hs = Mat::zeros(n, b.cols());
    let mut ys = vec![0i64; d];
    for i in 0..n {
        for c in 0..b.cols() {
            for (bit, y) in ys.iter_mut().enumerate() {
                *y = proj.get(i * d + bit, c);
            }
            let (x, residual) = decode_gadget(&ys, q);
            if residual > bound {
                return Err(LatticeError::ResidualTooLarge { residual, bound });
            }
            hs.set(i, c, x);
        }
    }
    let s = t.tag_inv.mul_mod(&hs, q);
    let e = b.sub_mod(&t.a.mul_mod(&s, q), q).centered(q);
    Ok(Inversion { s, e })
}

/// Samples a short `d` with `dᵀA = target (mod q)` and `‖d‖∞` below the
/// encoding cap.
///
/// Draws `y` from a discrete Gaussian of width `sigma`, then shifts it by the
/// trapdoor lift `[R·z; z]` of the remaining coset, where `z` is the binary
/// decomposition of `(target - yᵀA)·H⁻¹`.
pub fn sample_preimage<R: Rng + ?Sized>(
    t: &TrapdoorMatrix,
    target: &[i64],
    sigma: f64,
    rng: &mut R,
) -> Result<Vec<i64>, LatticeError> {
    let p = &t.params;
    let (n, q, d, w, wb) = (p.n, p.q, p.d(), p.w, p.w_bar());
    if target.len() != n {
        return Err(LatticeError::Shape { expected: (1, n), found: (1, target.len()) });
    }
    let g = DiscreteGaussian::new(sigma);
    let cap = p.encoding_cap();
    for _ in 0..p.retry_cap {
        let y: Vec<i64> = (0..w).map(|_| g.sample(rng)).collect();
        let ya = Mat::from_vec(1, w, y.clone()).mul_mod(&t.a, q);
        let u = Mat::from_fn(1, n, |_, j| reduce(target[j] as i128 - ya.get(0, j) as i128, q));
        let v = u.mul_mod(&t.tag_inv, q);
        let mut z = vec![0i64; n * d];
        for i in 0..n {
            let vi = v.get(0, i);
            for b in 0..d {
                z[i * d + b] = (vi >> b) & 1;
            }
        }
        let mut out = y;
        for (a, out_a) in out.iter_mut().take(wb).enumerate() {
            *out_a += t.r.row(a).iter().zip(&z).map(|(r, z)| r * z).sum::<i64>();
        }
        for (o, zi) in out[wb..].iter_mut().zip(&z) {
            *o += zi;
        }
        if out.iter().all(|x| x.abs() < cap) {
            return Ok(out);
        }
    }
    Err(LatticeError::RetryCap(p.retry_cap))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn gadget_decoding_exact_and_noisy() {
        let q = 31u64 << 18;
        let d = super::super::bits(q);
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        for _ in 0..2000 {
            let x = rng.gen_range(0..q) as i64;
            let noise = q as i64 / 10;
            let ys: Vec<i64> =
                (0..d).map(|b| reduce(((x as i128) << b) + rng.gen_range(-noise..=noise) as i128, q)).collect();
            assert_eq!(decode_gadget(&ys, q).0, x);
        }
        // Odd-looking moduli work too.
        let q = 31 * 257_950;
        let d = super::super::bits(q);
        for x in [0i64, 1, 12345, q as i64 - 1] {
            let ys: Vec<i64> = (0..d).map(|b| reduce((x as i128) << b, q)).collect();
            assert_eq!(decode_gadget(&ys, q), (x, 0));
        }
    }

    #[test]
    fn tags() {
        let p = LweParams::desk();
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        let t = trapdoor_gen(&p, &Mat::identity(4), &mut rng).unwrap();
        assert!(t.gadget_residual().is_zero());
        assert_eq!(trapdoor_gen(&p, &Mat::zeros(4, 4), &mut rng).unwrap_err(), LatticeError::SingularTag);
        let tag = Mat::from_rows(&[vec![1, 2, 0, 0], vec![0, 1, 0, 5], vec![3, 0, 1, 0], vec![0, 0, 7, 1]]);
        let t = trapdoor_gen(&p, &tag, &mut rng).unwrap();
        assert!(t.gadget_residual().is_zero());
    }

    #[test]
    fn invert_zero_error_and_huge_error() {
        let p = LweParams::desk();
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let t = trapdoor_gen(&p, &Mat::identity(4), &mut rng).unwrap();
        let s = Mat::from_fn(4, 4, |_, _| rng.gen_range(0..31));
        let b = t.a.mul_mod(&s, p.q);
        let inv = lwe_invert(&t, &b).unwrap();
        assert_eq!(inv.s, s);
        assert!(inv.e.is_zero());
        let mut errs = 0;
        for _ in 0..20 {
            let e = Mat::from_fn(p.w, 4, |_, _| rng.gen_range(-(p.q as i64) / 2..p.q as i64 / 2));
            if matches!(lwe_invert(&t, &b.add_mod(&e, p.q)), Err(LatticeError::ResidualTooLarge { .. })) {
                errs += 1;
            }
        }
        assert_eq!(errs, 20);
    }

    #[test]
    fn preimage_zero_target() {
        let p = LweParams::desk();
        let mut rng = ChaCha20Rng::seed_from_u64(4);
        let t = trapdoor_gen(&p, &Mat::identity(4), &mut rng).unwrap();
        let d = sample_preimage(&t, &[0; 4], p.sigma(), &mut rng).unwrap();
        let da = Mat::from_vec(1, p.w, d.clone()).mul_mod(&t.a, p.q);
        assert!(da.is_zero());
        assert!(d.iter().all(|x| x.abs() < p.encoding_cap()));
    }
}
