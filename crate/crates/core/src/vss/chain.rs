//! One encoding chain `A_1 → A_2 → … → A_{L+1}` with
//! `D_j·A_j = A_{j+1}·S_j + E_j`, where `S_j = S^{e_j} mod p`.

use rand::seq::SliceRandom;
use rand::Rng;

use super::{Secret, VssError};
use crate::lattice::{
    lwe_invert, sample_preimage, sample_with_det, trapdoor_gen, DiscreteGaussian, LweParams, Mat, PrimSecret,
    TrapdoorMatrix, DEFAULT_RETRY_CAP,
};

#[derive(Clone, Debug)]
pub struct Chain {
    /// Exponents before the `+1` bump; they sum to `0 mod p-1`.
    pub base_exponents: Vec<u64>,
    /// 0-based position that received the bump.
    pub bumped: usize,
    /// `e_j` as used for `S_j`.
    pub exponents: Vec<u64>,
    pub secret: PrimSecret,
    /// `S_1..S_L`, entries in `[0, p)`.
    pub links: Vec<Mat>,
    /// `A_1..A_{L+1}` with their trapdoors.
    pub trapdoors: Vec<TrapdoorMatrix>,
    pub encodings: Vec<Mat>,
    pub errors: Vec<Mat>,
}

/// Exponents uniform in `[1, p-2]` summing to `0 mod p-1`, plus the index
/// that gets `+1`. A single link takes `p-1`.
pub fn sample_exponents<R: Rng + ?Sized>(len: usize, p: u64, rng: &mut R) -> (Vec<u64>, usize) {
    assert!(len >= 1 && p >= 5);
    let order = p - 1;
    let base = if len == 1 {
        vec![order]
    } else {
        loop {
            let mut e: Vec<u64> = (0..len - 1).map(|_| rng.gen_range(1..=p - 2)).collect();
            let last = (order - e.iter().sum::<u64>() % order) % order;
            if last != 0 {
                e.push(last);
                break e;
            }
        }
    };
    (base, rng.gen_range(0..len))
}

/// Rows of `D` are preimages under `from` of the rows of `A_next·S + E`.
pub fn encode_link<R: Rng + ?Sized>(
    from: &TrapdoorMatrix,
    a_next: &Mat,
    s: &Mat,
    e: &Mat,
    rng: &mut R,
) -> Result<Mat, VssError> {
    let p = &from.params;
    let target = a_next.mul_mod(s, p.q).add_mod(e, p.q);
    let mut d = Mat::zeros(p.w, p.w);
    for r in 0..p.w {
        d.set_row(r, &sample_preimage(from, target.row(r), p.sigma(), rng)?);
    }
    Ok(d)
}

/// A fresh public matrix and an encoding of uniform targets, shaped like a real link.
pub fn decoy_link<R: Rng + ?Sized>(params: &LweParams, rng: &mut R) -> Result<(Mat, Mat), VssError> {
    let t = trapdoor_gen(params, &Mat::identity(params.n), rng)?;
    let mut d = Mat::zeros(params.w, params.w);
    for r in 0..params.w {
        let target: Vec<i64> = (0..params.n).map(|_| rng.gen_range(0..params.q) as i64).collect();
        d.set_row(r, &sample_preimage(&t, &target, params.sigma(), rng)?);
    }
    Ok((t.a, d))
}

/// `w×n` error with entries below the error cap.
pub fn sample_error<R: Rng + ?Sized>(params: &LweParams, rng: &mut R) -> Mat {
    let g = DiscreteGaussian::new(params.s());
    let cap = params.error_cap();
    Mat::from_fn(params.w, params.n, |_, _| g.sample_bounded(cap, rng))
}

/// `M_j = S_L ⋯ S_j` over the integers, or `None` on `i64` overflow.
pub fn link_product(links: &[Mat]) -> Option<Mat> {
    let n = links.first()?.rows();
    links.iter().rev().try_fold(Mat::identity(n), |acc, s| acc.mul_int(s))
}

impl Chain {
    pub fn generate<R: Rng + ?Sized>(
        params: &LweParams,
        k: &Secret,
        len: usize,
        rng: &mut R,
    ) -> Result<Chain, VssError> {
        params.validate()?;
        if k.p() != params.p {
            return Err(VssError::Params(format!("secret is mod {}, lattice uses p={}", k.p(), params.p)));
        }
        if len == 0 {
            return Err(VssError::Params("a chain needs at least one link".into()));
        }
        if params.p < 5 {
            return Err(VssError::Params("exponents in [1, p-2] need p >= 5".into()));
        }
        let (p, q) = (params.p, params.q);
        let secret = sample_with_det(params.n, p, k.value(), DEFAULT_RETRY_CAP, rng)?;
        let (base_exponents, bumped) = sample_exponents(len, p, rng);
        let mut exponents = base_exponents.clone();
        exponents[bumped] += 1;
        let links: Vec<Mat> = exponents.iter().map(|&e| secret.s.pow_mod(e, p)).collect();
        let max = link_product(&links).map_or(i64::MAX, |m| m.max_abs());
        if max >= q as i64 {
            return Err(VssError::EntryOverflow { max, q });
        }
        let trapdoors =
            (0..=len).map(|_| trapdoor_gen(params, &Mat::identity(params.n), rng)).collect::<Result<Vec<_>, _>>()?;
        let mut encodings = Vec::with_capacity(len);
        let mut errors = Vec::with_capacity(len);
        for j in 0..len {
            let e = sample_error(params, rng);
            encodings.push(encode_link(&trapdoors[j], &trapdoors[j + 1].a, &links[j], &e, rng)?);
            errors.push(e);
        }
        Ok(Chain { base_exponents, bumped, exponents, secret, links, trapdoors, encodings, errors })
    }

    pub fn len(&self) -> usize {
        self.links.len()
    }

    pub fn is_empty(&self) -> bool {
        self.links.is_empty()
    }

    pub fn terminal(&self) -> &TrapdoorMatrix {
        self.trapdoors.last().expect("chain has a terminal matrix")
    }

    /// `D_L ⋯ D_j · A_j mod q` for 0-based `j`.
    pub fn apply_from(&self, j: usize) -> Mat {
        apply_chain(&self.trapdoors[j].a, &self.encodings[j..], self.terminal().params.q)
    }
}

/// `D_last ⋯ D_first · a mod q`.
pub fn apply_chain(a: &Mat, encodings: &[Mat], q: u64) -> Mat {
    encodings.iter().fold(a.reduced(q), |b, d| d.mul_mod(&b, q))
}

/// Inverts a chain output against the terminal trapdoor.
pub fn invert_chain(terminal: &TrapdoorMatrix, b: &Mat) -> Result<(Mat, i64), VssError> {
    let inv = lwe_invert(terminal, b)?;
    Ok((inv.s, inv.e.max_abs()))
}

/// Shuffled copy of `omega`, defining chain positions.
pub fn random_order<R: Rng + ?Sized>(omega: &[usize], rng: &mut R) -> Vec<usize> {
    let mut o = omega.to_vec();
    o.shuffle(rng);
    o
}
