//! Dense integer matrices with modular helpers.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::numt::inv_mod;

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<i64>,
}

/// `x mod q` in `[0, q)`.
pub fn reduce(x: i128, q: u64) -> i64 {
    x.rem_euclid(q as i128) as i64
}

/// Representative of `x mod q` in `(-q/2, q/2]`.
pub fn center(x: i64, q: u64) -> i64 {
    let r = reduce(x as i128, q);
    if r > (q / 2) as i64 {
        r - q as i64
    } else {
        r
    }
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat { rows, cols, data: vec![0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        Mat::from_fn(n, n, |i, j| (i == j) as i64)
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> i64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Mat { rows, cols, data }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<i64>) -> Self {
        assert_eq!(data.len(), rows * cols, "data length must be rows*cols");
        Mat { rows, cols, data }
    }

    pub fn from_rows(rows: &[Vec<i64>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == cols), "ragged rows");
        Mat { rows: rows.len(), cols, data: rows.concat() }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[i64] {
        &self.data
    }

    pub fn get(&self, i: usize, j: usize) -> i64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: i64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[i64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn set_row(&mut self, i: usize, row: &[i64]) {
        self.data[i * self.cols..(i + 1) * self.cols].copy_from_slice(row);
    }

    pub fn transpose(&self) -> Mat {
        Mat::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    /// Rows `lo..hi`.
    pub fn row_block(&self, lo: usize, hi: usize) -> Mat {
        Mat::from_vec(hi - lo, self.cols, self.data[lo * self.cols..hi * self.cols].to_vec())
    }

    /// Stacks `self` above `other`.
    pub fn vstack(&self, other: &Mat) -> Mat {
        assert_eq!(self.cols, other.cols);
        let mut data = self.data.clone();
        data.extend_from_slice(&other.data);
        Mat::from_vec(self.rows + other.rows, self.cols, data)
    }

    pub fn max_abs(&self) -> i64 {
        self.data.iter().map(|x| x.abs()).max().unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&x| x == 0)
    }

    pub fn map(&self, f: impl Fn(i64) -> i64) -> Mat {
        Mat { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&x| f(x)).collect() }
    }

    pub fn reduced(&self, q: u64) -> Mat {
        self.map(|x| reduce(x as i128, q))
    }

    pub fn centered(&self, q: u64) -> Mat {
        self.map(|x| center(x, q))
    }

    /// Product reduced into `[0, q)`.
    pub fn mul_mod(&self, other: &Mat, q: u64) -> Mat {
        assert_eq!(self.cols, other.rows, "shape mismatch in product");
        let qi = q as i128;
        let mut out = Mat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let a = self.row(i);
            for j in 0..other.cols {
                let mut acc: i128 = 0;
                for (t, &x) in a.iter().enumerate() {
                    acc += x as i128 * other.data[t * other.cols + j] as i128;
                    if acc.unsigned_abs() > 1 << 120 {
                        acc %= qi;
                    }
                }
                out.data[i * other.cols + j] = reduce(acc, q);
            }
        }
        out
    }

    /// Exact integer product, or `None` on `i64` overflow.
    pub fn mul_int(&self, other: &Mat) -> Option<Mat> {
        assert_eq!(self.cols, other.rows, "shape mismatch in product");
        let mut out = Mat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for j in 0..other.cols {
                let mut acc: i128 = 0;
                for t in 0..self.cols {
                    acc = acc.checked_add(self.get(i, t) as i128 * other.get(t, j) as i128)?;
                }
                out.data[i * other.cols + j] = i64::try_from(acc).ok()?;
            }
        }
        Some(out)
    }

    pub fn add_mod(&self, other: &Mat, q: u64) -> Mat {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| reduce(a as i128 + b as i128, q)).collect();
        Mat { rows: self.rows, cols: self.cols, data }
    }

    pub fn sub_mod(&self, other: &Mat, q: u64) -> Mat {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| reduce(a as i128 - b as i128, q)).collect();
        Mat { rows: self.rows, cols: self.cols, data }
    }

    /// `self^e mod p` by repeated squaring.
    pub fn pow_mod(&self, mut e: u64, p: u64) -> Mat {
        assert_eq!(self.rows, self.cols);
        let mut base = self.reduced(p);
        let mut acc = Mat::identity(self.rows);
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul_mod(&base, p);
            }
            base = base.mul_mod(&base, p);
            e >>= 1;
        }
        acc
    }

    /// Determinant mod a prime by Gaussian elimination.
    pub fn det_mod_p(&self, p: u64) -> u64 {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut a: Vec<u64> = self.data.iter().map(|&x| reduce(x as i128, p) as u64).collect();
        let mut det = 1u64;
        for c in 0..n {
            let Some(piv) = (c..n).find(|&r| a[r * n + c] != 0) else {
                return 0;
            };
            if piv != c {
                for j in 0..n {
                    a.swap(c * n + j, piv * n + j);
                }
                det = (p - det) % p;
            }
            let pv = a[c * n + c];
            det = det * pv % p;
            let inv = inv_mod(pv, p).expect("p prime");
            for r in c + 1..n {
                let f = a[r * n + c] * inv % p;
                if f != 0 {
                    for j in c..n {
                        a[r * n + j] = (a[r * n + j] + p - f * a[c * n + j] % p) % p;
                    }
                }
            }
        }
        det
    }

    /// Exact determinant (fraction-free Bareiss elimination).
    pub fn det_big(&self) -> BigInt {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        if n == 0 {
            return BigInt::one();
        }
        let mut a: Vec<BigInt> = self.data.iter().map(|&x| BigInt::from(x)).collect();
        let mut sign = BigInt::one();
        let mut prev = BigInt::one();
        for k in 0..n - 1 {
            if a[k * n + k].is_zero() {
                let Some(r) = (k + 1..n).find(|&r| !a[r * n + k].is_zero()) else {
                    return BigInt::zero();
                };
                for j in 0..n {
                    a.swap(k * n + j, r * n + j);
                }
                sign = -sign;
            }
            for i in k + 1..n {
                for j in k + 1..n {
                    let v = &a[i * n + j] * &a[k * n + k] - &a[i * n + k] * &a[k * n + j];
                    a[i * n + j] = v / &prev;
                }
            }
            prev = a[k * n + k].clone();
        }
        sign * &a[n * n - 1]
    }

    fn minor(&self, skip_r: usize, skip_c: usize) -> Mat {
        let n = self.rows;
        let mut data = Vec::with_capacity((n - 1) * (n - 1));
        for i in (0..n).filter(|&i| i != skip_r) {
            for j in (0..n).filter(|&j| j != skip_c) {
                data.push(self.get(i, j));
            }
        }
        Mat::from_vec(n - 1, n - 1, data)
    }

    /// Inverse mod `q` via the adjugate; `None` when `gcd(det, q) != 1`.
    pub fn inverse_mod(&self, q: u64) -> Option<Mat> {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let m = self.reduced(q);
        let qb = BigInt::from(q);
        let det = m.det_big().mod_floor(&qb).to_u64()?;
        let dinv = inv_mod(det, q)?;
        if n == 1 {
            return Some(Mat::from_vec(1, 1, vec![dinv as i64]));
        }
        let mut out = Mat::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let mut c = m.minor(j, i).det_big();
                if (i + j) % 2 == 1 {
                    c = -c;
                }
                let c = c.mod_floor(&qb).to_u64().unwrap();
                out.set(i, j, crate::numt::mul_mod(c, dinv, q) as i64);
            }
        }
        Some(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn determinants_agree() {
        let m = Mat::from_rows(&[vec![2, -1, 0], vec![1, 3, 4], vec![0, 5, -2]]);
        assert_eq!(m.det_big(), BigInt::from(-54));
        assert_eq!(m.det_mod_p(7), (-54i64).rem_euclid(7) as u64);
    }

    #[test]
    fn inverse_mod_composite() {
        let q = 31 * (1 << 18);
        let m = Mat::from_rows(&[vec![1, 2], vec![3, 5]]);
        let inv = m.inverse_mod(q).unwrap();
        assert_eq!(m.mul_mod(&inv, q), Mat::identity(2));
        assert_eq!(Mat::zeros(2, 2).inverse_mod(q), None);
        assert_eq!(Mat::from_rows(&[vec![2, 0], vec![0, 1]]).inverse_mod(q), None);
    }

    #[test]
    fn center_range() {
        assert_eq!(center(7, 10), -3);
        assert_eq!(center(5, 10), 5);
        assert_eq!(center(-1, 10), -1);
    }

    proptest! {
        #[test]
        fn det_mod_p_matches_bareiss(v in proptest::collection::vec(-40i64..40, 16)) {
            let m = Mat::from_vec(4, 4, v);
            let want = m.det_big().mod_floor(&BigInt::from(31)).to_u64().unwrap();
            prop_assert_eq!(m.det_mod_p(31), want);
        }

        #[test]
        fn inverse_is_inverse(v in proptest::collection::vec(0i64..1000, 9)) {
            let q = 31 * (1u64 << 18);
            let m = Mat::from_vec(3, 3, v);
            if let Some(inv) = m.inverse_mod(q) {
                prop_assert_eq!(m.mul_mod(&inv, q), Mat::identity(3));
            }
        }
    }
}
