//! Discrete Gaussian over `Z`, standard-deviation convention:
//! `Pr[x] ∝ exp(-x² / 2σ²)`.
//!
//! Rejection from a two-sided geometric proposal `∝ exp(-|x|/σ)`. The ratio
//! target/proposal is `exp(-x²/2σ² + |x|/σ - 1/2) <= 1`, peaking at `|x| = σ`.

use rand::Rng;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiscreteGaussian {
    sigma: f64,
}

impl DiscreteGaussian {
    pub fn new(sigma: f64) -> Self {
        assert!(sigma > 0.0 && sigma.is_finite(), "sigma must be positive");
        DiscreteGaussian { sigma }
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> i64 {
        let s = self.sigma;
        loop {
            let u: f64 = rng.gen::<f64>();
            if u == 0.0 {
                continue;
            }
            let mag = (-s * u.ln()).floor() as i64;
            let neg = rng.gen::<bool>();
            if neg && mag == 0 {
                continue;
            }
            let x = mag as f64;
            let accept = (-x * x / (2.0 * s * s) + x / s - 0.5).exp();
            if rng.gen::<f64>() < accept {
                return if neg { -mag } else { mag };
            }
        }
    }

    /// Samples with `|x| < bound`.
    pub fn sample_bounded<R: Rng + ?Sized>(&self, bound: i64, rng: &mut R) -> i64 {
        loop {
            let x = self.sample(rng);
            if x.abs() < bound {
                return x;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn moments_match_width() {
        let mut rng = ChaCha20Rng::seed_from_u64(9);
        for sigma in [1.0, 2.0, 10.0] {
            let g = DiscreteGaussian::new(sigma);
            let n = 200_000;
            let xs: Vec<i64> = (0..n).map(|_| g.sample(&mut rng)).collect();
            let mean = xs.iter().sum::<i64>() as f64 / n as f64;
            let var = xs.iter().map(|&x| (x as f64 - mean).powi(2)).sum::<f64>() / n as f64;
            assert!(mean.abs() < 0.05 * sigma, "mean {mean} for sigma {sigma}");
            assert!((var.sqrt() / sigma - 1.0).abs() < 0.02, "sd {} for sigma {sigma}", var.sqrt());
        }
    }

    #[test]
    fn pmf_matches_weights() {
        // Exact probabilities from normalised weights, compared by chi-square.
        let sigma = 2.0;
        let g = DiscreteGaussian::new(sigma);
        let mut rng = ChaCha20Rng::seed_from_u64(10);
        let support: Vec<i64> = (-8..=8).collect();
        let w: Vec<f64> = support.iter().map(|&x| (-(x * x) as f64 / (2.0 * sigma * sigma)).exp()).collect();
        let z: f64 = (-60..=60).map(|x: i64| (-(x * x) as f64 / 8.0).exp()).sum();
        let n = 100_000;
        let mut counts = vec![0u64; support.len()];
        for _ in 0..n {
            let x = g.sample(&mut rng);
            if let Some(i) = support.iter().position(|&s| s == x) {
                counts[i] += 1;
            }
        }
        let chi2: f64 = counts
            .iter()
            .zip(&w)
            .map(|(&c, &wi)| {
                let e = n as f64 * wi / z;
                (c as f64 - e).powi(2) / e
            })
            .sum();
        // 16 degrees of freedom; 0.999 quantile is about 39.3.
        assert!(chi2 < 39.3, "chi2 = {chi2}");
    }
}
