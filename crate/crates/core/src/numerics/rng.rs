use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Reproducible random stream keyed by `(seed, stream id)`.
///
/// Backed by ChaCha8 with the stream id selecting an independent keystream, so
/// per-trial streams do not depend on how trials are scheduled.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self { seed, stream, rng }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// A fresh stream derived from this stream's seed and a sub-index.
    ///
    /// The derived id mixes the parent id and `sub` so that
    /// `(seed, id).fork(a) != (seed, id').fork(b)` for distinct pairs in practice.
    pub fn fork(&self, sub: u64) -> Self {
        let id = splitmix64(self.stream ^ splitmix64(sub.wrapping_add(0x9E37_79B9_7F4A_7C15)));
        Self::new(self.seed, id)
    }

    pub fn inner(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    /// Circularly-symmetric complex Gaussian samples with `E|z|² = variance`.
    pub fn complex_gaussian(&mut self, n: usize, variance: f64) -> Vec<Complex64> {
        assert!(variance >= 0.0, "variance must be non-negative");
        let s = (0.5 * variance).sqrt();
        (0..n)
            .map(|_| {
                let re: f64 = self.rng.sample(StandardNormal);
                let im: f64 = self.rng.sample(StandardNormal);
                Complex64::new(s * re, s * im)
            })
            .collect()
    }

    pub fn complex_gaussian_one(&mut self, variance: f64) -> Complex64 {
        let s = (0.5 * variance).sqrt();
        let re: f64 = self.rng.sample(StandardNormal);
        let im: f64 = self.rng.sample(StandardNormal);
        Complex64::new(s * re, s * im)
    }

    /// Uniform samples on `[low, high)`.
    pub fn uniform(&mut self, n: usize, low: f64, high: f64) -> Vec<f64> {
        assert!(low < high, "uniform range must be non-empty");
        (0..n).map(|_| self.rng.random_range(low..high)).collect()
    }

    /// Unit-modulus QPSK symbols from `{±1 ± j}/√2`.
    pub fn qpsk(&mut self, n: usize) -> Vec<Complex64> {
        (0..n).map(|_| self.qpsk_one()).collect()
    }

    pub fn qpsk_one(&mut self) -> Complex64 {
        let bits: u8 = self.rng.random_range(0..4);
        let re = if bits & 1 == 0 { FRAC_1_SQRT_2 } else { -FRAC_1_SQRT_2 };
        let im = if bits & 2 == 0 { FRAC_1_SQRT_2 } else { -FRAC_1_SQRT_2 };
        Complex64::new(re, im)
    }

    /// Uniform index in `0..n`.
    pub fn index(&mut self, n: usize) -> usize {
        self.rng.random_range(0..n)
    }

    /// `count` distinct indices from `0..n`, in draw order.
    pub fn sample_without_replacement(&mut self, n: usize, count: usize) -> Vec<usize> {
        assert!(count <= n);
        rand::seq::index::sample(&mut self.rng, n, count).into_vec()
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
