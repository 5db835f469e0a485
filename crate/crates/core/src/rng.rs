//! Seeded random streams.
//!
//! Every source of randomness in the crate is a [`Stream`]: a ChaCha8
//! generator that remembers the seed it was built from. Independent
//! substreams are derived hierarchically from a base seed and a path of
//! integer tags, so parallel work items never share state and results do
//! not depend on scheduling order.

use rand::RngCore;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Well-known tags for substreams of a single search run.
pub mod tags {
    pub const SEARCH: u64 = 0x5345_4152_4348;
    pub const EVALUATION: u64 = 0x4556_414c;
    pub const FINAL_RETURN: u64 = 0x4649_4e41_4c;
    pub const MANUAL: u64 = 0x4d41_4e55_414c;
    pub const ORACLE: u64 = 0x4f52_4143_4c45;
    pub const ROW: u64 = 0x524f_57;
    pub const TRAINING: u64 = 0x5452_4149_4e;
}

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a child seed from `base` and an ordered path of tags.
///
/// Distinct paths give statistically independent seeds; the same path always
/// gives the same seed.
pub fn derive_seed(base: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(splitmix64(base), |acc, &tag| splitmix64(acc ^ splitmix64(tag)))
}

/// A seeded random stream.
#[derive(Clone, Debug)]
pub struct Stream {
    seed: u64,
    rng: ChaCha8Rng,
}

impl Stream {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Stream seeded with `derive_seed(base, path)`.
    pub fn derived(base: u64, path: &[u64]) -> Self {
        Self::new(derive_seed(base, path))
    }

    /// The seed this stream was created from.
    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// A child stream derived from this stream's seed (not its position).
    pub fn child(&self, tag: u64) -> Self {
        Self::derived(self.seed, &[tag])
    }

    /// Uniform sample in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        use rand::Rng;
        self.rng.random::<f64>()
    }

    /// Uniform sample in `[low, high)`.
    pub fn uniform_in(&mut self, low: f64, high: f64) -> f64 {
        low + (high - low) * self.uniform()
    }

    /// Uniform index in `0..n`. Panics if `n == 0`.
    pub fn index(&mut self, n: usize) -> usize {
        use rand::Rng;
        self.rng.random_range(0..n)
    }

    /// Standard normal sample.
    pub fn normal(&mut self) -> f64 {
        use rand::Rng;
        self.rng.sample(rand_distr::StandardNormal)
    }
}

impl RngCore for Stream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}
