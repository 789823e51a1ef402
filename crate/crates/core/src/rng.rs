//! Seeded, splittable random streams.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// A ChaCha8 stream keyed by a 64-bit value. Child streams are derived from
/// `(key, label)` only, so they do not depend on how much of the parent has
/// been consumed.
#[derive(Clone, Debug)]
pub struct RandomStream {
    key: u64,
    rng: ChaCha8Rng,
}

impl RandomStream {
    pub fn new(seed: u64) -> Self {
        RandomStream {
            key: seed,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn key(&self) -> u64 {
        self.key
    }

    /// Independent child stream.
    pub fn split(&self, label: u64) -> RandomStream {
        RandomStream::new(mix64(self.key ^ mix64(label.wrapping_add(0x5851_f42d_4c95_7f2d))))
    }

    /// Uniform integer in `0..n`.
    pub fn below(&mut self, n: u64) -> u64 {
        self.rng.random_range(0..n)
    }

    pub fn below_u128(&mut self, n: u128) -> u128 {
        self.rng.random_range(0..n)
    }

    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }
}

impl RngCore for RandomStream {
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
