//! Named random streams split from a single root seed.
//!
//! Each concern (schedule offsets, profile selection, checkpoint overhead,
//! per-container loss noise) draws from its own ChaCha stream whose key is a
//! hash of the root seed, the stream name and an optional index. Adding a new
//! stream never shifts the values produced by an existing one.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::model::ContainerId;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn fnv1a(name: &str) -> u64 {
    name.bytes()
        .fold(FNV_OFFSET, |h, b| (h ^ b as u64).wrapping_mul(FNV_PRIME))
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RngStreams {
    root: u64,
}

impl RngStreams {
    pub fn new(root: u64) -> Self {
        Self { root }
    }

    pub fn root(&self) -> u64 {
        self.root
    }

    fn key(&self, name: &str, index: u64) -> u64 {
        splitmix64(splitmix64(self.root ^ fnv1a(name)) ^ splitmix64(index.wrapping_add(1)))
    }

    pub fn stream(&self, name: &str) -> ChaCha8Rng {
        self.indexed(name, 0)
    }

    pub fn indexed(&self, name: &str, index: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.key(name, index))
    }

    pub fn noise(&self, container: ContainerId) -> NoiseStream {
        NoiseStream { key: self.key("loss-noise", container.0 as u64) }
    }
}

/// Standard-normal values addressed by an integer counter rather than drawn
/// sequentially, so the value for a given iteration never depends on how
/// often it was queried.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NoiseStream {
    key: u64,
}

impl NoiseStream {
    pub fn new(key: u64) -> Self {
        Self { key }
    }

    pub fn standard_normal(&self, counter: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(self.key);
        rng.set_stream(counter);
        StandardNormal.sample(&mut rng)
    }
}
