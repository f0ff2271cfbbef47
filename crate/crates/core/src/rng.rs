//! Seed handling. All randomness flows from a [`RngSeed`] through
//! [`RngSeed::derive`], and every generator is a ChaCha8 stream.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Name and version of the generator, recorded in reports.
pub const RNG_ALGORITHM: &str = "chacha8/rand_chacha-0.9";

pub type Rng = ChaCha8Rng;

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RngSeed(pub u64);

impl RngSeed {
    /// Sub-seed for task `task_index`.
    ///
    /// `seed + (index + 1) * GOLDEN_GAMMA` is injective in the index for a
    /// fixed seed (odd multiplier modulo 2^64) and the SplitMix64 finalizer is
    /// a bijection, so distinct indices below 2^64 give distinct sub-seeds.
    pub fn derive(self, task_index: u64) -> RngSeed {
        let z = self.0.wrapping_add(task_index.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA));
        RngSeed(splitmix64_mix(z))
    }

    pub fn rng(self) -> Rng {
        ChaCha8Rng::seed_from_u64(self.0)
    }
}

impl From<u64> for RngSeed {
    fn from(v: u64) -> Self {
        RngSeed(v)
    }
}

/// Free-function form of [`RngSeed::derive`].
pub fn derive_subseed(seed: RngSeed, task_index: u64) -> RngSeed {
    seed.derive(task_index)
}

fn splitmix64_mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
