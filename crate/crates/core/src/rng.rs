//! Keyed random streams.
//!
//! Every stochastic quantity in a run draws from its own ChaCha stream derived
//! from the run seed plus a tuple of tags (stream kind, node ids, slot, ...).
//! Streams never share state, so adding or removing entities leaves the draws
//! of all other entities unchanged.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub mod tag {
    pub const UE_DROP: u64 = 1;
    pub const MOBILITY: u64 = 2;
    pub const SHADOWING: u64 = 3;
    pub const FADING: u64 = 4;
    pub const CRC: u64 = 5;
    pub const BOOTSTRAP: u64 = 6;
    pub const LOS: u64 = 7;
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mixes a seed with a list of tags into a 64-bit key.
pub fn stream_key(seed: u64, tags: &[u64]) -> u64 {
    tags.iter()
        .fold(splitmix64(seed), |acc, &t| splitmix64(acc ^ splitmix64(t)))
}

pub fn stream_rng(seed: u64, tags: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(stream_key(seed, tags))
}
