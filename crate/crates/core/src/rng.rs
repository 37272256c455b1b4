//! Deterministic per-stream random number generators.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives an independent stream key from a parent seed and a stream index.
pub fn split(seed: u64, stream: u64) -> u64 {
    mix64(mix64(seed) ^ stream.wrapping_mul(0xD1B5_4A32_D192_ED03))
}

pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(split(seed, stream))
}

/// Stream tags so that unrelated consumers of the same seed never collide.
pub mod tag {
    pub const CLIP: u64 = 0x636c_6970;
    pub const MESH: u64 = 0x6d65_7368;
    pub const BACKGROUND: u64 = 0x6267_0000;
    pub const INIT: u64 = 0x696e_6974;
    pub const TRAIN: u64 = 0x7472_6e00;
}
