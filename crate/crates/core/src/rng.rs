//! Seeded random streams.
//!
//! Every stochastic component draws from its own ChaCha8 stream derived from
//! a master seed and a stream id, so adding a consumer never perturbs the
//! numbers another consumer sees.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// Stream ids used across the crate.
pub mod streams {
    pub const SPLIT_SIGNAL: u64 = 1;
    pub const SPLIT_BACKGROUND: u64 = 2;
    pub const SPLIT_SHUFFLE: u64 = 3;
    pub const SYNTHETIC_MAP: u64 = 10;
    pub const SYNTHETIC_SAMPLES: u64 = 11;
    pub const ICA_INIT: u64 = 20;
    pub const RBM_INIT: u64 = 30;
    pub const RBM_SHUFFLE: u64 = 31;
    pub const RBM_GIBBS: u64 = 32;
    pub const AE_SHUFFLE: u64 = 40;
    pub const AE_REPARAM: u64 = 41;
    pub const AE_GENERATOR_NOISE: u64 = 42;
    pub const AE_VALIDATION_NOISE: u64 = 43;
    /// Network initialisation streams start here, offset by a component id.
    pub const NET_INIT_BASE: u64 = 1000;
    pub const SHOTS_BASE: u64 = 1 << 40;
}

/// SplitMix64 finaliser; used to fold several integers into one seed.
pub fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn stream(seed: u64, stream: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Stream keyed by a pair of indices, e.g. one per kernel entry.
pub fn pair_stream(seed: u64, i: usize, j: usize) -> Rng {
    let key = mix(mix(seed ^ mix(i as u64)) ^ (j as u64));
    stream(key, streams::SHOTS_BASE)
}

/// Fisher-Yates shuffle of `0..n`.
pub fn permutation(rng: &mut Rng, n: usize) -> alloc::vec::Vec<usize> {
    use rand::seq::SliceRandom;
    let mut idx: alloc::vec::Vec<usize> = (0..n).collect();
    idx.shuffle(rng);
    idx
}
