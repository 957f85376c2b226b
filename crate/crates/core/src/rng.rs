//! Seeded random streams.
//!
//! Every generator takes an explicit `seed`; independent consumers of the same
//! seed draw from distinct ChaCha streams so that adding a consumer never
//! perturbs the numbers another one sees.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream identifiers. Values are part of the reproducibility contract.
pub mod streams {
    pub const TRAIN_INIT: u64 = 1;
    pub const TRAIN_SHUFFLE: u64 = 2;
    pub const SUBSAMPLE: u64 = 3;
    pub const DATASET: u64 = 4;
    pub const PIXELS: u64 = 5;
    pub const FAKE_GRAPHS: u64 = 6;
    pub const NOISE: u64 = 7;
}

pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Seed for the `index`-th child of `seed`, e.g. one per shift level.
pub fn child_seed(seed: u64, index: u64) -> u64 {
    // splitmix64 finalizer
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
