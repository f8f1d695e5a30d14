//! Seed derivation.
//!
//! Every random draw in the crate comes from a ChaCha8 generator keyed by a
//! user seed and a stream number. Streams separate independent consumers of
//! the same seed, so e.g. dataset synthesis and the train/test split can share
//! one seed without sharing draws.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream numbers for consumers that share a user seed.
pub mod stream {
    pub const PROJECTION: u64 = 0;
    pub const INIT_CENTROIDS: u64 = 1;
    pub const BLOBS: u64 = 2;
    pub const SPLIT: u64 = 3;
    pub const PARTITION: u64 = 4;
}

pub fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
