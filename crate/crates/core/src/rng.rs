//! Named, independent random streams derived from a single seed.
//!
//! Every consumer of randomness (data generation, spectral sampling, split
//! shuffling, parameter initialisation) draws from its own ChaCha stream, so
//! changing how much one consumer draws never shifts another's numbers.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Data = 1,
    Spectral = 2,
    Split = 3,
    Init = 4,
    Noise = 5,
}

/// RNG for `(seed, stream, index)`; `index` separates repeated draws of the same kind
/// (e.g. the k-th frequency draw of an averaged experiment).
pub fn stream_rng(seed: u64, stream: Stream, index: u32) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((stream as u64) << 32) | index as u64);
    rng
}
