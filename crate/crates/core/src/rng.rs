//! Seeded generator shared by every randomized component.
//!
//! ChaCha8 (`rand_chacha`) is a fixed, portable algorithm: the same seed
//! yields the same stream on every platform.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent stream for a named sub-task of a seeded run.
pub fn substream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
