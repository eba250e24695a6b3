//! Seeded random streams.
//!
//! Every stochastic routine takes an explicit stream. Independent sub-streams
//! (one per simulated path, say) come from the ChaCha stream counter, so results
//! do not depend on how work is scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type RngStream = ChaCha8Rng;

pub fn seeded(seed: u64) -> RngStream {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Stream `index` of the family identified by `seed`.
pub fn substream(seed: u64, index: u64) -> RngStream {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}
