//! Seeded, counter-based random streams.

use rand_chacha::ChaCha8Rng;
use rand_core::SeedableRng;

/// The generator used for every random draw in the crate.
pub type StruktRng = ChaCha8Rng;

/// ChaCha8 keyed by `seed`, positioned on the independent stream `stream`.
///
/// Trial `i` of a campaign uses stream `i`, so trials can run in any order.
pub fn seeded_rng(seed: u64, stream: u64) -> StruktRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
