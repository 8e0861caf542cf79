//! Per-replicate random streams.
//!
//! Every replicate draws from its own ChaCha8 stream selected by
//! `(seed, stream)`, so ensembles do not depend on evaluation order or on
//! the number of worker threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream ids at or above this offset are reserved for internal Monte-Carlo
/// moment estimation and never collide with replicate indices.
pub(crate) const INTERNAL_STREAM_BASE: u64 = 1 << 62;

/// Deterministic generator for replicate `stream` under `seed`.
pub fn replicate_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
