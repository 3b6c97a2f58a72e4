//! Deterministic random number generation.
//!
//! Every stochastic routine takes an explicit `u64` seed and derives one
//! independent generator per work chunk through [`chunk_rng`]. Chunk
//! generators are keyed by `(seed, chunk_index)` via ChaCha streams, so a
//! run's output depends only on the seed and the chunk layout — never on
//! thread count or scheduling order.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The generator used throughout: ChaCha with 8 rounds, seeded explicitly.
pub type StatRng = ChaCha8Rng;

/// Identifier recorded alongside every Monte Carlo result. Reproducing a
/// run requires the same algorithm, seed, sample count, and chunk layout.
pub const RNG_ALGORITHM: &str = "chacha8(seed).stream(chunk)";

/// Independent generator for chunk `chunk_index` of a run seeded by `seed`.
pub fn chunk_rng(seed: u64, chunk_index: u64) -> StatRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk_index);
    rng
}
