//! Seeded random streams.
//!
//! Every stochastic component draws from a ChaCha8 stream keyed by a `u64`
//! seed and a named stream id, so a seed fully determines all draws and
//! independent components never share a stream.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// Stream ids used across the crate.
pub mod stream {
    pub const RESET: u64 = 1;
    pub const INIT: u64 = 2;
    pub const ACTION: u64 = 3;
    pub const PERTURB: u64 = 4;
    pub const SHUFFLE: u64 = 5;
    pub const EVAL: u64 = 6;
}

pub fn seeded(seed: u64, stream_id: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream_id);
    rng
}
