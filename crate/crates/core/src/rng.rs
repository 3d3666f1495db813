//! Seeded random streams.
//!
//! Every random quantity in the crate is drawn from a ChaCha8 generator
//! seeded with `seed_from_u64(seed)`. Independent purposes (Monte Carlo
//! design points, replicate number `k` of an experiment, ...) use distinct
//! ChaCha stream ids so that adding work in one purpose never perturbs
//! another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// Stream ids reserved for the library's own purposes.
pub mod purpose {
    pub const MAIN: u64 = 0;
    pub const LSCV_DESIGN: u64 = 1;
    pub const HDR_POINTS: u64 = 2;
    pub const REPLICATE: u64 = 1 << 32;
}

/// Root generator for `seed` (stream 0).
pub fn seeded(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Generator for `seed` on stream `stream`.
pub fn substream(seed: u64, stream: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Generator for replicate `index` of an experiment seeded by `seed`.
pub fn replicate(seed: u64, index: u64) -> SimRng {
    substream(seed, purpose::REPLICATE + index)
}
