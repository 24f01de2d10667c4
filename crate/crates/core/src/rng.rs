//! Reproducible random streams.
//!
//! Every independent unit of work (a frame, a chunk of samples) draws from
//! its own ChaCha8 stream keyed by `(seed, stream)`, so results do not
//! depend on scheduling or thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Samples per independently seeded chunk in bulk generators.
pub const CHUNK: usize = 4096;

pub type StreamRng = ChaCha8Rng;

/// Generator for `stream` under `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Separates stream families that share a seed.
pub fn derived_seed(seed: u64, domain: &str) -> u64 {
    // FNV-1a over the domain tag, mixed into the seed
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in domain.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    seed ^ h
}
