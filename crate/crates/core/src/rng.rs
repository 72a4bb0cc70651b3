//! Seeded randomness.
//!
//! Every random draw in the crate comes from a ChaCha20 stream keyed by a
//! master seed and a 64-bit stream number. Parallel and serial runs draw from
//! the same streams, so they agree bit for bit.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

pub type Rng = ChaCha20Rng;

/// Generator for `stream` under `master`.
pub fn stream_rng(master: u64, stream: u64) -> Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(master);
    rng.set_stream(stream);
    rng
}

/// Stream number for (site, replication).
pub fn stream_key(site: usize, replication: usize) -> u64 {
    ((site as u64) << 32) | (replication as u64 & 0xffff_ffff)
}
