//! Seedable, splittable random streams.
//!
//! Streams are ChaCha20 keyed by a 64-bit seed and distinguished by the
//! cipher's 64-bit stream selector, so distinct indices never overlap.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

pub const RNG_ALGORITHM: &str = "ChaCha20";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RngStream {
    pub seed: u64,
    pub stream: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        Self { seed, stream }
    }

    pub fn algorithm(&self) -> &'static str {
        RNG_ALGORITHM
    }

    /// A fresh generator positioned at the start of this stream.
    pub fn rng(&self) -> ChaCha20Rng {
        let mut rng = ChaCha20Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }
}

/// `n` independent streams sharing `seed`, indexed `0..n`.
pub fn rng_streams(seed: u64, n: usize) -> Vec<RngStream> {
    (0..n as u64).map(|s| RngStream::new(seed, s)).collect()
}
