//! Deterministic PRNG streams.
//!
//! Every stochastic component (initialization, dropout, data sampling)
//! draws from its own stream split off a single master seed, so runs
//! with equal config produce bit-identical results.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Purpose tags for the per-component streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Init,
    Dropout,
    Data,
    Probe,
}

impl Stream {
    fn id(self) -> u64 {
        match self {
            Stream::Init => 1,
            Stream::Dropout => 2,
            Stream::Data => 3,
            Stream::Probe => 4,
        }
    }
}

pub type Rng = ChaCha8Rng;

/// A deterministic stream for the given purpose, derived from the master seed.
pub fn stream(seed: u64, purpose: Stream) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(purpose.id());
    rng
}

/// A sub-stream for parallel work items (cross-validation folds, scan points).
pub fn substream(seed: u64, purpose: Stream, index: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(index.wrapping_mul(0x9E3779B97F4A7C15)));
    rng.set_stream(purpose.id());
    rng
}
