//! Seeded random streams.
//!
//! A master seed feeds one ChaCha8 generator per consumer, each on its own
//! stream id, so adding draws in one consumer never shifts another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    /// Start-pose jitter.
    Env = 1,
    /// Per-rule action sampling during training.
    Selection = 2,
    /// Point clouds of the Pareto-front demo.
    Demo = 3,
    /// Random-steering baseline actions.
    Baseline = 4,
}

pub fn stream(seed: u64, which: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(which as u64);
    rng
}
