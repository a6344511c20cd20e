//! Deterministic random streams.
//!
//! Every random draw comes from `ChaCha12Rng`. A master seed fixes the key
//! (`seed_from_u64`), and each independent consumer (a Monte Carlo chain, an
//! initial-state draw, ...) selects its own 64-bit ChaCha stream:
//! `stream = (purpose << 48) | index`. Streams never overlap, and results do
//! not depend on the order in which workers are scheduled.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

pub const GENERATOR_NAME: &str =
    "ChaCha12Rng (rand_chacha 0.9); key = seed_from_u64(master); stream = (purpose << 48) | index";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u16)]
pub enum StreamPurpose {
    MonteCarlo = 1,
    InitialState = 2,
    Symmetry = 3,
    Bisection = 4,
    Snapshot = 5,
    Misc = 15,
}

pub fn stream_rng(master_seed: u64, purpose: StreamPurpose, index: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(master_seed);
    rng.set_stream(((purpose as u64) << 48) | (index & 0xffff_ffff_ffff));
    rng
}

/// Derives a child master seed, for nesting independent sub-experiments.
pub fn child_seed(master_seed: u64, tag: u64) -> u64 {
    let mut z = master_seed ^ tag.wrapping_mul(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}
