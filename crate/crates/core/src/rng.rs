//! Seed derivation.
//!
//! Every random stream in a run is derived from one user seed by mixing
//! `(seed, purpose, index)` through SplitMix64 and seeding a ChaCha8
//! generator with the result. Streams are therefore addressable by
//! counter: the dropout stream for stage 2, epoch 17, partition 3 can be
//! rebuilt without replaying anything that came before it, which is what
//! makes checkpoint resume exact.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// What a random stream is used for. The discriminant is part of the
/// derivation and must never be renumbered.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    Init = 1,
    Dropout = 2,
    Split = 3,
    Clicks = 4,
    Synthetic = 5,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives the 64-bit seed for one stream.
pub fn derive_seed(seed: u64, purpose: Purpose, index: u64) -> u64 {
    let a = splitmix64(seed);
    let b = splitmix64(a ^ (purpose as u64).wrapping_mul(0xD6E8_FEB8_6659_FD93));
    splitmix64(b ^ index)
}

pub fn stream(seed: u64, purpose: Purpose, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, purpose, index))
}

/// Packs up to three small counters into one stream index.
pub fn index3(a: u64, b: u64, c: u64) -> u64 {
    (a << 48) ^ (b << 24) ^ c
}
