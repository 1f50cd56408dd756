//! Deterministic seed derivation.
//!
//! Every unit of work in the batch engine draws its randomness from a seed
//! derived purely from stable identifiers (pair indices, level, trial number),
//! never from execution order. This is what makes batch output independent of
//! the worker count.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

fn splitmix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mix a base seed with a sequence of stable identifiers into a new seed.
pub fn derive(base: u64, parts: &[u64]) -> u64 {
    let mut state = splitmix64(base.wrapping_add(GAMMA));
    for &p in parts {
        state = splitmix64(state ^ splitmix64(p.wrapping_add(GAMMA)));
    }
    state
}

/// RNG for a derived seed.
pub fn rng(base: u64, parts: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive(base, parts))
}

/// RNG directly from a seed.
pub fn rng_from(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
