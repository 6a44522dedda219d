//! Seeded random helpers with output pinned to the ChaCha20 keystream.
//!
//! Seed expansion (splitmix64) and the uniform mapping are implemented here
//! rather than taken from a distributions crate, so the byte-identical
//! reproducibility promise survives dependency upgrades.

use rand_chacha::ChaCha20Rng;
use rand_core::{RngCore, SeedableRng};

/// splitmix64 step; advances `state` and returns the next output.
pub fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// ChaCha20 generator keyed from a 64-bit seed via splitmix64 expansion.
pub fn rng_from_seed(seed: u64) -> ChaCha20Rng {
    let mut state = seed;
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    ChaCha20Rng::from_seed(key)
}

/// Independent child seed for stream separation.
pub fn child_seed(seed: u64, stream: u64) -> u64 {
    let mut state = seed ^ 0xa076_1d64_78bd_642f_u64.wrapping_mul(stream.wrapping_add(1));
    splitmix64(&mut state)
}

/// Uniform draw in `[0, 1)` with 53 bits of precision.
pub fn unit_f64(rng: &mut impl RngCore) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Uniform draw in `[lo, hi)`.
pub fn uniform(rng: &mut impl RngCore, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * unit_f64(rng)
}
