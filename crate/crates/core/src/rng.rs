//! Seed-derived random substreams.
//!
//! Every stochastic task draws from a generator keyed by the run seed plus a
//! path of task indices, so results never depend on execution order or on
//! the number of worker threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Mixes a seed and a path of indices into a single 64-bit key.
pub fn derive_key(seed: u64, path: &[u64]) -> u64 {
    path.iter().fold(splitmix64(seed), |acc, &p| splitmix64(acc ^ splitmix64(p.wrapping_add(0x632B_E59B_D9B4_E019))))
}

pub fn substream(seed: u64, path: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_key(seed, path))
}
