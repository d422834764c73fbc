//! Counter-based seed derivation.
//!
//! Every Monte Carlo cell and trial gets its own generator seeded from a hash
//! of the master seed and its indices, so results do not depend on the order
//! in which cells or trials are evaluated.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator used for every stochastic draw in the crate.
pub type SimRng = ChaCha8Rng;

// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Hashes `master` together with an index path.
pub fn derive_seed(master: u64, path: &[u64]) -> u64 {
    path.iter().fold(mix(master ^ 0x9e37_79b9_7f4a_7c15), |acc, &idx| {
        mix(acc.wrapping_add(0x9e37_79b9_7f4a_7c15) ^ mix(idx.wrapping_add(0x632b_e59b_d9b4_e019)))
    })
}

pub fn rng_for(master: u64, path: &[u64]) -> SimRng {
    SimRng::seed_from_u64(derive_seed(master, path))
}
