//! Seed plumbing. Every stochastic operation takes an explicit `u64` seed and
//! builds its own ChaCha stream, so results never depend on call order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// SplitMix64 finalizer.
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives an independent child seed from a parent seed and a stream label.
pub fn derive_seed(parent: u64, stream: u64) -> u64 {
    mix64(
        parent
            .wrapping_add(0x9e37_79b9_7f4a_7c15)
            .wrapping_add(mix64(stream)),
    )
}

/// Derives a seed from a parent and an ordered list of labels.
pub fn derive_seed_path(parent: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(parent, |acc, &label| derive_seed(acc, label))
}
