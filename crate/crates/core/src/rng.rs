//! Seeded random streams.
//!
//! Every stochastic routine takes either an explicit generator or a `u64`
//! seed. Independent streams for parallel work are derived from a master
//! seed and a path of indices, so the result of a sweep does not depend on
//! scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// The generator used throughout the crate.
pub type LdpRng = ChaCha12Rng;

/// Creates a generator from a seed.
pub fn rng_from_seed(seed: u64) -> LdpRng {
    LdpRng::seed_from_u64(seed)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a child seed from `master` and an index path, e.g.
/// `(epsilon_index, trial_index)`.
pub fn derive_seed(master: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(splitmix64(master), |acc, &i| splitmix64(acc ^ splitmix64(i.wrapping_add(0xA5A5))))
}
