//! Random number streams and seed derivation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// The generator used by every simulation loop. ChaCha output is stable
/// across platforms and crate versions, which keeps seeded runs replayable.
pub type SimRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// SplitMix64 finaliser.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Hash of an index tuple, used to derive independent per-task seeds.
pub fn hash_indices(parts: &[u64]) -> u64 {
    parts
        .iter()
        .fold(0x5851_F42D_4C95_7F2D, |h, &p| mix64(h ^ mix64(p)))
}

/// `base ⊕ hash(indices)`.
pub fn derive_seed(base: u64, parts: &[u64]) -> u64 {
    base ^ hash_indices(parts)
}

/// Exponential variate with the given rate, by inversion of one uniform.
#[inline]
pub fn exp_draw<R: Rng + ?Sized>(rng: &mut R, rate: f64) -> f64 {
    let u: f64 = rng.random();
    -(1.0 - u).ln() / rate
}
