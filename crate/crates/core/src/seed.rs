//! Seed derivation.
//!
//! Every stochastic step in the pipeline draws from a ChaCha stream keyed by a
//! seed derived from its parent seed and a `(tag, index)` pair. Derived seeds
//! depend only on their inputs, so generation order and thread scheduling
//! cannot change results.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a child seed from `parent`, a stream `tag` and an `index`.
#[inline]
pub fn derive(parent: u64, tag: u64, index: u64) -> u64 {
    mix64(mix64(parent ^ mix64(tag)).wrapping_add(index))
}

/// Stable 64-bit tag for a short ASCII label (FNV-1a).
pub const fn tag(label: &str) -> u64 {
    let bytes = label.as_bytes();
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    let mut i = 0;
    while i < bytes.len() {
        h ^= bytes[i] as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
        i += 1;
    }
    h
}

/// Counter-based generator for a derived stream.
pub fn rng(parent: u64, tag: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive(parent, tag, index))
}

/// Uniform value in `[0, 1)` from a hash of the inputs, no generator state.
#[inline]
pub fn unit_hash(seed: u64, a: u64, b: u64) -> f64 {
    let h = mix64(derive(seed, a, b));
    (h >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}
