//! Deterministic seeding utilities.
//!
//! Every stochastic op in the toolkit draws from a ChaCha8 stream keyed by a
//! 64-bit seed. Streams for parallel work (per image, per op, per condition)
//! are derived with [`derive_seed`], which mixes the base seed, a numeric lane
//! and a string tag through SplitMix64, so fan-out order never changes the
//! draws an item sees. The generator and the derivation are fixed so golden
//! outputs stay stable across platforms.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer (Steele et al. constants).
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// FNV-1a over raw bytes; used to fold string tags into seeds.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    h
}

/// Derive an independent stream seed from a base seed, a numeric lane and a tag.
pub fn derive_seed(base: u64, lane: u64, tag: &str) -> u64 {
    splitmix64(splitmix64(base ^ splitmix64(lane)) ^ fnv1a(tag.as_bytes()))
}

/// The toolkit's generator: portable, documented, reproducible.
pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Map a hash to a float in [0, 1) using the top 53 bits.
pub fn unit_from_hash(h: u64) -> f64 {
    (h >> 11) as f64 / (1u64 << 53) as f64
}
