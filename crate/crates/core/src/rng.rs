//! Seeded, splittable random streams.
//!
//! Every consumer gets a ChaCha8 stream keyed by `(master seed, tag)`. ChaCha
//! is counter based, so streams with different tags are independent and the
//! draws of one consumer never depend on how many draws another made.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Independent stream `tag` under `master`.
pub fn stream(master: u64, tag: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(tag);
    rng
}

/// Stable 64-bit tag for a list of item indices (FNV-1a).
pub fn items_tag(items: &[usize]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &i in items {
        for byte in (i as u64).to_le_bytes() {
            h ^= byte as u64;
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
    }
    h
}

/// SplitMix64 finaliser; derives child seeds from a parent seed and index.
pub fn derive_seed(parent: u64, index: u64) -> u64 {
    let mut z = parent
        .wrapping_add(index.wrapping_mul(0x9e37_79b9_7f4a_7c15))
        .wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
