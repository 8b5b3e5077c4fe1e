//! Seeded random streams.
//!
//! Every random quantity is drawn from a ChaCha8 stream whose 256-bit key is
//! derived from `(master seed, purpose tag, index)` through SplitMix64. Topology,
//! users, fading, and scheduling therefore never share a stream, and the same
//! triple gives the same bits on every platform.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// Purpose tags for independent substreams.
pub mod purpose {
    pub const TOPOLOGY: &str = "topology";
    pub const USERS: &str = "users";
    pub const DUMMIES: &str = "dummies";
    pub const FADING: &str = "fading";
    pub const SCHEDULER: &str = "scheduler";
    pub const REPLICATE: &str = "replicate";
}

#[inline]
pub fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// 64-bit FNV-1a.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    h
}

fn tag_hash(tag: &str) -> u64 {
    fnv1a(tag.as_bytes())
}

/// Derives a child seed; useful when a component wants to hand a plain `u64`
/// to another seeded operation.
pub fn derive_seed(seed: u64, tag: &str, index: u64) -> u64 {
    let mut s = seed ^ tag_hash(tag).rotate_left(17);
    splitmix64(&mut s);
    s ^= index.wrapping_mul(0xD6E8_FEB8_6659_FD93);
    splitmix64(&mut s)
}

/// Opens the substream for `(seed, tag, index)`.
pub fn stream(seed: u64, tag: &str, index: u64) -> Rng {
    let mut s = derive_seed(seed, tag, index);
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut s).to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}
