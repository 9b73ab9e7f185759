//! Labeled seed derivation.
//!
//! Every randomized step takes its own stream derived from a master seed and
//! a textual label, so adding a new consumer never shifts the draws of an
//! existing one.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Stable 64-bit hash of a byte string (FNV-1a followed by a splitmix finalizer).
pub fn hash_bytes(bytes: &[u8]) -> u64 {
    let mut h = FNV_OFFSET;
    for b in bytes {
        h ^= u64::from(*b);
        h = h.wrapping_mul(FNV_PRIME);
    }
    splitmix64(h)
}

/// Derive a child seed from `master` and `label`.
pub fn derive(master: u64, label: &str) -> u64 {
    splitmix64(master ^ hash_bytes(label.as_bytes()))
}

/// RNG for the stream `label` under `master`.
pub fn rng(master: u64, label: &str) -> Rng {
    Rng::seed_from_u64(derive(master, label))
}

/// Deterministic uniform value in [0, 1) keyed by `(master, label)`.
pub fn unit(master: u64, label: &str) -> f64 {
    (derive(master, label) >> 11) as f64 / (1u64 << 53) as f64
}
