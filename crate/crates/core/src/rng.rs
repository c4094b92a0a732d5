//! Named random sub-streams derived from a single master seed.
//!
//! Every consumer (identification, training, evaluation, board wave, ...)
//! asks for its own stream by name, so any component can be re-run in
//! isolation and still draw the same numbers.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of the sub-stream `name` under `master`.
pub fn derive_seed(master: u64, name: &str) -> u64 {
    splitmix(master ^ splitmix(fnv1a(name.as_bytes())))
}

/// Seed of the `index`-th child of a derived seed (per-trial, per-episode).
pub fn child_seed(parent: u64, index: u64) -> u64 {
    splitmix(parent ^ splitmix(index.wrapping_add(0x5851_f42d_4c95_7f2d)))
}

pub fn stream(master: u64, name: &str) -> Rng {
    Rng::seed_from_u64(derive_seed(master, name))
}

pub fn from_seed(seed: u64) -> Rng {
    Rng::seed_from_u64(seed)
}
