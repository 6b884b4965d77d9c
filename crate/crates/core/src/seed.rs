//! Seed derivation.
//!
//! Every stochastic step draws from its own ChaCha8 stream. Streams are keyed
//! off one master seed: `derive(master, name)` hashes the stream name with
//! 64-bit FNV-1a, xors it into the master seed and finalises with SplitMix64.
//! `mix(seed, index)` does the same for numbered sub-streams (trees, folds).

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn fnv1a(name: &str) -> u64 {
    name.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01b3))
}

/// Seed for the named stream under `master`.
pub fn derive(master: u64, name: &str) -> u64 {
    splitmix64(master ^ fnv1a(name))
}

/// Seed for the `index`-th member of a family of streams.
pub fn mix(seed: u64, index: u64) -> u64 {
    splitmix64(seed ^ splitmix64(index.wrapping_mul(GOLDEN)))
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
