//! Splittable seed derivation.
//!
//! Child seeds are obtained by folding each path component into the parent
//! with the SplitMix64 finalizer: `s' = mix(s ^ mix(component + GOLDEN))`.
//! A cell seed therefore depends only on the master seed and the cell's
//! coordinates, never on execution order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn mix(mut x: u64) -> u64 {
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

pub fn derive_seed(parent: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(mix(parent.wrapping_add(GOLDEN)), |acc, &c| {
            mix(acc ^ mix(c.wrapping_add(GOLDEN)))
        })
}

/// Stable 64-bit tag for a name (FNV-1a), used as a seed path component.
pub fn name_tag(name: &str) -> u64 {
    name.bytes().fold(0xCBF2_9CE4_8422_2325, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01B3)
    })
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
