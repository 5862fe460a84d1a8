//! Seed derivation.
//!
//! Every random draw in the crate flows from a single master seed. Child
//! seeds are derived with a splitmix64 finaliser over `(parent, stream,
//! index)`, so that each shadow model, target model and dataset draw gets an
//! independent, reproducible ChaCha stream.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Streams used to separate independent uses of the same parent seed.
pub mod stream {
    pub const POPULATION: u64 = 0x01;
    pub const ADVERSARY: u64 = 0x02;
    pub const AUXILIARY: u64 = 0x03;
    pub const SHADOW_DATA: u64 = 0x04;
    pub const SHADOW_MODEL: u64 = 0x05;
    pub const HONEST_DATA: u64 = 0x06;
    pub const TARGET_MODEL: u64 = 0x07;
    pub const META: u64 = 0x08;
    pub const SPLIT: u64 = 0x09;
    pub const TASK: u64 = 0x0a;
    pub const UPDATE_DATA: u64 = 0x0b;
    pub const UPDATE_MODEL: u64 = 0x0c;
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a child seed from `parent` for the given stream and index.
pub fn derive_seed(parent: u64, stream: u64, index: u64) -> u64 {
    let a = splitmix64(parent ^ splitmix64(stream.wrapping_mul(0xD6E8_FEB8_6659_FD93)));
    splitmix64(a ^ splitmix64(index.wrapping_add(0xA076_1D64_78BD_642F)))
}

/// A seeded ChaCha8 generator.
pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn derived_seeds_are_stable_and_distinct() {
        assert_eq!(derive_seed(42, 1, 7), derive_seed(42, 1, 7));
        let seeds: HashSet<u64> = (0..1000).map(|i| derive_seed(42, stream::SHADOW_MODEL, i)).collect();
        assert_eq!(seeds.len(), 1000);
        assert_ne!(derive_seed(42, 1, 0), derive_seed(42, 2, 0));
        assert_ne!(derive_seed(42, 1, 0), derive_seed(43, 1, 0));
    }
}
