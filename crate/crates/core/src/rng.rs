//! Seed derivation for reproducible, order-independent parallel work.
//!
//! Every unit of work (trial, repetition, fold fit) gets its own generator
//! whose seed is a pure function of the parent seed and the unit's label, so
//! serial and parallel execution draw identical numbers.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Child seed for work unit `index` within namespace `tag`.
pub fn derive_seed(seed: u64, tag: u64, index: u64) -> u64 {
    splitmix64(splitmix64(seed ^ splitmix64(tag)) ^ index.wrapping_mul(0xD1B5_4A32_D192_ED03))
}

pub fn rng_from_seed(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

// Namespaces for derive_seed.
pub const TAG_FOLDS: u64 = 1;
pub const TAG_FIT: u64 = 2;
pub const TAG_REPETITION: u64 = 3;
pub const TAG_TRIAL: u64 = 4;
pub const TAG_CV: u64 = 5;
pub const TAG_NCV: u64 = 6;
pub const TAG_DATA: u64 = 7;
pub const TAG_SUBSAMPLE: u64 = 8;
