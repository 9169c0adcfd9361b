//! Seed derivation for reproducible parallel runs.
//!
//! Every scenario gets a seed mixed from the base seed and its grid index; each
//! replicate then reads its own ChaCha stream under that seed, so no two
//! replicates share state and scheduling order cannot change any draw.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for scenario `index` of a grid run under `base_seed`.
pub fn scenario_seed(base_seed: u64, index: u64) -> u64 {
    mix(mix(base_seed) ^ index.wrapping_mul(0xD1B5_4A32_D192_ED03))
}

/// Independent generator for one replicate of a scenario.
pub fn replicate_rng(scenario_seed: u64, replicate: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(scenario_seed);
    rng.set_stream(replicate);
    rng
}
