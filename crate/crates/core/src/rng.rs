//! Seed splitting.
//!
//! Every Monte Carlo replicate draws from its own ChaCha stream keyed by
//! `(master_seed, replicate_index)`, so a replicate's randomness does not
//! depend on how many workers ran or in which order replicates finished.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type LabRng = ChaCha8Rng;

/// Stream `index` of the generator keyed by `master`.
pub fn replicate_rng(master: u64, index: u64) -> LabRng {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(index);
    rng
}

/// Derive an independent master seed for a named sub-experiment.
pub fn derive_seed(master: u64, salt: u64) -> u64 {
    // splitmix64 finalizer
    let mut z = master ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
