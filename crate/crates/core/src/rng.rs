//! Seed derivation for reproducible, order-independent random streams.
//!
//! Every random draw in the crate comes from a [`Xoshiro256PlusPlus`] stream
//! whose 64-bit seed is derived from a parent seed and an integer index
//! (trial number, MTCD id, sweep position). Streams are therefore addressable
//! by counter, and results do not depend on how work is scheduled.

use rand::SeedableRng;
use rand_xoshiro::Xoshiro256PlusPlus;

/// Identifier of the stream construction, recorded in experiment metadata.
pub const ALGORITHM: &str = "xoshiro256++/splitmix64-keyed-v1";

/// The random stream type used throughout the crate.
pub type Stream = Xoshiro256PlusPlus;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives the seed of child stream `index` from `parent`.
pub fn derive_seed(parent: u64, index: u64) -> u64 {
    mix64(parent ^ mix64(index.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA)))
}

/// Opens child stream `index` of `parent`.
pub fn stream(parent: u64, index: u64) -> Stream {
    Xoshiro256PlusPlus::seed_from_u64(derive_seed(parent, index))
}
