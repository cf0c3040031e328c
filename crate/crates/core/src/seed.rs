//! Deterministic seed derivation.
//!
//! Every random draw in the crate flows through an explicit `u64` seed; this
//! SplitMix64-style mixer derives decorrelated child seeds so that retries,
//! restarts, and sub-draws never reuse a stream.

pub fn sub_seed(base: u64, stream: u64) -> u64 {
    let mut z = base ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
