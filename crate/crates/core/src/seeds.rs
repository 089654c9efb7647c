//! Deterministic sub-seed derivation.
//!
//! Every random stage of a run (one per scenario, model stream and stage
//! name) gets its own seed derived from the master seed, so streams never
//! alias and adding a model or scenario does not shift the draws of any
//! other. The derivation is a fixed splitmix64 chain over the label bytes;
//! it is part of the on-disk contract because reruns with the same master
//! seed must reproduce files byte for byte.

/// One splitmix64 step. Good avalanche behaviour, trivially portable.
fn splitmix64(state: u64) -> u64 {
    let mut z = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive the seed for a labelled stream from `master`.
///
/// Each label is absorbed byte by byte, with a length marker between
/// labels so `["ab", "c"]` and `["a", "bc"]` differ.
pub fn derive_seed(master: u64, labels: &[&str]) -> u64 {
    let mut state = splitmix64(master);
    for label in labels {
        state = splitmix64(state ^ label.len() as u64);
        for &b in label.as_bytes() {
            state = splitmix64(state ^ u64::from(b));
        }
    }
    state
}
