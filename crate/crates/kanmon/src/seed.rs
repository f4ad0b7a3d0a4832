//! Deterministic seed derivation for sub-streams.
//!
//! Sweeps need many independent RNG streams (per cell, per run, per subset
//! size) that are stable across reruns and platforms. We derive them from a
//! base seed and a list of integer tags with a SplitMix64 chain — cheap,
//! well-mixed, and dependency-free.

/// Mixes `base` with `tags` into a new 64-bit seed. Order-sensitive.
pub fn mix(base: u64, tags: &[u64]) -> u64 {
    let mut state = base ^ 0x9e37_79b9_7f4a_7c15;
    for &t in tags {
        state = splitmix64(state.wrapping_add(t.wrapping_mul(0xbf58_476d_1ce4_e5b9)));
    }
    splitmix64(state)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
