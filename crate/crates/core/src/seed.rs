//! Deterministic seed derivation: one master seed fans out to every stage.

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for a named stage, e.g. `derive_seed(master, "split")`.
pub fn derive_seed(master: u64, stage: &str) -> u64 {
    // FNV-1a over the stage name
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in stage.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    mix(master ^ mix(h))
}

/// Seed for the `index`-th item of a stream (recording, tree, ...).
pub fn derive_indexed(seed: u64, index: u64) -> u64 {
    mix(seed.wrapping_add(mix(index)))
}
