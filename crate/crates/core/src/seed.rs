//! Seed derivation.

/// SplitMix64 finalizer.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes `index` into `parent`; the result depends only on the pair, never on
/// call order.
pub fn derive(parent: u64, index: u64) -> u64 {
    splitmix64(parent ^ splitmix64(index.wrapping_add(0x5851_F42D_4C95_7F2D)))
}

/// Seed for scenario `scenario_index` of stratum `stratum_index`.
pub fn child_seed(master: u64, stratum_index: u64, scenario_index: u64) -> u64 {
    derive(derive(master, stratum_index), scenario_index)
}

/// Stable 64-bit FNV-1a hash, used to salt seeds with string identifiers.
pub fn fnv1a(s: &str) -> u64 {
    s.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01B3))
}
