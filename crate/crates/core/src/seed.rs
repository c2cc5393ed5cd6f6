//! Deterministic seed derivation.
//!
//! One global seed fans out into per-stage child seeds so a stage can be
//! re-run in isolation without disturbing its siblings. Derivation is a
//! fixed FNV-1a / SplitMix64 combination: stable across platforms and crate
//! versions, unlike hasher-based schemes.

/// Derives a child seed from `(parent, tag)`.
pub fn child(parent: u64, tag: &str) -> u64 {
    const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

    let mut h = FNV_OFFSET;
    for byte in parent.to_le_bytes().iter().chain(tag.as_bytes()) {
        h ^= u64::from(*byte);
        h = h.wrapping_mul(FNV_PRIME);
    }
    splitmix64(h)
}

/// Derives a child seed from `(parent, tag, index)` for per-item streams.
pub fn child_indexed(parent: u64, tag: &str, index: u64) -> u64 {
    splitmix64(child(parent, tag) ^ splitmix64(index.wrapping_add(0x9e37_79b9_7f4a_7c15)))
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}
