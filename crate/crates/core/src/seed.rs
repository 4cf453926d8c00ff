//! Fan-out of one run seed into independent per-stage seeds.
//!
//! `derive(seed, tag)` hashes the tag bytes with 64-bit FNV-1a, mixes the run
//! seed in, and finishes with the SplitMix64 finalizer. The mapping is part of
//! the reproducibility contract: changing it changes every output.

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Stream seed for the stage named `tag`.
pub fn derive(seed: u64, tag: &str) -> u64 {
    let mut h = FNV_OFFSET;
    for b in tag.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(FNV_PRIME);
    }
    splitmix64(h ^ splitmix64(seed))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stable_and_tag_sensitive() {
        assert_eq!(derive(42, "search"), derive(42, "search"));
        assert_ne!(derive(42, "search"), derive(42, "model"));
        assert_ne!(derive(42, "search"), derive(43, "search"));
    }
}
