//! Seed derivation.
//!
//! A stage seed is `splitmix64(fnv1a64(stage_name) ^ root)`, so each stage
//! draws from its own stream and partial re-runs reproduce the same values.

pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn derive_seed(root: u64, stage: &str) -> u64 {
    splitmix64(fnv1a64(stage.as_bytes()) ^ root)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_values() {
        assert_eq!(fnv1a64(b""), 0xcbf2_9ce4_8422_2325);
        assert_eq!(fnv1a64(b"a"), 0xaf63_dc4c_8601_ec8c);
        assert_eq!(splitmix64(0), 0xe220_a839_7b1d_cdaf);
    }

    #[test]
    fn stages_differ() {
        assert_ne!(derive_seed(7, "topics"), derive_seed(7, "embeddings"));
        assert_ne!(derive_seed(7, "topics"), derive_seed(8, "topics"));
        assert_eq!(derive_seed(7, "topics"), derive_seed(7, "topics"));
    }
}
