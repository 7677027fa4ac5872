//! Deterministic seed derivation.
//!
//! Batch operations (scenario sampling, corpus augmentation) derive one RNG
//! seed per item from a master seed and the item's indices. The mixer is a
//! fixed splitmix64 chain, so derived seeds are stable across platforms and
//! releases and independent of iteration order — a requirement for
//! reproducible parallel generation.

/// One round of splitmix64.
pub fn splitmix64(state: u64) -> u64 {
    let mut z = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a child seed from a master seed and a sequence of indices.
///
/// `derive_seed(s, &[a, b])` differs from `derive_seed(s, &[b, a])` and from
/// `derive_seed(s, &[a])`, so callers can key on (room, placement),
/// (utterance, scenario), and so on without collisions in practice.
pub fn derive_seed(master: u64, indices: &[u64]) -> u64 {
    let mut state = splitmix64(master ^ 0x517C_C1B7_2722_0A95);
    for &idx in indices {
        state = splitmix64(state ^ splitmix64(idx));
    }
    state
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivation_is_stable() {
        // Frozen values: these must never change, or previously published
        // manifests would no longer regenerate identical audio.
        assert_eq!(splitmix64(0), 0xE220_A839_7B1D_CDAF);
        assert_eq!(derive_seed(42, &[0, 0]), derive_seed(42, &[0, 0]));
        assert_ne!(derive_seed(42, &[0, 1]), derive_seed(42, &[1, 0]));
        assert_ne!(derive_seed(42, &[7]), derive_seed(43, &[7]));
        assert_ne!(derive_seed(42, &[7]), derive_seed(42, &[7, 0]));
    }

    #[test]
    fn spread_over_small_indices() {
        // Seeds for a realistic batch grid are pairwise distinct.
        let mut seen = std::collections::HashSet::new();
        for room in 0..60u64 {
            for place in 0..25u64 {
                assert!(seen.insert(derive_seed(123, &[room, place])));
            }
        }
    }
}
