//! Deterministic seed derivation for independent RNG substreams.
//!
//! Every stochastic component in this crate takes a `u64` seed and needs
//! child seeds that don't collide across streams (per-track, per-sample,
//! per-edge). `mix` is the splitmix64 finalizer over the XOR-folded pair;
//! it is stable across platforms and releases, which matters because seeds
//! end up recorded in config echoes and weights files.

/// Derives a child seed from a parent seed and a stream index.
pub fn mix(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Folds a sequence of values into one seed, left to right.
pub fn mix_all(seed: u64, streams: &[u64]) -> u64 {
    let mut acc = seed;
    for &s in streams {
        acc = mix(acc, s);
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mix_separates_nearby_streams() {
        let a = mix(7, 0);
        let b = mix(7, 1);
        let c = mix(8, 0);
        assert_ne!(a, b);
        assert_ne!(a, c);
        assert_ne!(b, c);
    }

    #[test]
    fn mix_is_stable() {
        // frozen values; a change here would silently re-seed every stream
        assert_eq!(mix(0, 0), 0xe220a8397b1dcdaf);
        assert_eq!(mix(42, 3), mix(42, 3));
    }

    #[test]
    fn mix_all_folds_in_order() {
        assert_eq!(mix_all(5, &[1, 2]), mix(mix(5, 1), 2));
        assert_ne!(mix_all(5, &[1, 2]), mix_all(5, &[2, 1]));
    }
}
