//! Seeded random streams.
//!
//! Every random draw in the crate comes from a ChaCha20 stream keyed by a
//! 64-bit master seed and a stream index. Trials running in parallel take
//! their stream index from a counter, never from execution order, so results
//! are identical across thread counts and platforms.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

pub type SimRng = ChaCha20Rng;

pub fn stream(seed: u64, index: u64) -> SimRng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Derives a child seed for trial `index` (used where a whole sub-pipeline
/// needs its own master seed rather than a single stream).
pub fn child_seed(seed: u64, index: u64) -> u64 {
    use rand::RngCore;
    stream(seed, index.wrapping_add(1 << 32)).next_u64()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::RngCore;

    #[test]
    fn same_seed_same_stream() {
        let a: Vec<u64> = (0..4).map(|_| stream(5, 3).next_u64()).collect();
        assert!(a.windows(2).all(|w| w[0] == w[1]));
        assert_ne!(stream(5, 3).next_u64(), stream(5, 4).next_u64());
        assert_ne!(stream(5, 3).next_u64(), stream(6, 3).next_u64());
    }

    #[test]
    fn stream_values_are_pinned() {
        // ChaCha20 keyed by seed_from_u64 is platform independent; pin one
        // value so an accidental generator swap shows up.
        assert_eq!(stream(0, 0).next_u64(), 449479075714955186);
        assert_eq!(child_seed(0, 0), 15545416049366935172);
        assert_ne!(child_seed(0, 0), child_seed(0, 1));
    }
}

