//! Counter-based seeding.
//!
//! Every random stream in the crate is keyed by a tuple of integers
//! (global seed, frame, pixel, ...) folded through SplitMix64, then used to
//! seed a ChaCha8 generator. Results therefore never depend on iteration
//! or thread order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// One SplitMix64 finalization step.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Folds a sequence of counters into one 64-bit key.
pub fn derive_key(seed: u64, counters: &[u64]) -> u64 {
    counters
        .iter()
        .fold(splitmix64(seed), |h, &c| splitmix64(h ^ splitmix64(c)))
}

pub fn stream(seed: u64, counters: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_key(seed, counters))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn keys_depend_on_every_counter() {
        let a = derive_key(7, &[1, 2, 3]);
        assert_ne!(a, derive_key(7, &[1, 2, 4]));
        assert_ne!(a, derive_key(7, &[2, 1, 3]));
        assert_ne!(a, derive_key(8, &[1, 2, 3]));
        assert_eq!(a, derive_key(7, &[1, 2, 3]));
    }

    #[test]
    fn streams_are_reproducible() {
        let x: u64 = stream(3, &[9]).random();
        let y: u64 = stream(3, &[9]).random();
        assert_eq!(x, y);
    }
}
