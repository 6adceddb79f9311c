//! Keyed random streams.
//!
//! Every draw in the crate comes from a ChaCha8 generator whose key is a
//! mix of a base seed and a small tuple of counters (interim, sequence
//! index, replication, ...). A stream can therefore be rebuilt from its
//! coordinates alone, which makes parallel evaluation bit-identical to
//! sequential evaluation.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Folds a list of coordinates into a base seed.
pub fn derive_seed(base: u64, coords: &[u64]) -> u64 {
    coords
        .iter()
        .fold(mix64(base), |acc, &c| mix64(acc ^ mix64(c.wrapping_add(0x5851_F42D_4C95_7F2D))))
}

/// Domain tags so that streams used for different purposes never collide.
pub mod domain {
    pub const PERMUTATION: u64 = 1;
    pub const TRANSITION: u64 = 2;
    pub const DATA: u64 = 3;
    pub const REPLICATION: u64 = 4;
    pub const BOOTSTRAP: u64 = 5;
    pub const GAUSSIAN: u64 = 6;
}

/// Random stream dedicated to one interim of one permutation pool.
#[derive(Debug, Clone)]
pub struct InterimStream {
    seed: u64,
    interim: usize,
    key: u64,
}

impl InterimStream {
    pub fn new(seed: u64, interim: usize) -> Self {
        let key = derive_seed(seed, &[domain::PERMUTATION, interim as u64]);
        Self { seed, interim, key }
    }

    pub fn interim(&self) -> usize {
        self.interim
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Generator for one sequence index. Independent of evaluation order.
    pub fn sequence(&self, index: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.key);
        rng.set_stream(index as u64);
        rng
    }

    /// Generator for the one-off exact to monte-carlo subsampling step.
    pub fn transition(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(derive_seed(self.seed, &[domain::TRANSITION, self.interim as u64]))
    }
}

pub fn rng_for(base: u64, coords: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(base, coords))
}
