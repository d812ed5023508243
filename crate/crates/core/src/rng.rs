//! Seeded, stream-addressed random number generation.
//!
//! Every sampling path in the crate draws from an [`RngStream`], a
//! counter-based generator addressed by a `(seed, stream_id)` pair.
//! Replicas of a simulation get the same seed and distinct stream ids, so
//! they never share state and each is individually reproducible.

use num::bigint::BigUint;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;

/// A reproducible random stream: identical `(seed, stream_id)` pairs yield
/// identical draw sequences on every platform.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    rng: ChaCha12Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        RngStream { seed, stream_id, rng }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    /// Uniform draw from `0..bound` without modulo bias.
    pub fn gen_index(&mut self, bound: u64) -> u64 {
        assert!(bound > 0, "empty range");
        // Rejection sampling on the top multiple of `bound`.
        let zone = u64::MAX - (u64::MAX % bound + 1) % bound;
        loop {
            let x = self.next_u64();
            if x <= zone {
                return x % bound;
            }
        }
    }

    /// Categorical draw proportional to nonnegative integer weights.
    ///
    /// Exact: the total weight must be positive and fit in `u128`.
    pub fn gen_weighted(&mut self, weights: &[u128]) -> usize {
        let total: u128 = weights.iter().sum();
        assert!(total > 0, "all weights zero");
        let mut x = self.gen_u128_below(total);
        for (i, w) in weights.iter().enumerate() {
            if x < *w {
                return i;
            }
            x -= w;
        }
        unreachable!()
    }

    fn gen_u128_below(&mut self, bound: u128) -> u128 {
        assert!(bound > 0);
        if bound <= u64::MAX as u128 {
            return self.gen_index(bound as u64) as u128;
        }
        let bits = 128 - bound.leading_zeros();
        loop {
            let hi = (self.next_u64() as u128) << 64;
            let x = (hi | self.next_u64() as u128) >> (128 - bits);
            if x < bound {
                return x;
            }
        }
    }

    /// Uniform `BigUint` below `bound`, by rejection on the bit length.
    pub fn gen_biguint_below(&mut self, bound: &BigUint) -> BigUint {
        use num::Zero;
        assert!(!bound.is_zero());
        let bits = bound.bits();
        let words = bits.div_ceil(64) as usize;
        let shift = (64 * words as u64) - bits;
        let mut bytes = vec![0u8; words * 8];
        loop {
            for chunk in bytes.chunks_mut(8) {
                chunk.copy_from_slice(&self.next_u64().to_le_bytes());
            }
            let x = BigUint::from_bytes_le(&bytes) >> shift;
            if &x < bound {
                return x;
            }
        }
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.rng.fill_bytes(dest)
    }

    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> Result<(), rand::Error> {
        self.rng.try_fill_bytes(dest)
    }
}
