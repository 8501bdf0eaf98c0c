//! Counter-based 64-bit generator used by every randomized operation.
//!
//! The generator is SplitMix64 written in counter form: the `i`-th output of a
//! stream with seed `s` is `mix(s + (i + 1) * GOLDEN)` with wrapping
//! arithmetic, where
//!
//! ```text
//! GOLDEN = 0x9E37_79B9_7F4A_7C15
//! mix(z):  z = (z ^ (z >> 30)) * 0xBF58_476D_1CE4_E5B9
//!          z = (z ^ (z >> 27)) * 0x94D0_49BB_1331_11EB
//!          z ^ (z >> 31)
//! ```
//!
//! Floats take the top 53 bits (`(u >> 11) * 2^-53`), bounded integers use the
//! high word of a 128-bit product. Sub-streams for sample `j` of a run seeded
//! with `s` start from `mix(s ^ mix(j + STREAM))`, so the result of sample `j`
//! never depends on which worker drew it.

pub const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;
pub const STREAM: u64 = 0xD1B5_4A32_D192_ED03;

#[inline]
pub fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone)]
pub struct SplitMix {
    seed: u64,
    counter: u64,
}

impl SplitMix {
    pub fn new(seed: u64) -> Self {
        SplitMix { seed, counter: 0 }
    }

    /// Independent stream for sample `index` of a run seeded with `seed`.
    pub fn stream(seed: u64, index: u64) -> Self {
        SplitMix::new(mix(seed ^ mix(index.wrapping_add(STREAM))))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.counter = self.counter.wrapping_add(1);
        mix(self.seed.wrapping_add(self.counter.wrapping_mul(GOLDEN)))
    }

    /// Uniform in `[0, 1)`.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in `[lo, hi)`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// Uniform in `0..bound`; `bound` must be positive.
    pub fn below(&mut self, bound: u64) -> u64 {
        debug_assert!(bound > 0);
        ((self.next_u64() as u128 * bound as u128) >> 64) as u64
    }

    /// Uniform in `lo..=hi`.
    pub fn range_inclusive(&mut self, lo: usize, hi: usize) -> usize {
        debug_assert!(lo <= hi);
        lo + self.below((hi - lo + 1) as u64) as usize
    }

    pub fn chance(&mut self, p: f64) -> bool {
        self.next_f64() < p
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_reference_splitmix64() {
        // Reference values of the sequential SplitMix64 with state 0.
        let mut rng = SplitMix::new(0);
        assert_eq!(rng.next_u64(), 0xE220_A839_7B1D_CDAF);
        assert_eq!(rng.next_u64(), 0x6E78_9E6A_A1B9_65F4);
        assert_eq!(rng.next_u64(), 0x06C4_5D18_8009_454F);
    }

    #[test]
    fn same_seed_same_sequence() {
        let a: Vec<u64> = {
            let mut r = SplitMix::new(42);
            (0..64).map(|_| r.next_u64()).collect()
        };
        let b: Vec<u64> = {
            let mut r = SplitMix::new(42);
            (0..64).map(|_| r.next_u64()).collect()
        };
        assert_eq!(a, b);
        assert_ne!(SplitMix::new(1).next_u64(), SplitMix::new(2).next_u64());
    }

    #[test]
    fn bounded_draws_stay_in_range() {
        let mut r = SplitMix::new(7);
        for _ in 0..10_000 {
            assert!(r.below(5) < 5);
            let x = r.next_f64();
            assert!((0.0..1.0).contains(&x));
            let k = r.range_inclusive(3, 4);
            assert!(k == 3 || k == 4);
        }
    }

    #[test]
    fn streams_are_distinct() {
        let a = SplitMix::stream(9, 0).next_u64();
        let b = SplitMix::stream(9, 1).next_u64();
        assert_ne!(a, b);
        assert_eq!(a, SplitMix::stream(9, 0).next_u64());
    }
}
