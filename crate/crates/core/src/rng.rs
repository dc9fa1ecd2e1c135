//! Small, bit-exact pseudo-random generators.
//!
//! Everything that needs randomness (encoder streams, initial permanences,
//! stochastic rounding, segment sampling) draws from these generators so that
//! results are portable across platforms and independent of any external
//! crate's algorithm choices.
//!
//! * [`splitmix64`] is the seed mixer: `z += 0x9E3779B97F4A7C15`, then
//!   `z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9`,
//!   `z = (z ^ (z >> 27)) * 0x94D049BB133111EB`, `z ^ (z >> 31)`.
//! * [`XorShift64Star`] is the stream generator: `x ^= x >> 12; x ^= x << 25;
//!   x ^= x >> 27; out = x * 0x2545F4914F6CDD1D`. A zero state is replaced by
//!   the golden-ratio constant.

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// One round of the SplitMix64 finalizer applied to `x + GOLDEN`.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Folds a list of words into one seed. Order sensitive.
pub fn mix(words: &[u64]) -> u64 {
    words
        .iter()
        .fold(0u64, |acc, &w| splitmix64(acc ^ splitmix64(w)))
}

/// Purposes for site-derived streams, so that two uses of the same
/// (seed, column, epoch) triple never share a stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    ProximalInit = 1,
    ProximalLearn = 2,
    DistalLearn = 3,
    Workload = 4,
    Traffic = 5,
}

#[derive(Debug, Clone)]
pub struct XorShift64Star {
    state: u64,
}

impl XorShift64Star {
    pub fn new(seed: u64) -> Self {
        let state = if seed == 0 { GOLDEN } else { seed };
        Self { state }
    }

    /// Stream for a specific site: `(seed, purpose, a, b)`.
    pub fn for_site(seed: u64, purpose: Purpose, a: u64, b: u64) -> Self {
        Self::new(mix(&[seed, purpose as u64, a, b]))
    }

    pub fn next_u64(&mut self) -> u64 {
        let mut x = self.state;
        x ^= x >> 12;
        x ^= x << 25;
        x ^= x >> 27;
        self.state = x;
        x.wrapping_mul(0x2545_F491_4F6C_DD1D)
    }

    /// Uniform in `[0, 1)` from the top 53 bits.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in `[0, n)`. `n` must be nonzero.
    pub fn below(&mut self, n: u64) -> u64 {
        debug_assert!(n > 0);
        // multiply-shift; bias is < n / 2^64
        ((self.next_u64() as u128 * n as u128) >> 64) as u64
    }

    /// Uniform integer in `[lo, hi]`.
    pub fn range_inclusive(&mut self, lo: i64, hi: i64) -> i64 {
        debug_assert!(lo <= hi);
        lo + self.below((hi - lo) as u64 + 1) as i64
    }

    /// Rounds a non-negative fractional step to an integer: the integer part
    /// always, plus one with probability equal to the fractional part.
    pub fn stochastic_round(&mut self, step: f64) -> u32 {
        let whole = step.floor();
        let frac = step - whole;
        let bump = if frac > 0.0 && self.next_f64() < frac { 1 } else { 0 };
        whole as u32 + bump
    }

    /// Partial Fisher-Yates: picks `count` distinct items from `items`,
    /// preserving nothing about their order.
    pub fn sample<T: Copy>(&mut self, items: &[T], count: usize) -> Vec<T> {
        let mut pool = items.to_vec();
        let count = count.min(pool.len());
        for i in 0..count {
            let j = i + self.below((pool.len() - i) as u64) as usize;
            pool.swap(i, j);
        }
        pool.truncate(count);
        pool
    }
}
