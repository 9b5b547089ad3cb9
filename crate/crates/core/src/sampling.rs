//! Seeded randomness and Walker alias tables.

use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

use crate::error::{Error, Result};

/// Reproducible pseudo-random stream (xoshiro256++) keyed by a 64-bit seed.
#[derive(Debug, Clone)]
pub struct RandomSource {
    seed: u64,
    rng: Xoshiro256PlusPlus,
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

impl RandomSource {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            rng: Xoshiro256PlusPlus::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Independent stream for batch `index`, derived from this source's seed
    /// only (not its current position).
    pub fn fork(&self, index: u64) -> RandomSource {
        RandomSource::new(splitmix64(self.seed ^ splitmix64(index.wrapping_add(1))))
    }

    /// Uniform draw in `[0, 1)`.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    /// Uniform index in `[0, n)`; `n` must be positive.
    #[inline]
    pub fn below(&mut self, n: usize) -> usize {
        self.rng.random_range(0..n)
    }
}

/// Walker alias table for O(1) sampling from a fixed discrete distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct AliasTable {
    probabilities: Vec<f64>,
    aliases: Vec<usize>,
    total: f64,
}

impl AliasTable {
    /// Builds the table in O(len) using Vose's two-worklist construction.
    pub fn new(weights: &[f64]) -> Result<Self> {
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::param("alias weights must be finite and non-negative"));
        }
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return Err(Error::param("alias weights must not all be zero"));
        }
        let n = weights.len();
        let mut scaled: Vec<f64> = weights.iter().map(|w| w * n as f64 / total).collect();
        let mut probabilities = vec![1.0; n];
        let mut aliases: Vec<usize> = (0..n).collect();
        let (mut small, mut large): (Vec<usize>, Vec<usize>) =
            (0..n).partition(|&i| scaled[i] < 1.0);

        while let (Some(&s), Some(&l)) = (small.last(), large.last()) {
            small.pop();
            probabilities[s] = scaled[s];
            aliases[s] = l;
            scaled[l] = (scaled[l] + scaled[s]) - 1.0;
            if scaled[l] < 1.0 {
                large.pop();
                small.push(l);
            }
        }
        // Leftovers are 1 up to rounding.
        for i in small.into_iter().chain(large) {
            probabilities[i] = 1.0;
            aliases[i] = i;
        }
        Ok(Self {
            probabilities,
            aliases,
            total,
        })
    }

    pub fn len(&self) -> usize {
        self.probabilities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probabilities.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.total
    }

    pub fn thresholds(&self) -> &[f64] {
        &self.probabilities
    }

    /// Exact probability of returning `slot`, reconstructed from the table.
    pub fn slot_probability(&self, slot: usize) -> f64 {
        let n = self.len() as f64;
        let mut p = self.probabilities[slot];
        for (i, &a) in self.aliases.iter().enumerate() {
            if a == slot && i != slot {
                p += 1.0 - self.probabilities[i];
            }
        }
        p / n
    }

    #[inline]
    pub fn sample(&self, rng: &mut RandomSource) -> usize {
        let slot = rng.below(self.len());
        if rng.uniform() < self.probabilities[slot] {
            slot
        } else {
            self.aliases[slot]
        }
    }
}
