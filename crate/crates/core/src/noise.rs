//! Per-path random streams.
//!
//! Every Monte Carlo path owns a [`Stream`] keyed by `(master_seed, path_index)`.
//! The stream is a ChaCha8 generator whose 256-bit key holds the master seed and
//! whose 64-bit stream id is the path index, so any path can be opened directly
//! without advancing a shared generator. Results therefore do not depend on how
//! paths are scheduled across threads.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SeedSpec {
    pub master_seed: u64,
    pub path_index: u64,
}

impl SeedSpec {
    pub fn new(master_seed: u64, path_index: u64) -> Self {
        Self {
            master_seed,
            path_index,
        }
    }
}

/// A vector of independent symmetric ±1 values.
#[derive(Debug, Clone, PartialEq)]
pub struct RademacherVector(Vec<f64>);

impl RademacherVector {
    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

/// Source of the two kinds of randomness the walks consume: Rademacher noise for
/// the Euler step and biased coins for the auxiliary boundary step.
///
/// [`Stream`] is the production implementation; tests substitute sources that
/// enumerate the outcome tree.
pub trait NoiseSource {
    /// Fills `out` with independent ±1 values. `out` must be non-empty.
    fn fill_rademacher(&mut self, out: &mut [f64]);

    /// Returns `true` with probability `p`.
    fn coin(&mut self, p: f64) -> bool;
}

pub struct Stream {
    rng: ChaCha8Rng,
    bits: u64,
    bits_left: u32,
}

pub fn open_stream(seed: SeedSpec) -> Stream {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.master_seed.to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(seed.path_index);
    Stream {
        rng,
        bits: 0,
        bits_left: 0,
    }
}

impl Stream {
    pub fn next_rademacher(&mut self, r: usize) -> Result<RademacherVector> {
        if r == 0 {
            return Err(Error::InvalidDimension(
                "Rademacher vector needs r >= 1".into(),
            ));
        }
        let mut v = vec![0.0; r];
        self.fill_rademacher(&mut v);
        Ok(RademacherVector(v))
    }

    /// Uniform variate on [0, 1) with 53 bits of resolution. Always consumes a
    /// fresh generator word, never the buffered Rademacher bits.
    pub fn next_uniform(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    #[inline]
    fn next_bit(&mut self) -> bool {
        if self.bits_left == 0 {
            self.bits = self.rng.next_u64();
            self.bits_left = 64;
        }
        let bit = self.bits & 1 == 1;
        self.bits >>= 1;
        self.bits_left -= 1;
        bit
    }
}

impl NoiseSource for Stream {
    #[inline]
    fn fill_rademacher(&mut self, out: &mut [f64]) {
        for v in out.iter_mut() {
            *v = if self.next_bit() { 1.0 } else { -1.0 };
        }
    }

    #[inline]
    fn coin(&mut self, p: f64) -> bool {
        self.next_uniform() < p
    }
}
