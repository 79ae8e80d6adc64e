//! Seeded, splittable random streams.
//!
//! Every stream is a ChaCha8 keystream addressed by `(seed, stream_id)`.
//! Work units such as grid cells and replicates derive their stream id from
//! their indices, so the numbers a unit consumes never depend on which
//! thread ran it or in what order.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use rand_distr::{Distribution, Exp1, Open01, StandardNormal};

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(GOLDEN);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Folds a list of indices into a single stream id.
pub fn stream_id_from(indices: &[u64]) -> u64 {
    indices
        .iter()
        .fold(GOLDEN, |acc, &i| splitmix64(acc ^ splitmix64(i)))
}

#[derive(Clone, Debug)]
pub struct RngStream {
    inner: ChaCha8Rng,
    seed: u64,
    stream_id: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream_id);
        Self {
            inner,
            seed,
            stream_id,
        }
    }

    /// Stream addressed by a tuple of indices, e.g. `(cell, replicate)`.
    pub fn indexed(seed: u64, indices: &[u64]) -> Self {
        Self::new(seed, stream_id_from(indices))
    }

    /// Splits off an independent child stream, advancing `self` by one draw.
    pub fn split(&mut self) -> Self {
        let child_seed = self.inner.next_u64();
        Self::new(child_seed, self.stream_id)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Uniform on `[0, 1)` with 53 bits of precision.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        (self.inner.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform on the open interval `(0, 1)`.
    #[inline]
    pub fn uniform_open(&mut self) -> f64 {
        Open01.sample(&mut self.inner)
    }

    #[inline]
    pub fn std_normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.inner)
    }

    #[inline]
    pub fn normal(&mut self, mean: f64, sd: f64) -> f64 {
        mean + sd * self.std_normal()
    }

    /// Standard exponential draw (rate 1).
    #[inline]
    pub fn exp1(&mut self) -> f64 {
        Exp1.sample(&mut self.inner)
    }

    pub fn fill_std_normal(&mut self, out: &mut [f64]) {
        for v in out {
            *v = self.std_normal();
        }
    }
}

impl RngCore for RngStream {
    #[inline]
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    #[inline]
    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.inner.fill_bytes(dest)
    }

    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> Result<(), rand_core::Error> {
        self.inner.try_fill_bytes(dest)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec::Vec;

    #[test]
    fn same_address_same_sequence() {
        let mut a = RngStream::new(7, 3);
        let mut b = RngStream::new(7, 3);
        for _ in 0..1000 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn streams_differ() {
        let mut a = RngStream::indexed(7, &[0, 1]);
        let mut b = RngStream::indexed(7, &[1, 0]);
        let xa: Vec<u64> = (0..8).map(|_| a.next_u64()).collect();
        let xb: Vec<u64> = (0..8).map(|_| b.next_u64()).collect();
        assert_ne!(xa, xb);
    }

    #[test]
    fn uniform_equidistribution_smoke() {
        // chi-square over 16 bins, 3 neighbouring streams
        for sid in 0..3u64 {
            let mut r = RngStream::new(11, sid);
            let n = 160_000;
            let mut bins = [0usize; 16];
            for _ in 0..n {
                bins[(r.uniform() * 16.0) as usize] += 1;
            }
            let e = n as f64 / 16.0;
            let chi2: f64 = bins.iter().map(|&c| (c as f64 - e).powi(2) / e).sum();
            // 15 dof, 0.1% critical value 37.7
            assert!(chi2 < 37.7, "stream {sid}: chi2 = {chi2}");
        }
    }

    #[test]
    fn cross_stream_correlation_small() {
        let mut a = RngStream::new(5, 0);
        let mut b = RngStream::new(5, 1);
        let n = 100_000;
        let mut s = 0.0;
        for _ in 0..n {
            s += a.std_normal() * b.std_normal();
        }
        let corr = s / n as f64;
        assert!(corr.abs() < 4.0 / (n as f64).sqrt(), "corr = {corr}");
    }

    #[test]
    fn uniform_range() {
        let mut r = RngStream::new(1, 1);
        for _ in 0..10_000 {
            let u = r.uniform();
            assert!((0.0..1.0).contains(&u));
            let v = r.uniform_open();
            assert!(v > 0.0 && v < 1.0);
        }
    }
}
