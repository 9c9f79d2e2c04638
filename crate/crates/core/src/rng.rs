//! Counter-based, splittable random streams.
//!
//! A stream is addressed by `(seed, position)`: the `k`-th draw is a pure
//! function of the seed and `k`, so a stream can be cloned, rewound or split
//! into keyed substreams without any shared state. Each `(run, frame,
//! purpose)` triple of a tracking run gets its own substream.

use rand_core::RngCore;
use rand_distr::{Distribution, StandardNormal};

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 finalizer (Stafford variant 13).
#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RngStream {
    seed: u64,
    position: u64,
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        Self { seed, position: 0 }
    }

    pub fn at(seed: u64, position: u64) -> Self {
        Self { seed, position }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn position(&self) -> u64 {
        self.position
    }

    /// Derives an independent stream keyed by `tag`, starting at position 0.
    /// The parent stream is not advanced.
    pub fn substream(&self, tag: u64) -> Self {
        let key = mix64(self.seed ^ mix64(tag.wrapping_add(GOLDEN_GAMMA)).rotate_left(17));
        Self::new(mix64(key.wrapping_add(GOLDEN_GAMMA)))
    }

    #[inline]
    pub fn draw_u64(&mut self) -> u64 {
        self.position = self.position.wrapping_add(1);
        mix64(self.seed.wrapping_add(self.position.wrapping_mul(GOLDEN_GAMMA)))
    }

    /// Uniform draw in `[0, 1)` with 53 bits of resolution.
    pub fn uniform(&mut self) -> f64 {
        (self.draw_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn standard_normal(&mut self) -> f64 {
        StandardNormal.sample(self)
    }

    pub fn normal(&mut self, mean: f64, std: f64) -> f64 {
        mean + std * self.standard_normal()
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        (self.draw_u64() >> 32) as u32
    }

    fn next_u64(&mut self) -> u64 {
        self.draw_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        for chunk in dst.chunks_mut(8) {
            let bytes = self.draw_u64().to_le_bytes();
            chunk.copy_from_slice(&bytes[..chunk.len()]);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_and_position_repeat() {
        let mut a = RngStream::at(7, 100);
        let mut b = RngStream::at(7, 100);
        let xs: Vec<u64> = (0..16).map(|_| a.draw_u64()).collect();
        let ys: Vec<u64> = (0..16).map(|_| b.draw_u64()).collect();
        assert_eq!(xs, ys);
    }

    #[test]
    fn resuming_from_position_matches_continuous_stream() {
        let mut a = RngStream::new(42);
        for _ in 0..10 {
            a.draw_u64();
        }
        let mut b = RngStream::at(42, a.position());
        assert_eq!(a.draw_u64(), b.draw_u64());
    }

    #[test]
    fn substreams_differ_and_leave_parent_alone() {
        let root = RngStream::new(1);
        let mut s1 = root.substream(1);
        let mut s2 = root.substream(2);
        assert_ne!(s1.draw_u64(), s2.draw_u64());
        assert_eq!(root.position(), 0);
        assert_eq!(root.substream(1), RngStream::new(1).substream(1));
    }

    #[test]
    fn uniform_moments() {
        let mut r = RngStream::new(3);
        let n = 20_000;
        let xs: Vec<f64> = (0..n).map(|_| r.uniform()).collect();
        assert!(xs.iter().all(|x| (0.0..1.0).contains(x)));
        let mean = xs.iter().sum::<f64>() / n as f64;
        assert!((mean - 0.5).abs() < 0.01, "mean {mean}");
    }

    #[test]
    fn normal_moments() {
        let mut r = RngStream::new(11);
        let n = 20_000;
        let xs: Vec<f64> = (0..n).map(|_| r.standard_normal()).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!(mean.abs() < 0.03, "mean {mean}");
        assert!((var - 1.0).abs() < 0.05, "var {var}");
    }
}
