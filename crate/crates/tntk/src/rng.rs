//! Deterministic random number generation.
//!
//! Everything stochastic in this crate flows through [`CounterRng`], a
//! counter-based generator: the i-th raw output is a bit-mix of
//! `key + i * GAMMA` (the splitmix64 finalizer), so a stream is a pure
//! function of `(key, i)` and is reproducible across platforms. Streams
//! can be split per task; splitting derives a new key and never shares
//! mutable state.
//!
//! Gaussians come from the Box-Muller transform applied to consecutive
//! 53-bit uniforms, with the second variate of each pair cached.

use alloc::vec::Vec;

const GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

#[inline]
fn mix64(mut z: u64) -> u64 {
    z ^= z >> 30;
    z = z.wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z ^= z >> 27;
    z = z.wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Counter-based uniform/Gaussian stream.
#[derive(Debug, Clone)]
pub struct CounterRng {
    key: u64,
    counter: u64,
    spare_gaussian: Option<f64>,
}

impl CounterRng {
    pub fn new(seed: u64) -> Self {
        CounterRng { key: seed, counter: 0, spare_gaussian: None }
    }

    /// Derives an independent stream for a subtask. The child key mixes the
    /// parent key with the stream id, so `split(a) != split(b)` streams are
    /// decorrelated and the parent stream is left untouched.
    pub fn split(&self, stream: u64) -> Self {
        CounterRng::new(mix64(self.key ^ mix64(stream.wrapping_add(GAMMA))))
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.counter = self.counter.wrapping_add(1);
        mix64(self.key.wrapping_add(self.counter.wrapping_mul(GAMMA)))
    }

    /// Uniform in the half-open interval (0, 1]. Never returns 0, so it is
    /// safe under a logarithm.
    #[inline]
    pub fn next_uniform_open(&mut self) -> f64 {
        (((self.next_u64() >> 11) + 1) as f64) * (1.0 / 9_007_199_254_740_992.0)
    }

    /// Uniform in [0, 1).
    #[inline]
    pub fn next_uniform(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64) * (1.0 / 9_007_199_254_740_992.0)
    }

    /// Standard normal variate via Box-Muller.
    #[inline]
    pub fn next_gaussian(&mut self) -> f64 {
        if let Some(z) = self.spare_gaussian.take() {
            return z;
        }
        let u1 = self.next_uniform_open();
        let u2 = self.next_uniform();
        let r = libm::sqrt(-2.0 * libm::log(u1));
        let angle = 2.0 * core::f64::consts::PI * u2;
        self.spare_gaussian = Some(r * libm::sin(angle));
        r * libm::cos(angle)
    }

    /// `count` i.i.d. standard normal samples.
    pub fn gaussian_vec(&mut self, count: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(count);
        for _ in 0..count {
            out.push(self.next_gaussian());
        }
        out
    }

    pub fn fill_gaussian(&mut self, out: &mut [f64]) {
        for slot in out.iter_mut() {
            *slot = self.next_gaussian();
        }
    }

    /// Uniform integer in [0, bound) by rejection-free scaling; bound must
    /// be nonzero. Used for shuffles, where the tiny modulo bias of a
    /// 64-bit multiply-shift is irrelevant.
    #[inline]
    pub fn next_index(&mut self, bound: usize) -> usize {
        debug_assert!(bound > 0);
        ((self.next_u64() as u128 * bound as u128) >> 64) as usize
    }

    /// Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.next_index(i + 1);
            items.swap(i, j);
        }
    }

    /// A random unit vector (uniform on the sphere) of the given dimension.
    pub fn unit_vector(&mut self, dim: usize) -> Vec<f64> {
        loop {
            let v = self.gaussian_vec(dim);
            let norm = libm::sqrt(v.iter().map(|x| x * x).sum::<f64>());
            if norm > 1e-12 {
                return v.iter().map(|x| x / norm).collect();
            }
        }
    }
}
