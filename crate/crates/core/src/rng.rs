//! Deterministic, splittable random streams.
//!
//! A stream is a ChaCha8 keystream: the key comes from a master seed and the
//! 64-bit stream id is derived from the experiment indices, so replication
//! `(k, j)` sees the same variates no matter which thread runs it or in which
//! order.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::function::gamma::ln_gamma;

#[derive(Debug, Clone)]
pub struct RngStream {
    inner: ChaCha8Rng,
}

impl RngStream {
    pub fn from_seed(seed: u64) -> Self {
        Self {
            inner: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Independent substream for replication `replication` of population
    /// index `population_index` under `master_seed`.
    pub fn derive(master_seed: u64, population_index: u32, replication: u32) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(master_seed);
        inner.set_stream((u64::from(population_index) << 32) | u64::from(replication));
        Self { inner }
    }

    /// Uniform on `[0, 1)` with 53 random bits.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        self.inner.gen::<f64>()
    }

    /// Uniform on `(0, 1]`.
    #[inline]
    pub fn uniform_open0(&mut self) -> f64 {
        1.0 - self.uniform()
    }

    /// Exponential variate with the given rate.
    #[inline]
    pub fn exponential(&mut self, rate: f64) -> f64 {
        -self.uniform_open0().ln() / rate
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Poisson variate: sequential inversion below mean 10, transformed
    /// rejection (PTRS) above.
    pub fn poisson(&mut self, mean: f64) -> u64 {
        if !(mean > 0.0) {
            return 0;
        }
        if mean < 10.0 {
            self.poisson_inversion(mean)
        } else {
            self.poisson_ptrs(mean)
        }
    }

    fn poisson_inversion(&mut self, mean: f64) -> u64 {
        let u = self.uniform();
        let mut k = 0u64;
        let mut p = (-mean).exp();
        let mut cdf = p;
        // The cdf saturates just below 1 in floating point; the tail beyond
        // ~mean + 40 has probability far below 2^-53.
        while u >= cdf && k < 64 {
            k += 1;
            p *= mean / k as f64;
            cdf += p;
        }
        k
    }

    // Hörmann (1993), "The transformed rejection method for generating
    // Poisson random variables".
    fn poisson_ptrs(&mut self, mean: f64) -> u64 {
        let smu = mean.sqrt();
        let b = 0.931 + 2.53 * smu;
        let a = -0.059 + 0.02483 * b;
        let inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
        let v_r = 0.9277 - 3.6224 / (b - 2.0);
        let log_mean = mean.ln();
        loop {
            let u = self.uniform() - 0.5;
            let v = self.uniform_open0();
            let us = 0.5 - u.abs();
            let k = ((2.0 * a / us + b) * u + mean + 0.43).floor();
            if us >= 0.07 && v <= v_r {
                return k as u64;
            }
            if k < 0.0 || (us < 0.013 && v > us) {
                continue;
            }
            let lhs = v.ln() + inv_alpha.ln() - (a / (us * us) + b).ln();
            let rhs = -mean + k * log_mean - ln_gamma(k + 1.0);
            if lhs <= rhs {
                return k as u64;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_sequence() {
        let mut a = RngStream::derive(7, 3, 11);
        let mut b = RngStream::derive(7, 3, 11);
        for _ in 0..1000 {
            assert_eq!(a.uniform().to_bits(), b.uniform().to_bits());
        }
    }

    #[test]
    fn substreams_differ() {
        let mut a = RngStream::derive(7, 0, 0);
        let mut b = RngStream::derive(7, 0, 1);
        let mut c = RngStream::derive(7, 1, 0);
        let (x, y, z) = (a.next_u64(), b.next_u64(), c.next_u64());
        assert!(x != y && y != z && x != z);
    }

    #[test]
    fn derived_stream_is_independent_of_draw_history() {
        let mut warm = RngStream::derive(42, 1, 2);
        let _ = RngStream::derive(42, 1, 1).next_u64();
        let mut fresh = RngStream::derive(42, 1, 2);
        assert_eq!(warm.next_u64(), fresh.next_u64());
    }

    fn poisson_pmf(mean: f64, k: u64) -> f64 {
        let ln_k_fact: f64 = (1..=k).map(|i| (i as f64).ln()).sum();
        (-mean + k as f64 * mean.ln() - ln_k_fact).exp()
    }

    #[test]
    fn poisson_matches_pmf() {
        let mut rng = RngStream::from_seed(99);
        for &mean in &[0.3, 2.5, 9.9, 10.0, 37.0, 400.0] {
            let reps = 200_000;
            let mut counts = std::collections::BTreeMap::new();
            let mut sum = 0.0;
            for _ in 0..reps {
                let k = rng.poisson(mean);
                sum += k as f64;
                *counts.entry(k).or_insert(0u64) += 1;
            }
            let emp_mean = sum / reps as f64;
            assert!((emp_mean - mean).abs() < 5.0 * (mean / reps as f64).sqrt(), "{mean}: {emp_mean}");
            // cdf comparison at every value
            let hi = (mean + 8.0 * mean.sqrt() + 10.0) as u64;
            let (mut emp, mut exact, mut worst) = (0.0, 0.0, 0.0f64);
            for k in 0..=hi {
                emp += *counts.get(&k).unwrap_or(&0) as f64 / reps as f64;
                exact += poisson_pmf(mean, k);
                worst = worst.max((emp - exact).abs());
            }
            assert!(worst < 1.63 / (reps as f64).sqrt(), "mean {mean}: ks {worst}");
        }
    }
}
