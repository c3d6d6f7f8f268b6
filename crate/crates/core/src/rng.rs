//! Counter-based random streams.
//!
//! Every stochastic component draws from a [`CounterRng`] keyed by a master
//! seed and a stream index (shot index, epoch, ...). A stream's output is a
//! pure function of `(master_seed, stream, counter)`, so sampling the same
//! shot always yields the same draws no matter how work is split across
//! threads.

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Splittable counter RNG (splitmix-style output function).
#[derive(Clone, Debug)]
pub struct CounterRng {
    key: u64,
    ctr: u64,
    spare_normal: Option<f64>,
}

impl CounterRng {
    /// Stream `stream` of the generator family keyed by `master_seed`.
    pub fn new(master_seed: u64, stream: u64) -> Self {
        let key = mix(mix(master_seed ^ GOLDEN).wrapping_add(mix(stream.wrapping_mul(0xD605_BBB5_8C8A_BC2D))));
        CounterRng { key, ctr: 0, spare_normal: None }
    }

    /// Derive a child stream; used to give substreams (noise, readout, ...)
    /// independent counters.
    pub fn substream(&self, tag: u64) -> CounterRng {
        CounterRng::new(self.key, tag ^ 0x5851_F42D_4C95_7F2D)
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.ctr = self.ctr.wrapping_add(1);
        mix(self.key.wrapping_add(self.ctr.wrapping_mul(GOLDEN)))
    }

    /// Uniform in [0, 1) with 53-bit resolution.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Bernoulli(p).
    #[inline]
    pub fn below(&mut self, p: f64) -> bool {
        self.next_f64() < p
    }

    /// Uniform integer in [0, n).
    #[inline]
    pub fn below_n(&mut self, n: u64) -> u64 {
        // Multiply-shift; bias is negligible for the n used here (n <= 15 or
        // shuffle ranges), and determinism is what matters.
        ((self.next_u64() as u128 * n as u128) >> 64) as u64
    }

    /// Number of Bernoulli(p) failures before the next success, i.e. how many
    /// upcoming trials to skip. Returns `u64::MAX` when p == 0.
    #[inline]
    pub fn geometric_skip(&mut self, p: f64) -> u64 {
        if p <= 0.0 {
            return u64::MAX;
        }
        if p >= 1.0 {
            return 0;
        }
        let u = 1.0 - self.next_f64(); // (0, 1]
        (u.ln() / (1.0 - p).ln()) as u64
    }

    /// Standard normal via Box-Muller; one spare kept per stream.
    pub fn next_normal(&mut self) -> f64 {
        if let Some(z) = self.spare_normal.take() {
            return z;
        }
        let u1 = 1.0 - self.next_f64(); // (0, 1]
        let u2 = self.next_f64();
        let r = (-2.0 * u1.ln()).sqrt();
        let (s, c) = (std::f64::consts::TAU * u2).sin_cos();
        self.spare_normal = Some(r * s);
        r * c
    }

    /// Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, slice: &mut [T]) {
        for i in (1..slice.len()).rev() {
            let j = self.below_n(i as u64 + 1) as usize;
            slice.swap(i, j);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let mut a = CounterRng::new(42, 7);
        let mut b = CounterRng::new(42, 7);
        let mut c = CounterRng::new(42, 8);
        let xs: Vec<u64> = (0..8).map(|_| a.next_u64()).collect();
        let ys: Vec<u64> = (0..8).map(|_| b.next_u64()).collect();
        let zs: Vec<u64> = (0..8).map(|_| c.next_u64()).collect();
        assert_eq!(xs, ys);
        assert_ne!(xs, zs);
    }

    #[test]
    fn uniform_mean_is_sane() {
        let mut r = CounterRng::new(1, 0);
        let n = 100_000;
        let mean: f64 = (0..n).map(|_| r.next_f64()).sum::<f64>() / n as f64;
        assert!((mean - 0.5).abs() < 0.01, "mean {mean}");
    }

    #[test]
    fn normal_moments() {
        let mut r = CounterRng::new(3, 1);
        let n = 200_000;
        let xs: Vec<f64> = (0..n).map(|_| r.next_normal()).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n as f64;
        assert!(mean.abs() < 0.01, "mean {mean}");
        assert!((var - 1.0).abs() < 0.02, "var {var}");
    }

    #[test]
    fn geometric_skip_matches_bernoulli_rate() {
        let p = 0.01;
        let mut r = CounterRng::new(9, 2);
        let trials = 2_000_000u64;
        let mut fires = 0u64;
        let mut pos = 0u64;
        loop {
            let skip = r.geometric_skip(p);
            if pos.saturating_add(skip) >= trials {
                break;
            }
            pos += skip + 1;
            fires += 1;
        }
        let rate = fires as f64 / trials as f64;
        let sigma = (p * (1.0 - p) / trials as f64).sqrt();
        assert!((rate - p).abs() < 4.0 * sigma, "rate {rate} vs {p}");
    }
}
