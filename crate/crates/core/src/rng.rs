//! Tiny deterministic PRNG for probe vectors and randomized tests.
//!
//! SplitMix64 is used instead of an external RNG crate so that seeded runs
//! produce byte-identical output on every platform, which the CLI promises.

/// SplitMix64 generator (Steele, Lea, Flood 2014).
#[derive(Clone, Debug)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }

    /// Uniform in [0, 1).
    pub fn next_f64(&mut self) -> f64 {
        // 53 high bits give a uniform dyadic rational in [0, 1).
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in [-1, 1).
    pub fn next_symmetric(&mut self) -> f64 {
        2.0 * self.next_f64() - 1.0
    }

    /// Fill a slice with uniform [-1, 1) samples.
    pub fn fill_symmetric(&mut self, out: &mut [f64]) {
        for x in out.iter_mut() {
            *x = self.next_symmetric();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_in_range() {
        let mut a = SplitMix64::new(42);
        let mut b = SplitMix64::new(42);
        for _ in 0..1000 {
            let x = a.next_f64();
            assert_eq!(x, b.next_f64());
            assert!((0.0..1.0).contains(&x));
        }
    }

    #[test]
    fn roughly_centered() {
        let mut rng = SplitMix64::new(7);
        let mean: f64 = (0..10_000).map(|_| rng.next_symmetric()).sum::<f64>() / 10_000.0;
        assert!(mean.abs() < 0.02, "mean {mean}");
    }
}
