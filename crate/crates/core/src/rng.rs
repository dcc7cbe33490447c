//! Pinned random source for field synthesis.
//!
//! PCG-XSH-RR 64/32 (64-bit state, 32-bit output), seeded the way the
//! reference `pcg32_srandom_r` does, and standard normals from the Marsaglia
//! polar form of Box-Muller. Everything here is fixed so that a field is a
//! pure function of its seed across platforms and reimplementations.

const MULTIPLIER: u64 = 6_364_136_223_846_793_005;

/// Stream selector used for every field.
pub const FIELD_STREAM: u64 = 54;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pcg32 {
    state: u64,
    inc: u64,
}

impl Pcg32 {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = Pcg32 { state: 0, inc: (stream << 1) | 1 };
        rng.next_u32();
        rng.state = rng.state.wrapping_add(seed);
        rng.next_u32();
        rng
    }

    pub fn from_seed(seed: u64) -> Self {
        Self::new(seed, FIELD_STREAM)
    }

    #[inline]
    pub fn next_u32(&mut self) -> u32 {
        let old = self.state;
        self.state = old.wrapping_mul(MULTIPLIER).wrapping_add(self.inc);
        let xorshifted = (((old >> 18) ^ old) >> 27) as u32;
        let rot = (old >> 59) as u32;
        xorshifted.rotate_right(rot)
    }

    /// Two draws, the first forming the high word.
    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        let hi = u64::from(self.next_u32());
        let lo = u64::from(self.next_u32());
        (hi << 32) | lo
    }

    /// Uniform in `[0, 1)` with 53 bits of precision.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

/// Standard normal sampler. Each accepted polar pair yields two variates,
/// returned in order (`u` term first).
#[derive(Debug, Clone)]
pub struct NormalSampler {
    rng: Pcg32,
    spare: Option<f64>,
}

impl NormalSampler {
    pub fn new(rng: Pcg32) -> Self {
        NormalSampler { rng, spare: None }
    }

    pub fn from_seed(seed: u64) -> Self {
        Self::new(Pcg32::from_seed(seed))
    }

    pub fn sample(&mut self) -> f64 {
        if let Some(v) = self.spare.take() {
            return v;
        }
        loop {
            let u = 2.0 * self.rng.next_f64() - 1.0;
            let v = 2.0 * self.rng.next_f64() - 1.0;
            let s = u * u + v * v;
            if s > 0.0 && s < 1.0 {
                let m = (-2.0 * s.ln() / s).sqrt();
                self.spare = Some(v * m);
                return u * m;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_reference_pcg32_demo_vector() {
        // pcg32-demo output for pcg32_srandom(42, 54)
        let mut rng = Pcg32::new(42, 54);
        let expected = [0xa15c02b7u32, 0x7b47f409, 0xba1d3330, 0x83d2f293, 0xbfa4784b, 0xcbed606e];
        for e in expected {
            assert_eq!(rng.next_u32(), e);
        }
    }

    #[test]
    fn unit_interval() {
        let mut rng = Pcg32::from_seed(7);
        for _ in 0..10_000 {
            let x = rng.next_f64();
            assert!((0.0..1.0).contains(&x));
        }
    }

    #[test]
    fn normal_moments() {
        let mut s = NormalSampler::from_seed(76_539_635);
        let n = 200_000;
        let xs: Vec<f64> = (0..n).map(|_| s.sample()).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
        assert!(mean.abs() < 0.01, "{mean}");
        assert!((var - 1.0).abs() < 0.01, "{var}");
    }

    #[test]
    fn sampler_is_deterministic() {
        let a: Vec<f64> = {
            let mut s = NormalSampler::from_seed(1);
            (0..64).map(|_| s.sample()).collect()
        };
        let b: Vec<f64> = {
            let mut s = NormalSampler::from_seed(1);
            (0..64).map(|_| s.sample()).collect()
        };
        assert_eq!(a, b);
    }
}
