//! Seeded Gaussian noise and σ calibration for the binary-tree mechanism.
//!
//! Everything random in this crate flows through [`Xoshiro256pp`], seeded from
//! a single `u64` via SplitMix64, and Gaussian draws use the Marsaglia polar
//! method (the second variate of each accepted pair is cached). Both are
//! implemented here so that a given seed produces the same draws on every
//! platform and toolchain.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// (ε, δ) privacy budget.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrivacyParams {
    epsilon: f64,
    delta: f64,
}

impl PrivacyParams {
    pub fn new(epsilon: f64, delta: f64) -> Result<Self> {
        if !epsilon.is_finite() || epsilon <= 0.0 {
            return Err(Error::Parameter(format!(
                "epsilon must be positive, got {epsilon}"
            )));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::Parameter(format!(
                "delta must lie in (0, 1), got {delta}"
            )));
        }
        Ok(Self { epsilon, delta })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }
}

/// Standard deviation of the Gaussian attached to each tree node.
///
/// `NoiseScale::ZERO` switches noise off entirely; it exists for oracle tests
/// and is never produced by [`calibrate_sigma`].
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct NoiseScale(f64);

impl NoiseScale {
    pub const ZERO: NoiseScale = NoiseScale(0.0);

    pub fn new(sigma: f64) -> Result<Self> {
        if !sigma.is_finite() || sigma < 0.0 {
            return Err(Error::Parameter(format!(
                "sigma must be finite and >= 0, got {sigma}"
            )));
        }
        Ok(Self(sigma))
    }

    pub fn sigma(self) -> f64 {
        self.0
    }

    pub fn is_zero(self) -> bool {
        self.0 == 0.0
    }
}

/// Height of the binary tree over `capacity` time steps: ⌈log₂(capacity + 1)⌉.
///
/// Computed with integer arithmetic so that exact powers of two never round
/// the wrong way.
pub fn tree_height(capacity: u64) -> u32 {
    // smallest h with 2^h >= capacity + 1
    let n = capacity.saturating_add(1);
    if n <= 1 {
        0
    } else {
        64 - (n - 1).leading_zeros()
    }
}

/// σ = ε⁻¹·√(2·h·m·ln(1.25/δ)) with h = ⌈log₂(T+1)⌉.
///
/// `sensitivity` is the number of counters that may differ (by at most one
/// unit in total) between neighbouring inputs.
pub fn calibrate_sigma(
    capacity: u64,
    params: PrivacyParams,
    sensitivity: u32,
) -> Result<NoiseScale> {
    if capacity == 0 {
        return Err(Error::Parameter("capacity must be at least 1".into()));
    }
    if sensitivity == 0 {
        return Err(Error::Parameter("sensitivity must be at least 1".into()));
    }
    let h = tree_height(capacity) as f64;
    let m = sensitivity as f64;
    let sigma = (2.0 * h * m * (1.25 / params.delta()).ln()).sqrt() / params.epsilon();
    NoiseScale::new(sigma)
}

/// SplitMix64 step; used for seeding and for deriving sub-seeds.
pub fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives an independent child seed from `seed` and a stream label.
pub fn derive_seed(seed: u64, label: u64) -> u64 {
    let mut s = seed ^ label.wrapping_mul(0xD6E8_FEB8_6659_FD93);
    splitmix64(&mut s);
    splitmix64(&mut s)
}

/// xoshiro256++ (Blackman & Vigna).
#[derive(Debug, Clone)]
pub struct Xoshiro256pp {
    s: [u64; 4],
}

impl Xoshiro256pp {
    pub fn seed_from_u64(seed: u64) -> Self {
        let mut sm = seed;
        let s = [
            splitmix64(&mut sm),
            splitmix64(&mut sm),
            splitmix64(&mut sm),
            splitmix64(&mut sm),
        ];
        Self { s }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        let s = &mut self.s;
        let result = s[0].wrapping_add(s[3]).rotate_left(23).wrapping_add(s[0]);
        let t = s[1] << 17;
        s[2] ^= s[0];
        s[3] ^= s[1];
        s[1] ^= s[2];
        s[0] ^= s[3];
        s[2] ^= t;
        s[3] = s[3].rotate_left(45);
        result
    }

    /// Uniform in [0, 1) with 53 bits of precision.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in [0, n) (Lemire's multiply-high reduction).
    #[inline]
    pub fn next_below(&mut self, n: u64) -> u64 {
        ((self.next_u64() as u128 * n as u128) >> 64) as u64
    }
}

/// Standard-normal source built on [`Xoshiro256pp`] with the polar method.
#[derive(Debug, Clone)]
pub struct GaussianSampler {
    rng: Xoshiro256pp,
    spare: Option<f64>,
}

impl GaussianSampler {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: Xoshiro256pp::seed_from_u64(seed),
            spare: None,
        }
    }

    /// One N(0, 1) draw.
    #[inline]
    pub fn standard(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        loop {
            let u = 2.0 * self.rng.next_f64() - 1.0;
            let v = 2.0 * self.rng.next_f64() - 1.0;
            let s = u * u + v * v;
            if s > 0.0 && s < 1.0 {
                let factor = (-2.0 * s.ln() / s).sqrt();
                self.spare = Some(v * factor);
                return u * factor;
            }
        }
    }

    /// One N(0, σ²) draw. Returns exactly `0.0` for σ = 0 without consuming
    /// randomness.
    #[inline]
    pub fn sample(&mut self, scale: NoiseScale) -> f64 {
        if scale.is_zero() {
            0.0
        } else {
            scale.sigma() * self.standard()
        }
    }
}

/// Draws once from N(0, σ²) using `sampler`.
pub fn sample_gaussian(scale: NoiseScale, sampler: &mut GaussianSampler) -> f64 {
    sampler.sample(scale)
}
