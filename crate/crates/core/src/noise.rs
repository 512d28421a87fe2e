//! Seeded Gaussian white noise, injection into both channels, and the SNR
//! metric.
//!
//! `N_A` is the peak bound of the noise: samples are drawn with
//! `σ = sigma_fraction · N_A` and clipped to `±N_A`, so `max |N| ≤ N_A`
//! always holds. Each noise trace is a pure function of its seed and grid
//! length, which is what lets Monte Carlo trials run in any order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::circuit::{apply_circuit, CircuitParams};
use crate::error::{Error, Result};
use crate::trace::{Grid, SampledTrace, ThetaTrace};

pub const DEFAULT_SIGMA_FRACTION: f64 = 1.0 / 3.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    /// Peak bound `N_A`, volts.
    pub amplitude: f64,
    pub seed: u64,
    /// `σ / N_A`.
    pub sigma_fraction: f64,
}

impl NoiseSpec {
    pub fn new(amplitude: f64, seed: u64) -> Self {
        NoiseSpec {
            amplitude,
            seed,
            sigma_fraction: DEFAULT_SIGMA_FRACTION,
        }
    }

    pub fn with_sigma_fraction(mut self, sigma_fraction: f64) -> Self {
        self.sigma_fraction = sigma_fraction;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.amplitude >= 0.0 && self.amplitude.is_finite()) {
            return Err(Error::Config(format!(
                "noise amplitude must be non-negative, got {}",
                self.amplitude
            )));
        }
        if !(self.sigma_fraction > 0.0 && self.sigma_fraction <= 1.0) {
            return Err(Error::Config(format!(
                "sigma fraction must lie in (0, 1], got {}",
                self.sigma_fraction
            )));
        }
        Ok(())
    }

    pub fn sigma(&self) -> f64 {
        self.sigma_fraction * self.amplitude
    }
}

/// SplitMix64 finalizer.
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of noise channel `channel` in Monte Carlo trial `trial`.
///
/// The trial counter is added to the base seed and the result is hashed
/// together with the channel index, so every (trial, channel) pair gets its
/// own stream regardless of which worker runs it.
pub fn derive_seed(base_seed: u64, trial: u64, channel: u64) -> u64 {
    let trial_seed = base_seed.wrapping_add(trial);
    mix64(mix64(trial_seed).wrapping_add(channel.wrapping_mul(0x9e37_79b9_7f4a_7c15)))
}

/// White Gaussian noise on `grid`, clipped to `±N_A`.
pub fn gen_noise(grid: Grid, spec: &NoiseSpec) -> Result<SampledTrace> {
    spec.validate()?;
    if spec.amplitude == 0.0 {
        return SampledTrace::new(grid.start_time, grid.dt, vec![0.0; grid.len]);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let sigma = spec.sigma();
    let bound = spec.amplitude;
    let samples = (0..grid.len)
        .map(|_| {
            let z: f64 = rng.sample(StandardNormal);
            (sigma * z).clamp(-bound, bound)
        })
        .collect();
    SampledTrace::new(grid.start_time, grid.dt, samples)
}

/// SNR in decibels, `20 log10(signal_peak / noise_peak)`.
///
/// A zero noise peak yields `+inf` (noise-free) and a zero signal peak
/// `-inf`.
pub fn snr_db(signal_peak: f64, noise_peak: f64) -> Result<f64> {
    if !(signal_peak >= 0.0) || !(noise_peak >= 0.0) {
        return Err(Error::Domain(format!(
            "peaks must be non-negative, got {signal_peak} and {noise_peak}"
        )));
    }
    if noise_peak == 0.0 {
        return Ok(f64::INFINITY);
    }
    if signal_peak == 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    Ok(20.0 * (signal_peak / noise_peak).log10())
}

/// Θ_IN: the chain output for both channels with independent noise added.
pub fn theta_with_noise(
    i1: &SampledTrace,
    i2: &SampledTrace,
    spec1: &NoiseSpec,
    spec2: &NoiseSpec,
    circuit: &CircuitParams,
) -> Result<ThetaTrace> {
    if spec1.seed == spec2.seed {
        return Err(Error::Config(format!(
            "both channels use noise seed {}; independent channels need distinct seeds",
            spec1.seed
        )));
    }
    i1.grid().check_same(&i2.grid())?;
    let n1 = gen_noise(i1.grid(), spec1)?;
    let n2 = gen_noise(i2.grid(), spec2)?;
    apply_circuit(&i1.add(&n1)?, &i2.add(&n2)?, circuit)
}

/// Θ_IN with one noise realization shared by both channels.
pub fn theta_with_correlated_noise(
    i1: &SampledTrace,
    i2: &SampledTrace,
    spec: &NoiseSpec,
    circuit: &CircuitParams,
) -> Result<ThetaTrace> {
    i1.grid().check_same(&i2.grid())?;
    let n = gen_noise(i1.grid(), spec)?;
    apply_circuit(&i1.add(&n)?, &i2.add(&n)?, circuit)
}
