//! TOML configuration. Every physical quantity carries its unit in the key
//! name; [`ConfigFile::resolve`] converts to SI units once.
//!
//! ```toml
//! base_seed = 20251015
//! trials = 10000
//! samples_per_period = 5000
//!
//! [pointer]
//! amplitude_v = 0.248
//! width_us = 388.0
//! center_us = 171.0
//! offset_v = -0.01
//! reference_frequency_hz = 200.0
//!
//! [sweep_noise]
//! frequencies_hz = [200.0]
//! delta_t_us = [50.0]
//! noise_mv = [0.0, 500.0, 1000.0]
//! ```
//!
//! Omitted keys take the defaults of [`ConfigFile::default`].

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::circuit::{CircuitParams, Polarity};
use crate::error::{Error, Result};
use crate::estimators::SwvaReadout;
use crate::noise::DEFAULT_SIGMA_FRACTION;
use crate::weak_measurement::PointerParams;

/// Fewest samples per period a configuration may request.
pub const MIN_CONFIG_SAMPLES_PER_PERIOD: usize = 1000;

/// Noise amplitudes of the SWVA/AWVA comparison grid, millivolts.
pub const TABLE_NOISE_GRID_MV: [f64; 25] = [
    2.0, 10.0, 20.0, 30.0, 40.0, 50.0, 60.0, 70.0, 80.0, 90.0, 100.0, 200.0, 300.0, 400.0, 500.0,
    600.0, 700.0, 800.0, 900.0, 1000.0, 1200.0, 1400.0, 1600.0, 1800.0, 2000.0,
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigFile {
    pub base_seed: u64,
    /// Monte Carlo trials per noisy grid point.
    pub trials: usize,
    pub samples_per_period: usize,
    /// Worker threads, 0 for one per core.
    pub workers: usize,
    pub pointer: PointerSection,
    pub circuit: CircuitSection,
    pub noise: NoiseSection,
    pub estimator: EstimatorSection,
    pub simulate: SimulateSection,
    pub calibrate: CalibrateSection,
    pub sweep_frequency: FrequencySweepSection,
    pub sweep_noise: NoiseSweepSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PointerSection {
    pub amplitude_v: f64,
    pub width_us: f64,
    pub center_us: f64,
    pub offset_v: f64,
    /// Repetition rate at which `width_us` and `center_us` apply; other
    /// rates scale both in proportion to the period.
    pub reference_frequency_hz: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CircuitSection {
    pub gain_multiplier_per_v: f64,
    pub gain_integrator_per_s: f64,
    pub phase_lag_us: f64,
    pub polarity: i64,
    pub multiplier_limit_v: f64,
    pub integrator_limit_v: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseSection {
    /// Noise standard deviation as a fraction of `N_A`.
    pub sigma_fraction: f64,
    /// One shared noise realization for both channels.
    pub correlated: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReadoutKind {
    SmoothedArgmax,
    MatchedFilter,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimatorSection {
    pub swva_readout: ReadoutKind,
    /// Moving-average span in pulse widths for the smoothed readout.
    pub smoothing_width_fraction: f64,
    /// Largest tolerated fraction of failed trials per grid point.
    pub max_failure_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateSection {
    pub frequency_hz: f64,
    pub delta_t_us: f64,
    /// One set of traces per entry; empty means noise-free.
    pub noise_mv: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CalibrateSection {
    pub frequency_hz: f64,
    pub delta_t_us: f64,
    pub noise_mv: f64,
    pub trials: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FrequencySweepSection {
    pub frequencies_hz: Vec<f64>,
    pub delta_t_us: Vec<f64>,
    /// Read `delta_t_us` at the pointer's reference frequency and scale it
    /// with the period, like the pulse width.
    pub scale_delta_t_with_frequency: bool,
    pub noise_mv: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseSweepSection {
    pub frequencies_hz: Vec<f64>,
    pub delta_t_us: Vec<f64>,
    pub noise_mv: Vec<f64>,
}

impl Default for ConfigFile {
    fn default() -> Self {
        ConfigFile {
            base_seed: 20_251_015,
            trials: 10_000,
            samples_per_period: 5000,
            workers: 0,
            pointer: PointerSection::default(),
            circuit: CircuitSection::default(),
            noise: NoiseSection::default(),
            estimator: EstimatorSection::default(),
            simulate: SimulateSection::default(),
            calibrate: CalibrateSection::default(),
            sweep_frequency: FrequencySweepSection::default(),
            sweep_noise: NoiseSweepSection::default(),
        }
    }
}

impl Default for PointerSection {
    fn default() -> Self {
        PointerSection {
            amplitude_v: PointerParams::REFERENCE_AMPLITUDE,
            width_us: 388.0,
            center_us: 171.0,
            offset_v: PointerParams::REFERENCE_OFFSET,
            reference_frequency_hz: PointerParams::REFERENCE_FREQUENCY,
        }
    }
}

impl Default for CircuitSection {
    fn default() -> Self {
        CircuitSection {
            gain_multiplier_per_v: 1.87,
            gain_integrator_per_s: 4470.0,
            phase_lag_us: 75.0,
            polarity: -1,
            multiplier_limit_v: 1.0,
            integrator_limit_v: 10.0,
        }
    }
}

impl Default for NoiseSection {
    fn default() -> Self {
        NoiseSection {
            sigma_fraction: DEFAULT_SIGMA_FRACTION,
            correlated: false,
        }
    }
}

impl Default for EstimatorSection {
    fn default() -> Self {
        EstimatorSection {
            swva_readout: ReadoutKind::MatchedFilter,
            smoothing_width_fraction: 0.1,
            max_failure_fraction: 0.01,
        }
    }
}

impl Default for SimulateSection {
    fn default() -> Self {
        SimulateSection {
            frequency_hz: 200.0,
            delta_t_us: 0.0,
            noise_mv: Vec::new(),
        }
    }
}

impl Default for CalibrateSection {
    fn default() -> Self {
        CalibrateSection {
            frequency_hz: 200.0,
            delta_t_us: 0.0,
            noise_mv: 10.0,
            trials: 100,
        }
    }
}

impl Default for FrequencySweepSection {
    fn default() -> Self {
        FrequencySweepSection {
            frequencies_hz: vec![200.0, 2000.0, 20_000.0],
            delta_t_us: vec![50.0, 100.0],
            scale_delta_t_with_frequency: true,
            noise_mv: vec![0.0],
        }
    }
}

impl Default for NoiseSweepSection {
    fn default() -> Self {
        NoiseSweepSection {
            frequencies_hz: vec![200.0],
            delta_t_us: vec![50.0],
            noise_mv: TABLE_NOISE_GRID_MV.to_vec(),
        }
    }
}

/// Sweep axes in SI units.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    /// Hertz.
    pub frequencies: Vec<f64>,
    /// Seconds, as given (before any frequency scaling).
    pub delta_ts: Vec<f64>,
    /// Volts.
    pub noise_amplitudes: Vec<f64>,
    pub scale_delta_t_with_frequency: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulateSpec {
    pub frequency: f64,
    pub delta_t: f64,
    /// Volts; never empty after resolution.
    pub noise_amplitudes: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrateSpec {
    pub frequency: f64,
    pub delta_t: f64,
    pub noise_amplitude: f64,
    pub trials: usize,
}

/// Fully validated configuration in SI units.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    /// Pulse at its reference frequency.
    pub pointer: PointerParams,
    pub circuit: CircuitParams,
    pub sigma_fraction: f64,
    pub correlated_noise: bool,
    pub readout: SwvaReadout,
    pub max_failure_fraction: f64,
    pub samples_per_period: usize,
    pub base_seed: u64,
    pub trials: usize,
    pub workers: Option<usize>,
    pub simulate: SimulateSpec,
    pub calibrate: CalibrateSpec,
    pub frequency_sweep: SweepConfig,
    pub noise_sweep: SweepConfig,
}

impl ConfigFile {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("configuration always serializes")
    }

    pub fn resolve(&self) -> Result<ExperimentConfig> {
        // Divide rather than multiply so that e.g. 171 µs maps to exactly 171e-6 s.
        let us = 1e6;
        let mv = 1e3;
        let p = &self.pointer;
        let pointer = PointerParams::new(
            p.amplitude_v,
            p.width_us / us,
            p.center_us / us,
            p.offset_v,
            p.reference_frequency_hz,
        )?;

        let c = &self.circuit;
        let circuit = CircuitParams {
            gain_multiplier: c.gain_multiplier_per_v,
            gain_integrator: c.gain_integrator_per_s,
            phase_lag: c.phase_lag_us / us,
            polarity: Polarity::from_sign(c.polarity)?,
            multiplier_limit: c.multiplier_limit_v,
            integrator_limit: c.integrator_limit_v,
        };
        circuit.validate()?;

        if !(self.noise.sigma_fraction > 0.0 && self.noise.sigma_fraction <= 1.0) {
            return Err(Error::Config(format!(
                "noise.sigma_fraction must lie in (0, 1], got {}",
                self.noise.sigma_fraction
            )));
        }
        let e = &self.estimator;
        if !(e.smoothing_width_fraction >= 0.0 && e.smoothing_width_fraction.is_finite()) {
            return Err(Error::Config(
                "estimator.smoothing_width_fraction must be non-negative".into(),
            ));
        }
        if !(0.0..=1.0).contains(&e.max_failure_fraction) {
            return Err(Error::Config(
                "estimator.max_failure_fraction must lie in [0, 1]".into(),
            ));
        }
        let readout = match e.swva_readout {
            ReadoutKind::SmoothedArgmax => SwvaReadout::SmoothedArgmax {
                width_fraction: e.smoothing_width_fraction,
            },
            ReadoutKind::MatchedFilter => SwvaReadout::MatchedFilter,
        };

        if self.samples_per_period < MIN_CONFIG_SAMPLES_PER_PERIOD {
            return Err(Error::Config(format!(
                "samples_per_period must be at least {MIN_CONFIG_SAMPLES_PER_PERIOD}, got {}",
                self.samples_per_period
            )));
        }
        if self.trials < 1 {
            return Err(Error::Config("trials must be at least 1".into()));
        }

        let frequencies = |name: &str, v: &[f64]| -> Result<Vec<f64>> {
            non_empty(name, v)?;
            for &f in v {
                if !(f > 0.0 && f.is_finite()) {
                    return Err(Error::Config(format!(
                        "{name}: frequency must be positive, got {f}"
                    )));
                }
                pointer.at_frequency(f)?;
            }
            Ok(v.to_vec())
        };
        let delays = |name: &str, v: &[f64]| -> Result<Vec<f64>> {
            non_empty(name, v)?;
            v.iter()
                .map(|&d| {
                    if d == 0.0 || !d.is_finite() {
                        Err(Error::Config(format!(
                            "{name}: delay must be non-zero, got {d}"
                        )))
                    } else {
                        Ok(d / us)
                    }
                })
                .collect()
        };
        let noises = |name: &str, v: &[f64]| -> Result<Vec<f64>> {
            v.iter()
                .map(|&n| {
                    if !(n >= 0.0 && n.is_finite()) {
                        Err(Error::Config(format!(
                            "{name}: noise must be non-negative, got {n}"
                        )))
                    } else {
                        Ok(n / mv)
                    }
                })
                .collect()
        };

        let fs = &self.sweep_frequency;
        non_empty("sweep_frequency.noise_mv", &fs.noise_mv)?;
        let frequency_sweep = SweepConfig {
            frequencies: frequencies("sweep_frequency.frequencies_hz", &fs.frequencies_hz)?,
            delta_ts: delays("sweep_frequency.delta_t_us", &fs.delta_t_us)?,
            noise_amplitudes: noises("sweep_frequency.noise_mv", &fs.noise_mv)?,
            scale_delta_t_with_frequency: fs.scale_delta_t_with_frequency,
        };
        let ns = &self.sweep_noise;
        non_empty("sweep_noise.noise_mv", &ns.noise_mv)?;
        let noise_sweep = SweepConfig {
            frequencies: frequencies("sweep_noise.frequencies_hz", &ns.frequencies_hz)?,
            delta_ts: delays("sweep_noise.delta_t_us", &ns.delta_t_us)?,
            noise_amplitudes: noises("sweep_noise.noise_mv", &ns.noise_mv)?,
            scale_delta_t_with_frequency: false,
        };

        let s = &self.simulate;
        frequencies("simulate.frequency_hz", &[s.frequency_hz])?;
        let mut sim_noise = noises("simulate.noise_mv", &s.noise_mv)?;
        if sim_noise.is_empty() {
            sim_noise.push(0.0);
        }
        let simulate = SimulateSpec {
            frequency: s.frequency_hz,
            delta_t: s.delta_t_us / us,
            noise_amplitudes: sim_noise,
        };

        let k = &self.calibrate;
        frequencies("calibrate.frequency_hz", &[k.frequency_hz])?;
        let calibrate = CalibrateSpec {
            frequency: k.frequency_hz,
            delta_t: k.delta_t_us / us,
            noise_amplitude: noises("calibrate.noise_mv", &[k.noise_mv])?[0],
            trials: k.trials.max(1),
        };

        Ok(ExperimentConfig {
            pointer,
            circuit,
            sigma_fraction: self.noise.sigma_fraction,
            correlated_noise: self.noise.correlated,
            readout,
            max_failure_fraction: e.max_failure_fraction,
            samples_per_period: self.samples_per_period,
            base_seed: self.base_seed,
            trials: self.trials,
            workers: (self.workers > 0).then_some(self.workers),
            simulate,
            calibrate,
            frequency_sweep,
            noise_sweep,
        })
    }
}

fn non_empty(name: &str, v: &[f64]) -> Result<()> {
    if v.is_empty() {
        Err(Error::Config(format!("{name} must not be empty")))
    } else {
        Ok(())
    }
}

impl ExperimentConfig {
    /// Command-line overrides.
    pub fn with_overrides(mut self, seed: Option<u64>, trials: Option<usize>) -> Result<Self> {
        if let Some(seed) = seed {
            self.base_seed = seed;
        }
        if let Some(trials) = trials {
            if trials < 1 {
                return Err(Error::Config("trials must be at least 1".into()));
            }
            self.trials = trials;
            self.calibrate.trials = trials;
        }
        Ok(self)
    }

    /// Delay actually applied at `frequency` for a configured delay.
    pub fn sweep_delay(&self, sweep: &SweepConfig, delta_t: f64, frequency: f64) -> f64 {
        if sweep.scale_delta_t_with_frequency {
            delta_t * self.pointer.frequency() / frequency
        } else {
            delta_t
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_resolve() {
        let c = ConfigFile::default().resolve().unwrap();
        assert_eq!(c.pointer, PointerParams::reference());
        assert_eq!(c.circuit, CircuitParams::default());
        assert_eq!(c.noise_sweep.noise_amplitudes.len(), 25);
        assert_eq!(c.simulate.noise_amplitudes, vec![0.0]);
        assert_eq!(c.readout, SwvaReadout::MatchedFilter);
    }

    #[test]
    fn table_delays_follow_the_period() {
        let c = ConfigFile::default().resolve().unwrap();
        let s = &c.frequency_sweep;
        let at = |d: f64, f: f64| c.sweep_delay(s, d, f);
        assert!((at(50e-6, 2000.0) - 5e-6).abs() < 1e-18);
        assert!((at(100e-6, 20_000.0) - 1e-6).abs() < 1e-18);
    }

    #[test]
    fn partial_file_keeps_defaults() {
        let c =
            ConfigFile::from_toml("trials = 12\n[sweep_noise]\nnoise_mv = [0.0, 500.0]\n").unwrap();
        assert_eq!(c.trials, 12);
        assert_eq!(c.sweep_noise.frequencies_hz, vec![200.0]);
        let r = c.resolve().unwrap();
        assert_eq!(r.noise_sweep.noise_amplitudes, vec![0.0, 0.5]);
    }

    #[test]
    fn toml_round_trip() {
        let c = ConfigFile::default();
        assert_eq!(ConfigFile::from_toml(&c.to_toml()).unwrap(), c);
    }

    #[test]
    fn rejects_bad_values() {
        for text in [
            "unknown_key = 1",
            "samples_per_period = 500",
            "[circuit]\npolarity = 0",
            "[noise]\nsigma_fraction = 0.0",
            "[sweep_noise]\nnoise_mv = []",
            "[sweep_noise]\nnoise_mv = [-5.0]",
            "[sweep_frequency]\ndelta_t_us = [0.0]",
            "[sweep_frequency]\nfrequencies_hz = [-5.0]",
            "[estimator]\nswva_readout = \"psychic\"",
        ] {
            let res = ConfigFile::from_toml(text).and_then(|c| c.resolve());
            assert!(matches!(res, Err(Error::Config(_))), "{text} -> {res:?}");
        }
    }

    #[test]
    fn overrides() {
        let c = ConfigFile::default()
            .resolve()
            .unwrap()
            .with_overrides(Some(9), Some(50))
            .unwrap();
        assert_eq!((c.base_seed, c.trials, c.calibrate.trials), (9, 50, 50));
    }
}
