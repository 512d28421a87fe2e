//! AWVA and SWVA readouts, their normalizations, and the Monte Carlo driver.
//!
//! AWVA reads the drop of the Θ amplitude caused by the delay:
//! `K = (Max[Θ(t)] - Max[Θ(t; δt)]) / δt`, reported in mV/µs and normalized
//! by the noise-free value to give `K^A`. SWVA reads the delay directly from
//! the displaced pointer's peak and normalizes it by the true delay to give
//! `K^W` (written `K^S` in some tables).

use std::sync::Arc;

use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::circuit::{apply_circuit, CircuitParams};
use crate::error::{Error, Result};
use crate::noise::{derive_seed, gen_noise, snr_db, NoiseSpec, DEFAULT_SIGMA_FRACTION};
use crate::trace::{argmax, Grid, SampledTrace, ThetaTrace};
use crate::weak_measurement::{eval_pointer, render_period_samples, PointerParams};

/// V/s to mV/µs.
const V_PER_S_TO_MV_PER_US: f64 = 1e-3;

/// Scope-style amplitude reading of a Θ trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmplitudeReading {
    /// Signed extremum of largest magnitude, volts.
    pub max_value: f64,
    /// Time of that extremum, seconds.
    pub max_time: f64,
    pub trials: usize,
    pub std_dev: f64,
}

impl AmplitudeReading {
    pub fn magnitude(&self) -> f64 {
        self.max_value.abs()
    }

    /// Mean and population standard deviation of single readings.
    pub fn aggregate(readings: &[AmplitudeReading]) -> Result<AmplitudeReading> {
        if readings.is_empty() {
            return Err(Error::Estimation(
                "no amplitude readings to aggregate".into(),
            ));
        }
        let mut value = RunningStats::new();
        let mut time = RunningStats::new();
        for r in readings {
            value.push(r.max_value);
            time.push(r.max_time);
        }
        Ok(AmplitudeReading {
            max_value: value.mean(),
            max_time: time.mean(),
            trials: readings.len(),
            std_dev: value.std_dev(),
        })
    }
}

/// Largest-magnitude sample of `theta`, sign kept.
pub fn read_amplitude(theta: &ThetaTrace) -> AmplitudeReading {
    let values = theta.values();
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if v.abs() > values[best].abs() {
            best = i;
        }
    }
    AmplitudeReading {
        max_value: values[best],
        max_time: theta.time(best),
        trials: 1,
        std_dev: 0.0,
    }
}

/// AWVA sensitivity in mV/µs from amplitudes in volts and a delay in seconds.
pub fn sensitivity_k(max_theta_ref: f64, max_theta_shifted: f64, delta_t: f64) -> Result<f64> {
    if delta_t == 0.0 || !delta_t.is_finite() {
        return Err(Error::Domain(format!(
            "time shift must be non-zero, got {delta_t}"
        )));
    }
    Ok((max_theta_ref - max_theta_shifted) / delta_t * V_PER_S_TO_MV_PER_US)
}

/// Spread of [`sensitivity_k`] from the spreads of its two amplitudes, added
/// linearly, in mV/µs.
pub fn sensitivity_k_std(std_ref: f64, std_shifted: f64, delta_t: f64) -> Result<f64> {
    if delta_t == 0.0 || !delta_t.is_finite() {
        return Err(Error::Domain(format!(
            "time shift must be non-zero, got {delta_t}"
        )));
    }
    Ok((std_ref + std_shifted) / delta_t.abs() * V_PER_S_TO_MV_PER_US)
}

/// `K^A = K / K_ref`.
pub fn normalize_awva(k: f64, k_ref: f64) -> Result<f64> {
    if k_ref == 0.0 || !k_ref.is_finite() {
        return Err(Error::Domain(format!(
            "reference sensitivity must be non-zero, got {k_ref}"
        )));
    }
    Ok(k / k_ref)
}

/// `K^W = δt_scope / δt`.
pub fn normalize_swva(delta_t_scope: f64, delta_t_true: f64) -> Result<f64> {
    if delta_t_true == 0.0 || !delta_t_true.is_finite() {
        return Err(Error::Domain(format!(
            "true delay must be non-zero, got {delta_t_true}"
        )));
    }
    Ok(delta_t_scope / delta_t_true)
}

/// How SWVA locates the displaced pointer.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum SwvaReadout {
    /// Peak of the trace after a circular moving average spanning
    /// `width_fraction` pulse widths. A fraction of 0 reads the raw peak.
    SmoothedArgmax { width_fraction: f64 },
    /// Peak of the circular cross-correlation with the clean template.
    #[default]
    MatchedFilter,
}

/// SWVA delay estimator prepared for one grid and template.
#[derive(Clone)]
pub struct SwvaEstimator {
    grid: Grid,
    template: PointerParams,
    kind: EstimatorKind,
}

#[derive(Clone)]
enum EstimatorKind {
    Smoothed {
        half_window: usize,
    },
    Matched {
        forward: Arc<dyn Fft<f64>>,
        inverse: Arc<dyn Fft<f64>>,
        template_conj: Vec<Complex<f64>>,
    },
}

impl SwvaEstimator {
    pub fn new(grid: Grid, template: &PointerParams, readout: SwvaReadout) -> Result<Self> {
        let covered = grid.len as f64 * grid.dt;
        if (covered - template.period()).abs() > grid.dt {
            return Err(Error::Config(format!(
                "SWVA readout needs one full period ({} s), trace covers {covered} s",
                template.period()
            )));
        }
        let kind = match readout {
            SwvaReadout::SmoothedArgmax { width_fraction } => {
                if !(width_fraction >= 0.0 && width_fraction.is_finite()) {
                    return Err(Error::Config(format!(
                        "smoothing fraction must be non-negative, got {width_fraction}"
                    )));
                }
                let window = width_fraction * template.width() / grid.dt;
                let half_window = ((window - 1.0) / 2.0).round().max(0.0) as usize;
                EstimatorKind::Smoothed {
                    half_window: half_window.min(grid.len.saturating_sub(1) / 2),
                }
            }
            SwvaReadout::MatchedFilter => {
                let mut planner = FftPlanner::new();
                let forward = planner.plan_fft_forward(grid.len);
                let inverse = planner.plan_fft_inverse(grid.len);
                let clean: Vec<f64> = (0..grid.len)
                    .map(|i| eval_pointer(template, 0.0, grid.time(i)))
                    .collect();
                let mean = clean.iter().sum::<f64>() / clean.len() as f64;
                let mut spectrum: Vec<Complex<f64>> =
                    clean.iter().map(|&v| Complex::new(v - mean, 0.0)).collect();
                forward.process(&mut spectrum);
                let template_conj = spectrum.iter().map(|c| c.conj()).collect();
                EstimatorKind::Matched {
                    forward,
                    inverse,
                    template_conj,
                }
            }
        };
        Ok(SwvaEstimator {
            grid,
            template: *template,
            kind,
        })
    }

    /// Estimated displacement of the pointer in `trace` relative to the
    /// undisplaced template, wrapped into `[-T/2, T/2)`.
    pub fn estimate(&self, trace: &SampledTrace) -> Result<f64> {
        self.grid.check_same(&trace.grid())?;
        let samples = trace.samples();
        let n = samples.len();
        let period = self.template.period();
        let (lo, hi) = min_max(samples);
        if !(hi > lo) {
            return Err(Error::Estimation("trace is flat, no peak to locate".into()));
        }
        match &self.kind {
            EstimatorKind::Smoothed { half_window } => {
                let smoothed = circular_moving_average(samples, *half_window);
                let peak = argmax(&smoothed);
                Ok(wrap(self.grid.time(peak) - self.template.center(), period))
            }
            EstimatorKind::Matched {
                forward,
                inverse,
                template_conj,
            } => {
                let mut buf: Vec<Complex<f64>> =
                    samples.iter().map(|&v| Complex::new(v, 0.0)).collect();
                forward.process(&mut buf);
                for (b, t) in buf.iter_mut().zip(template_conj) {
                    *b *= t;
                }
                inverse.process(&mut buf);
                let corr: Vec<f64> = buf.iter().map(|c| c.re).collect();
                let lag = argmax(&corr);
                let lag = if lag >= n.div_ceil(2) {
                    lag as f64 - n as f64
                } else {
                    lag as f64
                };
                Ok(wrap(lag * period / n as f64, period))
            }
        }
    }
}

fn min_max(v: &[f64]) -> (f64, f64) {
    v.iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
            (lo.min(x), hi.max(x))
        })
}

fn wrap(delay: f64, period: f64) -> f64 {
    let half = 0.5 * period;
    if (-half..half).contains(&delay) {
        // leave in-range delays untouched so exact readings stay exact
        return delay;
    }
    (delay + half).rem_euclid(period) - half
}

fn circular_moving_average(samples: &[f64], half_window: usize) -> Vec<f64> {
    let n = samples.len();
    if half_window == 0 {
        return samples.to_vec();
    }
    let width = 2 * half_window + 1;
    let at = |i: isize| samples[i.rem_euclid(n as isize) as usize];
    let mut sum: f64 = (-(half_window as isize)..=half_window as isize)
        .map(at)
        .sum();
    let mut out = Vec::with_capacity(n);
    for i in 0..n as isize {
        out.push(sum / width as f64);
        sum += at(i + half_window as isize + 1) - at(i - half_window as isize);
    }
    out
}

/// SWVA delay estimate with the default matched-filter readout.
pub fn swva_delay_estimate(noisy_i1: &SampledTrace, template: &PointerParams) -> Result<f64> {
    swva_delay_estimate_with(noisy_i1, template, SwvaReadout::default())
}

pub fn swva_delay_estimate_with(
    noisy_i1: &SampledTrace,
    template: &PointerParams,
    readout: SwvaReadout,
) -> Result<f64> {
    SwvaEstimator::new(noisy_i1.grid(), template, readout)?.estimate(noisy_i1)
}

/// Welford mean/variance accumulator. Population statistics.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RunningStats {
    count: usize,
    mean: f64,
    m2: f64,
}

impl RunningStats {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    /// Combines two partial accumulations (Chan et al.).
    pub fn merge(&self, other: &RunningStats) -> RunningStats {
        if self.count == 0 {
            return *other;
        }
        if other.count == 0 {
            return *self;
        }
        let count = self.count + other.count;
        let delta = other.mean - self.mean;
        let mean = self.mean + delta * other.count as f64 / count as f64;
        let m2 = self.m2
            + other.m2
            + delta * delta * (self.count as f64 * other.count as f64) / count as f64;
        RunningStats { count, mean, m2 }
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn mean(&self) -> f64 {
        if self.count == 0 {
            f64::NAN
        } else {
            self.mean
        }
    }

    pub fn std_dev(&self) -> f64 {
        if self.count == 0 {
            f64::NAN
        } else {
            (self.m2 / self.count as f64).sqrt()
        }
    }
}

impl FromIterator<f64> for RunningStats {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = RunningStats::new();
        for x in iter {
            s.push(x);
        }
        s
    }
}

/// Mean and spread of a normalized sensitivity over Monte Carlo trials.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensitivityStats {
    pub mean: f64,
    pub std_dev: f64,
    /// Trials that produced a reading.
    pub trials: usize,
    /// `N_A`, volts.
    pub noise_amplitude: f64,
    pub snr: f64,
}

/// One Monte Carlo experiment: fixed pointer, delay and noise level.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialConfig {
    /// Pointer already scaled to the repetition frequency of interest.
    pub pointer: PointerParams,
    pub delta_t: f64,
    /// `N_A`, volts.
    pub noise_amplitude: f64,
    pub sigma_fraction: f64,
    /// Feed one noise realization to both channels instead of two.
    pub correlated_noise: bool,
    pub samples_per_period: usize,
    pub circuit: CircuitParams,
    pub base_seed: u64,
    pub readout: SwvaReadout,
    /// Worker threads; `None` uses the global pool.
    pub workers: Option<usize>,
}

impl TrialConfig {
    pub fn new(pointer: PointerParams, delta_t: f64, noise_amplitude: f64) -> Self {
        TrialConfig {
            pointer,
            delta_t,
            noise_amplitude,
            sigma_fraction: DEFAULT_SIGMA_FRACTION,
            correlated_noise: false,
            samples_per_period: 5000,
            circuit: CircuitParams::default(),
            base_seed: 0,
            readout: SwvaReadout::default(),
            workers: None,
        }
    }

    fn noise(&self, seed: u64) -> NoiseSpec {
        NoiseSpec::new(self.noise_amplitude, seed).with_sigma_fraction(self.sigma_fraction)
    }
}

/// Aggregated outcome of [`run_trials`].
#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcome {
    /// `K^A` statistics.
    pub awva: SensitivityStats,
    /// `K^W` statistics.
    pub swva: SensitivityStats,
    pub awva_failures: usize,
    pub swva_failures: usize,
    /// Noise-free sensitivity used to normalize `K^A`, mV/µs.
    pub k_ref: f64,
    /// Θ amplitude of the undisplaced measurement over trials.
    pub reference_amplitude: AmplitudeReading,
    /// Θ amplitude of the displaced measurement over trials.
    pub shifted_amplitude: AmplitudeReading,
}

struct TrialSample {
    ka: Option<f64>,
    kw: Option<f64>,
    reference: AmplitudeReading,
    shifted: AmplitudeReading,
}

/// Noise-free chain amplitudes for the reference and displaced measurements.
pub fn clean_amplitudes(
    pointer: &PointerParams,
    delta_t: f64,
    samples_per_period: usize,
    circuit: &CircuitParams,
) -> Result<(AmplitudeReading, AmplitudeReading)> {
    let i1 = render_period_samples(pointer, delta_t, samples_per_period)?;
    let i2 = render_period_samples(pointer, 0.0, samples_per_period)?;
    let reference = read_amplitude(&apply_circuit(&i2, &i2, circuit)?);
    let shifted = read_amplitude(&apply_circuit(&i1, &i2, circuit)?);
    Ok((reference, shifted))
}

/// Runs `job` on a dedicated pool of `workers` threads, or on the global
/// pool when `workers` is `None`.
pub(crate) fn in_pool<T: Send>(
    workers: Option<usize>,
    job: impl FnOnce() -> T + Send,
) -> Result<T> {
    match workers {
        Some(n) => Ok(rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Config(format!("cannot start {n} workers: {e}")))?
            .install(job)),
        None => Ok(job()),
    }
}

/// Runs `trials` independent noisy AWVA and SWVA measurements.
///
/// Each trial draws fresh noise for both channels of the displaced
/// measurement and of the reference measurement; SWVA reads the same noisy
/// displaced channel that feeds the chain. Trials that fail to produce a
/// reading are counted, not folded into the statistics. Results depend only
/// on the configuration, never on the number of workers.
pub fn run_trials(config: &TrialConfig, trials: usize) -> Result<TrialOutcome> {
    if trials < 2 {
        return Err(Error::Config(format!(
            "need at least 2 trials, got {trials}"
        )));
    }
    if config.delta_t == 0.0 || !config.delta_t.is_finite() {
        return Err(Error::Domain(format!(
            "time shift must be non-zero, got {}",
            config.delta_t
        )));
    }
    config.circuit.validate()?;
    config.noise(0).validate()?;

    let pointer = &config.pointer;
    let i1 = render_period_samples(pointer, config.delta_t, config.samples_per_period)?;
    let i2 = render_period_samples(pointer, 0.0, config.samples_per_period)?;
    let grid = i1.grid();

    let (clean_ref, clean_shift) = clean_amplitudes(
        pointer,
        config.delta_t,
        config.samples_per_period,
        &config.circuit,
    )?;
    let k_ref = sensitivity_k(
        clean_ref.magnitude(),
        clean_shift.magnitude(),
        config.delta_t,
    )?;
    if k_ref == 0.0 {
        return Err(Error::Estimation(
            "noise-free sensitivity is zero; the delay does not change the amplitude".into(),
        ));
    }
    let estimator = SwvaEstimator::new(grid, pointer, config.readout)?;

    let run_one = |trial: usize| -> Result<TrialSample> {
        let seed = |ch| derive_seed(config.base_seed, trial as u64, ch);
        let n0 = gen_noise(grid, &config.noise(seed(0)))?;
        let n2 = gen_noise(grid, &config.noise(seed(2)))?;
        let (n1, n3) = if config.correlated_noise {
            (n0.clone(), n2.clone())
        } else {
            (
                gen_noise(grid, &config.noise(seed(1)))?,
                gen_noise(grid, &config.noise(seed(3)))?,
            )
        };
        let noisy_i1 = i1.add(&n0)?;
        let shifted = read_amplitude(&apply_circuit(&noisy_i1, &i2.add(&n1)?, &config.circuit)?);
        let reference = read_amplitude(&apply_circuit(
            &i2.add(&n2)?,
            &i2.add(&n3)?,
            &config.circuit,
        )?);
        let ka = sensitivity_k(reference.magnitude(), shifted.magnitude(), config.delta_t)
            .and_then(|k| normalize_awva(k, k_ref))
            .ok()
            .filter(|v| v.is_finite());
        let kw = match estimator.estimate(&noisy_i1) {
            Ok(delay) => Some(normalize_swva(delay, config.delta_t)?),
            Err(Error::Estimation(_)) => None,
            Err(e) => return Err(e),
        };
        Ok(TrialSample {
            ka,
            kw,
            reference,
            shifted,
        })
    };

    let samples = in_pool(config.workers, || {
        (0..trials)
            .into_par_iter()
            .map(run_one)
            .collect::<Result<Vec<_>>>()
    })??;

    // Aggregate in trial order so the result is independent of scheduling.
    let ka: RunningStats = samples.iter().filter_map(|s| s.ka).collect();
    let kw: RunningStats = samples.iter().filter_map(|s| s.kw).collect();
    let references: Vec<AmplitudeReading> = samples.iter().map(|s| s.reference).collect();
    let shifts: Vec<AmplitudeReading> = samples.iter().map(|s| s.shifted).collect();

    let signal_peak = i1.samples().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let snr = snr_db(signal_peak, config.noise_amplitude)?;
    let stats = |s: &RunningStats| SensitivityStats {
        mean: s.mean(),
        std_dev: s.std_dev(),
        trials: s.count(),
        noise_amplitude: config.noise_amplitude,
        snr,
    };
    Ok(TrialOutcome {
        awva: stats(&ka),
        swva: stats(&kw),
        awva_failures: trials - ka.count(),
        swva_failures: trials - kw.count(),
        k_ref,
        reference_amplitude: AmplitudeReading::aggregate(&references)?,
        shifted_amplitude: AmplitudeReading::aggregate(&shifts)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weak_measurement::render_period;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn sensitivity_from_tabulated_amplitudes() {
        assert!(
            rel(
                sensitivity_k(76.797e-3, 72.278e-3, 100e-6).unwrap(),
                4.519e-2
            ) < 1e-6
        );
        assert!(
            rel(
                sensitivity_k(76.797e-3, 75.978e-3, 50e-6).unwrap(),
                1.638e-2
            ) < 1e-6
        );
        assert_eq!(sensitivity_k(0.05, 0.05, 1e-5).unwrap(), 0.0);
        assert!(matches!(
            sensitivity_k(0.1, 0.09, 0.0),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn sensitivity_spread_adds_linearly() {
        // (0.839 + 0.847) mV / 50 us and (0.219 + 0.178) mV / 10 us
        assert!(
            rel(
                sensitivity_k_std(0.839e-3, 0.847e-3, 50e-6).unwrap(),
                3.372e-2
            ) < 1e-9
        );
        assert!(
            rel(
                sensitivity_k_std(0.219e-3, 0.178e-3, 10e-6).unwrap(),
                3.970e-2
            ) < 1e-9
        );
        assert!(sensitivity_k_std(0.1, 0.1, 0.0).is_err());
    }

    #[test]
    fn normalizations() {
        assert_eq!(normalize_awva(1.208e-2, 1.208e-2).unwrap(), 1.0);
        assert_eq!(normalize_awva(0.0, 1.208e-2).unwrap(), 0.0);
        assert!(rel(1.72 * 1.208e-2, 2.078e-2) < 1e-3);
        assert!(normalize_awva(1.0, 0.0).is_err());
        assert_eq!(normalize_swva(50e-6, 50e-6).unwrap(), 1.0);
        assert_eq!(normalize_swva(-25e-6, 50e-6).unwrap(), -0.5);
        assert!(rel(normalize_swva(52e-6, 50e-6).unwrap(), 1.04) < 1e-12);
        assert!(normalize_swva(1e-6, 0.0).is_err());
    }

    #[test]
    fn amplitude_keeps_sign_of_largest_excursion() {
        let t = ThetaTrace::new(0.0, 1.0, vec![0.0, 0.3, -0.5, 0.4]).unwrap();
        let r = read_amplitude(&t);
        assert_eq!(r.max_value, -0.5);
        assert_eq!(r.max_time, 2.0);
        assert_eq!(r.magnitude(), 0.5);
    }

    #[test]
    fn aggregate_population_std() {
        let mk = |v| AmplitudeReading {
            max_value: v,
            max_time: 0.0,
            trials: 1,
            std_dev: 0.0,
        };
        let agg = AmplitudeReading::aggregate(&[mk(1.0), mk(3.0)]).unwrap();
        assert_eq!(agg.max_value, 2.0);
        assert_eq!(agg.std_dev, 1.0);
        assert_eq!(agg.trials, 2);
        assert!(AmplitudeReading::aggregate(&[]).is_err());
    }

    #[test]
    fn running_stats_merge_matches_sequential() {
        let xs: Vec<f64> = (0..1000).map(|i| ((i * 37) % 101) as f64 * 0.1).collect();
        let all: RunningStats = xs.iter().copied().collect();
        let a: RunningStats = xs[..400].iter().copied().collect();
        let b: RunningStats = xs[400..].iter().copied().collect();
        let m = a.merge(&b);
        assert_eq!(m.count(), all.count());
        assert!((m.mean() - all.mean()).abs() < 1e-12);
        assert!((m.std_dev() - all.std_dev()).abs() < 1e-12);
    }

    #[test]
    fn swva_recovers_clean_delays() {
        let p = PointerParams::reference();
        for shift in [5e-5, 0.0, -3e-5] {
            let trace = render_period(&p, shift, 1e6).unwrap();
            for readout in [
                SwvaReadout::default(),
                SwvaReadout::SmoothedArgmax {
                    width_fraction: 0.0,
                },
                SwvaReadout::MatchedFilter,
            ] {
                let got = swva_delay_estimate_with(&trace, &p, readout).unwrap();
                assert!(
                    (got - shift).abs() <= trace.dt() * 1.0001,
                    "{readout:?} {shift}: {got}"
                );
            }
        }
    }

    #[test]
    fn swva_wraps_into_half_period() {
        let p = PointerParams::reference();
        let trace = render_period(&p, 4.0e-3, 1e6).unwrap();
        let got = swva_delay_estimate(&trace, &p).unwrap();
        assert!((got + 1.0e-3).abs() <= 1.0001e-6, "{got}");
    }

    #[test]
    fn swva_rejects_flat_and_partial_traces() {
        let p = PointerParams::reference();
        let flat = SampledTrace::new(0.0, 1e-6, vec![0.1; 5000]).unwrap();
        assert!(matches!(
            swva_delay_estimate(&flat, &p),
            Err(Error::Estimation(_))
        ));
        assert!(matches!(
            swva_delay_estimate_with(&flat, &p, SwvaReadout::MatchedFilter),
            Err(Error::Estimation(_))
        ));
        let short = SampledTrace::new(0.0, 1e-6, vec![0.1; 3000]).unwrap();
        assert!(matches!(
            swva_delay_estimate(&short, &p),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn moving_average_is_circular() {
        let out = circular_moving_average(&[3.0, 0.0, 0.0, 0.0, 0.0, 0.0], 1);
        assert_eq!(out, vec![1.0, 1.0, 0.0, 0.0, 0.0, 1.0]);
    }

    fn quick_config(noise: f64) -> TrialConfig {
        let mut c = TrialConfig::new(PointerParams::reference(), 5e-5, noise);
        c.samples_per_period = 1000;
        c.base_seed = 17;
        c
    }

    #[test]
    fn noise_free_trials_are_exact() {
        let mut config = quick_config(0.0);
        config.samples_per_period = 5000;
        let out = run_trials(&config, 4).unwrap();
        assert_eq!(out.awva.mean, 1.0);
        assert_eq!(out.awva.std_dev, 0.0);
        assert!((out.swva.mean - 1.0).abs() < 1e-9);
        assert!(out.swva.std_dev < 1e-9);
        assert_eq!(out.awva_failures + out.swva_failures, 0);
        assert_eq!(out.awva.snr, f64::INFINITY);
        assert!(out.k_ref > 0.0);
    }

    #[test]
    fn trials_are_reproducible_and_worker_independent() {
        let mut one = quick_config(0.3);
        one.workers = Some(1);
        let mut four = one.clone();
        four.workers = Some(4);
        let a = run_trials(&one, 64).unwrap();
        let b = run_trials(&four, 64).unwrap();
        assert_eq!(a, b);
        let mut other_seed = one.clone();
        other_seed.base_seed = 18;
        assert_ne!(a.awva.mean, run_trials(&other_seed, 64).unwrap().awva.mean);
    }

    #[test]
    fn run_trials_preconditions() {
        assert!(matches!(
            run_trials(&quick_config(0.1), 1),
            Err(Error::Config(_))
        ));
        let mut c = quick_config(0.1);
        c.delta_t = 0.0;
        assert!(matches!(run_trials(&c, 4), Err(Error::Domain(_))));
    }
}
