//! Experiment drivers. Each `run_*`/`simulate`/`calibrate*` function returns
//! its results in memory; the `cmd_*` wrappers also write them as CSV.
//!
//! CSV files carry one header row with units in the column names and format
//! every number with Rust's shortest round-trip representation, so the same
//! configuration and seed always produce byte-identical files.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::circuit::{apply_circuit, calibrate_phase, scope_capture};
use crate::correlator::{attenuation_ratio, theta_numeric};
use crate::error::{Error, Result};
use crate::estimators::{
    clean_amplitudes, in_pool, read_amplitude, run_trials, sensitivity_k, sensitivity_k_std,
    AmplitudeReading, SensitivityStats, TrialConfig,
};
use crate::noise::{derive_seed, gen_noise, NoiseSpec};
use crate::trace::{Grid, SampledTrace, ThetaTrace};
use crate::weak_measurement::{eval_pointer, render_period_samples, PointerParams};

use super::config::{ExperimentConfig, SweepConfig};
use super::scope::{ingest_scope_csv, read_scope_csv, ColumnSelection};

/// Files written by a command plus human-readable summary lines.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CommandReport {
    pub files: Vec<PathBuf>,
    pub summary: Vec<String>,
    /// Some grid point lost more trials than the configured limit allows.
    pub failure_limit_exceeded: bool,
}

fn trial_config(
    cfg: &ExperimentConfig,
    pointer: PointerParams,
    delta_t: f64,
    noise: f64,
) -> TrialConfig {
    TrialConfig {
        pointer,
        delta_t,
        noise_amplitude: noise,
        sigma_fraction: cfg.sigma_fraction,
        correlated_noise: cfg.correlated_noise,
        samples_per_period: cfg.samples_per_period,
        circuit: cfg.circuit,
        base_seed: cfg.base_seed,
        readout: cfg.readout,
        workers: cfg.workers,
    }
}

fn noise_spec(cfg: &ExperimentConfig, amplitude: f64, seed: u64) -> NoiseSpec {
    NoiseSpec::new(amplitude, seed).with_sigma_fraction(cfg.sigma_fraction)
}

// ---------------------------------------------------------------- simulate

/// Every trace of one simulated measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct Simulation {
    pub frequency: f64,
    pub delta_t: f64,
    pub noise_amplitude: f64,
    /// Displaced channel I1.
    pub i1: SampledTrace,
    /// Reference channel I2.
    pub i2: SampledTrace,
    pub noisy_i1: SampledTrace,
    pub noisy_i2: SampledTrace,
    /// Θ of the clean channels.
    pub theta: ThetaTrace,
    /// Θ of the noisy channels.
    pub theta_noisy: ThetaTrace,
    /// Circuit output for the noisy channels, on its own (lagged) time axis.
    pub observed: ThetaTrace,
}

pub fn simulate(cfg: &ExperimentConfig, noise_amplitude: f64) -> Result<Simulation> {
    let spec = &cfg.simulate;
    let pointer = cfg.pointer.at_frequency(spec.frequency)?;
    let i1 = render_period_samples(&pointer, spec.delta_t, cfg.samples_per_period)?;
    let i2 = render_period_samples(&pointer, 0.0, cfg.samples_per_period)?;
    let grid = i1.grid();
    let n1 = gen_noise(
        grid,
        &noise_spec(cfg, noise_amplitude, derive_seed(cfg.base_seed, 0, 0)),
    )?;
    let n2 = if cfg.correlated_noise {
        n1.clone()
    } else {
        gen_noise(
            grid,
            &noise_spec(cfg, noise_amplitude, derive_seed(cfg.base_seed, 0, 1)),
        )?
    };
    let noisy_i1 = i1.add(&n1)?;
    let noisy_i2 = i2.add(&n2)?;
    Ok(Simulation {
        frequency: spec.frequency,
        delta_t: spec.delta_t,
        noise_amplitude,
        theta: theta_numeric(&i1, &i2)?,
        theta_noisy: theta_numeric(&noisy_i1, &noisy_i2)?,
        observed: apply_circuit(&noisy_i1, &noisy_i2, &cfg.circuit)?,
        i1,
        i2,
        noisy_i1,
        noisy_i2,
    })
}

pub fn cmd_simulate(cfg: &ExperimentConfig, out_dir: &Path) -> Result<CommandReport> {
    let mut report = CommandReport::default();
    for &noise in &cfg.simulate.noise_amplitudes {
        let sim = simulate(cfg, noise)?;
        let stem = format!("simulate_na{}mv", noise * 1e3);
        let gain = cfg.circuit.polarity.sign() * cfg.circuit.composite_gain();

        let traces = out_dir.join(format!("{stem}.csv"));
        let rows = (0..sim.i1.len()).map(|i| {
            vec![
                sim.i1.time(i),
                sim.i1.samples()[i],
                sim.i2.samples()[i],
                sim.noisy_i1.samples()[i],
                sim.noisy_i2.samples()[i],
                sim.theta.values()[i],
                sim.theta_noisy.values()[i],
                gain * sim.theta.values()[i],
            ]
        });
        write_csv(
            &traces,
            &[
                "time_s",
                "i1_v",
                "i2_v",
                "i1_noisy_v",
                "i2_noisy_v",
                "theta_v2s",
                "theta_noisy_v2s",
                "theta_scaled_v",
            ],
            rows,
        )?;

        let observed = out_dir.join(format!("{stem}_observed.csv"));
        write_csv(
            &observed,
            &["time_s", "observed_v"],
            (0..sim.observed.len()).map(|i| vec![sim.observed.time(i), sim.observed.values()[i]]),
        )?;

        let amplitude = read_amplitude(&sim.observed);
        report.summary.push(format!(
            "N_A = {} mV: observed peak {} V at {} s, final Θ {} V²s",
            noise * 1e3,
            amplitude.max_value,
            amplitude.max_time,
            sim.theta_noisy.last()
        ));
        report.files.push(traces);
        report.files.push(observed);
    }
    Ok(report)
}

// --------------------------------------------------------- frequency sweep

/// One row of the frequency/delay sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencySweepRow {
    pub frequency: f64,
    /// Applied delay, seconds.
    pub delta_t: f64,
    pub noise_amplitude: f64,
    pub reference: AmplitudeReading,
    pub shifted: AmplitudeReading,
    /// `|max Θ_shifted| / |max Θ_ref|`.
    pub amplitude_ratio: f64,
    /// `exp(-δt² / 8ω²)` for the pulse at this frequency.
    pub gaussian_ratio: f64,
    /// mV/µs.
    pub k: f64,
    pub k_std: f64,
}

pub fn run_frequency_sweep(cfg: &ExperimentConfig) -> Result<Vec<FrequencySweepRow>> {
    let sweep = &cfg.frequency_sweep;
    let mut rows = Vec::new();
    for &frequency in &sweep.frequencies {
        let pointer = cfg.pointer.at_frequency(frequency)?;
        for &configured in &sweep.delta_ts {
            let delta_t = cfg.sweep_delay(sweep, configured, frequency);
            for &noise in &sweep.noise_amplitudes {
                let (reference, shifted) = if noise == 0.0 {
                    clean_amplitudes(&pointer, delta_t, cfg.samples_per_period, &cfg.circuit)?
                } else {
                    let outcome =
                        run_trials(&trial_config(cfg, pointer, delta_t, noise), cfg.trials)?;
                    (outcome.reference_amplitude, outcome.shifted_amplitude)
                };
                rows.push(FrequencySweepRow {
                    frequency,
                    delta_t,
                    noise_amplitude: noise,
                    amplitude_ratio: shifted.magnitude() / reference.magnitude(),
                    gaussian_ratio: attenuation_ratio(delta_t, pointer.omega())?,
                    k: sensitivity_k(reference.magnitude(), shifted.magnitude(), delta_t)?,
                    k_std: sensitivity_k_std(reference.std_dev, shifted.std_dev, delta_t)?,
                    reference,
                    shifted,
                });
            }
        }
    }
    Ok(rows)
}

pub const FREQUENCY_SWEEP_HEADER: [&str; 12] = [
    "frequency_hz",
    "delta_t_us",
    "noise_mv",
    "trials",
    "max_theta_ref_v",
    "max_theta_ref_std_v",
    "max_theta_shifted_v",
    "max_theta_shifted_std_v",
    "amplitude_ratio",
    "gaussian_ratio",
    "k_mv_per_us",
    "k_std_mv_per_us",
];

pub fn write_frequency_sweep(path: &Path, rows: &[FrequencySweepRow]) -> Result<()> {
    write_csv(
        path,
        &FREQUENCY_SWEEP_HEADER,
        rows.iter().map(|r| {
            vec![
                r.frequency,
                r.delta_t * 1e6,
                r.noise_amplitude * 1e3,
                r.reference.trials as f64,
                r.reference.max_value,
                r.reference.std_dev,
                r.shifted.max_value,
                r.shifted.std_dev,
                r.amplitude_ratio,
                r.gaussian_ratio,
                r.k,
                r.k_std,
            ]
        }),
    )
}

pub fn cmd_sweep_frequency(cfg: &ExperimentConfig, out_dir: &Path) -> Result<CommandReport> {
    let rows = run_frequency_sweep(cfg)?;
    let path = out_dir.join("sweep_frequency.csv");
    write_frequency_sweep(&path, &rows)?;
    let summary = rows
        .iter()
        .map(|r| {
            format!(
                "f = {} Hz, δt = {} µs: ratio {:.6} (gaussian {:.6}), K = {:.4} ± {:.4} mV/µs",
                r.frequency,
                r.delta_t * 1e6,
                r.amplitude_ratio,
                r.gaussian_ratio,
                r.k,
                r.k_std
            )
        })
        .collect();
    Ok(CommandReport {
        files: vec![path],
        summary,
        failure_limit_exceeded: false,
    })
}

// ------------------------------------------------------------- noise sweep

/// One row of the SWVA/AWVA noise comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSweepRow {
    pub frequency: f64,
    pub delta_t: f64,
    pub noise_amplitude: f64,
    pub trials: usize,
    pub snr: f64,
    /// `K^W`.
    pub swva: SensitivityStats,
    /// `K^A`.
    pub awva: SensitivityStats,
    /// Noise-free sensitivity, mV/µs.
    pub k_ref: f64,
    pub swva_failures: usize,
    pub awva_failures: usize,
}

impl NoiseSweepRow {
    /// AWVA reading spreads less than SWVA at this noise level.
    pub fn awva_better(&self) -> bool {
        self.awva.trials > 1 && self.swva.trials > 1 && self.awva.std_dev < self.swva.std_dev
    }

    pub fn failure_fraction(&self) -> f64 {
        self.swva_failures.max(self.awva_failures) as f64 / self.trials as f64
    }
}

pub fn run_noise_sweep(cfg: &ExperimentConfig, sweep: &SweepConfig) -> Result<Vec<NoiseSweepRow>> {
    let mut rows = Vec::new();
    for &frequency in &sweep.frequencies {
        let pointer = cfg.pointer.at_frequency(frequency)?;
        for &configured in &sweep.delta_ts {
            let delta_t = cfg.sweep_delay(sweep, configured, frequency);
            for &noise in &sweep.noise_amplitudes {
                let outcome = run_trials(&trial_config(cfg, pointer, delta_t, noise), cfg.trials)?;
                rows.push(NoiseSweepRow {
                    frequency,
                    delta_t,
                    noise_amplitude: noise,
                    trials: cfg.trials,
                    snr: outcome.awva.snr,
                    swva: outcome.swva,
                    awva: outcome.awva,
                    k_ref: outcome.k_ref,
                    swva_failures: outcome.swva_failures,
                    awva_failures: outcome.awva_failures,
                });
            }
        }
    }
    Ok(rows)
}

/// Noise range over which AWVA beats SWVA for one (frequency, delay) pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdvantageBand {
    pub frequency: f64,
    pub delta_t: f64,
    /// Lowest and highest noise amplitude of the longest run of consecutive
    /// rows in which AWVA beats SWVA; `None` if it never does.
    pub noise_range: Option<(f64, f64)>,
}

pub fn awva_advantage_bands(rows: &[NoiseSweepRow]) -> Vec<AdvantageBand> {
    let mut bands: Vec<AdvantageBand> = Vec::new();
    let mut best_len = 0;
    let mut run: Option<(f64, usize)> = None;
    for (i, row) in rows.iter().enumerate() {
        let new_group =
            i == 0 || rows[i - 1].frequency != row.frequency || rows[i - 1].delta_t != row.delta_t;
        if new_group {
            bands.push(AdvantageBand {
                frequency: row.frequency,
                delta_t: row.delta_t,
                noise_range: None,
            });
            best_len = 0;
            run = None;
        }
        if row.awva_better() {
            let (lo, len) = run.map_or((row.noise_amplitude, 1), |(lo, len)| (lo, len + 1));
            if len > best_len {
                best_len = len;
                bands.last_mut().expect("group exists").noise_range =
                    Some((lo, row.noise_amplitude));
            }
            run = Some((lo, len));
        } else {
            run = None;
        }
    }
    bands
}

pub const NOISE_SWEEP_HEADER: [&str; 14] = [
    "frequency_hz",
    "delta_t_us",
    "noise_mv",
    "trials",
    "snr_db",
    "kw_mean",
    "kw_std",
    "ka_mean",
    "ka_std",
    "k_ref_mv_per_us",
    "swva_failures",
    "awva_failures",
    "awva_better",
    "kw_trials",
];

pub fn write_noise_sweep(path: &Path, rows: &[NoiseSweepRow]) -> Result<()> {
    let records = rows.iter().map(|r| {
        vec![
            r.frequency.to_string(),
            (r.delta_t * 1e6).to_string(),
            (r.noise_amplitude * 1e3).to_string(),
            r.trials.to_string(),
            r.snr.to_string(),
            r.swva.mean.to_string(),
            r.swva.std_dev.to_string(),
            r.awva.mean.to_string(),
            r.awva.std_dev.to_string(),
            r.k_ref.to_string(),
            r.swva_failures.to_string(),
            r.awva_failures.to_string(),
            r.awva_better().to_string(),
            r.swva.trials.to_string(),
        ]
    });
    write_records(path, &NOISE_SWEEP_HEADER, records)
}

pub fn cmd_sweep_noise(cfg: &ExperimentConfig, out_dir: &Path) -> Result<CommandReport> {
    let rows = run_noise_sweep(cfg, &cfg.noise_sweep)?;
    let path = out_dir.join("sweep_noise.csv");
    write_noise_sweep(&path, &rows)?;
    let mut summary = Vec::new();
    let mut exceeded = false;
    for r in &rows {
        let fraction = r.failure_fraction();
        if fraction > cfg.max_failure_fraction {
            exceeded = true;
            summary.push(format!(
                "f = {} Hz, δt = {} µs, N_A = {} mV: {:.2}% of trials failed (limit {:.2}%)",
                r.frequency,
                r.delta_t * 1e6,
                r.noise_amplitude * 1e3,
                fraction * 100.0,
                cfg.max_failure_fraction * 100.0
            ));
        }
    }
    for AdvantageBand {
        frequency,
        delta_t,
        noise_range,
    } in awva_advantage_bands(&rows)
    {
        summary.push(match noise_range {
            Some((lo, hi)) => format!(
                "f = {frequency} Hz, δt = {} µs: AWVA spread below SWVA for N_A in [{}, {}] mV",
                delta_t * 1e6,
                lo * 1e3,
                hi * 1e3
            ),
            None => format!(
                "f = {frequency} Hz, δt = {} µs: AWVA spread never below SWVA",
                delta_t * 1e6
            ),
        });
    }
    Ok(CommandReport {
        files: vec![path],
        summary,
        failure_limit_exceeded: exceeded,
    })
}

// ------------------------------------------------------ phase calibration

/// Ideal running integral for the calibration pulse pair on an arbitrary
/// acquisition grid.
fn calibration_ideal(cfg: &ExperimentConfig, grid: Grid) -> Result<ThetaTrace> {
    let spec = &cfg.calibrate;
    let pointer = cfg.pointer.at_frequency(spec.frequency)?;
    let i1 = SampledTrace::from_fn(grid, |t| eval_pointer(&pointer, spec.delta_t, t));
    let i2 = SampledTrace::from_fn(grid, |t| eval_pointer(&pointer, 0.0, t));
    theta_numeric(&i1, &i2)
}

/// Recovers the chain's phase lag from simulated scope captures, one per
/// trial, each with fresh channel noise.
pub fn calibrate(cfg: &ExperimentConfig) -> Result<Vec<f64>> {
    let spec = &cfg.calibrate;
    let pointer = cfg.pointer.at_frequency(spec.frequency)?;
    let i1 = render_period_samples(&pointer, spec.delta_t, cfg.samples_per_period)?;
    let i2 = render_period_samples(&pointer, 0.0, cfg.samples_per_period)?;
    let grid = i1.grid();
    let ideal = theta_numeric(&i1, &i2)?;
    let one = |trial: usize| -> Result<f64> {
        let seed = |ch| derive_seed(cfg.base_seed, trial as u64, ch);
        let n1 = gen_noise(grid, &noise_spec(cfg, spec.noise_amplitude, seed(0)))?;
        let n2 = gen_noise(grid, &noise_spec(cfg, spec.noise_amplitude, seed(1)))?;
        let output = apply_circuit(&i1.add(&n1)?, &i2.add(&n2)?, &cfg.circuit)?;
        calibrate_phase(&scope_capture(&output, grid), &ideal)
    };
    in_pool(cfg.workers, || {
        (0..spec.trials).into_par_iter().map(one).collect()
    })?
}

/// Recovers the phase lag of a recorded chain output (time column plus one
/// value column) against the configured calibration pulse pair. The
/// recording's time axis must count from the start of a pulse period.
pub fn calibrate_recording(
    cfg: &ExperimentConfig,
    path: &Path,
    selection: &ColumnSelection,
) -> Result<f64> {
    let recorded = read_scope_csv(path, selection, 1)?
        .pop()
        .expect("one channel");
    let grid = recorded.grid();
    let observed = ThetaTrace::new(grid.start_time, grid.dt, recorded.into_samples())?;
    // The ideal integral starts with the pulse period at t = 0, the trigger.
    let ideal_grid = Grid::new(0.0, grid.dt, grid.len)?;
    calibrate_phase(&observed, &calibration_ideal(cfg, ideal_grid)?)
}

pub fn cmd_calibrate_phase(
    cfg: &ExperimentConfig,
    recording: Option<(&Path, &ColumnSelection)>,
    out_dir: &Path,
) -> Result<CommandReport> {
    let path = out_dir.join("calibrate_phase.csv");
    let lags = match recording {
        Some((input, selection)) => vec![calibrate_recording(cfg, input, selection)?],
        None => calibrate(cfg)?,
    };
    write_csv(
        &path,
        &["trial", "phase_lag_us"],
        lags.iter()
            .enumerate()
            .map(|(i, lag)| vec![i as f64, lag * 1e6]),
    )?;
    let mean = lags.iter().sum::<f64>() / lags.len() as f64;
    let spread = lags.iter().fold(0.0f64, |m, lag| m.max((lag - mean).abs()));
    Ok(CommandReport {
        files: vec![path],
        summary: vec![format!(
            "recovered phase lag {} µs over {} capture(s), max deviation {} µs",
            mean * 1e6,
            lags.len(),
            spread * 1e6
        )],
        failure_limit_exceeded: false,
    })
}

// ------------------------------------------------------------------ ingest

/// Θ and the chain output computed from a recorded pair of channels.
#[derive(Debug, Clone, PartialEq)]
pub struct Ingested {
    pub i1: SampledTrace,
    pub i2: SampledTrace,
    pub theta: ThetaTrace,
    pub observed: ThetaTrace,
}

pub fn ingest(
    cfg: &ExperimentConfig,
    path: &Path,
    selection: &ColumnSelection,
) -> Result<Ingested> {
    let (i1, i2) = ingest_scope_csv(path, selection)?;
    Ok(Ingested {
        theta: theta_numeric(&i1, &i2)?,
        observed: apply_circuit(&i1, &i2, &cfg.circuit)?,
        i1,
        i2,
    })
}

pub fn cmd_ingest(
    cfg: &ExperimentConfig,
    input: &Path,
    selection: &ColumnSelection,
    out_dir: &Path,
) -> Result<CommandReport> {
    let data = ingest(cfg, input, selection)?;
    let path = out_dir.join("ingest.csv");
    write_csv(
        &path,
        &[
            "time_s",
            "i1_v",
            "i2_v",
            "theta_v2s",
            "observed_time_s",
            "observed_v",
        ],
        (0..data.i1.len()).map(|i| {
            vec![
                data.i1.time(i),
                data.i1.samples()[i],
                data.i2.samples()[i],
                data.theta.values()[i],
                data.observed.time(i),
                data.observed.values()[i],
            ]
        }),
    )?;
    let amplitude = read_amplitude(&data.observed);
    Ok(CommandReport {
        files: vec![path],
        summary: vec![format!(
            "{} samples at {} s spacing; final Θ {} V²s; observed peak {} V at {} s",
            data.i1.len(),
            data.i1.dt(),
            data.theta.last(),
            amplitude.max_value,
            amplitude.max_time
        )],
        failure_limit_exceeded: false,
    })
}

// --------------------------------------------------------------- CSV out

fn write_csv(path: &Path, header: &[&str], rows: impl Iterator<Item = Vec<f64>>) -> Result<()> {
    write_records(
        path,
        header,
        rows.map(|row| row.iter().map(|v| v.to_string()).collect()),
    )
}

fn write_records(
    path: &Path,
    header: &[&str],
    rows: impl Iterator<Item = Vec<String>>,
) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let to_err = |e: csv::Error| match e.into_kind() {
        csv::ErrorKind::Io(source) => Error::io(path, source),
        other => Error::Format {
            path: path.to_path_buf(),
            message: format!("{other:?}"),
        },
    };
    let mut writer = csv::Writer::from_path(path).map_err(to_err)?;
    writer.write_record(header).map_err(to_err)?;
    for row in rows {
        writer.write_record(&row).map_err(to_err)?;
    }
    writer.flush().map_err(|e| Error::io(path, e))
}
