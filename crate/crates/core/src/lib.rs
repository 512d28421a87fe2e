//! Simulation of auto-correlative weak-value amplification (AWVA).
//!
//! The crate models the whole measurement chain: Gaussian pointer pulses
//! displaced by a weak-value-amplified delay ([`weak_measurement`]), the
//! running product-integral Θ(t) of the displaced and reference channels
//! ([`correlator`]), the analog multiplier/integrator that computes Θ in
//! hardware ([`circuit`]), injected Gaussian noise ([`noise`]), and the AWVA
//! and SWVA delay readouts compared under Monte Carlo noise ([`estimators`]).
//! [`experiments`] ties these into configurable sweeps with CSV output.

// `!(x > 0.0)` is used on purpose throughout: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod circuit;
pub mod correlator;
pub mod error;
pub mod estimators;
pub mod experiments;
pub mod noise;
pub mod trace;
pub mod weak_measurement;

pub use circuit::{
    apply_circuit, apply_multiplier, calibrate_phase, scope_capture, CircuitParams, Polarity,
};
pub use correlator::{streaming_update, theta_analytic, theta_numeric, ThetaAccumulator};
pub use error::{Error, Result};
pub use estimators::{
    normalize_awva, normalize_swva, run_trials, sensitivity_k, swva_delay_estimate,
    AmplitudeReading, SensitivityStats, SwvaReadout, TrialConfig, TrialOutcome,
};
pub use experiments::{ingest_scope_csv, ConfigFile, ExperimentConfig, SweepConfig};
pub use noise::{gen_noise, snr_db, theta_with_noise, NoiseSpec};
pub use trace::{Grid, SampledTrace, ThetaTrace};
pub use weak_measurement::{
    amplified_shift, eval_pointer, postselection_probability, render_period, weak_value,
    PointerParams, WeakMeasurementParams,
};
