//! Shared fixtures for the criterion benchmarks.

use awva_core::weak_measurement::render_period_samples;
use awva_core::{PointerParams, SampledTrace};

/// Displaced and reference channels of the 200 Hz reference pulse.
pub fn reference_channels(delta_t: f64, samples_per_period: usize) -> (SampledTrace, SampledTrace) {
    let p = PointerParams::reference();
    let shifted = render_period_samples(&p, delta_t, samples_per_period).expect("valid pulse");
    let reference = render_period_samples(&p, 0.0, samples_per_period).expect("valid pulse");
    (shifted, reference)
}
