//! Weak-value relations and Gaussian pointer synthesis.
//!
//! Two parameterizations are provided. [`WeakMeasurementParams`] carries the
//! quantum-mechanical description (post-selection angle, coupling strength,
//! pointer spread) and [`PointerParams`] carries the generator-style
//! description of the voltage pulse actually fed to the analog chain:
//!
//! ```text
//! I(t) = A * exp(-2 * ((t - t_c - shift) / w)^2) + b
//! ```
//!
//! The two are linked by `omega = w / (2 * sqrt(2))`, which makes
//! `exp(-2 ((t - t_c) / w)^2)` identical to `exp(-(t - t_c)^2 / (4 omega^2))`.
//!
//! A generator repeats the pulse every `1 / f`, so [`eval_pointer`] evaluates
//! the periodic pulse train rather than an isolated pulse. Images further than
//! [`IMAGE_CUTOFF_SPREADS`] spreads away contribute less than `exp(-400)` and
//! are skipped.

use std::f64::consts::{FRAC_PI_2, PI, SQRT_2};

use crate::error::{Error, Result};
use crate::trace::{Grid, SampledTrace};

/// Pulse images farther than this many spreads (omega) from the evaluation
/// point are treated as exactly zero.
pub const IMAGE_CUTOFF_SPREADS: f64 = 40.0;

/// Fewest samples per repetition period accepted by [`render_period`].
pub const MIN_SAMPLES_PER_PERIOD: f64 = 100.0;

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < PI {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "post-selection angle must lie in (0, pi), got {alpha}"
        )))
    }
}

/// Weak value `A_w = -cot(alpha)` of the polarization observable.
pub fn weak_value(alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    Ok(-cot(alpha))
}

/// Pointer displacement `tau * cot(alpha)` produced by a coupling `tau`.
pub fn amplified_shift(tau: f64, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    Ok(tau * cot(alpha))
}

/// Post-selection success probability `sin^2(alpha)`.
pub fn postselection_probability(alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    let s = alpha.sin();
    Ok(s * s)
}

// cos/sin loses the exact zero at pi/2, which callers rely on.
fn cot(alpha: f64) -> f64 {
    if alpha == FRAC_PI_2 {
        0.0
    } else {
        alpha.cos() / alpha.sin()
    }
}

/// Quantum description of one weak measurement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeakMeasurementParams {
    alpha: f64,
    tau: f64,
    omega: f64,
    t0: f64,
    i0: f64,
}

impl WeakMeasurementParams {
    /// `alpha` in radians, `tau`, `omega` and `t0` in seconds, `i0`
    /// dimensionless.
    pub fn new(alpha: f64, tau: f64, omega: f64, t0: f64, i0: f64) -> Result<Self> {
        check_alpha(alpha)?;
        if !(omega > 0.0 && omega.is_finite()) {
            return Err(Error::Domain(format!(
                "pointer spread must be positive, got {omega}"
            )));
        }
        if !(i0 > 0.0 && i0.is_finite()) {
            return Err(Error::Domain(format!(
                "normalization must be positive, got {i0}"
            )));
        }
        if !tau.is_finite() || !t0.is_finite() {
            return Err(Error::Domain(
                "coupling and pointer center must be finite".into(),
            ));
        }
        let params = WeakMeasurementParams {
            alpha,
            tau,
            omega,
            t0,
            i0,
        };
        if !params.shift().is_finite() {
            return Err(Error::Domain(format!(
                "amplified shift overflows for tau = {tau}, alpha = {alpha}"
            )));
        }
        Ok(params)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn i0(&self) -> f64 {
        self.i0
    }

    pub fn weak_value(&self) -> f64 {
        -cot(self.alpha)
    }

    /// Amplified pointer shift `delta_t = tau * cot(alpha)`.
    pub fn shift(&self) -> f64 {
        self.tau * cot(self.alpha)
    }

    pub fn postselection_probability(&self) -> f64 {
        let s = self.alpha.sin();
        s * s
    }

    /// Peak detected intensity `(I0 / 2) sin^2(alpha) / (2 pi omega^2)^(1/4)`.
    pub fn peak_intensity(&self) -> f64 {
        0.5 * self.i0 * self.postselection_probability()
            / (2.0 * PI * self.omega * self.omega).powf(0.25)
    }

    /// Post-selected pointer intensity `I1(t; tau)`, displaced by the
    /// amplified shift.
    pub fn signal_intensity(&self, t: f64) -> f64 {
        let u = t - self.t0 - self.shift();
        self.peak_intensity() * (-u * u / (4.0 * self.omega * self.omega)).exp()
    }

    /// Reference intensity `I2(t)` measured without the weak coupling.
    pub fn reference_intensity(&self, t: f64) -> f64 {
        let u = t - self.t0;
        self.peak_intensity() * (-u * u / (4.0 * self.omega * self.omega)).exp()
    }

    /// Generator-style pulse equivalent to the detected intensity profile,
    /// repeated at `frequency`, with no baseline offset.
    pub fn to_pointer(&self, frequency: f64) -> Result<PointerParams> {
        PointerParams::new(
            self.peak_intensity(),
            2.0 * SQRT_2 * self.omega,
            self.t0,
            0.0,
            frequency,
        )
    }
}

/// Generator description of a repeating Gaussian voltage pulse.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointerParams {
    amplitude: f64,
    width: f64,
    center: f64,
    offset: f64,
    frequency: f64,
}

impl PointerParams {
    /// Amplitude of the reference waveform, volts.
    pub const REFERENCE_AMPLITUDE: f64 = 0.248;
    /// Width parameter of the reference waveform, seconds.
    pub const REFERENCE_WIDTH: f64 = 3.88e-4;
    /// Pulse center of the reference waveform, seconds.
    pub const REFERENCE_CENTER: f64 = 1.71e-4;
    /// Baseline of the reference waveform, volts.
    pub const REFERENCE_OFFSET: f64 = -0.01;
    /// Repetition rate the reference shape was generated at, hertz.
    pub const REFERENCE_FREQUENCY: f64 = 200.0;

    /// `amplitude` and `offset` in volts, `width` and `center` in seconds,
    /// `frequency` in hertz.
    pub fn new(
        amplitude: f64,
        width: f64,
        center: f64,
        offset: f64,
        frequency: f64,
    ) -> Result<Self> {
        let finite = [amplitude, width, center, offset, frequency]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::Config("pointer parameters must be finite".into()));
        }
        if amplitude <= 0.0 {
            return Err(Error::Config(format!(
                "pointer amplitude must be positive, got {amplitude}"
            )));
        }
        if width <= 0.0 {
            return Err(Error::Config(format!(
                "pointer width must be positive, got {width}"
            )));
        }
        if frequency <= 0.0 {
            return Err(Error::Config(format!(
                "repetition frequency must be positive, got {frequency}"
            )));
        }
        if width >= 1.0 / frequency {
            return Err(Error::Config(format!(
                "pointer width {width} s does not fit in one period of {frequency} Hz"
            )));
        }
        Ok(PointerParams {
            amplitude,
            width,
            center,
            offset,
            frequency,
        })
    }

    /// The measured 200 Hz Gaussian waveform used throughout the experiments.
    pub fn reference() -> Self {
        PointerParams {
            amplitude: Self::REFERENCE_AMPLITUDE,
            width: Self::REFERENCE_WIDTH,
            center: Self::REFERENCE_CENTER,
            offset: Self::REFERENCE_OFFSET,
            frequency: Self::REFERENCE_FREQUENCY,
        }
    }

    /// Same pulse shape at another repetition rate. Width and center scale by
    /// `self.frequency / frequency` so the duty cycle is unchanged.
    pub fn at_frequency(&self, frequency: f64) -> Result<Self> {
        let scale = self.frequency / frequency;
        PointerParams::new(
            self.amplitude,
            self.width * scale,
            self.center * scale,
            self.offset,
            frequency,
        )
    }

    /// Same pulse with a different baseline.
    pub fn with_offset(&self, offset: f64) -> Result<Self> {
        PointerParams::new(
            self.amplitude,
            self.width,
            self.center,
            offset,
            self.frequency,
        )
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn center(&self) -> f64 {
        self.center
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn frequency(&self) -> f64 {
        self.frequency
    }

    pub fn period(&self) -> f64 {
        1.0 / self.frequency
    }

    /// Equivalent Gaussian spread `omega = w / (2 sqrt 2)`.
    pub fn omega(&self) -> f64 {
        self.width / (2.0 * SQRT_2)
    }

    /// Range of image indices `k` whose pulse, centered at
    /// `center + shift + k * period`, reaches into `[from, to]`.
    pub(crate) fn image_range(
        &self,
        shift: f64,
        from: f64,
        to: f64,
    ) -> std::ops::RangeInclusive<i64> {
        let period = self.period();
        let reach = IMAGE_CUTOFF_SPREADS * self.omega();
        let mid = self.center + shift;
        let lo = ((from - reach - mid) / period).ceil() as i64;
        let hi = ((to + reach - mid) / period).floor() as i64;
        lo..=hi
    }
}

/// Value of the periodic pulse train displaced by `shift` at time `t`.
///
/// `shift = 0` gives the reference channel, `shift = delta_t` the
/// weak-value-displaced channel.
pub fn eval_pointer(params: &PointerParams, shift: f64, t: f64) -> f64 {
    let period = params.period();
    let mid = params.center + shift;
    let mut pulse = 0.0;
    for k in params.image_range(shift, t, t) {
        let u = (t - mid - k as f64 * period) / params.width;
        pulse += (-2.0 * u * u).exp();
    }
    params.amplitude * pulse + params.offset
}

/// Discretizes one repetition period `[0, 1/f)` at `sample_rate`.
pub fn render_period(params: &PointerParams, shift: f64, sample_rate: f64) -> Result<SampledTrace> {
    if !(sample_rate >= MIN_SAMPLES_PER_PERIOD * params.frequency) || !sample_rate.is_finite() {
        return Err(Error::Config(format!(
            "sample rate {sample_rate} Hz is below {MIN_SAMPLES_PER_PERIOD} samples per period at {} Hz",
            params.frequency
        )));
    }
    let len = (sample_rate / params.frequency).round() as usize;
    let grid = Grid::new(0.0, 1.0 / sample_rate, len)?;
    Ok(SampledTrace::from_fn(grid, |t| {
        eval_pointer(params, shift, t)
    }))
}

/// [`render_period`] with the rate given as samples per period.
pub fn render_period_samples(
    params: &PointerParams,
    shift: f64,
    samples_per_period: usize,
) -> Result<SampledTrace> {
    render_period(params, shift, samples_per_period as f64 * params.frequency)
}


#[cfg(test)]
mod properties {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn pointer_is_shift_covariant(t in 0.0..5e-3f64, shift in -2e-4..2e-4f64) {
            let p = PointerParams::reference();
            let moved = eval_pointer(&p, shift, t + shift);
            let base = eval_pointer(&p, 0.0, t);
            prop_assert!((moved - base).abs() < 1e-12, "{moved} vs {base}");
        }

        #[test]
        fn pointer_is_periodic(t in 0.0..5e-3f64, k in -3i32..3) {
            let p = PointerParams::reference();
            let a = eval_pointer(&p, 5e-5, t);
            let b = eval_pointer(&p, 5e-5, t + k as f64 * p.period());
            prop_assert!((a - b).abs() < 1e-12);
        }

        #[test]
        fn postselection_is_a_probability(alpha in 1e-6..(std::f64::consts::PI - 1e-6)) {
            let p = postselection_probability(alpha).unwrap();
            prop_assert!((0.0..=1.0).contains(&p));
            let w = weak_value(alpha).unwrap();
            // A_w² p = cos² α
            prop_assert!((w * w * p - alpha.cos().powi(2)).abs() < 1e-9 * (1.0 + w * w * p));
        }
    }
}
