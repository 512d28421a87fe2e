//! Auto-correlation intensity Θ(t) = ∫₀ᵗ I₁(t′) I₂(t′) dt′.
//!
//! [`theta_numeric`] integrates sampled traces with the trapezoid rule and
//! compensated summation; [`theta_analytic`] evaluates the same integral in
//! closed form for the periodic Gaussian pulse train and serves as its
//! cross-check.

use std::f64::consts::{PI, SQRT_2};

use crate::error::{Error, Result};
use crate::trace::{SampledTrace, ThetaTrace};
use crate::weak_measurement::PointerParams;

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

/// How the first sample pair enters the running integral.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Boundary {
    /// The integral starts at the first sample, so one pair integrates to 0.
    /// Matches [`theta_numeric`].
    #[default]
    FirstSample,
    /// The product is taken as zero one step before the first sample, so the
    /// first pair contributes half a trapezoid.
    ZeroBefore,
}

/// Constant-memory trapezoid integrator for the product of two streams.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ThetaAccumulator {
    sum: CompensatedSum,
    previous: Option<f64>,
    boundary: Boundary,
}

impl ThetaAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_boundary(boundary: Boundary) -> Self {
        ThetaAccumulator {
            boundary,
            ..Self::default()
        }
    }

    /// Feeds one pair of samples taken `dt` after the previous pair.
    #[inline]
    pub fn push(&mut self, x: f64, y: f64, dt: f64) {
        self.push_product(x * y, dt);
    }

    /// Feeds an already-formed product sample.
    #[inline]
    pub fn push_product(&mut self, product: f64, dt: f64) {
        match self.previous {
            Some(prev) => self.sum.add(0.5 * dt * (prev + product)),
            None if self.boundary == Boundary::ZeroBefore => self.sum.add(0.5 * dt * product),
            None => {}
        }
        self.previous = Some(product);
    }

    /// Integral accumulated so far.
    #[inline]
    pub fn value(&self) -> f64 {
        self.sum.value()
    }

    /// Overrides the running value, e.g. when an integrator saturates. The
    /// stored previous product is kept.
    pub(crate) fn reset_value(&mut self, value: f64) {
        self.sum = CompensatedSum::new();
        self.sum.add(value);
    }
}

/// Functional form of [`ThetaAccumulator::push`].
pub fn streaming_update(mut state: ThetaAccumulator, x: f64, y: f64, dt: f64) -> ThetaAccumulator {
    state.push(x, y, dt);
    state
}

/// Cumulative trapezoid integral of the pointwise product of two traces.
///
/// `values[0]` is zero and the last value is the integral over the whole
/// record. Traces must share start time, spacing and length exactly; no
/// resampling is attempted.
pub fn theta_numeric(a: &SampledTrace, b: &SampledTrace) -> Result<ThetaTrace> {
    let grid = a.grid();
    grid.check_same(&b.grid())?;
    let dt = grid.dt;
    let mut acc = ThetaAccumulator::new();
    let values = a
        .samples()
        .iter()
        .zip(b.samples())
        .map(|(&x, &y)| {
            acc.push(x, y, dt);
            acc.value()
        })
        .collect();
    Ok(ThetaTrace::from_parts(grid, values))
}

/// `erf(hi) - erf(lo)` without cancellation in either tail.
fn erf_diff(lo: f64, hi: f64) -> f64 {
    if lo > 0.0 && hi > 0.0 {
        libm::erfc(lo) - libm::erfc(hi)
    } else if lo < 0.0 && hi < 0.0 {
        libm::erfc(-hi) - libm::erfc(-lo)
    } else {
        libm::erf(hi) - libm::erf(lo)
    }
}

/// Closed-form Θ(t) for the pulse train of `params` displaced by `shift`
/// against the undisplaced train, integrated from 0 to `t`.
///
/// Expanding `(g₁ + b)(g₂ + b)` gives a Gaussian×Gaussian term per pair of
/// pulse images, a Gaussian×constant term per image and the constant `b²t`;
/// each has an error-function antiderivative. A Gaussian pair separated by
/// `d` is attenuated by `exp(-d² / 8ω²)` and centered midway between the two.
pub fn theta_analytic(params: &PointerParams, shift: f64, t: f64) -> f64 {
    let amplitude = params.amplitude();
    let offset = params.offset();
    let omega = params.omega();
    let period = params.period();
    let (from, to) = if t >= 0.0 { (0.0, t) } else { (t, 0.0) };
    let sign = if t >= 0.0 { 1.0 } else { -1.0 };

    let single = |mu: f64| {
        let s = 2.0 * omega;
        amplitude * omega * PI.sqrt() * erf_diff((from - mu) / s, (to - mu) / s)
    };
    let pair = |mu1: f64, mu2: f64| {
        let d = mu1 - mu2;
        let mid = 0.5 * (mu1 + mu2);
        let s = SQRT_2 * omega;
        amplitude
            * amplitude
            * (-d * d / (8.0 * omega * omega)).exp()
            * omega
            * (0.5 * PI).sqrt()
            * erf_diff((from - mid) / s, (to - mid) / s)
    };

    let centers = |s: f64| -> Vec<f64> {
        params
            .image_range(s, from, to)
            .map(|k| params.center() + s + k as f64 * period)
            .collect()
    };
    let shifted = centers(shift);
    let reference = centers(0.0);

    let mut total = CompensatedSum::new();
    total.add(offset * offset * (to - from));
    for &mu in shifted.iter().chain(&reference) {
        total.add(offset * single(mu));
    }
    for &m1 in &shifted {
        for &m2 in &reference {
            total.add(pair(m1, m2));
        }
    }
    sign * total.value()
}

/// Amplitude attenuation `exp(-δt² / 8ω²)` of the Gaussian product integral.
pub fn attenuation_ratio(delta_t: f64, omega: f64) -> Result<f64> {
    if !(omega > 0.0) {
        return Err(Error::Domain(format!(
            "pointer spread must be positive, got {omega}"
        )));
    }
    Ok((-delta_t * delta_t / (8.0 * omega * omega)).exp())
}
