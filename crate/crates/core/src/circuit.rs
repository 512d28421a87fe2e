//! Behavioral model of the analog multiplier/integrator chain.
//!
//! The chain multiplies the two channels (gain `Γ_M`, output clipped at the
//! multiplier rail), integrates the product (gain `Γ_I`, state clamped at the
//! integrator rail), inverts the sign and delays the result by the phase lag
//! `t_φ`. Below saturation the observed trace is `polarity · Γ_M Γ_I · Θ(t - t_φ)`.

use crate::correlator::ThetaAccumulator;
use crate::error::{Error, Result};
use crate::trace::{Grid, SampledTrace, ThetaTrace};

/// Output sign of the integrator stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Polarity {
    Positive,
    Negative,
}

impl Polarity {
    pub fn sign(self) -> f64 {
        match self {
            Polarity::Positive => 1.0,
            Polarity::Negative => -1.0,
        }
    }

    pub fn from_sign(sign: i64) -> Result<Self> {
        match sign {
            1 => Ok(Polarity::Positive),
            -1 => Ok(Polarity::Negative),
            other => Err(Error::Config(format!(
                "polarity must be +1 or -1, got {other}"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CircuitParams {
    /// Multiplier gain `Γ_M`, 1/V.
    pub gain_multiplier: f64,
    /// Integrator gain `Γ_I`, 1/s.
    pub gain_integrator: f64,
    /// Phase lag `t_φ`, seconds.
    pub phase_lag: f64,
    pub polarity: Polarity,
    /// Multiplier output rail, volts.
    pub multiplier_limit: f64,
    /// Integrator output rail, volts.
    pub integrator_limit: f64,
}

impl Default for CircuitParams {
    fn default() -> Self {
        CircuitParams {
            gain_multiplier: 1.87,
            gain_integrator: 4470.0,
            phase_lag: 75e-6,
            polarity: Polarity::Negative,
            multiplier_limit: 1.0,
            integrator_limit: 10.0,
        }
    }
}

impl CircuitParams {
    /// Unit gains, no lag, positive output and no saturation: the chain then
    /// reproduces the ideal running integral.
    pub fn ideal() -> Self {
        CircuitParams {
            gain_multiplier: 1.0,
            gain_integrator: 1.0,
            phase_lag: 0.0,
            polarity: Polarity::Positive,
            multiplier_limit: f64::INFINITY,
            integrator_limit: f64::INFINITY,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gain_multiplier > 0.0 && self.gain_multiplier.is_finite()) {
            return Err(Error::Config(format!(
                "multiplier gain must be positive, got {}",
                self.gain_multiplier
            )));
        }
        if !(self.gain_integrator > 0.0 && self.gain_integrator.is_finite()) {
            return Err(Error::Config(format!(
                "integrator gain must be positive, got {}",
                self.gain_integrator
            )));
        }
        if !(self.phase_lag >= 0.0 && self.phase_lag.is_finite()) {
            return Err(Error::Config(format!(
                "phase lag must be non-negative, got {}",
                self.phase_lag
            )));
        }
        if !(self.multiplier_limit > 0.0) || !(self.integrator_limit > 0.0) {
            return Err(Error::Config("saturation limits must be positive".into()));
        }
        Ok(())
    }

    /// Composite gain `Γ = Γ_M · Γ_I`.
    pub fn composite_gain(&self) -> f64 {
        self.gain_multiplier * self.gain_integrator
    }
}

/// How often each stage hit its rail during one pass.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Saturation {
    pub multiplier: usize,
    pub integrator: usize,
}

impl Saturation {
    pub fn any(&self) -> bool {
        self.multiplier > 0 || self.integrator > 0
    }
}

/// Multiplier stage: `Γ_M · x · y`, clipped to the output rail.
#[inline]
pub fn apply_multiplier(x: f64, y: f64, params: &CircuitParams) -> f64 {
    (params.gain_multiplier * x * y).clamp(-params.multiplier_limit, params.multiplier_limit)
}

/// Full chain from the two input channels to the observed output trace.
pub fn apply_circuit(
    i1: &SampledTrace,
    i2: &SampledTrace,
    params: &CircuitParams,
) -> Result<ThetaTrace> {
    apply_circuit_with_report(i1, i2, params).map(|(trace, _)| trace)
}

/// [`apply_circuit`] that also reports rail hits.
pub fn apply_circuit_with_report(
    i1: &SampledTrace,
    i2: &SampledTrace,
    params: &CircuitParams,
) -> Result<(ThetaTrace, Saturation)> {
    params.validate()?;
    let grid = i1.grid();
    grid.check_same(&i2.grid())?;
    let dt = grid.dt;
    let gain = params.gain_integrator;
    let sign = params.polarity.sign();
    // rail expressed in units of the raw integral
    let rail = params.integrator_limit / gain;

    let mut report = Saturation::default();
    let mut acc = ThetaAccumulator::new();
    let mut values = Vec::with_capacity(grid.len);
    for (&x, &y) in i1.samples().iter().zip(i2.samples()) {
        let raw = params.gain_multiplier * x * y;
        if raw.abs() > params.multiplier_limit {
            report.multiplier += 1;
        }
        acc.push_product(apply_multiplier(x, y, params), dt);
        let mut state = acc.value();
        if state.abs() > rail {
            report.integrator += 1;
            state = state.clamp(-rail, rail);
            acc.reset_value(state);
        }
        values.push(sign * (gain * state));
    }
    let out =
        ThetaTrace::from_parts(grid, values).with_start_time(grid.start_time + params.phase_lag);
    Ok((out, report))
}

/// Recovers the phase lag between an observed chain output and the ideal
/// running integral by least-squares alignment.
///
/// For each candidate lag on the common sample grid the gain is fitted in
/// closed form and the mean squared residual over the overlap is computed.
/// Lags are searched over half the record in each direction. Resolution is one
/// sample; the returned lag is measured on the traces' time axes.
pub fn calibrate_phase(observed: &ThetaTrace, ideal: &ThetaTrace) -> Result<f64> {
    let dt = ideal.dt();
    if (observed.dt() - dt).abs() > 1e-9 * dt {
        return Err(Error::Calibration(format!(
            "sample spacings differ: {} vs {}",
            observed.dt(),
            dt
        )));
    }
    let obs = observed.values();
    let ide = ideal.values();
    let energy = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>();
    if energy(obs) == 0.0 || energy(ide) == 0.0 {
        return Err(Error::Calibration("trace carries no signal".into()));
    }

    // observed[i] ~ c * ideal[i - k]; lag = (observed.start - ideal.start) + k dt
    let n_obs = obs.len() as i64;
    let n_ide = ide.len() as i64;
    let reach = n_obs.min(n_ide) / 2;
    let min_overlap = (n_obs.min(n_ide) / 2).max(2);

    let mut misfits = Vec::with_capacity((2 * reach + 1) as usize);
    for k in -reach..=reach {
        let lo = k.max(0);
        let hi = n_obs.min(n_ide + k);
        if hi - lo < min_overlap {
            continue;
        }
        let (mut so, mut ss, mut os) = (0.0, 0.0, 0.0);
        for i in lo..hi {
            let o = obs[i as usize];
            let s = ide[(i - k) as usize];
            so += o * o;
            ss += s * s;
            os += o * s;
        }
        if ss == 0.0 {
            continue;
        }
        let residual = ((so - os * os / ss) / (hi - lo) as f64).max(0.0);
        misfits.push((k, residual, so / (hi - lo) as f64));
    }
    let Some(&(best_k, best, scale)) = misfits.iter().min_by(|a, b| a.1.total_cmp(&b.1)) else {
        return Err(Error::Calibration(
            "traces do not overlap enough to align".into(),
        ));
    };
    // A flat trace fits every lag equally well.
    let tie = 1e-12 * scale.max(f64::MIN_POSITIVE);
    let ties = misfits
        .iter()
        .filter(|m| m.0 != best_k && (m.1 - best).abs() <= tie)
        .count();
    if ties > 0 {
        return Err(Error::Calibration(format!(
            "alignment is degenerate: {} lags fit equally well",
            ties + 1
        )));
    }
    Ok(observed.start_time() - ideal.start_time() + best_k as f64 * dt)
}

/// Samples a chain output on an acquisition grid, the way a scope records
/// it: linear interpolation between output samples, zero before the output
/// starts (integrator at rest) and the last value held after it ends.
pub fn scope_capture(output: &ThetaTrace, grid: Grid) -> ThetaTrace {
    let values = output.values();
    let last = output.last();
    let captured = (0..grid.len)
        .map(|i| {
            let u = (grid.time(i) - output.start_time()) / output.dt();
            if u < 0.0 {
                return 0.0;
            }
            let k = u.floor() as usize;
            if k + 1 >= values.len() {
                return last;
            }
            let frac = u - k as f64;
            values[k] + frac * (values[k + 1] - values[k])
        })
        .collect();
    ThetaTrace::from_parts(grid, captured)
}
