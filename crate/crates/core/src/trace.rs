//! Uniformly sampled signal records shared by every stage of the pipeline.

use crate::error::{Error, Result};

/// Shape of a uniform sampling grid: `len` samples at `start_time + i * dt`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub start_time: f64,
    pub dt: f64,
    pub len: usize,
}

impl Grid {
    pub fn new(start_time: f64, dt: f64, len: usize) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::Config(format!(
                "sample spacing must be positive, got {dt}"
            )));
        }
        if !start_time.is_finite() {
            return Err(Error::Config("start time must be finite".into()));
        }
        if len == 0 {
            return Err(Error::Config("a trace needs at least one sample".into()));
        }
        Ok(Grid {
            start_time,
            dt,
            len,
        })
    }

    #[inline]
    pub fn time(&self, index: usize) -> f64 {
        self.start_time + index as f64 * self.dt
    }

    /// Time of the last sample.
    pub fn end_time(&self) -> f64 {
        self.time(self.len - 1)
    }

    pub(crate) fn check_same(&self, other: &Grid) -> Result<()> {
        if self.start_time != other.start_time || self.dt != other.dt || self.len != other.len {
            return Err(Error::Alignment(format!(
                "({}, {}, {}) vs ({}, {}, {})",
                self.start_time, self.dt, self.len, other.start_time, other.dt, other.len
            )));
        }
        Ok(())
    }
}

/// Voltage-versus-time record on a uniform grid. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledTrace {
    start_time: f64,
    dt: f64,
    samples: Vec<f64>,
}

impl SampledTrace {
    pub fn new(start_time: f64, dt: f64, samples: Vec<f64>) -> Result<Self> {
        Grid::new(start_time, dt, samples.len())?;
        Ok(SampledTrace {
            start_time,
            dt,
            samples,
        })
    }

    pub fn from_fn(grid: Grid, f: impl FnMut(f64) -> f64) -> Self {
        let samples = (0..grid.len).map(|i| grid.time(i)).map(f).collect();
        SampledTrace {
            start_time: grid.start_time,
            dt: grid.dt,
            samples,
        }
    }

    pub fn start_time(&self) -> f64 {
        self.start_time
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn grid(&self) -> Grid {
        Grid {
            start_time: self.start_time,
            dt: self.dt,
            len: self.samples.len(),
        }
    }

    pub fn time(&self, index: usize) -> f64 {
        self.grid().time(index)
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    /// Sample-wise sum of two traces on the same grid.
    pub fn add(&self, other: &SampledTrace) -> Result<SampledTrace> {
        self.grid().check_same(&other.grid())?;
        let samples = self
            .samples
            .iter()
            .zip(&other.samples)
            .map(|(a, b)| a + b)
            .collect();
        Ok(SampledTrace {
            start_time: self.start_time,
            dt: self.dt,
            samples,
        })
    }

    /// Index of the first sample holding the largest value.
    pub fn argmax(&self) -> usize {
        argmax(&self.samples)
    }
}

/// Running-integral record (the auto-correlation intensity Θ) on a uniform
/// grid. Units are V²·s for the ideal integral and V after circuit scaling.
#[derive(Debug, Clone, PartialEq)]
pub struct ThetaTrace {
    start_time: f64,
    dt: f64,
    values: Vec<f64>,
}

impl ThetaTrace {
    pub fn new(start_time: f64, dt: f64, values: Vec<f64>) -> Result<Self> {
        Grid::new(start_time, dt, values.len())?;
        Ok(ThetaTrace {
            start_time,
            dt,
            values,
        })
    }

    pub(crate) fn from_parts(grid: Grid, values: Vec<f64>) -> Self {
        debug_assert_eq!(grid.len, values.len());
        ThetaTrace {
            start_time: grid.start_time,
            dt: grid.dt,
            values,
        }
    }

    pub fn start_time(&self) -> f64 {
        self.start_time
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn grid(&self) -> Grid {
        Grid {
            start_time: self.start_time,
            dt: self.dt,
            len: self.values.len(),
        }
    }

    pub fn time(&self, index: usize) -> f64 {
        self.grid().time(index)
    }

    /// Final value of the running integral.
    pub fn last(&self) -> f64 {
        *self.values.last().expect("theta traces are never empty")
    }

    /// Same values, time axis relabeled to start at `start_time`.
    pub fn with_start_time(mut self, start_time: f64) -> Self {
        self.start_time = start_time;
        self
    }
}

pub(crate) fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}
