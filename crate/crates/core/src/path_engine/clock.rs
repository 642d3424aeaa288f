use serde::{Deserialize, Serialize};

use super::TimeGrid;
use crate::error::{Error, Result};

/// Deterministic continuous nondecreasing profile with `A_0 = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ClockProfile {
    /// `A_t = rate · t`.
    Linear { rate: f64 },
    /// `A_t = t^exponent`, `exponent ≥ 1`.
    Power { exponent: f64 },
    /// Piecewise-linear interpolation through `(times[i], values[i])`.
    Table { times: Vec<f64>, values: Vec<f64> },
}

impl ClockProfile {
    pub fn linear(rate: f64) -> Self {
        ClockProfile::Linear { rate }
    }

    fn validate(&self, horizon: f64) -> Result<()> {
        match self {
            ClockProfile::Linear { rate } => {
                if !(rate.is_finite() && *rate >= 0.0) {
                    return Err(Error::InvalidClock(format!("linear rate must be nonnegative, got {rate}")));
                }
            }
            ClockProfile::Power { exponent } => {
                if !(exponent.is_finite() && *exponent >= 1.0) {
                    return Err(Error::InvalidClock(format!("power exponent must be at least 1, got {exponent}")));
                }
            }
            ClockProfile::Table { times, values } => {
                if times.len() != values.len() || times.len() < 2 {
                    return Err(Error::InvalidClock(
                        "table needs at least two (time, value) pairs of equal length".into(),
                    ));
                }
                if times[0] != 0.0 || values[0] != 0.0 {
                    return Err(Error::InvalidClock("table must start at (0, 0)".into()));
                }
                if let Some(i) = (1..times.len()).find(|&i| !(times[i] > times[i - 1])) {
                    return Err(Error::InvalidClock(format!("table times not strictly increasing at entry {i}")));
                }
                if let Some(i) = (1..values.len()).find(|&i| !(values[i] >= values[i - 1])) {
                    return Err(Error::InvalidClock(format!(
                        "table values decrease at entry {i} ({} -> {})",
                        values[i - 1],
                        values[i]
                    )));
                }
                if *times.last().unwrap() < horizon {
                    return Err(Error::InvalidClock(format!(
                        "table ends at t = {} before the horizon {horizon}",
                        times.last().unwrap()
                    )));
                }
            }
        }
        Ok(())
    }

    fn eval(&self, t: f64) -> f64 {
        match self {
            ClockProfile::Linear { rate } => rate * t,
            ClockProfile::Power { exponent } => t.powf(*exponent),
            ClockProfile::Table { times, values } => {
                let i = times.partition_point(|&s| s <= t).clamp(1, times.len() - 1);
                let (t0, t1) = (times[i - 1], times[i]);
                let w = ((t - t0) / (t1 - t0)).clamp(0.0, 1.0);
                values[i - 1] + w * (values[i] - values[i - 1])
            }
        }
    }
}

/// Clock values `A_{t_k}` on a grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClockA {
    values: Vec<f64>,
}

impl ClockA {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, k: usize) -> f64 {
        self.values[k]
    }

    /// `ΔA_k = A_{t_{k+1}} − A_{t_k}`.
    pub fn increment(&self, k: usize) -> f64 {
        self.values[k + 1] - self.values[k]
    }

    pub fn terminal(&self) -> f64 {
        *self.values.last().unwrap()
    }

    pub fn steps(&self) -> usize {
        self.values.len() - 1
    }
}

pub fn clock_values(profile: &ClockProfile, grid: &TimeGrid) -> Result<ClockA> {
    profile.validate(grid.horizon())?;
    let mut values: Vec<f64> = grid.times().iter().map(|&t| profile.eval(t)).collect();
    values[0] = 0.0;
    Ok(ClockA { values })
}
