use serde::Serialize;

use super::{LevyPath, TimeGrid};
use crate::error::{Error, Result};
use crate::levy_basis::{OrthoBasis, PowerMomentTable};

/// Compensated power-jump increments
/// `ΔT^{(i)}_k = Σ_{marks in step k} mark^i − Δt E[L_1^{(i)}]`, stored
/// step-major.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RawPowerIncrements {
    dim: usize,
    values: Vec<f64>,
}

impl RawPowerIncrements {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn steps(&self) -> usize {
        self.values.len() / self.dim
    }

    /// `ΔT^{(i)}_k` with 1-based `i`.
    pub fn get(&self, k: usize, i: usize) -> f64 {
        self.values[k * self.dim + i - 1]
    }
}

pub fn power_increments(path: &LevyPath, moments: &PowerMomentTable, grid: &TimeGrid) -> Result<RawPowerIncrements> {
    let m = path.dim();
    if moments.max_order() < m {
        return Err(Error::DimensionMismatch { expected: m, found: moments.max_order() });
    }
    if path.steps() != grid.steps() {
        return Err(Error::DimensionMismatch { expected: grid.steps(), found: path.steps() });
    }
    let dt = grid.dt();
    let mut values = Vec::with_capacity(path.steps() * m);
    for k in 0..path.steps() {
        for i in 1..=m {
            values.push(path.power_sum(k, i as i32) - dt * moments.get(i));
        }
    }
    Ok(RawPowerIncrements { dim: m, values })
}

/// Teugels increments `ΔH^{(i)}_k = Σ_{j≤i} c_{i,j} ΔT^{(j)}_k` together with
/// the raw increments they were built from.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TeugelsIncrements {
    raw: RawPowerIncrements,
    values: Vec<f64>,
}

impl TeugelsIncrements {
    pub fn dim(&self) -> usize {
        self.raw.dim
    }

    pub fn steps(&self) -> usize {
        self.raw.steps()
    }

    /// `ΔH^{(i)}_k` with 1-based `i`.
    pub fn get(&self, k: usize, i: usize) -> f64 {
        self.values[k * self.raw.dim + i - 1]
    }

    pub fn step(&self, k: usize) -> &[f64] {
        &self.values[k * self.raw.dim..(k + 1) * self.raw.dim]
    }

    pub fn raw(&self) -> &RawPowerIncrements {
        &self.raw
    }
}

pub fn teugels_increments(raw: &RawPowerIncrements, basis: &OrthoBasis) -> Result<TeugelsIncrements> {
    let m = raw.dim;
    if basis.dim() != m {
        return Err(Error::DimensionMismatch { expected: m, found: basis.dim() });
    }
    let mut values = Vec::with_capacity(raw.values.len());
    for k in 0..raw.steps() {
        for i in 1..=m {
            values.push(basis.row(i).iter().enumerate().map(|(j, c)| c * raw.get(k, j + 1)).sum());
        }
    }
    Ok(TeugelsIncrements { raw: raw.clone(), values })
}
