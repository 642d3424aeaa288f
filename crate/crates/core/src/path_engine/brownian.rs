use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use super::{path_rng, Stream, TimeGrid};
use crate::error::{Error, Result};

/// Forward Brownian increments `ΔB_k = B_{t_{k+1}} − B_{t_k}` and levels.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BrownianPath {
    increments: Vec<f64>,
    levels: Vec<f64>,
}

impl BrownianPath {
    pub fn from_increments(increments: Vec<f64>) -> Result<Self> {
        if increments.is_empty() {
            return Err(Error::InvalidArgument("a Brownian path needs at least one increment".into()));
        }
        let mut levels = Vec::with_capacity(increments.len() + 1);
        levels.push(0.0);
        let mut b = 0.0;
        for &d in &increments {
            b += d;
            levels.push(b);
        }
        Ok(Self { increments, levels })
    }

    /// The path that stays at zero.
    pub fn zero(grid: &TimeGrid) -> Self {
        Self::from_increments(vec![0.0; grid.steps()]).unwrap()
    }

    pub fn steps(&self) -> usize {
        self.increments.len()
    }

    pub fn increment(&self, k: usize) -> f64 {
        self.increments[k]
    }

    pub fn increments(&self) -> &[f64] {
        &self.increments
    }

    /// `B_{t_k}`.
    pub fn level(&self, k: usize) -> f64 {
        self.levels[k]
    }

    pub fn terminal(&self) -> f64 {
        *self.levels.last().unwrap()
    }
}

pub(crate) fn simulate_brownian_with<R: Rng>(grid: &TimeGrid, rng: &mut R) -> BrownianPath {
    let sd = grid.dt().sqrt();
    let incs = (0..grid.steps()).map(|_| sd * rng.sample::<f64, _>(StandardNormal)).collect();
    BrownianPath::from_increments(incs).unwrap()
}

pub fn simulate_brownian(grid: &TimeGrid, seed: u64) -> Result<BrownianPath> {
    let mut rng = path_rng(seed, 0, Stream::Brownian);
    Ok(simulate_brownian_with(grid, &mut rng))
}
