use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::Serialize;

use super::{path_rng, Stream, TimeGrid};
use crate::error::Result;
use crate::levy_basis::JumpMeasure;

/// Pure-jump path recorded as per-step jump counts for each atom.
///
/// `counts[k * m + j]` is the number of jumps of size `sizes[j]` in
/// `(t_k, t_{k+1}]`; the multiset of marks of a step is fully described by
/// these counts.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevyPath {
    sizes: Vec<f64>,
    counts: Vec<u32>,
    cumulative: Vec<f64>,
}

impl LevyPath {
    pub fn from_counts(sizes: Vec<f64>, counts: Vec<u32>) -> Self {
        let m = sizes.len();
        let steps = counts.len() / m;
        let mut cumulative = Vec::with_capacity(steps + 1);
        cumulative.push(0.0);
        let mut level = 0.0;
        for k in 0..steps {
            level += (0..m).map(|j| counts[k * m + j] as f64 * sizes[j]).sum::<f64>();
            cumulative.push(level);
        }
        Self { sizes, counts, cumulative }
    }

    pub fn steps(&self) -> usize {
        self.cumulative.len() - 1
    }

    pub fn dim(&self) -> usize {
        self.sizes.len()
    }

    pub fn sizes(&self) -> &[f64] {
        &self.sizes
    }

    /// Jumps of atom `j` (0-based) during step `k`.
    pub fn count(&self, k: usize, j: usize) -> u32 {
        self.counts[k * self.sizes.len() + j]
    }

    /// Marks of step `k`, grouped by atom.
    pub fn marks(&self, k: usize) -> impl Iterator<Item = f64> + '_ {
        (0..self.sizes.len()).flat_map(move |j| std::iter::repeat_n(self.sizes[j], self.count(k, j) as usize))
    }

    /// `Σ_{marks in step k} mark^power`.
    pub fn power_sum(&self, k: usize, power: i32) -> f64 {
        (0..self.sizes.len()).map(|j| self.count(k, j) as f64 * self.sizes[j].powi(power)).sum()
    }

    /// `L_{t_k}`.
    pub fn level(&self, k: usize) -> f64 {
        self.cumulative[k]
    }

    pub fn levels(&self) -> &[f64] {
        &self.cumulative
    }

    pub fn total_jumps(&self) -> u64 {
        self.counts.iter().map(|&c| c as u64).sum()
    }

    /// Total jumps of atom `j` over the horizon.
    pub fn atom_jumps(&self, j: usize) -> u64 {
        (0..self.steps()).map(|k| self.count(k, j) as u64).sum()
    }
}

pub(crate) fn simulate_levy_with<R: Rng>(measure: &JumpMeasure, grid: &TimeGrid, rng: &mut R) -> LevyPath {
    let dt = grid.dt();
    let dists: Vec<Poisson<f64>> =
        measure.atoms().iter().map(|a| Poisson::new(a.intensity * dt).expect("validated intensity")).collect();
    let mut counts = Vec::with_capacity(grid.steps() * dists.len());
    for _ in 0..grid.steps() {
        for d in &dists {
            counts.push(d.sample(rng) as u32);
        }
    }
    LevyPath::from_counts(measure.sizes(), counts)
}

/// Each atom contributes `Poisson(λ_k Δt)` jumps per step. Deterministic in
/// `seed`.
pub fn simulate_levy(measure: &JumpMeasure, grid: &TimeGrid, seed: u64) -> Result<LevyPath> {
    let mut rng = path_rng(seed, 0, Stream::Levy);
    Ok(simulate_levy_with(measure, grid, &mut rng))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vanishing_intensity_has_no_jumps() {
        let m = JumpMeasure::from_pairs(&[(1.0, 1e-9)]).unwrap();
        let g = TimeGrid::new(1.0, 50).unwrap();
        let p = simulate_levy(&m, &g, 3).unwrap();
        assert_eq!(p.total_jumps(), 0);
        assert!(p.levels().iter().all(|&l| l == 0.0));
    }

    #[test]
    fn same_seed_same_path() {
        let m = JumpMeasure::from_pairs(&[(1.0, 2.0), (-0.5, 1.0)]).unwrap();
        let g = TimeGrid::new(1.0, 40).unwrap();
        assert_eq!(simulate_levy(&m, &g, 11).unwrap(), simulate_levy(&m, &g, 11).unwrap());
        assert_ne!(simulate_levy(&m, &g, 11).unwrap(), simulate_levy(&m, &g, 12).unwrap());
    }

    #[test]
    fn levels_are_sums_of_marks() {
        let m = JumpMeasure::from_pairs(&[(1.0, 3.0), (-2.0, 2.0)]).unwrap();
        let g = TimeGrid::new(2.0, 30).unwrap();
        let p = simulate_levy(&m, &g, 5).unwrap();
        let mut level = 0.0;
        for k in 0..p.steps() {
            for mark in p.marks(k) {
                assert!(mark == 1.0 || mark == -2.0);
                level += mark;
            }
            assert!((p.level(k + 1) - level).abs() < 1e-12);
        }
    }
}
