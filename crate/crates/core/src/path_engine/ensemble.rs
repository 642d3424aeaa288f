use std::io::Write;

use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use super::brownian::simulate_brownian_with;
use super::levy::simulate_levy_with;
use super::{
    path_rng, power_increments, teugels_increments, BrownianPath, ClockA, LevyPath, Stream, TeugelsIncrements, TimeGrid,
};
use crate::error::{Error, Result};
use crate::levy_basis::{power_moments, JumpMeasure, OrthoBasis};
use crate::numeric::MeanEstimate;
use crate::Execution;

/// Minimum ensemble size accepted by the Monte Carlo estimators.
pub const MIN_ENSEMBLE: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulatedPath {
    pub levy: LevyPath,
    pub brownian: BrownianPath,
    pub teugels: TeugelsIncrements,
}

#[derive(Debug, Clone, Serialize)]
pub struct PathEnsemble {
    pub grid: TimeGrid,
    pub clock: ClockA,
    pub paths: Vec<SimulatedPath>,
}

/// Simulates `n_paths` independent paths; path `p` uses the streams
/// `(seed, p)` only, so the ensemble is identical for every execution mode.
pub fn simulate_ensemble(
    measure: &JumpMeasure,
    basis: &OrthoBasis,
    grid: &TimeGrid,
    clock: &ClockA,
    n_paths: usize,
    seed: u64,
    exec: Execution,
) -> Result<PathEnsemble> {
    if basis.dim() != measure.dim() {
        return Err(Error::DimensionMismatch { expected: measure.dim(), found: basis.dim() });
    }
    if clock.steps() != grid.steps() {
        return Err(Error::DimensionMismatch { expected: grid.steps(), found: clock.steps() });
    }
    let moments = power_moments(measure, measure.dim())?;
    let paths = exec.try_map(n_paths, |p| {
        let mut levy_rng = path_rng(seed, p as u64, Stream::Levy);
        let mut bm_rng = path_rng(seed, p as u64, Stream::Brownian);
        let levy = simulate_levy_with(measure, grid, &mut levy_rng);
        let brownian = simulate_brownian_with(grid, &mut bm_rng);
        let raw = power_increments(&levy, &moments, grid)?;
        let teugels = teugels_increments(&raw, basis)?;
        Ok::<_, Error>(SimulatedPath { levy, brownian, teugels })
    })?;
    Ok(PathEnsemble { grid: *grid, clock: clock.clone(), paths })
}

impl PathEnsemble {
    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.paths.first().map_or(0, |p| p.teugels.dim())
    }

    /// One row per step per path:
    /// `path,step,t,dB,marks,dH1..dHm,A` with marks joined by `;`.
    /// At most `max_paths` paths are written.
    pub fn write_csv<W: Write>(&self, writer: W, max_paths: usize) -> Result<()> {
        let m = self.dim();
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["path".to_string(), "step".into(), "t".into(), "dB".into(), "marks".into()];
        header.extend((1..=m).map(|i| format!("dH{i}")));
        header.push("A".into());
        w.write_record(&header)?;
        for (p, path) in self.paths.iter().take(max_paths).enumerate() {
            for k in 0..self.grid.steps() {
                let marks: Vec<String> = path.levy.marks(k).map(|a| a.to_string()).collect();
                let mut row = vec![
                    p.to_string(),
                    k.to_string(),
                    self.grid.time(k + 1).to_string(),
                    path.brownian.increment(k).to_string(),
                    marks.join(";"),
                ];
                row.extend(path.teugels.step(k).iter().map(|v| v.to_string()));
                row.push(self.clock.value(k + 1).to_string());
                w.write_record(&row)?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

fn check_index(ensemble: &PathEnsemble, i: usize) -> Result<()> {
    let m = ensemble.dim();
    if i == 0 || i > m {
        return Err(Error::IndexOutOfRange { index: i, dim: m });
    }
    Ok(())
}

/// Mean over paths of `Σ_{k: t_{k+1} ≤ t} ΔH^{(i)}_k ΔH^{(j)}_k`, with its
/// standard error.
pub fn empirical_bracket(ensemble: &PathEnsemble, i: usize, j: usize, t: f64) -> Result<MeanEstimate> {
    if ensemble.len() < MIN_ENSEMBLE {
        return Err(Error::InvalidArgument(format!(
            "ensemble of {} paths is below the minimum of {MIN_ENSEMBLE}",
            ensemble.len()
        )));
    }
    check_index(ensemble, i)?;
    check_index(ensemble, j)?;
    let grid = ensemble.grid;
    let last = (0..grid.steps()).take_while(|&k| grid.time(k + 1) <= t + 1e-12 * grid.horizon()).count();
    let samples: Vec<f64> =
        ensemble.paths.iter().map(|p| (0..last).map(|k| p.teugels.get(k, i) * p.teugels.get(k, j)).sum()).collect();
    Ok(MeanEstimate::from_samples(&samples))
}

/// Ensemble mean of `ΔH^{(i)}_k`.
pub fn increment_mean(ensemble: &PathEnsemble, i: usize, k: usize) -> Result<MeanEstimate> {
    check_index(ensemble, i)?;
    if k >= ensemble.grid.steps() {
        return Err(Error::IndexOutOfRange { index: k, dim: ensemble.grid.steps() });
    }
    let samples: Vec<f64> = ensemble.paths.iter().map(|p| p.teugels.get(k, i)).collect();
    Ok(MeanEstimate::from_samples(&samples))
}

#[derive(Debug, Clone, Serialize)]
pub struct ChiSquareReport {
    pub statistic: f64,
    pub degrees_of_freedom: usize,
    pub p_value: f64,
}

/// Pearson goodness-of-fit of observed counts against `Poisson(mean)`.
/// Cells with expected frequency below 5 are pooled into the upper tail.
pub fn jump_count_chi_square(counts: &[u64], mean: f64) -> Result<ChiSquareReport> {
    if counts.is_empty() || !(mean > 0.0) {
        return Err(Error::InvalidArgument("chi-square needs samples and a positive mean".into()));
    }
    let n = counts.len() as f64;
    let mut observed = Vec::new();
    let mut expected = Vec::new();
    let mut pmf = (-mean).exp();
    let mut cumulative = 0.0;
    let mut k = 0u64;
    loop {
        let e = n * pmf;
        let tail_after = n * (1.0 - cumulative - pmf);
        if e < 5.0 || tail_after < 5.0 {
            break;
        }
        observed.push(counts.iter().filter(|&&c| c == k).count() as f64);
        expected.push(e);
        cumulative += pmf;
        k += 1;
        pmf *= mean / k as f64;
    }
    observed.push(counts.iter().filter(|&&c| c >= k).count() as f64);
    expected.push(n * (1.0 - cumulative));
    if observed.len() < 2 {
        return Err(Error::InvalidArgument("not enough populated cells for a chi-square test".into()));
    }
    let statistic: f64 = observed.iter().zip(&expected).map(|(o, e)| (o - e) * (o - e) / e).sum();
    let dof = observed.len() - 1;
    let p_value = ChiSquared::new(dof as f64).map(|d| d.sf(statistic)).unwrap_or(f64::NAN);
    Ok(ChiSquareReport { statistic, degrees_of_freedom: dof, p_value })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::path_engine::{clock_values, ClockProfile};

    fn setup(pairs: &[(f64, f64)], steps: usize) -> (JumpMeasure, OrthoBasis, TimeGrid, ClockA) {
        let measure = JumpMeasure::from_pairs(pairs).unwrap();
        let basis = OrthoBasis::for_measure(&measure).unwrap();
        let grid = TimeGrid::new(1.0, steps).unwrap();
        let clock = clock_values(&ClockProfile::linear(1.0), &grid).unwrap();
        (measure, basis, grid, clock)
    }

    #[test]
    fn execution_modes_agree() {
        let (m, b, g, c) = setup(&[(1.0, 2.0), (-0.5, 1.0)], 10);
        let a = simulate_ensemble(&m, &b, &g, &c, 200, 7, Execution::Parallel).unwrap();
        let s = simulate_ensemble(&m, &b, &g, &c, 200, 7, Execution::Sequential).unwrap();
        assert_eq!(a.paths, s.paths);
    }

    #[test]
    fn csv_is_reproducible() {
        let (m, b, g, c) = setup(&[(1.0, 2.0), (-0.5, 1.0)], 5);
        let dump = |seed| {
            let e = simulate_ensemble(&m, &b, &g, &c, 20, seed, Execution::Parallel).unwrap();
            let mut buf = Vec::new();
            e.write_csv(&mut buf, 20).unwrap();
            buf
        };
        let first = dump(3);
        assert_eq!(first, dump(3));
        let text = String::from_utf8(first).unwrap();
        assert!(text.starts_with("path,step,t,dB,marks,dH1,dH2,A\n"));
        assert_eq!(text.lines().count(), 1 + 20 * 5);
    }

    #[test]
    fn zero_intensity_bracket_is_deterministic() {
        // λT = 1e-9: no path jumps, so ΔH^{(1)}_k = -Δt c_{1,1} E[L_1] on every step.
        let (m, b, g, c) = setup(&[(1.0, 1e-9)], 20);
        let e = simulate_ensemble(&m, &b, &g, &c, 200, 1, Execution::Parallel).unwrap();
        assert!(e.paths.iter().all(|p| p.levy.total_jumps() == 0));
        let comp = g.dt() * b.coeff(1, 1) * 1e-9;
        let closed = 20.0 * comp * comp;
        let est = empirical_bracket(&e, 1, 1, 1.0).unwrap();
        assert!((est.mean - closed).abs() <= 1e-12 * closed);
        assert!(est.std_error <= 1e-12 * closed);
    }

    #[test]
    fn bracket_rejects_small_ensembles_and_bad_indices() {
        let (m, b, g, c) = setup(&[(1.0, 1.0)], 4);
        let e = simulate_ensemble(&m, &b, &g, &c, 50, 1, Execution::Sequential).unwrap();
        assert!(empirical_bracket(&e, 1, 1, 1.0).is_err());
        let e = simulate_ensemble(&m, &b, &g, &c, 100, 1, Execution::Sequential).unwrap();
        assert!(empirical_bracket(&e, 2, 1, 1.0).is_err());
        assert!(increment_mean(&e, 1, 4).is_err());
    }

    #[test]
    fn chi_square_accepts_exact_frequencies() {
        // Counts laid out in exact Poisson(1) proportions.
        let mut counts = Vec::new();
        let mut pmf = (-1.0f64).exp();
        for k in 0..8u64 {
            let n = (10_000.0 * pmf).round() as usize;
            counts.extend(std::iter::repeat_n(k, n));
            pmf /= (k + 1) as f64;
        }
        let r = jump_count_chi_square(&counts, 1.0).unwrap();
        assert!(r.p_value > 0.5, "{r:?}");
        let skewed: Vec<u64> = counts.iter().map(|c| c + 1).collect();
        assert!(jump_count_chi_square(&skewed, 1.0).unwrap().p_value < 1e-6);
    }
}
