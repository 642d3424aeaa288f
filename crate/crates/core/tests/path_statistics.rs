//! Monte Carlo checks of the path engine against closed-form moments.

use gbdsde::levy_basis::{JumpMeasure, OrthoBasis};
use gbdsde::numeric::MeanEstimate;
use gbdsde::path_engine::{
    clock_values, increment_mean, jump_count_chi_square, simulate_ensemble, ClockProfile, PathEnsemble, TimeGrid,
};
use gbdsde::Execution;

const PAIRS: [(f64, f64); 2] = [(1.0, 1.5), (-0.5, 2.0)];

fn ensemble(paths: usize, seed: u64) -> PathEnsemble {
    let measure = JumpMeasure::from_pairs(&PAIRS).unwrap();
    let basis = OrthoBasis::for_measure(&measure).unwrap();
    let grid = TimeGrid::new(2.0, 20).unwrap();
    let clock = clock_values(&ClockProfile::linear(1.0), &grid).unwrap();
    simulate_ensemble(&measure, &basis, &grid, &clock, paths, seed, Execution::Parallel).unwrap()
}

#[test]
fn jump_counts_are_poisson() {
    let e = ensemble(20_000, 11);
    let horizon = e.grid.horizon();
    let total: Vec<u64> = e.paths.iter().map(|p| p.levy.total_jumps()).collect();
    let rep = jump_count_chi_square(&total, 3.5 * horizon).unwrap();
    assert!(rep.p_value > 1e-3, "{rep:?}");
    for (j, &(_, l)) in PAIRS.iter().enumerate() {
        let counts: Vec<u64> = e.paths.iter().map(|p| p.levy.atom_jumps(j)).collect();
        let rep = jump_count_chi_square(&counts, l * horizon).unwrap();
        assert!(rep.p_value > 1e-3, "atom {j}: {rep:?}");
    }
}

#[test]
fn levy_and_brownian_terminal_moments() {
    let e = ensemble(20_000, 12);
    let horizon = e.grid.horizon();
    let steps = e.grid.steps();
    let levy: Vec<f64> = e.paths.iter().map(|p| p.levy.level(steps)).collect();
    // E L_T = TΣaλ, Var L_T = TΣa²λ.
    let mean = MeanEstimate::from_samples(&levy);
    assert!(mean.within(horizon * (1.5 - 1.0), 5.0), "{mean:?}");
    let sq: Vec<f64> = levy.iter().map(|v| (v - mean.mean).powi(2)).collect();
    assert!(MeanEstimate::from_samples(&sq).within(horizon * (1.5 + 0.5), 5.0));
    let b2: Vec<f64> = e.paths.iter().map(|p| p.brownian.terminal().powi(2)).collect();
    assert!(MeanEstimate::from_samples(&b2).within(horizon, 5.0));
}

#[test]
fn teugels_increments_are_centered() {
    let e = ensemble(20_000, 13);
    for i in 1..=2 {
        for k in [0, 7, 19] {
            let est = increment_mean(&e, i, k).unwrap();
            assert!(est.within(0.0, 5.0), "H{i} step {k}: {est:?}");
        }
    }
}

#[test]
fn seeds_reproduce_and_separate() {
    let (a, b, c) = (ensemble(300, 4), ensemble(300, 4), ensemble(300, 5));
    assert_eq!(a.paths, b.paths);
    assert_ne!(a.paths, c.paths);
}
