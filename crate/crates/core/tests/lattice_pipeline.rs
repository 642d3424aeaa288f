//! End-to-end runs on the jump lattice: solver against closed forms, both
//! execution strategies, and the comparison and ladder stages on top.

use gbdsde::approx_ladder::{default_rungs, run_ladder, ContinuousDriver, Direction, LadderConfig};
use gbdsde::comparison_lab::{compare, Certificates, ComparisonCase, Order, Verdict};
use gbdsde::levy_basis::{JumpMeasure, OrthoBasis};
use gbdsde::path_engine::{clock_values, simulate_brownian, BrownianPath, ClockA, ClockProfile, TimeGrid};
use gbdsde::solver::{
    build_lattice, picard_solve, solve_backward, solve_backward_with, DriverSpec, JumpLattice, SolverConfig,
    TerminalSpec,
};
use gbdsde::Execution;

const PAIRS: [(f64, f64); 2] = [(1.0, 1.0), (-0.5, 2.0)];

fn setup(steps: usize) -> (JumpLattice, BrownianPath, ClockA) {
    let measure = JumpMeasure::from_pairs(&PAIRS).unwrap();
    let basis = OrthoBasis::for_measure(&measure).unwrap();
    let grid = TimeGrid::new(1.0, steps).unwrap();
    (
        build_lattice(&measure, &basis, &grid).unwrap(),
        simulate_brownian(&grid, 9).unwrap(),
        clock_values(&ClockProfile::linear(0.5), &grid).unwrap(),
    )
}

#[test]
fn quadratic_terminal_matches_levy_moments() {
    // f = 0: Y_0 = E[L_T²] = TΣa²λ + (TΣaλ)². The measure has ΣaλΔt = 0, so
    // the one-jump-per-step lattice carries the per-step variance exactly.
    let exact = 1.0 + 0.5;
    let mut errors = Vec::new();
    for steps in [10, 50, 200] {
        let (lat, b, a) = setup(steps);
        let xi = TerminalSpec::new(|s| s.levy * s.levy);
        errors.push((solve_backward(&lat, &DriverSpec::zero(), &xi, &b, &a).unwrap().y0() - exact).abs());
    }
    assert!(errors.iter().all(|e| *e < 1e-12), "{errors:?}");
}

#[test]
fn strategies_and_picard_agree() {
    let (lat, b, a) = setup(30);
    let driver = DriverSpec::zero()
        .with_f(|t, y, z| -0.4 * y + 0.2 * z[0] - 0.1 * z[1].sin() + t)
        .with_h(|_, y| 0.3 * y.cos())
        .with_g(|_, y| 0.2 * y)
        .with_k(1.0);
    let xi = TerminalSpec::new(|s| (s.levy + s.brownian).tanh());
    let seq = SolverConfig { exec: Execution::Sequential, ..SolverConfig::default() };
    let s1 = solve_backward_with(&lat, &driver, &xi, &b, &a, &SolverConfig::default()).unwrap();
    let s2 = solve_backward_with(&lat, &driver, &xi, &b, &a, &seq).unwrap();
    for k in 0..=30 {
        assert_eq!(s1.y_layer(k), s2.y_layer(k));
    }
    let (p, hist) = picard_solve(&lat, &driver, &xi, &b, &a, 200, 1e-13, Execution::Parallel).unwrap();
    assert!(hist.converged_at > 1);
    assert!((p.y0() - s1.y0()).abs() < 1e-9, "{} {}", p.y0(), s1.y0());
}

#[test]
fn ordered_data_through_the_full_stack() {
    let (lat, b, a) = setup(25);
    let d = DriverSpec::zero().with_f(|_, y, _| -0.5 * y.sin()).with_g(|_, y| 0.1 * y).with_k(1.0);
    let (x1, x2) = (TerminalSpec::affine(0.4, 0.2, 0.0, 0.0), TerminalSpec::affine(0.1, 0.2, 0.0, 0.0));
    let s1 = solve_backward(&lat, &d, &x1, &b, &a).unwrap();
    let s2 = solve_backward(&lat, &d, &x2, &b, &a).unwrap();
    let case = ComparisonCase {
        lattice: &lat,
        driver1: &d,
        driver2: &d,
        terminal1: &x1,
        terminal2: &x2,
        sol1: &s1,
        sol2: &s2,
    };
    let rep = compare(&case, &Certificates { xi: Order::Strict, ..Certificates::default() }).unwrap();
    assert_eq!(rep.verdict, Verdict::StrictHolds);
    assert!(rep.representation_residual < 1e-10);
}

#[test]
fn ladder_bounds_hold_on_a_two_atom_lattice() {
    let (lat, b, a) = setup(40);
    let spec = DriverSpec::zero()
        .with_f(|_, y, _| (y.abs().min(1.0)).sqrt())
        .with_k(0.5)
        .with_g_k(0.0)
        .with_constant_growth(1.0, 0.0, 0.0);
    let driver = ContinuousDriver::new(spec, 2.0).unwrap();
    let xi = TerminalSpec::new(|s| 0.2 + 0.05 * s.levy.tanh());
    let cfg = LadderConfig { rungs: default_rungs(0.5, 4), norm_samples: 512, ..LadderConfig::default() };
    let min = run_ladder(&lat, &driver, &xi, &b, &a, &cfg).unwrap();
    let max = run_ladder(&lat, &driver, &xi, &b, &a, &LadderConfig { direction: Direction::Max, ..cfg }).unwrap();
    assert!(min.monotone && max.monotone);
    assert!(min.rungs.iter().all(|r| r.within_bound));
    assert!(max.limit().y0() >= min.limit().y0());
}
