use std::io::Write;

use serde::{Deserialize, Serialize};

use super::driver::{DriverSpec, TerminalSpec, TerminalState};
use super::lattice::JumpLattice;
use crate::error::{Error, Result};
use crate::path_engine::{BrownianPath, ClockA};
use crate::Execution;

/// Tolerances of the implicit Y-step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    /// Fixed-point tolerance, relative to `max(1, |y|)`.
    pub tol: f64,
    pub max_iters: usize,
    pub exec: Execution,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { tol: 1e-12, max_iters: 200, exec: Execution::Parallel }
    }
}

/// `(Y, Z)` on every lattice node, together with the Brownian path and clock
/// it was solved against.
#[derive(Debug, Clone, Serialize)]
pub struct Solution {
    dim: usize,
    y: Vec<Vec<f64>>,
    z: Vec<Vec<f64>>,
    brownian: BrownianPath,
    clock: ClockA,
    max_residual: f64,
}

impl Solution {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn steps(&self) -> usize {
        self.y.len() - 1
    }

    pub fn y(&self, k: usize, node: usize) -> f64 {
        self.y[k][node]
    }

    pub fn y_layer(&self, k: usize) -> &[f64] {
        &self.y[k]
    }

    pub fn y0(&self) -> f64 {
        self.y[0][0]
    }

    /// `Z_k` at `node` for `k < N`.
    pub fn z(&self, k: usize, node: usize) -> &[f64] {
        &self.z[k][node * self.dim..(node + 1) * self.dim]
    }

    pub fn brownian(&self) -> &BrownianPath {
        &self.brownian
    }

    pub fn clock(&self) -> &ClockA {
        &self.clock
    }

    /// Largest accepted fixed-point residual over all nodes, relative to
    /// `max(1, |Y|)`.
    pub fn max_residual(&self) -> f64 {
        self.max_residual
    }

    /// `step,node,Y,Z1..Zm`; Z is blank on the terminal layer.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["step".to_string(), "node".into(), "Y".into()];
        header.extend((1..=self.dim).map(|i| format!("Z{i}")));
        w.write_record(&header)?;
        for k in 0..=self.steps() {
            for node in 0..self.y[k].len() {
                let mut row = vec![k.to_string(), node.to_string(), self.y[k][node].to_string()];
                if k < self.steps() {
                    row.extend(self.z(k, node).iter().map(|v| v.to_string()));
                } else {
                    row.extend((0..self.dim).map(|_| String::new()));
                }
                w.write_record(&row)?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub(crate) fn from_parts(
        dim: usize,
        y: Vec<Vec<f64>>,
        z: Vec<Vec<f64>>,
        brownian: BrownianPath,
        clock: ClockA,
        max_residual: f64,
    ) -> Self {
        Self { dim, y, z, brownian, clock, max_residual }
    }
}

pub(crate) fn check_shapes(lattice: &JumpLattice, bpath: &BrownianPath, clock: &ClockA) -> Result<()> {
    let n = lattice.steps();
    if bpath.steps() != n {
        return Err(Error::DimensionMismatch { expected: n, found: bpath.steps() });
    }
    if clock.steps() != n {
        return Err(Error::DimensionMismatch { expected: n, found: clock.steps() });
    }
    Ok(())
}

pub(crate) fn terminal_layer(
    lattice: &JumpLattice,
    terminal: &TerminalSpec,
    bpath: &BrownianPath,
    clock: &ClockA,
) -> Result<Vec<f64>> {
    let n = lattice.steps();
    let layer = lattice.layer(n);
    (0..layer.len())
        .map(|node| {
            let state = TerminalState {
                counts: layer.counts(node),
                levy: lattice.level(n, node),
                clock: clock.terminal(),
                brownian: bpath.terminal(),
            };
            let v = terminal.eval(&state);
            if v.is_finite() {
                Ok(v)
            } else {
                Err(Error::NonFinite { step: n, node })
            }
        })
        .collect()
}

/// `(E[Y_{k+1}], Z_k)` at `node` from the next layer's values.
pub(crate) fn project(lattice: &JumpLattice, k: usize, node: usize, next: &[f64], z: &mut [f64]) -> f64 {
    let layer = lattice.layer(k);
    let dt = lattice.grid().dt();
    z.iter_mut().for_each(|v| *v = 0.0);
    let mut mean = 0.0;
    for b in 0..lattice.branches() {
        let p = lattice.branch_prob(b);
        let y = next[layer.child(node, b)];
        mean += p * y;
        for (zi, e) in z.iter_mut().zip(lattice.increments(b)) {
            *zi += p * y * e;
        }
    }
    z.iter_mut().for_each(|v| *v /= dt);
    mean
}

/// Solves `y = phi(y)` from `start`. Plain iteration first; the step is halved
/// whenever the residual grows.
pub(crate) fn fixed_point(
    start: f64,
    phi: impl Fn(f64) -> f64,
    tol: f64,
    max_iters: usize,
) -> std::result::Result<(f64, f64), f64> {
    let mut y = start;
    let mut damping = 1.0;
    let mut last = f64::INFINITY;
    for _ in 0..max_iters {
        let next = phi(y);
        if !next.is_finite() {
            return Err(f64::NAN);
        }
        let residual = (next - y).abs();
        let scaled = residual / y.abs().max(1.0);
        if scaled <= tol {
            return Ok((next, scaled));
        }
        if residual > last && damping > 1.0 / 64.0 {
            damping *= 0.5;
        }
        last = residual;
        y += damping * (next - y);
    }
    Err(last)
}

pub fn solve_backward(
    lattice: &JumpLattice,
    driver: &DriverSpec,
    terminal: &TerminalSpec,
    bpath: &BrownianPath,
    clock: &ClockA,
) -> Result<Solution> {
    solve_backward_with(lattice, driver, terminal, bpath, clock, &SolverConfig::default())
}

pub fn solve_backward_with(
    lattice: &JumpLattice,
    driver: &DriverSpec,
    terminal: &TerminalSpec,
    bpath: &BrownianPath,
    clock: &ClockA,
    config: &SolverConfig,
) -> Result<Solution> {
    driver.validate()?;
    check_shapes(lattice, bpath, clock)?;
    let m = lattice.dim();
    let n = lattice.steps();
    let dt = lattice.grid().dt();
    let mut y = vec![Vec::new(); n + 1];
    let mut z = vec![Vec::new(); n];
    y[n] = terminal_layer(lattice, terminal, bpath, clock)?;
    let mut max_residual = 0.0f64;
    for k in (0..n).rev() {
        let t = lattice.grid().time(k);
        let (da, db) = (clock.increment(k), bpath.increment(k));
        let next = &y[k + 1];
        let nodes = config.exec.try_map(lattice.layer(k).len(), |node| {
            let mut zk = vec![0.0; m];
            let mean = project(lattice, k, node, next, &mut zk);
            if !mean.is_finite() {
                return Err(Error::NonFinite { step: k, node });
            }
            let phi = |v: f64| mean + driver.f(t, v, &zk) * dt + driver.h(t, v) * da + driver.g(t, v, &zk) * db;
            match fixed_point(mean, phi, config.tol, config.max_iters) {
                Ok((v, r)) => Ok((v, r, zk)),
                Err(r) if r.is_nan() => Err(Error::NonFinite { step: k, node }),
                Err(residual) => Err(Error::FixedPointDiverged { step: k, node, residual }),
            }
        })?;
        let mut yk = Vec::with_capacity(nodes.len());
        let mut zk = Vec::with_capacity(nodes.len() * m);
        for (v, r, zv) in nodes {
            yk.push(v);
            zk.extend(zv);
            max_residual = max_residual.max(r);
        }
        y[k] = yk;
        z[k] = zk;
    }
    Ok(Solution { dim: m, y, z, brownian: bpath.clone(), clock: clock.clone(), max_residual })
}

/// Largest `|E[(Y_{k+1} − E[Y_{k+1}] − Σ_i Z^{(i)}_k e^{(i)}) e^{(j)}]|` over
/// steps, nodes and `j`.
pub fn projection_residual(lattice: &JumpLattice, sol: &Solution) -> f64 {
    let m = lattice.dim();
    let mut worst = 0.0f64;
    for k in 0..lattice.steps() {
        let layer = lattice.layer(k);
        for node in 0..layer.len() {
            let zk = sol.z(k, node);
            let mean: f64 =
                (0..lattice.branches()).map(|b| lattice.branch_prob(b) * sol.y(k + 1, layer.child(node, b))).sum();
            for j in 1..=m {
                let r: f64 = (0..lattice.branches())
                    .map(|b| {
                        let e = lattice.increments(b);
                        let fit: f64 = zk.iter().zip(e).map(|(z, e)| z * e).sum();
                        lattice.branch_prob(b) * (sol.y(k + 1, layer.child(node, b)) - mean - fit) * e[j - 1]
                    })
                    .sum();
                worst = worst.max(r.abs());
            }
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levy_basis::{JumpMeasure, OrthoBasis};
    use crate::path_engine::{clock_values, simulate_brownian, ClockProfile, TimeGrid};
    use crate::solver::build_lattice;

    fn setup(steps: usize) -> (JumpLattice, BrownianPath, ClockA) {
        let measure = JumpMeasure::from_pairs(&[(1.0, 1.0), (-0.5, 2.0)]).unwrap();
        let basis = OrthoBasis::for_measure(&measure).unwrap();
        let grid = TimeGrid::new(1.0, steps).unwrap();
        let lat = build_lattice(&measure, &basis, &grid).unwrap();
        let b = simulate_brownian(&grid, 11).unwrap();
        let a = clock_values(&ClockProfile::linear(1.0), &grid).unwrap();
        (lat, b, a)
    }

    #[test]
    fn zero_driver_keeps_constant() {
        let (lat, b, a) = setup(8);
        let sol = solve_backward(&lat, &DriverSpec::zero(), &TerminalSpec::constant(2.5), &b, &a).unwrap();
        for k in 0..=8 {
            assert!(sol.y_layer(k).iter().all(|&v| v == 2.5));
            if k < 8 {
                for node in 0..lat.layer(k).len() {
                    assert!(sol.z(k, node).iter().all(|v| v.abs() < 1e-13));
                }
            }
        }
    }

    #[test]
    fn martingale_terminal_is_conserved() {
        let (lat, b, a) = setup(10);
        let xi = TerminalSpec::new(|s| s.levy * s.levy - s.counts[0] as f64);
        let sol = solve_backward(&lat, &DriverSpec::zero(), &xi, &b, &a).unwrap();
        for k in 0..10 {
            let layer = lat.layer(k);
            for node in 0..layer.len() {
                let mean: f64 = (0..3).map(|br| lat.branch_prob(br) * sol.y(k + 1, layer.child(node, br))).sum();
                assert!((mean - sol.y(k, node)).abs() < 1e-12);
            }
        }
        assert!(projection_residual(&lat, &sol) < 1e-12);
    }

    #[test]
    fn constant_g_telescopes() {
        let (lat, b, a) = setup(12);
        let c = 0.7;
        let sol = solve_backward(&lat, &DriverSpec::zero().with_g(move |_, _| c), &TerminalSpec::constant(0.0), &b, &a)
            .unwrap();
        for k in 0..=12 {
            let expect = c * (b.terminal() - b.level(k));
            assert!(sol.y_layer(k).iter().all(|v| (v - expect).abs() < 1e-13));
        }
    }

    #[test]
    fn execution_modes_agree() {
        let (lat, b, a) = setup(10);
        let d = DriverSpec::zero().with_f(|_, y, z| -y + 0.3 * z[0] - 0.2 * z[1].sin()).with_h(|_, y| 0.5 * y.cos());
        let xi = TerminalSpec::new(|s| s.levy.tanh() + s.brownian);
        let seq = SolverConfig { exec: Execution::Sequential, ..Default::default() };
        let s1 = solve_backward(&lat, &d, &xi, &b, &a).unwrap();
        let s2 = solve_backward_with(&lat, &d, &xi, &b, &a, &seq).unwrap();
        for k in 0..=10 {
            assert_eq!(s1.y_layer(k), s2.y_layer(k));
        }
        assert!(s1.max_residual() < 1e-12);
    }

    #[test]
    fn non_finite_driver_is_reported() {
        let (lat, b, a) = setup(4);
        let d = DriverSpec::zero().with_f(|_, y, _| (y - 10.0).ln());
        assert!(matches!(
            solve_backward(&lat, &d, &TerminalSpec::constant(1.0), &b, &a),
            Err(Error::NonFinite { step: 3, .. })
        ));
    }

    #[test]
    fn damping_rescues_oscillation() {
        // phi(y) = 1 − 1.5 y oscillates without damping; fixed point 0.4.
        let (v, _) = fixed_point(0.0, |y| 1.0 - 1.5 * y, 1e-12, 200).unwrap();
        assert!((v - 0.4).abs() < 1e-11);
        assert!(fixed_point(1.0, |y| 2.0 * y + 1.0, 1e-12, 50).is_err());
    }

    #[test]
    fn csv_layout() {
        let (lat, b, a) = setup(4);
        let sol = solve_backward(&lat, &DriverSpec::zero(), &TerminalSpec::constant(1.0), &b, &a).unwrap();
        let mut buf = Vec::new();
        sol.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "step,node,Y,Z1,Z2");
        assert_eq!(lines.len(), 1 + 1 + 3 + 6 + 10 + 15);
        assert_eq!(lines.last().unwrap().split(',').count(), 5);
    }
}
