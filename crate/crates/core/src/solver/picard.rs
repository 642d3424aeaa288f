use serde::Serialize;

use super::backward::{check_shapes, project, terminal_layer, Solution};
use super::driver::{DriverSpec, TerminalSpec};
use super::lattice::JumpLattice;
use crate::error::{Error, Result};
use crate::path_engine::{BrownianPath, ClockA};
use crate::Execution;

/// Successive distances `d_p = ‖(Y^{p+1} − Y^p, Z^{p+1} − Z^p)‖_{E_m}`,
/// starting from the zero iterate.
#[derive(Debug, Clone, Serialize)]
pub struct PicardHistory {
    pub distances: Vec<f64>,
    /// First `p` with `d_p ≤ tol`: iterate `p` was already a fixed point.
    pub converged_at: usize,
}

impl PicardHistory {
    /// Geometric mean of `d_{p+1}/d_p` over the recorded tail (entries above
    /// `floor`).
    pub fn contraction_factor(&self, floor: f64) -> Option<f64> {
        let d: Vec<f64> = self.distances.iter().copied().filter(|&v| v > floor).collect();
        if d.len() < 3 {
            return None;
        }
        let tail = &d[1..];
        Some((tail[tail.len() - 1] / tail[0]).powf(1.0 / (tail.len() - 1) as f64))
    }
}

/// Square root of `max node |ΔY|² + Σ_k E|ΔY_k|²ΔA_k + Σ_k E‖ΔZ_k‖²Δt`.
pub fn em_distance(lattice: &JumpLattice, a: &Solution, b: &Solution) -> f64 {
    let dt = lattice.grid().dt();
    let clock = a.clock();
    let mut sup = 0.0f64;
    let mut a2 = 0.0;
    let mut m2 = 0.0;
    for k in 0..=lattice.steps() {
        let layer = lattice.layer(k);
        for node in 0..layer.len() {
            let dy = a.y(k, node) - b.y(k, node);
            sup = sup.max(dy * dy);
            if k < lattice.steps() {
                let p = layer.prob(node);
                a2 += p * dy * dy * clock.increment(k);
                let dz: f64 = a.z(k, node).iter().zip(b.z(k, node)).map(|(x, y)| (x - y) * (x - y)).sum();
                m2 += p * dz * dt;
            }
        }
    }
    (sup + a2 + m2).sqrt()
}

fn zero_iterate(lattice: &JumpLattice, bpath: &BrownianPath, clock: &ClockA) -> Solution {
    let m = lattice.dim();
    let y = (0..=lattice.steps()).map(|k| vec![0.0; lattice.layer(k).len()]).collect();
    let z = (0..lattice.steps()).map(|k| vec![0.0; lattice.layer(k).len() * m]).collect();
    Solution::from_parts(m, y, z, bpath.clone(), clock.clone(), 0.0)
}

/// One Picard map: coefficients frozen at `prev`, then an explicit backward
/// sweep.
fn picard_map(
    lattice: &JumpLattice,
    driver: &DriverSpec,
    xi: &[f64],
    prev: &Solution,
    exec: Execution,
) -> Result<Solution> {
    let m = lattice.dim();
    let n = lattice.steps();
    let dt = lattice.grid().dt();
    let (bpath, clock) = (prev.brownian(), prev.clock());
    let mut y = vec![Vec::new(); n + 1];
    let mut z = vec![Vec::new(); n];
    y[n] = xi.to_vec();
    for k in (0..n).rev() {
        let t = lattice.grid().time(k);
        let (da, db) = (clock.increment(k), bpath.increment(k));
        let next = &y[k + 1];
        let nodes = exec.try_map(lattice.layer(k).len(), |node| {
            let mut zk = vec![0.0; m];
            let mean = project(lattice, k, node, next, &mut zk);
            let (yp, zp) = (prev.y(k, node), prev.z(k, node));
            let v = mean + driver.f(t, yp, zp) * dt + driver.h(t, yp) * da + driver.g(t, yp, zp) * db;
            if v.is_finite() {
                Ok((v, zk))
            } else {
                Err(Error::NonFinite { step: k, node })
            }
        })?;
        let mut yk = Vec::with_capacity(nodes.len());
        let mut zk = Vec::with_capacity(nodes.len() * m);
        for (v, zv) in nodes {
            yk.push(v);
            zk.extend(zv);
        }
        y[k] = yk;
        z[k] = zk;
    }
    Ok(Solution::from_parts(m, y, z, bpath.clone(), clock.clone(), 0.0))
}

/// Global Picard iteration for Lipschitz drivers.
#[allow(clippy::too_many_arguments)]
pub fn picard_solve(
    lattice: &JumpLattice,
    driver: &DriverSpec,
    terminal: &TerminalSpec,
    bpath: &BrownianPath,
    clock: &ClockA,
    max_iters: usize,
    tol: f64,
    exec: Execution,
) -> Result<(Solution, PicardHistory)> {
    driver.validate()?;
    check_shapes(lattice, bpath, clock)?;
    let xi = terminal_layer(lattice, terminal, bpath, clock)?;
    let mut current = zero_iterate(lattice, bpath, clock);
    let mut distances: Vec<f64> = Vec::new();
    let mut rising = 0;
    for p in 0..max_iters {
        let next = picard_map(lattice, driver, &xi, &current, exec)?;
        let d = em_distance(lattice, &next, &current);
        if let Some(&last) = distances.last() {
            rising = if d > last { rising + 1 } else { 0 };
            if rising >= 3 {
                return Err(Error::NonContraction(rising));
            }
        }
        distances.push(d);
        current = next;
        if d <= tol {
            return Ok((current, PicardHistory { distances, converged_at: p }));
        }
    }
    Err(Error::PicardExhausted(max_iters))
}
