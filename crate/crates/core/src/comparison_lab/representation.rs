use serde::Serialize;

use super::gamma::{GammaConvention, GammaInputs};
use super::quotients::{DataGaps, LinearizedCoeffs};
use crate::error::{Error, Result};
use crate::path_engine::{BrownianPath, ClockA};
use crate::solver::{JumpLattice, Solution};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RepresentationResult {
    /// `max |Ȳ − V|` over nodes, `V` the Γ-weighted conditional expectation.
    pub max_residual: f64,
    /// `|Ȳ_0 − V_0|` with `V_0` recomputed by forward Γ-weighted mass.
    pub root_residual: f64,
}

/// `V_k = E[Γ_{k,N} ξ̄ + Σ_{r ≥ k} Γ_{k,r} ρ_r (f̄_r Δt + h̄_r ΔA_r + ḡ_r ΔB_r) | node]`
/// under the implicit-scheme convention, computed by backward recursion.
pub fn represented_values(
    lattice: &JumpLattice,
    coeffs: &LinearizedCoeffs,
    gaps: &DataGaps,
    clock: &ClockA,
    bpath: &BrownianPath,
) -> Result<Vec<Vec<f64>>> {
    let n = lattice.steps();
    if coeffs.steps() != n || gaps.f.len() != n || gaps.xi.len() != lattice.layer(n).len() {
        return Err(Error::Mismatched);
    }
    let inputs = GammaInputs { lattice, coeffs, clock, bpath, convention: GammaConvention::ImplicitScheme };
    let dt = lattice.grid().dt();
    let mut v = vec![Vec::new(); n + 1];
    v[n] = gaps.xi.clone();
    for k in (0..n).rev() {
        let layer = lattice.layer(k);
        let (da, db) = (clock.increment(k), bpath.increment(k));
        let vk: Vec<f64> = (0..layer.len())
            .map(|node| {
                let rho = inputs.continuous_factor(k, node);
                let ahead: f64 = (0..lattice.branches())
                    .map(|b| {
                        lattice.branch_prob(b)
                            * (1.0 + inputs.jump_increment(k, node, b))
                            * v[k + 1][layer.child(node, b)]
                    })
                    .sum();
                rho * (ahead + gaps.f[k][node] * dt + gaps.h[k][node] * da + gaps.g[k][node] * db)
            })
            .collect();
        v[k] = vk;
    }
    Ok(v)
}

/// Root value of the representation computed forward: Γ-weighted node masses
/// are pushed from the root and paired with the data gaps.
pub fn represented_root(
    lattice: &JumpLattice,
    coeffs: &LinearizedCoeffs,
    gaps: &DataGaps,
    clock: &ClockA,
    bpath: &BrownianPath,
) -> f64 {
    let n = lattice.steps();
    let inputs = GammaInputs { lattice, coeffs, clock, bpath, convention: GammaConvention::ImplicitScheme };
    let dt = lattice.grid().dt();
    let mut mass = vec![1.0];
    let mut total = 0.0;
    for k in 0..n {
        let layer = lattice.layer(k);
        let (da, db) = (clock.increment(k), bpath.increment(k));
        let mut next = vec![0.0; lattice.layer(k + 1).len()];
        for node in 0..layer.len() {
            let rho = inputs.continuous_factor(k, node);
            total += mass[node] * rho * (gaps.f[k][node] * dt + gaps.h[k][node] * da + gaps.g[k][node] * db);
            for b in 0..lattice.branches() {
                next[layer.child(node, b)] +=
                    mass[node] * lattice.branch_prob(b) * rho * (1.0 + inputs.jump_increment(k, node, b));
            }
        }
        mass = next;
    }
    total + mass.iter().zip(&gaps.xi).map(|(m, x)| m * x).sum::<f64>()
}

pub fn representation_check(
    lattice: &JumpLattice,
    sol1: &Solution,
    sol2: &Solution,
    coeffs: &LinearizedCoeffs,
    gaps: &DataGaps,
) -> Result<RepresentationResult> {
    let (clock, bpath) = (sol1.clock(), sol1.brownian());
    let v = represented_values(lattice, coeffs, gaps, clock, bpath)?;
    let mut max_residual = 0.0f64;
    for (k, vk) in v.iter().enumerate() {
        for (node, value) in vk.iter().enumerate() {
            max_residual = max_residual.max((sol1.y(k, node) - sol2.y(k, node) - value).abs());
        }
    }
    let root = represented_root(lattice, coeffs, gaps, clock, bpath);
    Ok(RepresentationResult { max_residual, root_residual: (sol1.y0() - sol2.y0() - root).abs() })
}
