use rand::Rng;
use serde::{Deserialize, Serialize};

use super::quotients::LinearizedCoeffs;
use crate::error::{Error, Result};
use crate::path_engine::{path_rng, BrownianPath, ClockA, Stream};
use crate::solver::JumpLattice;

/// Continuous part of the per-step factor of `Γ`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GammaConvention {
    /// `exp((a − ½c²)Δt + bΔA + cΔB)`.
    #[default]
    Exponential,
    /// `1 / (1 − aΔt − bΔA − cΔB)`, the factor under which the implicit
    /// scheme's difference equation is exactly represented.
    ImplicitScheme,
}

/// Everything `Γ` is driven by on one lattice.
#[derive(Debug, Clone, Copy)]
pub struct GammaInputs<'a> {
    pub lattice: &'a JumpLattice,
    pub coeffs: &'a LinearizedCoeffs,
    pub clock: &'a ClockA,
    pub bpath: &'a BrownianPath,
    pub convention: GammaConvention,
}

impl GammaInputs<'_> {
    fn check(&self) -> Result<()> {
        let n = self.lattice.steps();
        if self.coeffs.steps() != n || self.clock.steps() != n || self.bpath.steps() != n {
            return Err(Error::Mismatched);
        }
        Ok(())
    }

    /// Continuous factor at `(k, node)`.
    pub fn continuous_factor(&self, k: usize, node: usize) -> f64 {
        let dt = self.lattice.grid().dt();
        let (a, b, c) = (self.coeffs.a(k, node), self.coeffs.b(k, node), self.coeffs.c(k, node));
        let (da, db) = (self.clock.increment(k), self.bpath.increment(k));
        match self.convention {
            GammaConvention::Exponential => ((a - 0.5 * c * c) * dt + b * da + c * db).exp(),
            GammaConvention::ImplicitScheme => 1.0 / (1.0 - a * dt - b * da - c * db),
        }
    }

    /// `Σ_i β^i_k e^{(i)}(branch)`.
    pub fn jump_increment(&self, k: usize, node: usize, branch: usize) -> f64 {
        self.coeffs.beta(k, node).iter().zip(self.lattice.increments(branch)).map(|(b, e)| b * e).sum()
    }

    /// Smallest `1 − aΔt − bΔA − cΔB` over nodes.
    pub fn min_implicit_denominator(&self) -> f64 {
        let dt = self.lattice.grid().dt();
        let mut min = f64::INFINITY;
        for k in 0..self.lattice.steps() {
            let (da, db) = (self.clock.increment(k), self.bpath.increment(k));
            for node in 0..self.lattice.layer(k).len() {
                let v = 1.0 - self.coeffs.a(k, node) * dt - self.coeffs.b(k, node) * da - self.coeffs.c(k, node) * db;
                min = min.min(v);
            }
        }
        min
    }
}

/// `Γ_{s,t}` along one branch string from `(s, start node)`.
#[derive(Debug, Clone, Serialize)]
pub struct GammaPath {
    pub start: usize,
    pub nodes: Vec<usize>,
    pub branches: Vec<usize>,
    /// `Γ_{s,t_k}` for `k = s..=N` (first entry 1).
    pub values: Vec<f64>,
    /// `ΔX_k` split as (continuous log-factor, jump increment `Σβe`).
    pub drivers: Vec<(f64, f64)>,
}

/// Closed form along `branches`: the product of continuous factors times
/// `exp(Σβe) · Π(1 + Σβe) e^{−Σβe}`, accumulated in log space with a sign.
pub fn doleans_exponential(
    inputs: &GammaInputs<'_>,
    start: usize,
    start_node: usize,
    branches: &[usize],
) -> Result<GammaPath> {
    inputs.check()?;
    let n = inputs.lattice.steps();
    if start + branches.len() != n {
        return Err(Error::DimensionMismatch { expected: n - start.min(n), found: branches.len() });
    }
    let mut log = 0.0;
    let mut sign = 1.0;
    let mut zero = false;
    let mut node = start_node;
    let mut nodes = vec![node];
    let mut values = vec![1.0];
    let mut drivers = Vec::with_capacity(branches.len());
    for (j, &b) in branches.iter().enumerate() {
        let k = start + j;
        let cont = inputs.continuous_factor(k, node);
        let jump = inputs.jump_increment(k, node, b);
        let one_plus = 1.0 + jump;
        sign *= cont.signum() * one_plus.signum();
        zero |= cont == 0.0 || one_plus == 0.0;
        log += cont.abs().ln() + jump + (one_plus.abs().ln() - jump);
        drivers.push((cont.abs().ln(), jump));
        node = inputs.lattice.layer(k).child(node, b);
        nodes.push(node);
        values.push(if zero { 0.0 } else { sign * log.exp() });
    }
    Ok(GammaPath { start, nodes, branches: branches.to_vec(), values, drivers })
}

/// Forward recursion `Γ_{k+1} = Γ_k · C_k · (1 + Σβe)` along `branches`.
pub fn gamma_recursion(inputs: &GammaInputs<'_>, start: usize, start_node: usize, branches: &[usize]) -> Vec<f64> {
    let mut node = start_node;
    let mut g = 1.0;
    let mut out = vec![g];
    for (j, &b) in branches.iter().enumerate() {
        let k = start + j;
        g *= inputs.continuous_factor(k, node) * (1.0 + inputs.jump_increment(k, node, b));
        out.push(g);
        node = inputs.lattice.layer(k).child(node, b);
    }
    out
}

/// Largest gap between the closed form and the recursion, relative to
/// `max(1, |Γ|)`, over branch strings starting at step `s`. All (start node,
/// string) pairs are enumerated when there are at most `2^16` of them;
/// otherwise `samples` seeded pairs are drawn, strings from the branch
/// probabilities.
pub fn gamma_recursion_check(inputs: &GammaInputs<'_>, s: usize, samples: usize, seed: u64) -> Result<f64> {
    inputs.check()?;
    let n = inputs.lattice.steps();
    if s > n {
        return Err(Error::IndexOutOfRange { index: s, dim: n });
    }
    let nb = inputs.lattice.branches();
    let len = n - s;
    let start_nodes = inputs.lattice.layer(s).len();
    let total = start_nodes as f64 * (nb as f64).powi(len as i32);
    let mut worst = 0.0f64;
    let mut check = |node: usize, branches: &[usize]| -> Result<()> {
        let closed = doleans_exponential(inputs, s, node, branches)?;
        let rec = gamma_recursion(inputs, s, node, branches);
        for (a, b) in closed.values.iter().zip(&rec) {
            worst = worst.max((a - b).abs() / b.abs().max(1.0));
        }
        Ok(())
    };
    if total <= 65536.0 {
        let mut branches = vec![0usize; len];
        for node in 0..start_nodes {
            loop {
                check(node, &branches)?;
                let mut i = 0;
                while i < len {
                    branches[i] += 1;
                    if branches[i] < nb {
                        break;
                    }
                    branches[i] = 0;
                    i += 1;
                }
                if i == len {
                    break;
                }
            }
        }
    } else {
        let mut rng = path_rng(seed, s as u64, Stream::Lattice);
        let probs = inputs.lattice.branch_probs();
        for _ in 0..samples {
            let branches: Vec<usize> = (0..len)
                .map(|_| {
                    let u: f64 = rng.random();
                    let mut acc = 0.0;
                    probs
                        .iter()
                        .position(|p| {
                            acc += p;
                            u < acc
                        })
                        .unwrap_or(nb - 1)
                })
                .collect();
            check(rng.random_range(0..start_nodes), &branches)?;
        }
    }
    Ok(worst)
}

/// Smallest `Γ_{k,k+1}` one-step factor over all nodes and branches; every
/// `Γ` is a product of these.
pub fn min_step_factor(inputs: &GammaInputs<'_>) -> f64 {
    let mut min = f64::INFINITY;
    for k in 0..inputs.lattice.steps() {
        for node in 0..inputs.lattice.layer(k).len() {
            let cont = inputs.continuous_factor(k, node);
            for b in 0..inputs.lattice.branches() {
                min = min.min(cont * (1.0 + inputs.jump_increment(k, node, b)));
            }
        }
    }
    min
}
