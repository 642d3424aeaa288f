use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::levy_basis::{power_moments, JumpMeasure, OrthoBasis};
use crate::path_engine::TimeGrid;

/// Default cap on the total number of lattice nodes over all layers.
pub const DEFAULT_NODE_CAP: u64 = 1 << 24;

/// One time layer of the recombining jump lattice.
///
/// A node is identified by its per-atom jump counts; every quantity the
/// solver needs (jump marks, `L_t`, power sums) is a function of those counts,
/// so branch strings with equal counts share one node.
#[derive(Debug, Clone, Serialize)]
pub struct Layer {
    dim: usize,
    counts: Vec<u32>,
    children: Vec<u32>,
    probs: Vec<f64>,
}

impl Layer {
    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// Jump counts per atom at `node`.
    pub fn counts(&self, node: usize) -> &[u32] {
        &self.counts[node * self.dim..(node + 1) * self.dim]
    }

    /// Index in the next layer reached from `node` through `branch`
    /// (0 = no jump, `b` = one jump of atom `b`). Empty on the last layer.
    pub fn child(&self, node: usize, branch: usize) -> usize {
        self.children[node * (self.dim + 1) + branch] as usize
    }

    /// Probability of reaching `node` from the root.
    pub fn prob(&self, node: usize) -> f64 {
        self.probs[node]
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct JumpLattice {
    grid: TimeGrid,
    sizes: Vec<f64>,
    branch_probs: Vec<f64>,
    raw: Vec<f64>,
    increments: Vec<f64>,
    reortho: Vec<f64>,
    layers: Vec<Layer>,
}

/// `Σ_{k=0}^{N} C(k+m, m) = C(N+m+1, m+1)`, saturating.
pub fn lattice_node_count(steps: usize, dim: usize) -> u64 {
    let (n, r) = ((steps + dim + 1) as u128, (dim + 1) as u128);
    let mut acc: u128 = 1;
    for i in 0..r {
        acc = acc * (n - i) / (i + 1);
        if acc > u64::MAX as u128 {
            return u64::MAX;
        }
    }
    acc as u64
}

pub fn build_lattice(measure: &JumpMeasure, basis: &OrthoBasis, grid: &TimeGrid) -> Result<JumpLattice> {
    build_lattice_with_cap(measure, basis, grid, DEFAULT_NODE_CAP)
}

pub fn build_lattice_with_cap(
    measure: &JumpMeasure,
    basis: &OrthoBasis,
    grid: &TimeGrid,
    node_cap: u64,
) -> Result<JumpLattice> {
    let m = measure.dim();
    if basis.dim() != m {
        return Err(Error::DimensionMismatch { expected: m, found: basis.dim() });
    }
    let dt = grid.dt();
    let total = measure.total_intensity();
    let mass = total * dt;
    if mass >= 1.0 {
        let min_steps = (total * grid.horizon()).floor() as usize + 1;
        return Err(Error::ProbabilityOverflow { mass, min_steps });
    }
    let nodes = lattice_node_count(grid.steps(), m);
    if nodes > node_cap {
        return Err(Error::LatticeTooLarge { nodes, cap: node_cap });
    }

    let sizes = measure.sizes();
    let mut branch_probs = vec![1.0 - mass];
    branch_probs.extend(measure.atoms().iter().map(|a| a.intensity * dt));

    // Raw branch values Σ_{j≤i} c_{ij}(a^j 1_jump − Δt M_j).
    let moments = power_moments(measure, m)?;
    let nb = m + 1;
    let mut raw = vec![0.0; nb * m];
    for b in 0..nb {
        for i in 1..=m {
            let mut v = 0.0;
            for j in 1..=i {
                let jump = if b == 0 { 0.0 } else { sizes[b - 1].powi(j as i32) };
                v += basis.coeff(i, j) * (jump - dt * moments.get(j));
            }
            raw[b * m + (i - 1)] = v;
        }
    }
    let (increments, reortho) = reorthonormalize(&raw, &branch_probs, m, dt)?;
    let layers = build_layers(m, grid.steps(), &branch_probs);
    Ok(JumpLattice { grid: *grid, sizes, branch_probs, raw, increments, reortho, layers })
}

/// Centres the raw branch values under the branch probabilities and maps
/// them through `S = √Δt L⁻¹`, where `LLᵀ` is their covariance, so that
/// `E[e] = 0` and `E[e eᵀ] = Δt I`.
fn reorthonormalize(raw: &[f64], probs: &[f64], m: usize, dt: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let nb = probs.len();
    let mean: Vec<f64> = (0..m).map(|i| (0..nb).map(|b| probs[b] * raw[b * m + i]).sum()).collect();
    let centred: Vec<f64> = (0..nb * m).map(|idx| raw[idx] - mean[idx % m]).collect();
    // Weighted design matrix: row b = √p_b (r(b) − E r).
    let design = DMatrix::from_fn(nb, m, |b, i| probs[b].sqrt() * centred[b * m + i]);
    let r = design.qr().r();
    let mut l = DMatrix::zeros(m, m);
    for i in 0..m {
        let d = r[(i, i)];
        if d == 0.0 || !d.is_finite() {
            return Err(Error::NotPositiveDefinite { pivot: i + 1, value: d * d });
        }
        for j in 0..=i {
            l[(i, j)] = r[(j, j)].signum() * r[(j, i)];
        }
    }
    let mut s = vec![0.0; m * m];
    for col in 0..m {
        let mut unit = DVector::zeros(m);
        unit[col] = 1.0;
        let x = l.solve_lower_triangular(&unit).ok_or(Error::NotPositiveDefinite { pivot: col + 1, value: 0.0 })?;
        for row in 0..m {
            s[row * m + col] = dt.sqrt() * x[row];
        }
    }
    let mut e = vec![0.0; nb * m];
    for b in 0..nb {
        for i in 0..m {
            e[b * m + i] = (0..=i).map(|j| s[i * m + j] * centred[b * m + j]).sum();
        }
    }
    Ok((e, s))
}

fn build_layers(m: usize, steps: usize, probs: &[f64]) -> Vec<Layer> {
    let nb = m + 1;
    let mut layers = Vec::with_capacity(steps + 1);
    let mut current = Layer { dim: m, counts: vec![0; m], children: Vec::new(), probs: vec![1.0] };
    for _ in 0..steps {
        let mut index: HashMap<Vec<u32>, u32> = HashMap::new();
        let mut next_counts = Vec::new();
        let mut next_probs: Vec<f64> = Vec::new();
        let mut children = Vec::with_capacity(current.len() * nb);
        for node in 0..current.len() {
            for b in 0..nb {
                let mut c = current.counts(node).to_vec();
                if b > 0 {
                    c[b - 1] += 1;
                }
                let id = *index.entry(c.clone()).or_insert_with(|| {
                    next_counts.extend_from_slice(&c);
                    next_probs.push(0.0);
                    (next_probs.len() - 1) as u32
                });
                next_probs[id as usize] += current.probs[node] * probs[b];
                children.push(id);
            }
        }
        current.children = children;
        let next = Layer { dim: m, counts: next_counts, children: Vec::new(), probs: next_probs };
        layers.push(std::mem::replace(&mut current, next));
    }
    layers.push(current);
    layers
}

impl JumpLattice {
    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.sizes.len()
    }

    pub fn steps(&self) -> usize {
        self.grid.steps()
    }

    pub fn branches(&self) -> usize {
        self.sizes.len() + 1
    }

    pub fn sizes(&self) -> &[f64] {
        &self.sizes
    }

    pub fn branch_prob(&self, branch: usize) -> f64 {
        self.branch_probs[branch]
    }

    pub fn branch_probs(&self) -> &[f64] {
        &self.branch_probs
    }

    /// Raw discrete Teugels value of component `i` (1-based) on `branch`.
    pub fn raw_increment(&self, branch: usize, i: usize) -> f64 {
        self.raw[branch * self.dim() + i - 1]
    }

    /// Re-orthonormalized increment `e^{(i)}` (1-based `i`) on `branch`.
    pub fn increment(&self, branch: usize, i: usize) -> f64 {
        self.increments[branch * self.dim() + i - 1]
    }

    /// All `m` increments on `branch`.
    pub fn increments(&self, branch: usize) -> &[f64] {
        let m = self.dim();
        &self.increments[branch * m..(branch + 1) * m]
    }

    /// Lower-triangular `S` (row-major) with `e = S (r − E r)`.
    pub fn reorthonormalization(&self) -> &[f64] {
        &self.reortho
    }

    pub fn layer(&self, k: usize) -> &Layer {
        &self.layers[k]
    }

    pub fn node_count(&self) -> usize {
        self.layers.iter().map(Layer::len).sum()
    }

    /// `L_{t_k}` at `node`.
    pub fn level(&self, k: usize, node: usize) -> f64 {
        self.layers[k].counts(node).iter().zip(&self.sizes).map(|(&n, &a)| n as f64 * a).sum()
    }

    /// Largest deviation from `E[e^{(i)}] = 0` and `E[e^{(i)}e^{(j)}] = δ_ij Δt`.
    pub fn moment_residual(&self) -> f64 {
        let m = self.dim();
        let dt = self.grid.dt();
        let mut worst = 0.0f64;
        for i in 1..=m {
            let mean: f64 = (0..self.branches()).map(|b| self.branch_probs[b] * self.increment(b, i)).sum();
            worst = worst.max(mean.abs());
            for j in 1..=m {
                let cov: f64 = (0..self.branches())
                    .map(|b| self.branch_probs[b] * self.increment(b, i) * self.increment(b, j))
                    .sum();
                let target = if i == j { dt } else { 0.0 };
                worst = worst.max((cov - target).abs());
            }
        }
        worst
    }
}
