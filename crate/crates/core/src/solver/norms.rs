use rand::Rng;
use serde::{Deserialize, Serialize};

use super::backward::{check_shapes, terminal_layer, Solution};
use super::driver::{DriverSpec, TerminalSpec};
use super::lattice::JumpLattice;
use crate::error::{Error, Result};
use crate::path_engine::{path_rng, BrownianPath, ClockA, Stream};

/// Exponents of the weight `e^{μ t + λ A_t}`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct NormWeights {
    pub mu: f64,
    pub lambda: f64,
}

/// How the `S²` part is estimated: `E[max_k w_k Y_k²]` is path-dependent, so
/// it is averaged over `sup_samples` seeded lattice paths unless `Y` is
/// node-independent on every layer, in which case it is exact.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NormConfig {
    pub weights: NormWeights,
    pub sup_samples: usize,
    pub seed: u64,
}

impl Default for NormConfig {
    fn default() -> Self {
        Self { weights: NormWeights::default(), sup_samples: 4096, seed: 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormReport {
    pub sup_norm: f64,
    pub m2_norm: f64,
    pub a2_norm: f64,
    pub em_norm: f64,
    pub mu: f64,
    pub lambda: f64,
}

impl NormReport {
    fn new(sup_norm: f64, m2_norm: f64, a2_norm: f64, w: NormWeights) -> Self {
        Self { sup_norm, m2_norm, a2_norm, em_norm: sup_norm + a2_norm + m2_norm, mu: w.mu, lambda: w.lambda }
    }
}

fn weight(lattice: &JumpLattice, clock: &ClockA, w: NormWeights, k: usize) -> f64 {
    (w.mu * lattice.grid().time(k) + w.lambda * clock.value(k)).exp()
}

/// Norms of a single solution (one Brownian path).
pub fn solution_norms(lattice: &JumpLattice, sol: &Solution, config: &NormConfig) -> NormReport {
    let w = config.weights;
    let clock = sol.clock();
    let dt = lattice.grid().dt();
    let n = lattice.steps();
    let mut a2 = 0.0;
    let mut m2 = 0.0;
    for k in 0..n {
        let layer = lattice.layer(k);
        let wk = weight(lattice, clock, w, k);
        for node in 0..layer.len() {
            let p = layer.prob(node);
            let y = sol.y(k, node);
            a2 += p * wk * y * y * clock.increment(k);
            m2 += p * wk * sol.z(k, node).iter().map(|v| v * v).sum::<f64>() * dt;
        }
    }
    let deterministic = (0..=n).all(|k| {
        let l = sol.y_layer(k);
        l.iter().all(|&v| v == l[0])
    });
    let sup = if deterministic {
        (0..=n).map(|k| weight(lattice, clock, w, k) * sol.y(k, 0).powi(2)).fold(0.0, f64::max)
    } else {
        let mut rng = path_rng(config.seed, 0, Stream::Lattice);
        let probs = lattice.branch_probs();
        let mut total = 0.0;
        for _ in 0..config.sup_samples {
            let mut node = 0;
            let mut best = weight(lattice, clock, w, 0) * sol.y(0, 0).powi(2);
            for k in 0..n {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                let mut branch = probs.len() - 1;
                for (b, p) in probs.iter().enumerate() {
                    acc += p;
                    if u < acc {
                        branch = b;
                        break;
                    }
                }
                node = lattice.layer(k).child(node, branch);
                best = best.max(weight(lattice, clock, w, k + 1) * sol.y(k + 1, node).powi(2));
            }
            total += best;
        }
        total / config.sup_samples.max(1) as f64
    };
    NormReport::new(sup, m2, a2, w)
}

/// Monte Carlo average of [`solution_norms`] over an ensemble of solutions
/// sharing one lattice.
pub fn norms(lattice: &JumpLattice, solutions: &[Solution], config: &NormConfig) -> Result<NormReport> {
    if solutions.is_empty() {
        return Err(Error::InvalidArgument("norms need at least one solution".into()));
    }
    let reports: Vec<NormReport> = solutions.iter().map(|s| solution_norms(lattice, s, config)).collect();
    let avg = |f: fn(&NormReport) -> f64| reports.iter().map(f).sum::<f64>() / reports.len() as f64;
    Ok(NormReport::new(avg(|r| r.sup_norm), avg(|r| r.m2_norm), avg(|r| r.a2_norm), config.weights))
}

/// Bound on the unweighted norms of any solution whose coefficients obey the
/// growth declared in `driver` (`|f| ≤ f_t + K(|y| + ‖z‖)`, `|h| ≤ h_t + K|y|`,
/// `|g| ≤ g_t + K_g|y|`), computed from the data alone.
///
/// From `Y_k = E_k Y_{k+1} + D_k` and the exact martingale representation,
/// `(1 − c_k) Y_k² + ½‖Z_k‖²Δt ≤ E_k Y_{k+1}² + r_k` with
/// `c_k = (1_{f_t} + 2K + 2K²)Δt + (1_{h_t} + 2K)ΔA_k + (1_{g_t} + 2K_g)|ΔB_k|`
/// and `r_k = f_t²Δt + h_t²ΔA_k + g_t²|ΔB_k|`, where `1_{φ_t}` is 1 unless
/// `φ_t = 0` at that step. Iterating backward gives node-wise
/// and mean-square bounds on `Y` and, after telescoping, on `Z`.
pub fn apriori_bound(
    lattice: &JumpLattice,
    driver: &DriverSpec,
    terminal: &TerminalSpec,
    paths: &[(BrownianPath, ClockA)],
) -> Result<NormReport> {
    if paths.is_empty() {
        return Err(Error::InvalidArgument("a-priori bound needs at least one Brownian path".into()));
    }
    let k_const = driver.k();
    let k_g = driver.g_k();
    let dt = lattice.grid().dt();
    let n = lattice.steps();
    let mut acc = [0.0; 3];
    for (bpath, clock) in paths {
        check_shapes(lattice, bpath, clock)?;
        let xi = terminal_layer(lattice, terminal, bpath, clock)?;
        let probs = lattice.layer(n).probs();
        let mut sup_b = xi.iter().map(|v| v * v).fold(0.0, f64::max);
        let mut mean_u = xi.iter().zip(probs).map(|(v, p)| p * v * v).sum::<f64>();
        let terminal_mean = mean_u;
        let mut a2 = 0.0;
        let mut cu = 0.0;
        let mut rs = 0.0;
        for k in (0..n).rev() {
            let t = lattice.grid().time(k);
            let (da, db) = (clock.increment(k), bpath.increment(k).abs());
            let ind = |v: f64| if v == 0.0 { 0.0 } else { 1.0 };
            let (ft, ht, gt) = (driver.f_t(t), driver.h_t(t), driver.g_t(t));
            let c = (ind(ft) + 2.0 * k_const + 2.0 * k_const * k_const) * dt
                + (ind(ht) + 2.0 * k_const) * da
                + (ind(gt) + 2.0 * k_g) * db;
            if c >= 1.0 {
                return Err(Error::InvalidArgument(format!(
                    "a-priori bound needs a finer grid: step {k} has contraction coefficient {c:.3} >= 1"
                )));
            }
            let r = ft * ft * dt + ht * ht * da + gt * gt * db;
            sup_b = (sup_b + r) / (1.0 - c);
            mean_u = (mean_u + r) / (1.0 - c);
            a2 += mean_u * da;
            cu += c * mean_u;
            rs += r;
        }
        acc[0] += sup_b;
        acc[1] += 2.0 * (terminal_mean + cu + rs);
        acc[2] += a2;
    }
    let len = paths.len() as f64;
    Ok(NormReport::new(acc[0] / len, acc[1] / len, acc[2] / len, NormWeights::default()))
}
