use std::io::Write;

use serde::{Deserialize, Serialize};

use super::driver::{ContinuousDriver, Direction};
use crate::comparison_lab::{check_jump_condition, difference_quotients, ComparisonCase};
use crate::error::{Error, Result};
use crate::path_engine::{BrownianPath, ClockA};
use crate::solver::{
    apriori_bound, solution_norms, solve_backward_with, DriverSpec, JumpLattice, NormConfig, NormReport, Solution,
    SolverConfig, TerminalSpec,
};

/// Node-wise tolerance of the monotone flag.
pub const MONOTONE_TOL: f64 = 1e-12;
/// Ordering violations beyond this abort the ladder.
pub const ABORT_TOL: f64 = 1e-9;

/// `⌈K⌉ · 2^j` for `j = 0..count`.
pub fn default_rungs(k: f64, count: usize) -> Vec<u32> {
    let base = (k.ceil() as u32).max(1);
    (0..count as u32).map(|j| base << j).collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct LadderConfig {
    pub rungs: Vec<u32>,
    pub direction: Direction,
    /// Convergence threshold on the last `|Y^{n+1}_0 − Y^n_0|`.
    pub tol: f64,
    /// Stop as soon as a gap falls below `tol`.
    pub early_stop: bool,
    pub solver: SolverConfig,
    /// Sampled paths for the `S²` norm.
    pub norm_samples: usize,
    pub seed: u64,
}

impl Default for LadderConfig {
    fn default() -> Self {
        Self {
            rungs: default_rungs(1.0, 7),
            direction: Direction::Min,
            tol: 1e-3,
            early_stop: false,
            solver: SolverConfig::default(),
            norm_samples: 4096,
            seed: 0,
        }
    }
}

/// Distance between consecutive rungs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RungGap {
    /// `|Y^{n'}_0 − Y^n_0|`.
    pub sup_y0: f64,
    /// `E Σ_k |ΔY_k|² (Δt + ΔA_k)`.
    pub y_l2: f64,
    /// `E Σ_k ‖ΔZ_k‖² Δt`.
    pub z_l2: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Rung {
    pub n: u32,
    pub y0: f64,
    #[serde(skip)]
    pub solution: Solution,
    pub norms: NormReport,
    /// Gap to the previous rung.
    pub gap: Option<RungGap>,
    /// Smallest node-wise step in the ladder's direction from the previous
    /// rung (`Y^n − Y^{prev}` for the min ladder).
    pub order_gap: Option<f64>,
    /// Jump condition of the pair (previous, this).
    pub jump_condition_min: Option<f64>,
    pub within_bound: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct LadderResult {
    pub direction: Direction,
    pub rungs: Vec<Rung>,
    /// Bound on every rung's unweighted norms, from the data alone.
    pub apriori: NormReport,
    /// `C''` with `E∫‖ΔZ‖² ≤ C''·(E∫|ΔY|²(ds + dA))^{1/2}` for any two rungs.
    pub cauchy_bound: f64,
    /// Every rung is ordered after its predecessor within [`MONOTONE_TOL`].
    pub monotone: bool,
    pub converged: bool,
    pub stopped_early: bool,
    pub tol: f64,
}

fn rung_gap(lattice: &JumpLattice, a: &Solution, b: &Solution) -> RungGap {
    let dt = lattice.grid().dt();
    let clock = a.clock();
    let (mut y_l2, mut z_l2) = (0.0, 0.0);
    for k in 0..lattice.steps() {
        let layer = lattice.layer(k);
        let da = clock.increment(k);
        for node in 0..layer.len() {
            let p = layer.prob(node);
            let dy = a.y(k, node) - b.y(k, node);
            y_l2 += p * dy * dy * (dt + da);
            let dz: f64 = a.z(k, node).iter().zip(b.z(k, node)).map(|(x, y)| (x - y) * (x - y)).sum();
            z_l2 += p * dz * dt;
        }
    }
    RungGap { sup_y0: (a.y0() - b.y0()).abs(), y_l2, z_l2 }
}

/// Smallest `sign · (upper − lower)` over nodes and where it sits.
fn order_gap(lattice: &JumpLattice, lower: &Solution, upper: &Solution, sign: f64) -> (f64, usize, usize) {
    let mut worst = (f64::INFINITY, 0, 0);
    for k in 0..=lattice.steps() {
        for node in 0..lattice.layer(k).len() {
            let g = sign * (upper.y(k, node) - lower.y(k, node));
            if g < worst.0 {
                worst = (g, k, node);
            }
        }
    }
    worst
}

/// `C''` from the a-priori bound: with `S` the node-wise bound on `Y²` and
/// `M` the bound on `E∫‖Z‖²`, any two rungs satisfy
/// `E∫‖ΔZ‖² ≤ 2F·‖ΔY‖_{ds} + 2H·‖ΔY‖_{dA} + 2K_g ρ E∫|ΔY|²ds` where
/// `F = 2(‖f_t‖ + K√(TS) + K√M)`, `H = 2(‖h_t‖_{dA} + K√(A_T S))` and
/// `ρ = max|ΔB|/Δt`; the last term is at most `4K_g ρ√((T + A_T)S)` times
/// `‖ΔY‖`.
fn cauchy_constant(
    lattice: &JumpLattice,
    driver: &DriverSpec,
    clock: &ClockA,
    bpath: &BrownianPath,
    bound: &NormReport,
) -> f64 {
    let k = driver.k();
    let dt = lattice.grid().dt();
    let horizon = lattice.grid().horizon();
    let a_t = clock.terminal();
    let (mut ft2, mut ht2, mut rho) = (0.0, 0.0, 0.0f64);
    for step in 0..lattice.steps() {
        let t = lattice.grid().time(step);
        ft2 += driver.f_t(t).powi(2) * dt;
        ht2 += driver.h_t(t).powi(2) * clock.increment(step);
        rho = rho.max(bpath.increment(step).abs() / dt);
    }
    let s = bound.sup_norm;
    let f = 2.0 * (ft2.sqrt() + k * (horizon * s).sqrt() + k * bound.m2_norm.sqrt());
    let h = 2.0 * (ht2.sqrt() + k * (a_t * s).sqrt());
    2.0 * (f + h) + 4.0 * driver.g_k() * rho * ((horizon + a_t) * s).sqrt()
}

fn within(norms: &NormReport, bound: &NormReport) -> bool {
    norms.sup_norm <= bound.sup_norm && norms.m2_norm <= bound.m2_norm && norms.a2_norm <= bound.a2_norm
}

/// Solves the equation for `f_n, h_n` on every rung with one lattice,
/// Brownian path, clock and terminal value, checking node-wise monotonicity
/// between consecutive rungs.
pub fn run_ladder(
    lattice: &JumpLattice,
    driver: &ContinuousDriver,
    terminal: &TerminalSpec,
    bpath: &BrownianPath,
    clock: &ClockA,
    config: &LadderConfig,
) -> Result<LadderResult> {
    let rungs = &config.rungs;
    if rungs.is_empty() {
        return Err(Error::InvalidArgument("ladder needs at least one rung".into()));
    }
    if rungs.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument("rungs must be strictly increasing".into()));
    }
    if let Some(&n) = rungs.iter().find(|&&n| f64::from(n) < driver.k()) {
        return Err(Error::PenaltyBelowGrowth { n: f64::from(n), k: driver.k() });
    }
    // The implicit step is a contraction only if n(Δt + ΔA_k) + K_g|ΔB_k| < 1.
    let dt = lattice.grid().dt();
    let top = f64::from(rungs[rungs.len() - 1]);
    for k in 0..lattice.steps() {
        let q = top * (dt + clock.increment(k)) + driver.spec().g_k() * bpath.increment(k).abs();
        if q >= 1.0 {
            return Err(Error::InvalidArgument(format!(
                "rung n = {top} is too steep for this grid: the implicit step at {k} has Lipschitz factor {q:.3} >= 1"
            )));
        }
    }
    let sign = match config.direction {
        Direction::Min => 1.0,
        Direction::Max => -1.0,
    };
    let apriori = apriori_bound(lattice, driver.spec(), terminal, &[(bpath.clone(), clock.clone())])?;
    let cauchy_bound = cauchy_constant(lattice, driver.spec(), clock, bpath, &apriori);
    let norm_config = NormConfig { sup_samples: config.norm_samples, seed: config.seed, ..NormConfig::default() };
    let mut out: Vec<Rung> = Vec::with_capacity(rungs.len());
    let mut prev: Option<DriverSpec> = None;
    let mut monotone = true;
    let mut stopped_early = false;
    for &n in rungs {
        let spec = driver.approximate(n, config.direction)?;
        let solution = solve_backward_with(lattice, &spec, terminal, bpath, clock, &config.solver)?;
        let norms = solution_norms(lattice, &solution, &norm_config);
        let mut rung = Rung {
            n,
            y0: solution.y0(),
            within_bound: within(&norms, &apriori),
            solution,
            norms,
            gap: None,
            order_gap: None,
            jump_condition_min: None,
        };
        if let (Some(last), Some(prev_spec)) = (out.last(), prev.as_ref()) {
            let (lower_spec, upper_spec, lower, upper) = match config.direction {
                Direction::Min => (prev_spec, &spec, &last.solution, &rung.solution),
                Direction::Max => (&spec, prev_spec, &rung.solution, &last.solution),
            };
            let case = ComparisonCase {
                lattice,
                driver1: upper_spec,
                driver2: lower_spec,
                terminal1: terminal,
                terminal2: terminal,
                sol1: upper,
                sol2: lower,
            };
            let (_, jump_min) = check_jump_condition(lattice, &difference_quotients(&case)?);
            let (gap, step, node) = order_gap(lattice, lower, upper, 1.0);
            if gap < -ABORT_TOL {
                let (lo, hi) = if sign > 0.0 { (last.n, n) } else { (n, last.n) };
                return Err(Error::LadderOrder {
                    lower: f64::from(lo),
                    upper: f64::from(hi),
                    step,
                    node,
                    gap,
                    jump_condition_min: jump_min,
                });
            }
            monotone &= gap >= -MONOTONE_TOL;
            rung.order_gap = Some(gap);
            rung.jump_condition_min = Some(jump_min);
            rung.gap = Some(rung_gap(lattice, &rung.solution, &last.solution));
        }
        let done = config.early_stop && rung.gap.is_some_and(|g| g.sup_y0 < config.tol);
        out.push(rung);
        prev = Some(spec);
        if done {
            stopped_early = out.len() < rungs.len();
            break;
        }
    }
    let converged = out.last().and_then(|r| r.gap).is_some_and(|g| g.sup_y0 < config.tol);
    Ok(LadderResult {
        direction: config.direction,
        rungs: out,
        apriori,
        cauchy_bound,
        monotone,
        converged,
        stopped_early,
        tol: config.tol,
    })
}

/// Compact record of a ladder run.
#[derive(Debug, Clone, Serialize)]
pub struct LadderSummary {
    pub direction: Direction,
    pub rungs: Vec<u32>,
    pub y0: Vec<f64>,
    pub limit_y0: f64,
    pub final_gap: Option<f64>,
    pub monotone: bool,
    pub converged: bool,
    pub stopped_early: bool,
    pub apriori_em: f64,
    pub max_em: f64,
    pub min_em: f64,
    pub all_within_bound: bool,
}

impl LadderResult {
    pub fn limit(&self) -> &Solution {
        &self.rungs[self.rungs.len() - 1].solution
    }

    pub fn y0(&self) -> Vec<f64> {
        self.rungs.iter().map(|r| r.y0).collect()
    }

    pub fn summary(&self) -> LadderSummary {
        let ems: Vec<f64> = self.rungs.iter().map(|r| r.norms.em_norm).collect();
        LadderSummary {
            direction: self.direction,
            rungs: self.rungs.iter().map(|r| r.n).collect(),
            y0: self.y0(),
            limit_y0: self.limit().y0(),
            final_gap: self.rungs.last().and_then(|r| r.gap).map(|g| g.sup_y0),
            monotone: self.monotone,
            converged: self.converged,
            stopped_early: self.stopped_early,
            apriori_em: self.apriori.em_norm,
            max_em: ems.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            min_em: ems.iter().copied().fold(f64::INFINITY, f64::min),
            all_within_bound: self.rungs.iter().all(|r| r.within_bound),
        }
    }

    /// One row per rung: `n, y0, sup_gap, y_gap, z_gap, em_norm, em_bound,
    /// order_gap, jump_condition_min` (gaps blank on the first rung).
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record([
            "n",
            "y0",
            "sup_gap",
            "y_gap",
            "z_gap",
            "em_norm",
            "em_bound",
            "order_gap",
            "jump_condition_min",
        ])?;
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for r in &self.rungs {
            w.write_record([
                r.n.to_string(),
                r.y0.to_string(),
                opt(r.gap.map(|g| g.sup_y0)),
                opt(r.gap.map(|g| g.y_l2)),
                opt(r.gap.map(|g| g.z_l2)),
                r.norms.em_norm.to_string(),
                self.apriori.em_norm.to_string(),
                opt(r.order_gap),
                opt(r.jump_condition_min),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_json<W: Write>(&self, writer: W) -> Result<()> {
        serde_json::to_writer_pretty(writer, &self.summary())?;
        Ok(())
    }
}

/// Per-rung worst violation of `Y^n ≤ Y*` (min ladder) or `Y^n ≥ Y*` (max
/// ladder) against an independently supplied solution of the same data.
#[derive(Debug, Clone, Serialize)]
pub struct MinimalityReport {
    /// Smallest node-wise `sign·(Y* − Y^n)` per rung.
    pub gaps: Vec<f64>,
    pub holds: bool,
}

pub fn minimality_check(lattice: &JumpLattice, result: &LadderResult, other: &Solution) -> Result<MinimalityReport> {
    let sign = match result.direction {
        Direction::Min => 1.0,
        Direction::Max => -1.0,
    };
    let mut gaps = Vec::with_capacity(result.rungs.len());
    for rung in &result.rungs {
        for k in 0..=lattice.steps() {
            if other.y_layer(k).len() != lattice.layer(k).len() {
                return Err(Error::Mismatched);
            }
        }
        gaps.push(order_gap(lattice, &rung.solution, other, sign).0);
    }
    let holds = gaps.iter().all(|g| *g >= -MONOTONE_TOL);
    Ok(MinimalityReport { gaps, holds })
}

/// Smallest `Y^{max, n'} − Y^{min, n}` over every pair of rungs and node.
pub fn bracket_gap(lattice: &JumpLattice, min: &LadderResult, max: &LadderResult) -> f64 {
    let mut worst = f64::INFINITY;
    for lo in &min.rungs {
        for hi in &max.rungs {
            worst = worst.min(order_gap(lattice, &lo.solution, &hi.solution, 1.0).0);
        }
    }
    worst
}
