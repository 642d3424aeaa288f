//! Subcommands. Each one returns its artifacts as bytes plus the properties it
//! asserted; writing happens afterwards, in order, on one thread.

use clap::ValueEnum;
use gbdsde::approx_ladder::{cauchy_diagnostics, run_ladder};
use gbdsde::comparison_lab::{compare, ComparisonCase, Verdict};
use gbdsde::path_engine::{clock_values, empirical_bracket, simulate_ensemble, BrownianPath, TimeGrid};
use gbdsde::solver::{apriori_bound, em_distance, picard_solve, solution_norms, solve_backward_with, NormConfig};
use gbdsde::Execution;
use serde::{Deserialize, Serialize};

use crate::config::{lattice, ExperimentConfig};
use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    fn ext(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Inapplicable,
    Fail,
}

impl Status {
    /// 0 = passed, 2 = inapplicable, 1 = violation.
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Pass => 0,
            Status::Inapplicable => 2,
            Status::Fail => 1,
        }
    }

    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Status::Pass
        } else {
            Status::Fail
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub status: Status,
    pub detail: String,
}

fn check(name: &str, status: Status, detail: String) -> Check {
    Check { name: name.into(), status, detail }
}

pub struct Artifact {
    pub name: String,
    pub bytes: Vec<u8>,
}

#[derive(Default)]
pub struct CommandOutput {
    pub artifacts: Vec<Artifact>,
    pub checks: Vec<Check>,
    /// Human-readable summary for stdout.
    pub lines: Vec<String>,
}

impl CommandOutput {
    fn push(&mut self, name: String, bytes: Vec<u8>) {
        self.artifacts.push(Artifact { name, bytes });
    }

    pub fn status(&self) -> Status {
        self.checks.iter().map(|c| c.status).max().unwrap_or(Status::Pass)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Experiment {
    Basis,
    Simulate,
    Solve,
    Ladder,
    Compare,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Basis => "basis",
            Experiment::Simulate => "simulate",
            Experiment::Solve => "solve",
            Experiment::Ladder => "ladder",
            Experiment::Compare => "compare",
        }
    }
}

/// Pretty JSON with a versioned `schema` tag and a trailing newline.
pub fn json_bytes<T: Serialize>(schema: &str, body: &T) -> Result<Vec<u8>> {
    let mut value = serde_json::to_value(body)?;
    if let serde_json::Value::Object(map) = &mut value {
        map.insert("schema".into(), format!("gbdsde.{schema}/1").into());
    }
    let mut out = serde_json::to_vec_pretty(&value)?;
    out.push(b'\n');
    Ok(out)
}

fn csv_bytes(header: &[&str], rows: &[Vec<String>]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    w.into_inner().map_err(|e| CliError::io("csv buffer", e.into_error()))
}

fn table<T: Serialize>(
    format: Format,
    schema: &str,
    header: &[&str],
    rows: &[T],
    cells: impl Fn(&T) -> Vec<String>,
) -> Result<Vec<u8>> {
    match format {
        Format::Csv => csv_bytes(header, &rows.iter().map(cells).collect::<Vec<_>>()),
        Format::Json => json_bytes(schema, &serde_json::json!({ "rows": rows })),
    }
}

pub fn execute(exp: Experiment, cfg: &ExperimentConfig, format: Format, exec: Execution) -> Result<CommandOutput> {
    match exp {
        Experiment::Basis => basis(cfg, format),
        Experiment::Simulate => simulate(cfg, format, exec),
        Experiment::Solve => solve(cfg, format, exec),
        Experiment::Ladder => ladder(cfg, format, exec),
        Experiment::Compare => comparison(cfg, format, exec),
    }
}

fn number(c: f64) -> String {
    if (c - c.round()).abs() < 1e-12 && c.abs() < 1e12 {
        format!("{}", c.round() as i64)
    } else {
        let s = format!("{c:.6}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

/// `Σ_k c_k x^k` with negligible coefficients dropped, e.g. `1 - 0.5 x^2`.
pub fn polynomial(coeffs: &[f64]) -> String {
    let mut out = String::new();
    for (k, &c) in coeffs.iter().enumerate() {
        if c.abs() < 1e-12 {
            continue;
        }
        let mag = number(c.abs());
        let body = match (k, mag.as_str()) {
            (0, _) => mag,
            (1, "1") => "x".into(),
            (1, _) => format!("{mag} x"),
            (_, "1") => format!("x^{k}"),
            _ => format!("{mag} x^{k}"),
        };
        if out.is_empty() {
            out = if c < 0.0 { format!("-{body}") } else { body };
        } else {
            out.push_str(if c < 0.0 { " - " } else { " + " });
            out.push_str(&body);
        }
    }
    if out.is_empty() {
        "0".into()
    } else {
        out
    }
}

#[derive(Serialize)]
struct BasisReport {
    dim: usize,
    /// `(point, weight)` atoms of `μ(dx) = x²ν(dx)`.
    mu_atoms: Vec<(f64, f64)>,
    /// Row `i − 1` holds the coefficients of `q_i` in increasing powers.
    coefficients: Vec<Vec<f64>>,
    polynomials: Vec<String>,
    orthonormality_residual: f64,
}

fn basis(cfg: &ExperimentConfig, format: Format) -> Result<CommandOutput> {
    let setup = cfg.setup()?;
    let b = &setup.basis;
    let coefficients: Vec<Vec<f64>> = (1..=b.dim()).map(|i| b.row(i).to_vec()).collect();
    let polynomials: Vec<String> = coefficients.iter().map(|c| polynomial(c)).collect();
    let residual = b.orthonormality_residual().unwrap_or(f64::NAN);
    let lines = polynomials.iter().enumerate().map(|(i, p)| format!("q_{}(x) = {p}", i + 1)).collect();
    let mut out = CommandOutput { lines, ..CommandOutput::default() };
    let report = BasisReport {
        dim: b.dim(),
        mu_atoms: setup.measure.mu_weights(),
        coefficients,
        polynomials,
        orthonormality_residual: residual,
    };
    let bytes = match format {
        Format::Json => json_bytes("basis", &report)?,
        Format::Csv => {
            let mut rows = Vec::new();
            for (i, row) in report.coefficients.iter().enumerate() {
                for (k, c) in row.iter().enumerate() {
                    rows.push(vec![(i + 1).to_string(), k.to_string(), c.to_string()]);
                }
            }
            csv_bytes(&["i", "power", "coefficient"], &rows)?
        }
    };
    out.push(format!("basis.{}", format.ext()), bytes);
    out.checks.push(check(
        "orthonormality",
        Status::from_bool(residual < 1e-10),
        format!("max |<q_i,q_j> - delta_ij| = {residual:.3e} (tol 1e-10)"),
    ));
    Ok(out)
}

#[derive(Serialize)]
struct BracketRow {
    i: usize,
    j: usize,
    /// `E[H^i, H^j]_T / T`.
    bracket_over_t: f64,
    std_error_over_t: f64,
    z_score: f64,
    within: bool,
}

fn simulate(cfg: &ExperimentConfig, format: Format, exec: Execution) -> Result<CommandOutput> {
    let setup = cfg.setup()?;
    let s = &cfg.simulate;
    let ens = simulate_ensemble(&setup.measure, &setup.basis, &setup.grid, &setup.clock, s.paths, cfg.seed, exec)
        .map_err(|e| CliError::at("simulate", e))?;
    let mut out = CommandOutput::default();
    let mut paths = Vec::new();
    ens.write_csv(&mut paths, s.dump_paths)?;
    out.push("paths.csv".into(), paths);
    let horizon = setup.grid.horizon();
    let m = setup.measure.dim();
    let mut rows = Vec::new();
    for i in 1..=m {
        for j in i..=m {
            let est = empirical_bracket(&ens, i, j, horizon).map_err(|e| CliError::at("simulate.paths", e))?;
            let target = if i == j { horizon } else { 0.0 };
            rows.push(BracketRow {
                i,
                j,
                bracket_over_t: est.mean / horizon,
                std_error_over_t: est.std_error / horizon,
                z_score: est.z_score(target),
                within: est.within(target, s.sigmas),
            });
        }
    }
    for r in &rows {
        out.checks.push(check(
            &format!("bracket[{},{}]", r.i, r.j),
            Status::from_bool(r.within),
            format!("{:.5} ({:+.2} se, tol {} se)", r.bracket_over_t, r.z_score, s.sigmas),
        ));
    }
    out.lines.push(format!("{} paths, {} steps, T = {horizon}", s.paths, setup.grid.steps()));
    let header = ["i", "j", "bracket_over_t", "std_error_over_t", "z_score", "within"];
    let bytes = table(format, "bracket", &header, &rows, |r| {
        vec![
            r.i.to_string(),
            r.j.to_string(),
            r.bracket_over_t.to_string(),
            r.std_error_over_t.to_string(),
            r.z_score.to_string(),
            r.within.to_string(),
        ]
    })?;
    out.push(format!("bracket.{}", format.ext()), bytes);
    Ok(out)
}

/// Sums consecutive increments of `fine` into `steps` coarse ones.
fn coarsen(fine: &BrownianPath, steps: usize) -> Result<BrownianPath> {
    let factor = fine.steps() / steps;
    let inc: Vec<f64> = fine.increments().chunks(factor).map(|c| c.iter().sum()).collect();
    Ok(BrownianPath::from_increments(inc)?)
}

#[derive(Serialize)]
struct SweepRow {
    steps: usize,
    y0: f64,
    /// `|Y_0(next) − Y_0(this)|`.
    increment: Option<f64>,
    /// Ratio of consecutive increments; about ½ for a first-order scheme.
    ratio: Option<f64>,
}

fn solve(cfg: &ExperimentConfig, format: Format, exec: Execution) -> Result<CommandOutput> {
    let setup = cfg.setup()?;
    let lat = lattice(&setup, setup.grid.steps(), "grid.steps")?;
    let spec = cfg.driver.build("driver", lat.dim())?;
    let xi = cfg.terminal.build("terminal")?;
    let bpath = cfg.brownian(&setup.grid)?;
    let solver = cfg.solver_config(exec);
    let sol = solve_backward_with(&lat, &spec, &xi, &bpath, &setup.clock, &solver)?;
    let mut out = CommandOutput::default();
    let bytes = match format {
        Format::Csv => {
            let mut buf = Vec::new();
            sol.write_csv(&mut buf)?;
            buf
        }
        Format::Json => json_bytes("solution", &sol)?,
    };
    out.push(format!("solution.{}", format.ext()), bytes);
    let norm_cfg = NormConfig { sup_samples: cfg.solve.sup_samples, seed: cfg.seed, ..NormConfig::default() };
    let norms = solution_norms(&lat, &sol, &norm_cfg);
    let apriori = apriori_bound(&lat, &spec, &xi, &[(bpath.clone(), setup.clock.clone())]);
    out.lines.push(format!("Y_0 = {}", sol.y0()));
    out.lines.push(format!(
        "E_m norm = {:.6} (S2 {:.6}, M2 {:.6}, A2 {:.6})",
        norms.em_norm, norms.sup_norm, norms.m2_norm, norms.a2_norm
    ));
    match &apriori {
        Ok(bound) => out.checks.push(check(
            "apriori_bound",
            Status::from_bool(norms.em_norm <= bound.em_norm),
            format!("E_m {:.6} <= bound {:.6}", norms.em_norm, bound.em_norm),
        )),
        Err(e) => out.lines.push(format!("a-priori bound unavailable: {e}")),
    }
    out.push(
        "norms.json".into(),
        json_bytes(
            "norms",
            &serde_json::json!({
                "y0": sol.y0(),
                "solution": norms,
                "apriori": apriori.as_ref().ok(),
                "apriori_error": apriori.as_ref().err().map(|e| e.to_string()),
                "fixed_point_residual": sol.max_residual(),
            }),
        )?,
    );
    if cfg.solve.picard {
        let (p, hist) = picard_solve(
            &lat,
            &spec,
            &xi,
            &bpath,
            &setup.clock,
            cfg.solve.picard_max_iters,
            cfg.solve.picard_tol,
            exec,
        )
        .map_err(|e| CliError::at("solve.picard", e))?;
        let d = em_distance(&lat, &p, &sol);
        out.checks.push(check(
            "picard_agreement",
            Status::from_bool(d <= cfg.solve.agreement_tol),
            format!(
                "E_m distance {d:.3e} after {} iterations (tol {:.1e})",
                hist.converged_at, cfg.solve.agreement_tol
            ),
        ));
    }
    if !cfg.solve.sweep.is_empty() {
        let rows = sweep(cfg, &setup.grid, exec)?;
        out.lines.push(format!("sweep over one Brownian path on the N = {} grid:", rows.last().map_or(0, |r| r.steps)));
        for r in &rows {
            out.lines.push(format!(
                "N = {:>5}  Y_0 = {:.10}  step {}  ratio {}",
                r.steps,
                r.y0,
                r.increment.map(|v| format!("{v:.3e}")).unwrap_or_else(|| "-".into()),
                r.ratio.map(|v| format!("{v:.3}")).unwrap_or_else(|| "-".into()),
            ));
        }
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        let bytes = table(format, "sweep", &["steps", "y0", "increment", "ratio"], &rows, |r| {
            vec![r.steps.to_string(), r.y0.to_string(), opt(r.increment), opt(r.ratio)]
        })?;
        out.push(format!("sweep.{}", format.ext()), bytes);
    }
    Ok(out)
}

/// Self-convergence table over `solve.sweep`, all step counts sharing one
/// Brownian path simulated on the finest grid.
fn sweep(cfg: &ExperimentConfig, grid: &TimeGrid, exec: Execution) -> Result<Vec<SweepRow>> {
    let mut steps = cfg.solve.sweep.clone();
    steps.sort_unstable();
    steps.dedup();
    let finest = *steps.last().unwrap();
    if let Some(bad) = steps.iter().find(|&&n| n == 0 || !finest.is_multiple_of(n)) {
        return Err(CliError::invalid("solve.sweep", format!("{bad} does not divide the finest step count {finest}")));
    }
    let fine_grid = TimeGrid::new(grid.horizon(), finest).map_err(|e| CliError::at("solve.sweep", e))?;
    let fine = cfg.brownian(&fine_grid)?;
    let mut y0 = Vec::new();
    let setup = cfg.setup()?;
    for &n in &steps {
        let lat = lattice(&setup, n, "solve.sweep")?;
        let spec = cfg.driver.build("driver", lat.dim())?;
        let xi = cfg.terminal.build("terminal")?;
        let clock = clock_values(&cfg.clock, lat.grid()).map_err(|e| CliError::at("clock", e))?;
        let bpath = coarsen(&fine, n)?;
        y0.push(solve_backward_with(&lat, &spec, &xi, &bpath, &clock, &cfg.solver_config(exec))?.y0());
    }
    let inc: Vec<f64> = y0.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    Ok(steps
        .iter()
        .enumerate()
        .map(|(i, &n)| SweepRow {
            steps: n,
            y0: y0[i],
            increment: inc.get(i).copied(),
            ratio: if i >= 1 { inc.get(i).map(|v| v / inc[i - 1]) } else { None },
        })
        .collect())
}

fn ladder(cfg: &ExperimentConfig, format: Format, exec: Execution) -> Result<CommandOutput> {
    let setup = cfg.setup()?;
    let lat = lattice(&setup, setup.grid.steps(), "grid.steps")?;
    let spec = cfg.driver.build("driver", lat.dim())?;
    let driver = cfg.continuous_driver(spec)?;
    let xi = cfg.terminal.build("terminal")?;
    let bpath = cfg.brownian(&setup.grid)?;
    let lcfg = cfg.ladder_config(driver.k(), exec);
    let result = run_ladder(&lat, &driver, &xi, &bpath, &setup.clock, &lcfg).map_err(|e| match e {
        gbdsde::Error::LadderOrder { .. } => CliError::Core(e),
        other => CliError::at("ladder", other),
    })?;
    let mut out = CommandOutput::default();
    let bytes = match format {
        Format::Csv => {
            let mut buf = Vec::new();
            result.write_csv(&mut buf)?;
            buf
        }
        Format::Json => json_bytes("ladder", &result)?,
    };
    out.push(format!("ladder.{}", format.ext()), bytes);
    for r in &result.rungs {
        out.lines.push(format!(
            "n = {:>4}  Y_0 = {:.10}  sup gap {}",
            r.n,
            r.y0,
            r.gap.map(|g| format!("{:.3e}", g.sup_y0)).unwrap_or_else(|| "-".into())
        ));
    }
    let s = result.summary();
    out.checks.push(check(
        "monotone",
        Status::from_bool(s.monotone),
        format!("{:?} ladder over {} rungs", s.direction, s.rungs.len()),
    ));
    out.checks.push(check(
        "converged",
        Status::from_bool(s.converged),
        format!(
            "final gap {} (tol {:.1e})",
            s.final_gap.map(|g| format!("{g:.3e}")).unwrap_or_else(|| "-".into()),
            result.tol
        ),
    ));
    out.checks.push(check(
        "apriori_bound",
        Status::from_bool(s.all_within_bound),
        format!("E_m in [{:.4}, {:.4}] against {:.4}", s.min_em, s.max_em, s.apriori_em),
    ));
    if result.rungs.len() >= 3 {
        let c = cauchy_diagnostics(&result)?;
        out.checks.push(check(
            "cauchy_bound",
            Status::from_bool(c.bounded),
            format!("fitted C' {:.3e} against {:.3e}", c.fitted_constant, c.apriori_constant),
        ));
        out.push("cauchy.json".into(), json_bytes("cauchy", &c)?);
    }
    Ok(out)
}

fn comparison(cfg: &ExperimentConfig, format: Format, exec: Execution) -> Result<CommandOutput> {
    let cc = cfg.compare.as_ref().ok_or_else(|| CliError::invalid("compare", "section is missing".into()))?;
    let setup = cfg.setup()?;
    let lat = lattice(&setup, setup.grid.steps(), "grid.steps")?;
    let d1 = cfg.driver.build("driver", lat.dim())?;
    let d2 = cc.driver.build("compare.driver", lat.dim())?;
    let x1 = cfg.terminal.build("terminal")?;
    let x2 = cc.terminal.build("compare.terminal")?;
    let bpath = cfg.brownian(&setup.grid)?;
    let solver = cfg.solver_config(exec);
    let s1 = solve_backward_with(&lat, &d1, &x1, &bpath, &setup.clock, &solver)?;
    let s2 = solve_backward_with(&lat, &d2, &x2, &bpath, &setup.clock, &solver)?;
    let case = ComparisonCase {
        lattice: &lat,
        driver1: &d1,
        driver2: &d2,
        terminal1: &x1,
        terminal2: &x2,
        sol1: &s1,
        sol2: &s2,
    };
    let rep = compare(&case, &cc.certificates).map_err(|e| CliError::at("compare.certificates", e))?;
    let mut out = CommandOutput::default();
    let bytes = match format {
        Format::Json => json_bytes("comparison", &rep)?,
        Format::Csv => csv_bytes(
            &[
                "min_gap",
                "strict_gap",
                "jump_condition_min",
                "implicit_factor_min",
                "representation_residual",
                "strict",
                "verdict",
            ],
            &[vec![
                rep.min_gap.to_string(),
                rep.strict_gap.to_string(),
                rep.jump_condition_min.to_string(),
                rep.implicit_factor_min.to_string(),
                rep.representation_residual.to_string(),
                rep.strict.to_string(),
                serde_json::to_value(rep.verdict)?.as_str().unwrap_or_default().to_string(),
            ]],
        )?,
    };
    out.push(format!("comparison.{}", format.ext()), bytes);
    let status = match rep.verdict {
        Verdict::Holds | Verdict::StrictHolds => Status::Pass,
        Verdict::Inapplicable => Status::Inapplicable,
        Verdict::Violated => Status::Fail,
    };
    out.checks.push(check(
        "comparison",
        status,
        format!(
            "{:?}: min Y1 - Y2 = {:.3e}, jump condition min {:.3e}, implicit factor min {:.3e}",
            rep.verdict, rep.min_gap, rep.jump_condition_min, rep.implicit_factor_min
        ),
    ));
    out.checks.push(check(
        "representation",
        Status::from_bool(rep.representation_residual <= cc.representation_tol),
        format!("residual {:.3e} (tol {:.1e})", rep.representation_residual, cc.representation_tol),
    ));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomials_print_compactly() {
        assert_eq!(polynomial(&[1.0]), "1");
        assert_eq!(polynomial(&[0.0, 1.0]), "x");
        assert_eq!(polynomial(&[-0.5, 0.0, 2.25]), "-0.5 + 2.25 x^2");
        assert_eq!(polynomial(&[0.1, -1.0]), "0.1 - x");
        assert_eq!(polynomial(&[1e-15]), "0");
    }

    #[test]
    fn worst_status_wins() {
        let mut out = CommandOutput::default();
        assert_eq!(out.status(), Status::Pass);
        out.checks.push(check("a", Status::Inapplicable, String::new()));
        assert_eq!(out.status().exit_code(), 2);
        out.checks.push(check("b", Status::Fail, String::new()));
        assert_eq!(out.status().exit_code(), 1);
    }
}
