//! `gbdsde`: batch runner for the lattice laboratory.
//!
//! Every experiment subcommand reads a TOML config, writes its outputs and a
//! `<experiment>.manifest.json` into `--out`, and exits with 0 when every
//! asserted property held, 2 when a property was inapplicable and 1 on a
//! violation or error. `report` summarizes the manifests in `--out`, checks
//! their output hashes and optionally re-runs them.

mod commands;
mod config;
mod error;
mod manifest;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use gbdsde::Execution;
use serde::Serialize;

use commands::{execute, json_bytes, Experiment, Format, Status};
use config::ExperimentConfig;
use error::{CliError, Result};
use manifest::{find_manifests, output_entries, sha256_hex, verify_outputs, versions, write_run, RunManifest};

#[derive(Debug, Parser)]
#[command(name = "gbdsde", version, about = "Lattice laboratory for backward doubly stochastic equations with jumps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Experiment config (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the config's master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Worker threads; 1 runs everything sequentially.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Teugels basis coefficients and orthonormality residual.
    Basis,
    /// Path ensemble dump and bracket check.
    Simulate,
    /// Lattice solution, norms, optional Picard check and convergence sweep.
    Solve,
    /// Monotone ladder of Lipschitz approximations.
    Ladder,
    /// Comparison of two equations on one lattice.
    Compare,
    /// Summary of the manifests in the output directory.
    Report {
        /// Re-run every manifest and compare output hashes.
        #[arg(long)]
        rerun: bool,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(status) => ExitCode::from(status.exit_code() as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: &Cli) -> Result<Status> {
    let exec = match cli.threads {
        Some(0) => return Err(CliError::invalid("--threads", "must be at least 1".into())),
        Some(1) => Execution::Sequential,
        Some(n) => {
            // A second build in the same process keeps the first pool.
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            Execution::Parallel
        }
        None => Execution::Parallel,
    };
    let experiment = match cli.command {
        Command::Basis => Experiment::Basis,
        Command::Simulate => Experiment::Simulate,
        Command::Solve => Experiment::Solve,
        Command::Ladder => Experiment::Ladder,
        Command::Compare => Experiment::Compare,
        Command::Report { rerun } => return report(&cli.out, cli.format, rerun),
    };
    let path = cli.config.as_ref().ok_or_else(|| CliError::invalid("--config", "is required".into()))?;
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut cfg = ExperimentConfig::parse(&text, &path.display().to_string())?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    let resolved = cfg.to_toml()?;
    let start = Instant::now();
    let output = execute(experiment, &cfg, cli.format, exec)?;
    let status = output.status();
    let manifest = RunManifest {
        schema: "gbdsde.manifest/1".into(),
        experiment,
        config_path: Some(path.display().to_string()),
        config_sha256: sha256_hex(resolved.as_bytes()),
        config: resolved,
        seed: cfg.seed,
        format: cli.format,
        threads: cli.threads,
        versions: versions(),
        wall_clock_secs: start.elapsed().as_secs_f64(),
        status,
        checks: output.checks.clone(),
        outputs: output_entries(&output),
    };
    let written = write_run(&cli.out, &output, &manifest)?;
    for line in &output.lines {
        println!("{line}");
    }
    for c in &output.checks {
        println!("[{}] {}: {}", label(c.status), c.name, c.detail);
    }
    println!("manifest: {}", written.display());
    Ok(status)
}

fn label(status: Status) -> &'static str {
    match status {
        Status::Pass => "pass",
        Status::Inapplicable => "inapplicable",
        Status::Fail => "FAIL",
    }
}

#[derive(Debug, Serialize)]
struct ReportRow {
    experiment: String,
    status: Status,
    checks: usize,
    failed_checks: Vec<String>,
    wall_clock_secs: f64,
    outputs_intact: bool,
    /// `None` unless `--rerun` was given.
    reproduced: Option<bool>,
}

fn report(dir: &Path, format: Format, rerun: bool) -> Result<Status> {
    let paths = find_manifests(dir)?;
    if paths.is_empty() {
        return Err(CliError::invalid(&dir.display().to_string(), "holds no manifests".into()));
    }
    let mut rows = Vec::new();
    for path in &paths {
        let m = RunManifest::load(path)?;
        let broken = verify_outputs(dir, &m);
        let reproduced = if rerun {
            let cfg = ExperimentConfig::parse(&m.config, &path.display().to_string())?;
            if sha256_hex(m.config.as_bytes()) != m.config_sha256 {
                Some(false)
            } else {
                let again = execute(m.experiment, &cfg, m.format, Execution::Sequential)?;
                Some(output_entries(&again) == m.outputs)
            }
        } else {
            None
        };
        let row = ReportRow {
            experiment: m.experiment.name().into(),
            status: m.status,
            checks: m.checks.len(),
            failed_checks: m.checks.iter().filter(|c| c.status != Status::Pass).map(|c| c.name.clone()).collect(),
            wall_clock_secs: m.wall_clock_secs,
            outputs_intact: broken.is_empty(),
            reproduced,
        };
        println!(
            "{:<9} {:<12} checks {:>2}  outputs {}{}",
            row.experiment,
            label(row.status),
            row.checks,
            if broken.is_empty() { "intact".to_string() } else { format!("CHANGED {broken:?}") },
            match reproduced {
                Some(true) => "  rerun reproduced",
                Some(false) => "  rerun DIFFERS",
                None => "",
            }
        );
        rows.push(row);
    }
    let bytes = match format {
        Format::Json => json_bytes("report", &serde_json::json!({ "rows": rows }))?,
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record([
                "experiment",
                "status",
                "checks",
                "failed_checks",
                "wall_clock_secs",
                "outputs_intact",
                "reproduced",
            ])?;
            for r in &rows {
                w.write_record([
                    r.experiment.clone(),
                    label(r.status).to_lowercase(),
                    r.checks.to_string(),
                    r.failed_checks.join(";"),
                    r.wall_clock_secs.to_string(),
                    r.outputs_intact.to_string(),
                    r.reproduced.map(|b| b.to_string()).unwrap_or_default(),
                ])?;
            }
            w.into_inner().map_err(|e| CliError::io("csv buffer", e.into_error()))?
        }
    };
    let out = dir.join(format!("report.{}", if format == Format::Json { "json" } else { "csv" }));
    fs::write(&out, bytes).map_err(|e| CliError::io(&out, e))?;
    let integrity = rows.iter().all(|r| r.outputs_intact && r.reproduced != Some(false));
    let worst = rows.iter().map(|r| r.status).max().unwrap_or(Status::Pass);
    Ok(if integrity { worst } else { Status::Fail })
}
