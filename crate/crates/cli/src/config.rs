//! TOML experiment configuration.
//!
//! Every section except `measure` and `grid` has defaults. Drivers and
//! terminal conditions are picked from named families; the growth processes
//! and constants they declare are derived from their parameters unless `k` or
//! `g_k` override them.

use gbdsde::approx_ladder::{default_rungs, ContinuousDriver, Direction, LadderConfig};
use gbdsde::comparison_lab::Certificates;
use gbdsde::levy_basis::{JumpMeasure, OrthoBasis};
use gbdsde::path_engine::{clock_values, simulate_brownian, BrownianPath, ClockA, ClockProfile, TimeGrid};
use gbdsde::solver::{build_lattice, DriverSpec, JumpLattice, SolverConfig, TerminalSpec};
use gbdsde::Execution;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub const SCHEMA_VERSION: u32 = 1;

fn schema_version() -> u32 {
    SCHEMA_VERSION
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "schema_version")]
    pub schema_version: u32,
    /// Master seed for ensembles, the Brownian path and norm sampling.
    #[serde(default)]
    pub seed: u64,
    pub measure: MeasureConfig,
    pub grid: GridConfig,
    #[serde(default = "default_clock")]
    pub clock: ClockProfile,
    #[serde(default)]
    pub brownian: BrownianConfig,
    #[serde(default)]
    pub solver: SolverTolerances,
    #[serde(default)]
    pub driver: DriverConfig,
    #[serde(default)]
    pub terminal: TerminalConfig,
    #[serde(default)]
    pub simulate: SimulateConfig,
    #[serde(default)]
    pub solve: SolveConfig,
    #[serde(default)]
    pub ladder: LadderSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub compare: Option<CompareConfig>,
}

fn default_clock() -> ClockProfile {
    ClockProfile::linear(1.0)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureConfig {
    pub atoms: Vec<AtomConfig>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomConfig {
    pub size: f64,
    pub intensity: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default = "one")]
    pub horizon: f64,
    pub steps: usize,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BrownianConfig {
    /// Seed of the conditioning path; defaults to the master seed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Condition on `B ≡ 0` instead.
    #[serde(default)]
    pub zero: bool,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverTolerances {
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for SolverTolerances {
    fn default() -> Self {
        let d = SolverConfig::default();
        Self { tol: d.tol, max_iters: d.max_iters }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DriverConfig {
    #[serde(flatten)]
    pub family: DriverFamily,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g_k: Option<f64>,
}

impl Default for DriverConfig {
    fn default() -> Self {
        Self { family: DriverFamily::Zero, k: None, g_k: None }
    }
}

// serde rejects `deny_unknown_fields` next to `flatten`, so the overrides are
// split off by hand and the family keeps the strict check.
impl<'de> Deserialize<'de> for DriverConfig {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error;
        let mut table = toml::Table::deserialize(deserializer)?;
        let mut take = |key: &str| -> std::result::Result<Option<f64>, D::Error> {
            match table.remove(key) {
                None => Ok(None),
                Some(toml::Value::Float(v)) => Ok(Some(v)),
                Some(toml::Value::Integer(v)) => Ok(Some(v as f64)),
                Some(other) => Err(D::Error::custom(format!("{key} must be a number, got {other}"))),
            }
        };
        let (k, g_k) = (take("k")?, take("g_k")?);
        let family = toml::Value::Table(table).try_into().map_err(D::Error::custom)?;
        Ok(Self { family, k, g_k })
    }
}

/// Built-in coefficient families.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum DriverFamily {
    Zero,
    /// `f = f_y·y + f_c + f_z·z`, `h = h_y·y + h_c`, `g = g_y·y + g_c`.
    Linear {
        #[serde(default)]
        f_y: f64,
        #[serde(default)]
        f_c: f64,
        #[serde(default)]
        f_z: Vec<f64>,
        #[serde(default)]
        h_y: f64,
        #[serde(default)]
        h_c: f64,
        #[serde(default)]
        g_y: f64,
        #[serde(default)]
        g_c: f64,
    },
    /// `f = a·sin(ω y) + z_coef·z`, `h = h_a·cos(y)`, `g = g_coef·y`.
    Sine {
        amplitude: f64,
        frequency: f64,
        #[serde(default)]
        z_coef: Vec<f64>,
        #[serde(default)]
        h_amplitude: f64,
        #[serde(default)]
        g_coef: f64,
    },
    /// `f = scale·√(|y| ∧ cap)`: continuous, not Lipschitz at 0.
    Sqrt {
        #[serde(default = "one")]
        scale: f64,
        #[serde(default = "one")]
        cap: f64,
    },
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn check_z(location: &str, z: &[f64], dim: usize) -> Result<()> {
    if !z.is_empty() && z.len() != dim {
        return Err(CliError::invalid(location, format!("has {} entries for {dim} Teugels martingales", z.len())));
    }
    Ok(())
}

impl DriverConfig {
    /// Builds the driver for a lattice of dimension `dim`.
    pub fn build(&self, location: &str, dim: usize) -> Result<DriverSpec> {
        let (spec, k, g_k) = match &self.family {
            DriverFamily::Zero => (DriverSpec::zero(), 1.0, 0.0),
            DriverFamily::Linear { f_y, f_c, f_z, h_y, h_c, g_y, g_c } => {
                check_z(&format!("{location}.f_z"), f_z, dim)?;
                let (f_y, f_c, h_y, h_c, g_y, g_c) = (*f_y, *f_c, *h_y, *h_c, *g_y, *g_c);
                let fz = f_z.clone();
                let spec = DriverSpec::zero()
                    .with_f(move |_, y, z| f_y * y + f_c + fz.iter().zip(z).map(|(a, b)| a * b).sum::<f64>())
                    .with_h(move |_, y| h_y * y + h_c)
                    .with_g(move |_, y| g_y * y + g_c)
                    .with_constant_growth(f_c.abs(), h_c.abs(), g_c.abs());
                (spec, f_y.abs().max(norm(f_z)).max(h_y.abs()), g_y.abs())
            }
            DriverFamily::Sine { amplitude, frequency, z_coef, h_amplitude, g_coef } => {
                check_z(&format!("{location}.z_coef"), z_coef, dim)?;
                let (a, w, ha, gc) = (*amplitude, *frequency, *h_amplitude, *g_coef);
                let zc = z_coef.clone();
                let spec = DriverSpec::zero()
                    .with_f(move |_, y, z| a * (w * y).sin() + zc.iter().zip(z).map(|(c, v)| c * v).sum::<f64>())
                    .with_h(move |_, y| ha * y.cos())
                    .with_g(move |_, y| gc * y)
                    .with_constant_growth(a.abs(), ha.abs(), 0.0);
                (spec, (a * w).abs().max(norm(z_coef)).max(ha.abs()), gc.abs())
            }
            DriverFamily::Sqrt { scale, cap } => {
                if !(*cap > 0.0 && cap.is_finite()) {
                    return Err(CliError::invalid(&format!("{location}.cap"), format!("must be positive, got {cap}")));
                }
                let (s, c) = (*scale, *cap);
                let spec = DriverSpec::zero().with_f(move |_, y, _| s * y.abs().min(c).sqrt()).with_constant_growth(
                    s.abs() * c.sqrt(),
                    0.0,
                    0.0,
                );
                (spec, 0.5, 0.0)
            }
        };
        // A vanishing derived constant still needs a positive K.
        let k = self.k.unwrap_or(if k > 0.0 { k } else { 1.0 });
        let spec = spec.with_k(k).with_g_k(self.g_k.unwrap_or(g_k));
        spec.validate().map_err(|e| CliError::at(location, e))?;
        Ok(spec)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TerminalConfig {
    Constant {
        value: f64,
    },
    /// `c0 + levy·L_T + clock·A_T + brownian·B_T`.
    Affine {
        #[serde(default)]
        c0: f64,
        #[serde(default)]
        levy: f64,
        #[serde(default)]
        clock: f64,
        #[serde(default)]
        brownian: f64,
    },
    /// `scale·L_T²`.
    LevySquare {
        #[serde(default = "one")]
        scale: f64,
    },
    /// `offset + scale·tanh(L_T)`.
    TanhLevy {
        #[serde(default)]
        offset: f64,
        #[serde(default = "one")]
        scale: f64,
    },
}

impl Default for TerminalConfig {
    fn default() -> Self {
        TerminalConfig::Constant { value: 0.0 }
    }
}

impl TerminalConfig {
    pub fn build(&self, location: &str) -> Result<TerminalSpec> {
        let values: Vec<f64> = match self {
            TerminalConfig::Constant { value } => vec![*value],
            TerminalConfig::Affine { c0, levy, clock, brownian } => vec![*c0, *levy, *clock, *brownian],
            TerminalConfig::LevySquare { scale } => vec![*scale],
            TerminalConfig::TanhLevy { offset, scale } => vec![*offset, *scale],
        };
        if values.iter().any(|v| !v.is_finite()) {
            return Err(CliError::invalid(location, "parameters must be finite".into()));
        }
        Ok(match *self {
            TerminalConfig::Constant { value } => TerminalSpec::constant(value),
            TerminalConfig::Affine { c0, levy, clock, brownian } => TerminalSpec::affine(c0, levy, clock, brownian),
            TerminalConfig::LevySquare { scale } => TerminalSpec::new(move |s| scale * s.levy * s.levy),
            TerminalConfig::TanhLevy { offset, scale } => TerminalSpec::new(move |s| offset + scale * s.levy.tanh()),
        })
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateConfig {
    pub paths: usize,
    /// Paths written to `paths.csv`.
    pub dump_paths: usize,
    /// Bracket tolerance in standard errors.
    pub sigmas: f64,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        Self { paths: 10_000, dump_paths: 20, sigmas: 5.0 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolveConfig {
    /// Step counts for a self-convergence table; each must divide the largest.
    pub sweep: Vec<usize>,
    /// Also run the global Picard iteration and compare.
    pub picard: bool,
    pub picard_tol: f64,
    pub picard_max_iters: usize,
    /// Largest accepted E_m distance between Picard and the direct solve.
    pub agreement_tol: f64,
    pub sup_samples: usize,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self {
            sweep: Vec::new(),
            picard: false,
            picard_tol: 1e-13,
            picard_max_iters: 200,
            agreement_tol: 1e-9,
            sup_samples: 4096,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LadderSection {
    /// Rungs; empty means `⌈K⌉·2^j` for `j < count`.
    pub rungs: Vec<u32>,
    pub count: usize,
    pub direction: Direction,
    pub tol: f64,
    pub early_stop: bool,
    pub norm_samples: usize,
    /// Domain radius `R`.
    pub radius: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub outer_radius: Option<f64>,
}

impl Default for LadderSection {
    fn default() -> Self {
        let d = LadderConfig::default();
        Self {
            rungs: Vec::new(),
            count: 7,
            direction: Direction::Min,
            tol: d.tol,
            early_stop: false,
            norm_samples: d.norm_samples,
            radius: 2.0,
            delta: None,
            outer_radius: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareConfig {
    /// Second equation; the first is `driver`/`terminal`.
    pub driver: DriverConfig,
    pub terminal: TerminalConfig,
    #[serde(default)]
    pub certificates: Certificates,
    #[serde(default = "representation_tol")]
    pub representation_tol: f64,
}

fn representation_tol() -> f64 {
    1e-9
}

/// Validated objects shared by the subcommands.
pub struct Setup {
    pub measure: JumpMeasure,
    pub basis: OrthoBasis,
    pub grid: TimeGrid,
    pub clock: ClockA,
}

impl ExperimentConfig {
    pub fn parse(text: &str, path: &str) -> Result<Self> {
        let cfg: Self =
            toml::from_str(text).map_err(|e| CliError::Parse { path: path.into(), message: e.to_string() })?;
        if cfg.schema_version != SCHEMA_VERSION {
            return Err(CliError::invalid(
                "schema_version",
                format!("unsupported version {} (expected {SCHEMA_VERSION})", cfg.schema_version),
            ));
        }
        Ok(cfg)
    }

    /// Canonical TOML form, the input of the config hash.
    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| CliError::invalid("config", format!("cannot serialize: {e}")))
    }

    pub fn setup(&self) -> Result<Setup> {
        let pairs: Vec<(f64, f64)> = self.measure.atoms.iter().map(|a| (a.size, a.intensity)).collect();
        let measure = JumpMeasure::from_pairs(&pairs).map_err(|e| CliError::at("measure.atoms", e))?;
        let basis = OrthoBasis::for_measure(&measure).map_err(|e| CliError::at("measure.atoms", e))?;
        let grid = TimeGrid::new(self.grid.horizon, self.grid.steps).map_err(|e| CliError::at("grid", e))?;
        let clock = clock_values(&self.clock, &grid).map_err(|e| CliError::at("clock", e))?;
        Ok(Setup { measure, basis, grid, clock })
    }

    pub fn brownian_seed(&self) -> u64 {
        self.brownian.seed.unwrap_or(self.seed)
    }

    pub fn brownian(&self, grid: &TimeGrid) -> Result<BrownianPath> {
        if self.brownian.zero {
            return Ok(BrownianPath::zero(grid));
        }
        simulate_brownian(grid, self.brownian_seed()).map_err(|e| CliError::at("brownian", e))
    }

    pub fn solver_config(&self, exec: Execution) -> SolverConfig {
        SolverConfig { tol: self.solver.tol, max_iters: self.solver.max_iters, exec }
    }

    pub fn ladder_config(&self, k: f64, exec: Execution) -> LadderConfig {
        let l = &self.ladder;
        LadderConfig {
            rungs: if l.rungs.is_empty() { default_rungs(k, l.count) } else { l.rungs.clone() },
            direction: l.direction,
            tol: l.tol,
            early_stop: l.early_stop,
            solver: self.solver_config(exec),
            norm_samples: l.norm_samples,
            seed: self.seed,
        }
    }

    pub fn continuous_driver(&self, spec: DriverSpec) -> Result<ContinuousDriver> {
        let l = &self.ladder;
        let mut d = ContinuousDriver::new(spec, l.radius).map_err(|e| CliError::at("ladder.radius", e))?;
        if let Some(delta) = l.delta {
            d = d.with_delta(delta).map_err(|e| CliError::at("ladder.delta", e))?;
        }
        if let Some(r) = l.outer_radius {
            d = d.with_outer_radius(r).map_err(|e| CliError::at("ladder.outer_radius", e))?;
        }
        Ok(d)
    }
}

/// Lattice for `setup` at `steps` steps, with the step count blamed on errors.
pub fn lattice(setup: &Setup, steps: usize, location: &str) -> Result<JumpLattice> {
    let grid = TimeGrid::new(setup.grid.horizon(), steps).map_err(|e| CliError::at(location, e))?;
    build_lattice(&setup.measure, &setup.basis, &grid).map_err(|e| CliError::at(location, e))
}
