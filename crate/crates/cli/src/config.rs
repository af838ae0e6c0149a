//! Versioned TOML experiment configs, one schema per subcommand.

use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Deserialize;

use qdot_walk::tdse::{BarrierTimeline, CalibrationOptions, DoubleWellSpec, SpatialGrid, TimelineParams};

use crate::error::{CliError, CliResult};

pub const CONFIG_VERSION: i64 = 1;

/// Reads `path`, checks the `version` field and deserializes the rest.
/// Relative paths inside the document are resolved against its directory.
pub fn load<T: DeserializeOwned + Resolve>(path: &Path) -> CliResult<T> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
    let table: toml::Table = text
        .parse()
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    match table.get("version") {
        None => {
            return Err(CliError::Config(format!(
                "{}: missing `version` field (this build reads version {CONFIG_VERSION})",
                path.display()
            )))
        }
        Some(toml::Value::Integer(v)) if *v == CONFIG_VERSION => {}
        Some(v) => {
            return Err(CliError::Config(format!(
                "{}: unsupported config version {v} (this build reads version {CONFIG_VERSION})",
                path.display()
            )))
        }
    }
    let mut config: T = table
        .try_into()
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let base = path.parent().unwrap_or(Path::new(""));
    config.resolve(base)?;
    Ok(config)
}

pub trait Resolve {
    /// Makes referenced paths absolute and checks that they exist.
    fn resolve(&mut self, base: &Path) -> CliResult<()>;
}

fn resolve_path(base: &Path, p: &mut PathBuf, what: &str) -> CliResult<()> {
    let full = if p.is_absolute() { p.clone() } else { base.join(&*p) };
    if !full.is_file() {
        return Err(CliError::Config(format!("{what} file {} does not exist", full.display())));
    }
    *p = full;
    Ok(())
}

fn exactly_one(what: &str, a: (&str, bool), b: (&str, bool)) -> CliResult<()> {
    if a.1 == b.1 {
        return Err(CliError::Config(format!(
            "{what}: set exactly one of `{}` and `{}`",
            a.0, b.0
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Complete,
    Cycle,
    Path,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoinChoice {
    #[default]
    Grover,
    Dft,
    Hadamard,
    /// Haar-random coin per line and step.
    Random,
    /// One Haar-random coin per step, shared by all lines.
    RandomUniform,
}

impl CoinChoice {
    pub fn name(self) -> &'static str {
        match self {
            CoinChoice::Grover => "grover",
            CoinChoice::Dft => "dft",
            CoinChoice::Hadamard => "hadamard",
            CoinChoice::Random => "random",
            CoinChoice::RandomUniform => "random_uniform",
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoinAmplitude {
    pub k: usize,
    #[serde(default)]
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

/// Initial walker state.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Start {
    /// `|node, coin>`.
    Localized { node: usize, coin: usize },
    /// Superposition of coin states at one node.
    Node { node: usize, coins: Vec<CoinAmplitude> },
    /// Haar-random state drawn from the seed.
    Random,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WalkConfig {
    pub version: i64,
    /// Graph file in the edge-list or JSON format.
    pub graph: Option<PathBuf>,
    pub family: Option<Family>,
    pub nodes: Option<usize>,
    pub steps: usize,
    #[serde(default)]
    pub coin: CoinChoice,
    pub start: Start,
    /// Write the grid state every this many steps (0 disables snapshots).
    #[serde(default)]
    pub snapshot_every: usize,
    pub seed: Option<u64>,
}

impl Resolve for WalkConfig {
    fn resolve(&mut self, base: &Path) -> CliResult<()> {
        exactly_one("walk", ("graph", self.graph.is_some()), ("family", self.family.is_some()))?;
        if self.family.is_some() != self.nodes.is_some() {
            return Err(CliError::Config("walk: `family` and `nodes` go together".into()));
        }
        if let Some(p) = &mut self.graph {
            resolve_path(base, p, "graph")?;
        }
        Ok(())
    }
}

fn default_tolerance() -> f64 {
    1e-10
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecomposeConfig {
    pub version: i64,
    /// Matrix file `{"n": .., "entries": [[re, im], ..]}`, row-major.
    pub unitary: Option<PathBuf>,
    /// Decompose a Haar-random unitary of this dimension instead.
    pub random_dimension: Option<usize>,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    pub seed: Option<u64>,
}

impl Resolve for DecomposeConfig {
    fn resolve(&mut self, base: &Path) -> CliResult<()> {
        exactly_one(
            "decompose",
            ("unitary", self.unitary.is_some()),
            ("random_dimension", self.random_dimension.is_some()),
        )?;
        if let Some(p) = &mut self.unitary {
            resolve_path(base, p, "unitary")?;
        }
        Ok(())
    }
}

fn default_n() -> usize {
    8
}

fn default_stages() -> usize {
    50
}

fn default_oracle_steps() -> usize {
    10
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConveyorConfig {
    pub version: i64,
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default = "default_stages")]
    pub stages: usize,
    /// Use identity rotations instead of Haar-random ones.
    #[serde(default)]
    pub identity: bool,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    /// Walk length of the end-to-end check run under `--oracle`.
    #[serde(default = "default_oracle_steps")]
    pub oracle_steps: usize,
    pub seed: Option<u64>,
}

impl Resolve for ConveyorConfig {
    fn resolve(&mut self, _: &Path) -> CliResult<()> {
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub x_min: f64,
    pub x_max: f64,
    pub points: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            x_min: -10.0,
            x_max: 10.0,
            points: 128,
        }
    }
}

impl GridConfig {
    pub fn build(&self) -> CliResult<SpatialGrid> {
        Ok(SpatialGrid::new(self.x_min, self.x_max, self.points)?)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Well {
    #[default]
    Left,
    Right,
}

fn default_halving_tolerance() -> f64 {
    1e-6
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TdseConfig {
    pub version: i64,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub well: DoubleWellSpec,
    #[serde(default)]
    pub timeline: BarrierTimeline,
    #[serde(default)]
    pub propagation: TimelineParams,
    #[serde(default)]
    pub initial: Well,
    /// Largest final-state change under `--oracle` when `dt` is halved.
    #[serde(default = "default_halving_tolerance")]
    pub halving_tolerance: f64,
    pub seed: Option<u64>,
}

impl Resolve for TdseConfig {
    fn resolve(&mut self, _: &Path) -> CliResult<()> {
        Ok(())
    }
}

fn default_max_leakage() -> f64 {
    0.01
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrateConfig {
    pub version: i64,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub well: DoubleWellSpec,
    /// Ramps and barrier levels; the hold is what gets calibrated.
    #[serde(default)]
    pub timeline: BarrierTimeline,
    #[serde(default)]
    pub propagation: TimelineParams,
    /// Target transfers `|beta|^2`, e.g. 1.0 for a pi and 0.5 for a pi/2 rotation.
    pub targets: Vec<f64>,
    #[serde(default)]
    pub search: CalibrationOptions,
    #[serde(default = "default_max_leakage")]
    pub max_leakage: f64,
    pub seed: Option<u64>,
}

impl Resolve for CalibrateConfig {
    fn resolve(&mut self, _: &Path) -> CliResult<()> {
        if self.targets.is_empty() {
            return Err(CliError::Config("calibrate: `targets` is empty".into()));
        }
        Ok(())
    }
}
