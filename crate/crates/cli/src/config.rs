//! Run configuration: a TOML file whose keys can all be overridden by flags.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use udn::capacity::Engine;
use udn::channel::{preset, PathLossModel, PathLossSegment, THREE_GPP_NAME};
use udn::deployment::ScenarioConfig;
use udn::quadrature::QuadratureSpec;
use udn::simulator::MonteCarloConfig;

use crate::fail::Failure;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Limit,
    CoverageSweep,
    Simulate,
    AseSweep,
    Deploy,
    Schedule,
    ReproduceFig1,
    ReproduceFig2,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Limit => "limit",
            Command::CoverageSweep => "coverage-sweep",
            Command::Simulate => "simulate",
            Command::AseSweep => "ase-sweep",
            Command::Deploy => "deploy",
            Command::Schedule => "schedule",
            Command::ReproduceFig1 => "reproduce-fig1",
            Command::ReproduceFig2 => "reproduce-fig2",
        }
    }
}

/// Either a preset name or an inline list of segments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ModelSpec {
    Preset(String),
    Inline(InlineModel),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InlineModel {
    #[serde(default = "custom_name")]
    pub name: String,
    pub segments: Vec<PathLossSegment>,
}

fn custom_name() -> String {
    "custom".into()
}

impl Default for ModelSpec {
    fn default() -> Self {
        ModelSpec::Preset(THREE_GPP_NAME.into())
    }
}

impl ModelSpec {
    pub fn build(&self) -> Result<PathLossModel, Failure> {
        match self {
            ModelSpec::Preset(name) => preset(name)
                .ok_or_else(|| Failure::config(format!("unknown model preset {name:?}"))),
            ModelSpec::Inline(m) => Ok(PathLossModel::new(m.name.clone(), m.segments.clone())?),
        }
    }
}

/// `"auto"` or a fixed radius in km.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Radius {
    Fixed(f64),
    Auto(String),
}

impl Default for Radius {
    fn default() -> Self {
        Radius::Auto("auto".into())
    }
}

impl std::str::FromStr for Radius {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s == "auto" {
            return Ok(Radius::default());
        }
        s.parse::<f64>()
            .map(Radius::Fixed)
            .map_err(|_| format!("expected \"auto\" or a radius in km, got {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulationConfig {
    pub trials: usize,
    pub seed: u64,
    pub tail_fraction: f64,
    pub radius_km: Radius,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        let mc = MonteCarloConfig::default();
        Self {
            trials: mc.trials,
            seed: mc.seed,
            tail_fraction: mc.tail_fraction,
            radius_km: Radius::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub lambda_from: f64,
    pub lambda_to: f64,
    pub points_per_decade: usize,
    /// UE densities; the scenario's ρ (or the figure's set) when empty.
    pub rho: Vec<f64>,
    /// Height differences in m for the coverage figure; its own set when empty.
    pub heights_m: Vec<f64>,
    /// Coverage threshold in dB.
    pub gamma_db: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            lambda_from: 0.1,
            lambda_to: 1e6,
            points_per_decade: 2,
            rho: Vec::new(),
            heights_m: Vec::new(),
            gamma_db: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum EngineKind {
    DenseApprox,
    MonteCarlo,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub engine: EngineKind,
    pub rel_tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            engine: EngineKind::DenseApprox,
            rel_tol: QuadratureSpec::default().rel_tol,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub command: Option<Command>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub model: ModelSpec,
    #[serde(default)]
    pub scenario: ScenarioConfig,
    #[serde(default)]
    pub simulation: SimulationConfig,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub solver: SolverConfig,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::io(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, Failure> {
        toml::from_str(text).map_err(|e| {
            let line = e
                .span()
                .map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1);
            Failure::config(e.message().to_string()).at_line(line)
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    pub fn monte_carlo(&self, workers: Option<usize>) -> Result<MonteCarloConfig, Failure> {
        let radius_km = match &self.simulation.radius_km {
            Radius::Fixed(r) => Some(*r),
            Radius::Auto(s) if s == "auto" => None,
            Radius::Auto(s) => {
                return Err(Failure::config(format!(
                    "radius_km must be \"auto\" or a number, got {s:?}"
                )))
            }
        };
        Ok(MonteCarloConfig {
            trials: self.simulation.trials,
            seed: self.simulation.seed,
            tail_fraction: self.simulation.tail_fraction,
            radius_km,
            workers,
        })
    }

    pub fn engine(&self, workers: Option<usize>) -> Result<Engine, Failure> {
        Ok(match self.solver.engine {
            EngineKind::DenseApprox => Engine::DenseApprox,
            EngineKind::MonteCarlo => Engine::MonteCarlo(self.monte_carlo(workers)?),
        })
    }

    pub fn quadrature(&self) -> QuadratureSpec {
        QuadratureSpec {
            rel_tol: self.solver.rel_tol,
            ..QuadratureSpec::default()
        }
    }

    pub fn lambda_grid(&self) -> Result<Vec<f64>, Failure> {
        let s = &self.sweep;
        if !(s.lambda_from > 0.0 && s.lambda_to >= s.lambda_from && s.points_per_decade > 0) {
            return Err(Failure::config(format!(
                "sweep needs 0 < lambda_from <= lambda_to and points_per_decade >= 1, got [{}, {}] with {}",
                s.lambda_from, s.lambda_to, s.points_per_decade
            )));
        }
        let decades = (s.lambda_to / s.lambda_from).log10();
        let steps = (decades * s.points_per_decade as f64).round() as usize;
        if steps == 0 {
            return Ok(vec![s.lambda_from]);
        }
        // powers of ten keep whole-decade points exact
        let step = decades / steps as f64;
        let start = s.lambda_from.log10();
        let mut grid: Vec<f64> = (0..steps)
            .map(|i| 10f64.powf(start + i as f64 * step))
            .collect();
        grid[0] = s.lambda_from;
        grid.push(s.lambda_to);
        Ok(grid)
    }

    /// The sweep's ρ values, or `fallback` when none are configured.
    pub fn rho_axis(&self, fallback: &[f64]) -> Result<Vec<f64>, Failure> {
        positive_axis("rho", &self.sweep.rho, fallback)
    }

    pub fn height_axis(&self, fallback: &[f64]) -> Result<Vec<f64>, Failure> {
        positive_axis("heights_m", &self.sweep.heights_m, fallback)
    }
}

fn positive_axis(name: &str, values: &[f64], fallback: &[f64]) -> Result<Vec<f64>, Failure> {
    let axis = if values.is_empty() { fallback } else { values };
    if axis.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
        return Err(Failure::config(format!("sweep.{name} must be positive, got {axis:?}")));
    }
    Ok(axis.to_vec())
}
