//! Scenario files.
//!
//! A scenario is a TOML document with the sections `[workspace]`,
//! `[[targets]]` (repeated), `[agents]`, `[density]`, `[gains]`,
//! `[numerics]` and `[stop]`. Lengths are meters, times seconds. Unknown
//! keys are rejected. Every optional key has a documented default and the
//! resolved configuration can be written back out with [`to_toml`].

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use coverage_core::density::{ComponentShape, SensorModel, TargetRegion};
use coverage_core::engine::{
    ConfigError, DensityConfig, Formation, Gains, MaskMode, Numerics, ScenarioConfig, StopRule,
};
use coverage_core::geometry::{Point, Workspace};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("line {line}: {key}: {message}")]
    Parse { line: usize, key: String, message: String },
    #[error("{key}: {reason}{}", line.map(|l| format!(" (line {l})")).unwrap_or_default())]
    Validation { key: String, reason: String, line: Option<usize> },
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub workspace: Option<WorkspaceSection>,
    #[serde(default)]
    pub targets: Vec<TargetSection>,
    pub agents: Option<AgentsSection>,
    #[serde(default)]
    pub density: DensitySection,
    pub gains: Option<GainsSection>,
    #[serde(default)]
    pub numerics: NumericsSection,
    pub stop: Option<StopSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorkspaceSection {
    pub min: [f64; 2],
    pub max: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetSection {
    pub min: [f64; 2],
    pub max: [f64; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FormationKind {
    Grid,
    Triangle,
    Explicit,
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentsSection {
    pub count: usize,
    pub formation: FormationKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rows: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cols: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spacing: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub origin: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub positions: Option<Vec<[f64; 2]>>,
    #[serde(default = "default_sensor_radius")]
    pub sensor_radius: f64,
}

/// A scalar shared by all agents or one value per agent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PerAgent {
    Uniform(f64),
    Each(Vec<f64>),
}

impl PerAgent {
    fn expand(&self, n: usize, key: &str) -> Result<Vec<f64>, ConfigError> {
        match self {
            PerAgent::Uniform(v) => Ok(vec![*v; n]),
            PerAgent::Each(v) if v.len() == n => Ok(v.clone()),
            PerAgent::Each(v) => Err(ConfigError::new(key, format!("expected {n} per-agent values, got {}", v.len()))),
        }
    }

    fn collapse(values: &[f64]) -> PerAgent {
        match values.first() {
            Some(&first) if values.iter().all(|&v| v == first) => PerAgent::Uniform(first),
            _ => PerAgent::Each(values.to_vec()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MaskModeName {
    None,
    DetectedRegionBoost,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensitySection {
    #[serde(default = "default_baseline")]
    pub baseline: f64,
    #[serde(default = "default_weight")]
    pub weight: PerAgent,
    #[serde(default = "default_sigma")]
    pub sigma_x: PerAgent,
    #[serde(default = "default_sigma")]
    pub sigma_y: PerAgent,
    #[serde(default = "default_mask_mode")]
    pub mask_mode: MaskModeName,
    #[serde(default = "default_region_boost")]
    pub region_boost: f64,
    #[serde(default)]
    pub latch_detection: bool,
}

impl Default for DensitySection {
    fn default() -> Self {
        DensitySection {
            baseline: default_baseline(),
            weight: default_weight(),
            sigma_x: default_sigma(),
            sigma_y: default_sigma(),
            mask_mode: default_mask_mode(),
            region_boost: default_region_boost(),
            latch_detection: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GainsSection {
    #[serde(default = "default_k")]
    pub k: f64,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    pub d_min: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u_max: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NumericsSection {
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_resolution")]
    pub resolution: usize,
}

impl Default for NumericsSection {
    fn default() -> Self {
        NumericsSection { dt: default_dt(), resolution: default_resolution() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StopSection {
    pub t_max: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub settle_tolerance: Option<f64>,
}

fn default_sensor_radius() -> f64 {
    1.0
}
fn default_baseline() -> f64 {
    0.01
}
fn default_weight() -> PerAgent {
    PerAgent::Uniform(10.0)
}
fn default_sigma() -> PerAgent {
    PerAgent::Uniform(0.5)
}
fn default_mask_mode() -> MaskModeName {
    MaskModeName::None
}
fn default_region_boost() -> f64 {
    5.0
}
fn default_k() -> f64 {
    1.0
}
fn default_gamma() -> f64 {
    1.0
}
fn default_dt() -> f64 {
    0.05
}
fn default_resolution() -> usize {
    64
}

fn point(v: [f64; 2]) -> Point {
    Point::new(v[0], v[1])
}

fn required<T>(value: Option<T>, key: &str) -> Result<T, ConfigError> {
    value.ok_or_else(|| ConfigError::new(key, "required"))
}

impl ScenarioFile {
    /// Fills defaults and builds the engine configuration, checking the
    /// formation as well.
    pub fn resolve(&self) -> Result<ScenarioConfig, ConfigError> {
        let ws = required(self.workspace.as_ref(), "workspace")?;
        let workspace =
            Workspace::new(point(ws.min), point(ws.max)).map_err(|e| ConfigError::new("workspace", e.to_string()))?;
        let agents = required(self.agents.as_ref(), "agents")?;
        let gains = required(self.gains.as_ref(), "gains")?;
        let stop = required(self.stop.as_ref(), "stop")?;
        let n = agents.count;

        let formation = match agents.formation {
            FormationKind::Grid => Formation::Grid {
                rows: required(agents.rows, "rows")?,
                cols: required(agents.cols, "cols")?,
                spacing: required(agents.spacing, "spacing")?,
                origin: point(required(agents.origin, "origin")?),
            },
            FormationKind::Triangle => Formation::Triangle {
                rows: required(agents.rows, "rows")?,
                spacing: required(agents.spacing, "spacing")?,
                origin: point(required(agents.origin, "origin")?),
            },
            FormationKind::Explicit => {
                Formation::Explicit(required(agents.positions.as_ref(), "positions")?.iter().map(|&p| point(p)).collect())
            }
            FormationKind::Random => Formation::Random,
        };

        let weights = self.density.weight.expand(n, "weight")?;
        let sigma_x = self.density.sigma_x.expand(n, "sigma_x")?;
        let sigma_y = self.density.sigma_y.expand(n, "sigma_y")?;
        let shapes = weights
            .iter()
            .zip(&sigma_x)
            .zip(&sigma_y)
            .map(|((&weight, &sigma_x), &sigma_y)| ComponentShape { weight, sigma_x, sigma_y })
            .collect();

        let config = ScenarioConfig {
            workspace,
            targets: self
                .targets
                .iter()
                .enumerate()
                .map(|(id, t)| TargetRegion::new(id, point(t.min), point(t.max)))
                .collect(),
            agent_count: n,
            formation,
            sensor: SensorModel { radius: agents.sensor_radius },
            density: DensityConfig {
                baseline: self.density.baseline,
                shapes,
                mask_mode: match self.density.mask_mode {
                    MaskModeName::None => MaskMode::None,
                    MaskModeName::DetectedRegionBoost => MaskMode::DetectedRegionBoost,
                },
                region_boost: self.density.region_boost,
                latch_detection: self.density.latch_detection,
            },
            gains: Gains { k: gains.k, gamma: gains.gamma, d_min: gains.d_min, u_max: gains.u_max },
            numerics: Numerics { dt: self.numerics.dt, resolution: self.numerics.resolution },
            stop: StopRule { t_max: stop.t_max, settle_tolerance: stop.settle_tolerance },
        };
        config.validate()?;
        config.initial_positions(0)?;
        Ok(config)
    }

    /// File representation of a resolved configuration.
    pub fn from_config(config: &ScenarioConfig) -> ScenarioFile {
        let pair = |p: Point| [p.x, p.y];
        let mut agents = AgentsSection {
            count: config.agent_count,
            formation: FormationKind::Random,
            rows: None,
            cols: None,
            spacing: None,
            origin: None,
            positions: None,
            sensor_radius: config.sensor.radius,
        };
        match &config.formation {
            Formation::Grid { rows, cols, spacing, origin } => {
                agents.formation = FormationKind::Grid;
                agents.rows = Some(*rows);
                agents.cols = Some(*cols);
                agents.spacing = Some(*spacing);
                agents.origin = Some(pair(*origin));
            }
            Formation::Triangle { rows, spacing, origin } => {
                agents.formation = FormationKind::Triangle;
                agents.rows = Some(*rows);
                agents.spacing = Some(*spacing);
                agents.origin = Some(pair(*origin));
            }
            Formation::Explicit(points) => {
                agents.formation = FormationKind::Explicit;
                agents.positions = Some(points.iter().map(|&p| pair(p)).collect());
            }
            Formation::Random => {}
        }
        let shapes = &config.density.shapes;
        ScenarioFile {
            workspace: Some(WorkspaceSection {
                min: pair(config.workspace.min_corner()),
                max: pair(config.workspace.max_corner()),
            }),
            targets: config
                .targets
                .iter()
                .map(|t| TargetSection { min: pair(t.min_corner), max: pair(t.max_corner) })
                .collect(),
            agents: Some(agents),
            density: DensitySection {
                baseline: config.density.baseline,
                weight: PerAgent::collapse(&shapes.iter().map(|s| s.weight).collect::<Vec<_>>()),
                sigma_x: PerAgent::collapse(&shapes.iter().map(|s| s.sigma_x).collect::<Vec<_>>()),
                sigma_y: PerAgent::collapse(&shapes.iter().map(|s| s.sigma_y).collect::<Vec<_>>()),
                mask_mode: match config.density.mask_mode {
                    MaskMode::None => MaskModeName::None,
                    MaskMode::DetectedRegionBoost => MaskModeName::DetectedRegionBoost,
                },
                region_boost: config.density.region_boost,
                latch_detection: config.density.latch_detection,
            },
            gains: Some(GainsSection {
                k: config.gains.k,
                gamma: config.gains.gamma,
                d_min: config.gains.d_min,
                u_max: config.gains.u_max,
            }),
            numerics: NumericsSection { dt: config.numerics.dt, resolution: config.numerics.resolution },
            stop: Some(StopSection { t_max: config.stop.t_max, settle_tolerance: config.stop.settle_tolerance }),
        }
    }
}

/// 1-based line of the first `key = ...` assignment in `source`.
fn line_of_key(source: &str, key: &str) -> Option<usize> {
    source.lines().position(|line| {
        let line = line.trim_start();
        line.strip_prefix(key).is_some_and(|rest| rest.trim_start().starts_with('='))
    })
    .map(|i| i + 1)
}

fn line_of_offset(source: &str, offset: usize) -> usize {
    source[..offset.min(source.len())].matches('\n').count() + 1
}

/// Text between the first pair of backticks in a deserializer message.
fn quoted_key(message: &str) -> Option<String> {
    let start = message.find('`')? + 1;
    let end = start + message[start..].find('`')?;
    Some(message[start..end].to_string())
}

pub fn parse_scenario_str(source: &str) -> Result<ScenarioConfig, ScenarioError> {
    let file: ScenarioFile = toml::from_str(source).map_err(|e| {
        let line = e.span().map(|s| line_of_offset(source, s.start)).unwrap_or(0);
        let message = e.message().to_string();
        let key = quoted_key(&message).unwrap_or_default();
        ScenarioError::Parse { line, key, message }
    })?;
    file.resolve().map_err(|e| ScenarioError::Validation { line: line_of_key(source, &e.key), key: e.key, reason: e.reason })
}

pub fn parse_scenario(path: &Path) -> Result<ScenarioConfig, ScenarioError> {
    let source = std::fs::read_to_string(path)
        .map_err(|source| ScenarioError::Io { path: path.display().to_string(), source })?;
    parse_scenario_str(&source)
}

pub fn to_toml(config: &ScenarioConfig) -> String {
    toml::to_string(&ScenarioFile::from_config(config)).expect("scenario file is always serializable")
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[workspace]
min = [0.0, 0.0]
max = [10.0, 10.0]

[[targets]]
min = [1.0, 1.0]
max = [2.5, 2.5]

[agents]
count = 4
formation = "grid"
rows = 2
cols = 2
spacing = 1.0
origin = [4.0, 4.0]

[gains]
d_min = 0.5

[stop]
t_max = 10.0
"#;

    #[test]
    fn defaults_are_filled() {
        let cfg = parse_scenario_str(MINIMAL).unwrap();
        assert_eq!(cfg.agent_count, 4);
        assert_eq!(cfg.sensor.radius, 1.0);
        assert_eq!(cfg.density.baseline, 0.01);
        assert_eq!(cfg.density.shapes, vec![ComponentShape::default(); 4]);
        assert_eq!(cfg.numerics.dt, 0.05);
        assert_eq!(cfg.numerics.resolution, 64);
        assert_eq!(cfg.gains.k, 1.0);
        assert_eq!(cfg.gains.u_max, None);
        assert_eq!(cfg.targets.len(), 1);
    }

    #[test]
    fn missing_workspace_is_validation_error() {
        let src = MINIMAL.replace("[workspace]\nmin = [0.0, 0.0]\nmax = [10.0, 10.0]\n", "");
        match parse_scenario_str(&src) {
            Err(ScenarioError::Validation { key, .. }) => assert_eq!(key, "workspace"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn negative_spacing_is_rejected() {
        let src = MINIMAL.replace("spacing = 1.0", "spacing = -1");
        match parse_scenario_str(&src) {
            Err(ScenarioError::Validation { key, reason, line }) => {
                assert_eq!(key, "spacing");
                assert_eq!(reason, "must be positive");
                assert_eq!(line, Some(15));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_key_reports_line() {
        let src = MINIMAL.replace("d_min = 0.5", "d_min = 0.5\nfoo = 3");
        match parse_scenario_str(&src) {
            Err(ScenarioError::Parse { line, key, .. }) => {
                assert_eq!(key, "foo");
                assert_eq!(line, 20);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn per_agent_values() {
        let src = MINIMAL.replace("[gains]", "[density]\nweight = [1.0, 2.0, 3.0, 4.0]\nsigma_y = 0.2\n\n[gains]");
        let cfg = parse_scenario_str(&src).unwrap();
        assert_eq!(cfg.density.shapes[2].weight, 3.0);
        assert_eq!(cfg.density.shapes[2].sigma_y, 0.2);
        let bad = MINIMAL.replace("[gains]", "[density]\nweight = [1.0, 2.0]\n\n[gains]");
        assert!(matches!(parse_scenario_str(&bad), Err(ScenarioError::Validation { ref key, .. }) if key == "weight"));
    }

    #[test]
    fn echo_round_trip() {
        let cfg = parse_scenario_str(MINIMAL).unwrap();
        let again = parse_scenario_str(&to_toml(&cfg)).unwrap();
        assert_eq!(cfg, again);
    }
}
