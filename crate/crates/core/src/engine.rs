//! Closed-loop simulation of the swarm.
//!
//! Every step senses targets, rebuilds the density field, tessellates the
//! workspace, computes density-weighted centroids, filters the nominal
//! centroid-seeking inputs through the safety QP and integrates the
//! single-integrator dynamics with explicit Euler.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::coverage::{integrate_cell, nominal_control, CellMoment, ControlInput, CoverageError, MIN_RESOLUTION};
use crate::density::{
    add_region_boost, build_density, update_detection, ComponentShape, DensityField, DetectionState, SensorModel,
    TargetRegion,
};
use crate::geometry::{min_pairwise_distance, voronoi_tessellation, GeometryError, Point, VoronoiCell, Workspace};
use crate::safety::{assemble_constraints, solve_safety_qp_with, QpSettings, SafetyError, SafetyParams};

#[derive(Debug, Error, Clone, PartialEq)]
#[error("{key}: {reason}")]
pub struct ConfigError {
    pub key: String,
    pub reason: String,
}

impl ConfigError {
    pub fn new(key: impl Into<String>, reason: impl Into<String>) -> Self {
        ConfigError { key: key.into(), reason: reason.into() }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("invalid configuration: {0}")]
    Config(#[from] ConfigError),
    #[error("step {step}: {source}")]
    Geometry { step: usize, source: GeometryError },
    #[error("step {step}: {source}")]
    Coverage { step: usize, source: CoverageError },
    #[error("step {step}: {source}")]
    Safety { step: usize, source: SafetyError },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Formation {
    /// Row-major lattice `origin + (c·spacing, r·spacing)`.
    Grid { rows: usize, cols: usize, spacing: f64, origin: Point },
    /// Triangular lattice with its apex at `origin`, rows growing downward.
    Triangle { rows: usize, spacing: f64, origin: Point },
    Explicit(Vec<Point>),
    /// Uniform rejection sampling inside the workspace, at least `d_min` apart.
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MaskMode {
    #[default]
    None,
    DetectedRegionBoost,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityConfig {
    pub baseline: f64,
    /// One entry per agent.
    pub shapes: Vec<ComponentShape>,
    pub mask_mode: MaskMode,
    pub region_boost: f64,
    pub latch_detection: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gains {
    pub k: f64,
    pub gamma: f64,
    pub d_min: f64,
    pub u_max: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Numerics {
    pub dt: f64,
    pub resolution: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StopRule {
    pub t_max: f64,
    /// When set, all-detect only ends the run once every agent is within this
    /// distance of its centroid.
    pub settle_tolerance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub workspace: Workspace,
    pub targets: Vec<TargetRegion>,
    pub agent_count: usize,
    pub formation: Formation,
    pub sensor: SensorModel,
    pub density: DensityConfig,
    pub gains: Gains,
    pub numerics: Numerics,
    pub stop: StopRule,
}

fn positive(key: &str, value: f64) -> Result<(), ConfigError> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(ConfigError::new(key, "must be positive"))
    }
}

impl ScenarioConfig {
    /// Checks every scalar and target; the formation is checked by
    /// [`ScenarioConfig::initial_positions`].
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.agent_count == 0 {
            return Err(ConfigError::new("count", "must be at least 1"));
        }
        positive("sensor_radius", self.sensor.radius)?;
        positive("baseline", self.density.baseline)?;
        if self.density.shapes.len() != self.agent_count {
            return Err(ConfigError::new(
                "weight",
                format!("expected {} per-agent values, got {}", self.agent_count, self.density.shapes.len()),
            ));
        }
        for s in &self.density.shapes {
            positive("weight", s.weight)?;
            positive("sigma_x", s.sigma_x)?;
            positive("sigma_y", s.sigma_y)?;
        }
        if !(self.density.region_boost.is_finite() && self.density.region_boost >= 0.0) {
            return Err(ConfigError::new("region_boost", "must be non-negative"));
        }
        positive("k", self.gains.k)?;
        positive("gamma", self.gains.gamma)?;
        positive("d_min", self.gains.d_min)?;
        if let Some(u) = self.gains.u_max {
            positive("u_max", u)?;
        }
        positive("dt", self.numerics.dt)?;
        if self.gains.gamma * self.numerics.dt > 1.0 {
            return Err(ConfigError::new("dt", "gamma * dt must not exceed 1"));
        }
        if self.numerics.resolution < MIN_RESOLUTION {
            return Err(ConfigError::new("resolution", format!("must be at least {MIN_RESOLUTION}")));
        }
        positive("t_max", self.stop.t_max)?;
        if let Some(tol) = self.stop.settle_tolerance {
            positive("settle_tolerance", tol)?;
        }
        for t in &self.targets {
            if !(t.min_corner.x < t.max_corner.x && t.min_corner.y < t.max_corner.y) {
                return Err(ConfigError::new("targets", format!("target {} has no area", t.id)));
            }
            if !self.workspace.contains(t.min_corner) || !self.workspace.contains(t.max_corner) {
                return Err(ConfigError::new("targets", format!("target {} leaves the workspace", t.id)));
            }
        }
        Ok(())
    }

    /// Starting positions. `seed` only matters for [`Formation::Random`].
    pub fn initial_positions(&self, seed: u64) -> Result<Vec<Point>, ConfigError> {
        let points = match &self.formation {
            Formation::Grid { rows, cols, spacing, origin } => {
                positive("spacing", *spacing)?;
                formation_grid(*rows, *cols, *spacing, *origin)
            }
            Formation::Triangle { rows, spacing, origin } => {
                positive("spacing", *spacing)?;
                formation_triangle(*rows, *spacing, *origin)
            }
            Formation::Explicit(points) => points.clone(),
            Formation::Random => random_formation(&self.workspace, self.agent_count, self.gains.d_min, seed)?,
        };
        if points.len() != self.agent_count {
            return Err(ConfigError::new(
                "count",
                format!("formation yields {} agents but count is {}", points.len(), self.agent_count),
            ));
        }
        if let Some(p) = points.iter().find(|p| !self.workspace.contains(**p)) {
            return Err(ConfigError::new("formation", format!("agent at ({}, {}) lies outside the workspace", p.x, p.y)));
        }
        if min_pairwise_distance(&points) < self.gains.d_min {
            return Err(ConfigError::new("formation", "agents start closer than d_min"));
        }
        Ok(points)
    }

    fn safety_params(&self) -> SafetyParams {
        SafetyParams { d_min: self.gains.d_min, gamma: self.gains.gamma }
    }

    fn qp_settings(&self) -> QpSettings {
        QpSettings { u_max: self.gains.u_max, ..QpSettings::default() }
    }

    fn steps_until_t_max(&self) -> usize {
        (self.stop.t_max / self.numerics.dt - 1e-9).ceil() as usize
    }
}

pub fn formation_grid(rows: usize, cols: usize, spacing: f64, origin: Point) -> Vec<Point> {
    (0..rows)
        .flat_map(|r| (0..cols).map(move |c| origin + Point::new(c as f64 * spacing, r as f64 * spacing)))
        .collect()
}

pub fn formation_triangle(rows: usize, spacing: f64, origin: Point) -> Vec<Point> {
    let pitch = spacing * 3f64.sqrt() / 2.0;
    (0..rows)
        .flat_map(|r| {
            (0..=r).map(move |c| origin + Point::new((c as f64 - r as f64 / 2.0) * spacing, -(r as f64) * pitch))
        })
        .collect()
}

fn random_formation(workspace: &Workspace, count: usize, d_min: f64, seed: u64) -> Result<Vec<Point>, ConfigError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lo, hi) = (workspace.min_corner(), workspace.max_corner());
    let mut points: Vec<Point> = Vec::with_capacity(count);
    let mut attempts = 0;
    while points.len() < count {
        attempts += 1;
        if attempts > 100_000 {
            return Err(ConfigError::new("formation", "could not place agents at least d_min apart"));
        }
        let p = Point::new(rng.gen_range(lo.x..hi.x), rng.gen_range(lo.y..hi.y));
        if points.iter().all(|q| q.distance(p) >= d_min) {
            points.push(p);
        }
    }
    Ok(points)
}

/// Snapshot of the swarm together with the tessellation and density derived
/// from its positions.
#[derive(Debug, Clone, PartialEq)]
pub struct SwarmState {
    pub step: usize,
    pub time: f64,
    pub positions: Vec<Point>,
    pub detection: DetectionState,
    pub field: DensityField,
    pub cells: Vec<VoronoiCell>,
    pub centroids: Vec<CellMoment>,
    /// Locational cost of the current configuration.
    pub cost: f64,
    /// Inputs applied during the step that produced this state.
    pub last_inputs: Vec<ControlInput>,
}

impl SwarmState {
    pub fn initial(config: &ScenarioConfig, seed: u64) -> Result<SwarmState, SimError> {
        config.validate()?;
        let positions = config.initial_positions(seed)?;
        let n = positions.len();
        SwarmState::analyze(config, 0, positions, None, vec![ControlInput::ZERO; n])
    }

    /// Runs sensing, density construction, tessellation and quadrature for
    /// the given positions.
    pub fn analyze(
        config: &ScenarioConfig,
        step: usize,
        positions: Vec<Point>,
        previous_detection: Option<&DetectionState>,
        last_inputs: Vec<ControlInput>,
    ) -> Result<SwarmState, SimError> {
        let mut detection = update_detection(&positions, &config.sensor, &config.targets);
        if config.density.latch_detection {
            if let Some(prev) = previous_detection {
                detection = detection.latched(prev);
            }
        }
        let mut field = build_density(&detection, &positions, &config.density.shapes, config.density.baseline);
        if config.density.mask_mode == MaskMode::DetectedRegionBoost {
            add_region_boost(
                &mut field,
                &detection,
                &positions,
                &config.targets,
                &config.sensor,
                config.density.region_boost,
            );
        }
        let cells =
            voronoi_tessellation(&positions, &config.workspace).map_err(|source| SimError::Geometry { step, source })?;
        let resolution = config.numerics.resolution;
        let integrals: Vec<_> = cells
            .par_iter()
            .zip(positions.par_iter())
            .map(|(cell, &p)| {
                integrate_cell(&cell.region, p, &field, resolution).ok_or(SimError::Coverage {
                    step,
                    source: CoverageError::EmptyCell { owner: cell.owner },
                })
            })
            .collect::<Result<_, _>>()?;
        let cost = integrals.iter().map(|i| i.cost).sum();
        let centroids = integrals.iter().map(|i| i.moment).collect();
        Ok(SwarmState {
            step,
            time: step as f64 * config.numerics.dt,
            positions,
            detection,
            field,
            cells,
            centroids,
            cost,
            last_inputs,
        })
    }

    pub fn min_pairwise_distance(&self) -> f64 {
        min_pairwise_distance(&self.positions)
    }

    /// max over agents of ‖pᵢ − cᵢ‖.
    pub fn max_centroid_offset(&self) -> f64 {
        self.positions
            .iter()
            .zip(&self.centroids)
            .map(|(p, m)| p.distance(m.centroid))
            .fold(0.0, f64::max)
    }
}

/// Safety-filtered inputs for the current state.
pub fn compute_control(state: &SwarmState, config: &ScenarioConfig) -> Result<Vec<ControlInput>, SimError> {
    let nominal: Vec<ControlInput> = state
        .positions
        .iter()
        .zip(&state.centroids)
        .map(|(&p, m)| nominal_control(p, m.centroid, config.gains.k))
        .collect();
    let step = state.step;
    let constraints =
        assemble_constraints(&state.positions, &config.safety_params()).map_err(|source| SimError::Safety { step, source })?;
    let solution = solve_safety_qp_with(&nominal, &constraints, &config.qp_settings())
        .map_err(|source| SimError::Safety { step, source })?;
    Ok(solution.inputs)
}

/// Euler update p ← p + dt·u, clamped to the workspace, followed by a fresh
/// analysis of the new positions.
pub fn advance(state: &SwarmState, inputs: Vec<ControlInput>, config: &ScenarioConfig) -> Result<SwarmState, SimError> {
    let dt = config.numerics.dt;
    let positions = state
        .positions
        .iter()
        .zip(&inputs)
        .map(|(&p, u)| config.workspace.clamp(Point::new(p.x + dt * u.ux, p.y + dt * u.uy)))
        .collect();
    SwarmState::analyze(config, state.step + 1, positions, Some(&state.detection), inputs)
}

pub fn step(state: &SwarmState, config: &ScenarioConfig) -> Result<SwarmState, SimError> {
    let inputs = compute_control(state, config)?;
    advance(state, inputs, config)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    Continue,
    AllDetect,
    TMax,
}

impl Termination {
    pub fn as_str(self) -> &'static str {
        match self {
            Termination::Continue => "continue",
            Termination::AllDetect => "all_detect",
            Termination::TMax => "t_max",
        }
    }
}

pub fn check_termination(state: &SwarmState, config: &ScenarioConfig) -> Termination {
    let settled = config.stop.settle_tolerance.is_none_or(|tol| state.max_centroid_offset() <= tol);
    if !state.detection.is_empty() && state.detection.all_detect() && settled {
        Termination::AllDetect
    } else if state.step >= config.steps_until_t_max() {
        Termination::TMax
    } else {
        Termination::Continue
    }
}

/// Per-step record kept in a [`RunResult`].
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub time: f64,
    pub positions: Vec<Point>,
    /// Inputs computed at this state (applied during the following step).
    pub inputs: Vec<ControlInput>,
    pub detecting: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub samples: Vec<Sample>,
    pub cost_history: Vec<(f64, f64)>,
    pub min_dist_history: Vec<(f64, f64)>,
    /// Agents counted per target, in target order.
    pub final_allocation: Vec<usize>,
    /// Agents whose sensor touches no target at the end.
    pub unallocated: usize,
    /// `None` only for a partial result of a failed run.
    pub terminated_reason: Option<Termination>,
    pub final_state: Option<SwarmState>,
}

impl RunResult {
    fn empty() -> Self {
        RunResult {
            samples: Vec::new(),
            cost_history: Vec::new(),
            min_dist_history: Vec::new(),
            final_allocation: Vec::new(),
            unallocated: 0,
            terminated_reason: None,
            final_state: None,
        }
    }

    pub fn min_distance(&self) -> f64 {
        self.min_dist_history.iter().map(|&(_, d)| d).fold(f64::INFINITY, f64::min)
    }

    fn record(&mut self, state: &SwarmState, inputs: Vec<ControlInput>) {
        let t = state.time;
        self.samples.push(Sample {
            time: t,
            positions: state.positions.clone(),
            inputs,
            detecting: state.detection.flags.clone(),
        });
        self.cost_history.push((t, state.cost));
        self.min_dist_history.push((t, state.min_pairwise_distance()));
    }
}

/// A failed run with everything recorded up to the failure.
#[derive(Debug, Clone, Error)]
#[error("{error}")]
pub struct RunFailure {
    pub error: SimError,
    pub partial: RunResult,
}

/// Counts agents per target. An agent whose sensor touches several targets
/// is assigned to the one with the nearest centre; agents touching none are
/// returned separately.
pub fn allocate(positions: &[Point], detection: &DetectionState, targets: &[TargetRegion]) -> (Vec<usize>, usize) {
    let mut counts = vec![0; targets.len()];
    let mut unallocated = 0;
    for (p, ids) in positions.iter().zip(&detection.detected_regions) {
        let best = targets
            .iter()
            .enumerate()
            .filter(|(_, t)| ids.contains(&t.id))
            .min_by(|(_, a), (_, b)| a.center().distance(*p).total_cmp(&b.center().distance(*p)));
        match best {
            Some((slot, _)) => counts[slot] += 1,
            None => unallocated += 1,
        }
    }
    (counts, unallocated)
}

pub fn run(config: &ScenarioConfig, seed: u64) -> Result<RunResult, RunFailure> {
    run_observed(config, seed, |_| {})
}

/// Like [`run`], calling `observe` on every state before its control is
/// computed.
pub fn run_observed(
    config: &ScenarioConfig,
    seed: u64,
    mut observe: impl FnMut(&SwarmState),
) -> Result<RunResult, RunFailure> {
    let mut result = RunResult::empty();
    let mut state = match SwarmState::initial(config, seed) {
        Ok(s) => s,
        Err(error) => return Err(RunFailure { error, partial: result }),
    };
    loop {
        observe(&state);
        let reason = check_termination(&state, config);
        let inputs = match compute_control(&state, config) {
            Ok(u) => u,
            Err(error) => {
                result.final_state = Some(state);
                return Err(RunFailure { error, partial: result });
            }
        };
        result.record(&state, inputs.clone());
        if reason != Termination::Continue {
            let (counts, unallocated) = allocate(&state.positions, &state.detection, &config.targets);
            result.final_allocation = counts;
            result.unallocated = unallocated;
            result.terminated_reason = Some(reason);
            result.final_state = Some(state);
            return Ok(result);
        }
        state = match advance(&state, inputs, config) {
            Ok(s) => s,
            Err(error) => {
                result.final_state = Some(state);
                return Err(RunFailure { error, partial: result });
            }
        };
    }
}
