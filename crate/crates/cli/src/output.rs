//! Trajectory table and metrics document.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use coverage_core::engine::{RunResult, ScenarioConfig};

use crate::scenario::ScenarioFile;

pub const TRAJECTORY_HEADER: &str = "t,agent,x,y,ux,uy,rho";

/// One row per agent per recorded sample. Adding 0.0 folds -0 into 0.
pub fn trajectory_csv(result: &RunResult) -> String {
    let n: usize = result.samples.iter().map(|s| s.positions.len()).sum();
    let mut out = String::with_capacity(64 * (n + 1));
    out.push_str(TRAJECTORY_HEADER);
    out.push('\n');
    for sample in &result.samples {
        for (agent, ((p, u), rho)) in sample.positions.iter().zip(&sample.inputs).zip(&sample.detecting).enumerate() {
            writeln!(
                out,
                "{:.6},{},{:.9},{:.9},{:.9},{:.9},{}",
                sample.time,
                agent,
                p.x,
                p.y,
                u.ux + 0.0,
                u.uy + 0.0,
                u8::from(*rho)
            )
            .expect("writing to a String cannot fail");
        }
    }
    out
}

pub fn write_trajectory(result: &RunResult, path: &Path) -> std::io::Result<()> {
    fs::write(path, trajectory_csv(result))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub terminated_reason: String,
    pub final_time: f64,
    pub samples: usize,
    pub final_allocation: Vec<usize>,
    pub unallocated: usize,
    /// `None` for a single agent.
    pub min_distance: Option<f64>,
    pub max_centroid_offset: Option<f64>,
    pub final_cost: Option<f64>,
    pub cost_history: Vec<(f64, f64)>,
    pub min_dist_history: Vec<(f64, Option<f64>)>,
    pub config: ScenarioFile,
}

impl Metrics {
    pub fn new(result: &RunResult, config: &ScenarioConfig) -> Metrics {
        let last = result.final_state.as_ref();
        Metrics {
            terminated_reason: result.terminated_reason.map(|r| r.as_str()).unwrap_or("failed").to_string(),
            final_time: last.map(|s| s.time).unwrap_or(0.0),
            samples: result.samples.len(),
            final_allocation: if result.final_allocation.is_empty() {
                vec![0; config.targets.len()]
            } else {
                result.final_allocation.clone()
            },
            unallocated: result.unallocated,
            min_distance: finite(result.min_distance()),
            max_centroid_offset: last.map(|s| s.max_centroid_offset()),
            final_cost: last.map(|s| s.cost),
            cost_history: result.cost_history.clone(),
            min_dist_history: result.min_dist_history.iter().map(|&(t, d)| (t, finite(d))).collect(),
            config: ScenarioFile::from_config(config),
        }
    }
}

fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

pub fn write_metrics(result: &RunResult, config: &ScenarioConfig, path: &Path) -> std::io::Result<()> {
    let json = serde_json::to_string_pretty(&Metrics::new(result, config)).map_err(std::io::Error::other)?;
    fs::write(path, json + "\n")
}
