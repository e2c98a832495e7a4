//! Scenario loading, run outputs and snapshot rendering for `coverage-sim`.

pub mod output;
pub mod scenario;
pub mod snapshot;

use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use coverage_core::density::DensityField;
use coverage_core::engine::{run_observed, RunResult, ScenarioConfig, SimError};
use coverage_core::geometry::{point_in_polygon, ConvexPolygon, Point};
use coverage_core::CellMoment;

use scenario::{parse_scenario, parse_scenario_str, ScenarioError};

pub const BUNDLED: [(&str, &str); 3] = [
    ("scenario1", include_str!("../scenarios/scenario1.toml")),
    ("scenario2", include_str!("../scenarios/scenario2.toml")),
    ("scenario3", include_str!("../scenarios/scenario3.toml")),
];

pub fn bundled_scenario(name: &str) -> Option<&'static str> {
    BUNDLED.iter().find(|(n, _)| *n == name).map(|(_, src)| *src)
}

/// Loads a scenario from a path, falling back to the bundled scenario of that
/// name when no such file exists.
pub fn load_scenario(arg: &str) -> Result<ScenarioConfig, ScenarioError> {
    let path = Path::new(arg);
    match bundled_scenario(arg) {
        Some(src) if !path.exists() => parse_scenario_str(src),
        _ => parse_scenario(path),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    pub seed: u64,
    /// Times at which to render a snapshot. Each one is taken at the first
    /// recorded state at or after it.
    pub snapshots: Vec<f64>,
    pub out_dir: PathBuf,
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error("simulation failed: {0}")]
    Simulation(SimError),
    #[error("cannot write {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

pub fn snapshot_file_name(t: f64) -> String {
    format!("snapshot_t{t:.2}.svg")
}

/// Runs a scenario and writes `trajectory.csv`, `metrics.json` and the
/// requested snapshots into the output directory. Outputs are still written
/// for the partial trajectory when the simulation fails.
pub fn execute(config: &ScenarioConfig, options: &RunOptions) -> Result<RunResult, RunError> {
    let io_err = |path: &Path| {
        let path = path.display().to_string();
        move |source| RunError::Io { path, source }
    };
    fs::create_dir_all(&options.out_dir).map_err(io_err(&options.out_dir))?;

    let mut pending: Vec<f64> = options.snapshots.clone();
    pending.sort_by(f64::total_cmp);
    pending.dedup();
    let half_step = 0.5 * config.numerics.dt;
    let mut next = 0;
    let mut write_error = None;

    let outcome = run_observed(config, options.seed, |state| {
        while next < pending.len() && state.time + half_step >= pending[next] {
            let path = options.out_dir.join(snapshot_file_name(pending[next]));
            if let Err(e) = snapshot::render_snapshot(state, &state.field, config, &path) {
                write_error.get_or_insert(RunError::Io { path: path.display().to_string(), source: e });
            }
            next += 1;
        }
    });
    if let Some(e) = write_error {
        return Err(e);
    }

    let (result, failure) = match outcome {
        Ok(r) => (r, None),
        Err(f) => (f.partial, Some(f.error)),
    };
    let traj = options.out_dir.join("trajectory.csv");
    output::write_trajectory(&result, &traj).map_err(io_err(&traj))?;
    let metrics = options.out_dir.join("metrics.json");
    output::write_metrics(&result, config, &metrics).map_err(io_err(&metrics))?;
    match failure {
        Some(e) => Err(RunError::Simulation(e)),
        None => Ok(result),
    }
}

/// Mass and centroid of `field` over `poly` by midpoint sampling on a
/// `res × res` grid over the bounding box with a point-in-polygon test.
pub fn fine_grid_moment(poly: &ConvexPolygon, field: &DensityField, res: usize) -> Option<CellMoment> {
    let (lo, hi) = poly.bounding_box()?;
    let (hx, hy) = ((hi.x - lo.x) / res as f64, (hi.y - lo.y) / res as f64);
    let (mut mass, mut mx, mut my) = (0.0, 0.0, 0.0);
    for row in 0..res {
        let y = lo.y + (row as f64 + 0.5) * hy;
        for col in 0..res {
            let q = Point::new(lo.x + (col as f64 + 0.5) * hx, y);
            if point_in_polygon(q, poly) {
                let w = field.evaluate(q) * hx * hy;
                mass += w;
                mx += w * q.x;
                my += w * q.y;
            }
        }
    }
    (mass > 0.0).then(|| CellMoment { mass, centroid: Point::new(mx / mass, my / mass) })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_names_resolve() {
        for (name, _) in BUNDLED {
            assert!(load_scenario(name).is_ok(), "{name}");
        }
        assert!(bundled_scenario("scenario4").is_none());
    }

    #[test]
    fn snapshot_names() {
        assert_eq!(snapshot_file_name(0.0), "snapshot_t0.00.svg");
        assert_eq!(snapshot_file_name(12.5), "snapshot_t12.50.svg");
    }

    #[test]
    fn fine_grid_uniform_square() {
        let poly = ConvexPolygon::rectangle(Point::new(0.0, 0.0), Point::new(2.0, 1.0));
        let m = fine_grid_moment(&poly, &DensityField::uniform(3.0), 64).unwrap();
        assert!((m.mass - 6.0).abs() < 1e-12);
        assert!((m.centroid.x - 1.0).abs() < 1e-12 && (m.centroid.y - 0.5).abs() < 1e-12);
    }
}
