use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};

use coverage_cli::scenario::to_toml;
use coverage_cli::{execute, fine_grid_moment, load_scenario, RunOptions};
use coverage_core::cell_moment;
use coverage_core::engine::{ConfigError, ScenarioConfig, SwarmState};

/// `println!` that ignores a closed stdout instead of panicking.
macro_rules! say {
    ($($arg:tt)*) => {{
        use std::io::Write as _;
        let _ = writeln!(std::io::stdout().lock(), $($arg)*);
    }};
}

const EXIT_VALIDATION: u8 = 1;
const EXIT_RUNTIME: u8 = 2;

/// Density-driven coverage of unknown targets by a swarm of single
/// integrators with pairwise collision avoidance.
#[derive(Parser)]
#[command(name = "coverage-sim", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a scenario file (or a bundled scenario name).
    Run {
        scenario: String,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Comma-separated snapshot times in seconds.
        #[arg(long, value_delimiter = ',')]
        snapshots: Vec<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Overrides `numerics.resolution`.
        #[arg(long)]
        resolution: Option<usize>,
        /// Overrides `numerics.dt`.
        #[arg(long)]
        dt: Option<f64>,
        /// Overrides `stop.t_max`.
        #[arg(long)]
        t_max: Option<f64>,
    },
    /// Check a scenario and print its resolved form.
    Validate { scenario: String },
    /// Compare the centroid of one initial cell against a fine-grid reference.
    OracleCentroid {
        scenario: String,
        #[arg(long)]
        cell: usize,
        #[arg(long, default_value_t = 2048)]
        grid: usize,
    },
}

fn load(arg: &str) -> Result<ScenarioConfig, ExitCode> {
    load_scenario(arg).map_err(|e| {
        eprintln!("error: {e}");
        ExitCode::from(EXIT_VALIDATION)
    })
}

fn apply_overrides(
    config: &mut ScenarioConfig,
    resolution: Option<usize>,
    dt: Option<f64>,
    t_max: Option<f64>,
) -> Result<(), ConfigError> {
    if let Some(r) = resolution {
        config.numerics.resolution = r;
    }
    if let Some(dt) = dt {
        config.numerics.dt = dt;
    }
    if let Some(t) = t_max {
        config.stop.t_max = t;
    }
    config.validate()
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Run { scenario, out, snapshots, seed, resolution, dt, t_max } => {
            let mut config = match load(&scenario) {
                Ok(c) => c,
                Err(code) => return code,
            };
            if let Err(e) = apply_overrides(&mut config, resolution, dt, t_max) {
                eprintln!("error: {e}");
                return ExitCode::from(EXIT_VALIDATION);
            }
            let started = Instant::now();
            match execute(&config, &RunOptions { seed, snapshots: snapshots.clone(), out_dir: out.clone() }) {
                Ok(result) => {
                    let last = result.final_state.as_ref();
                    let end = last.map(|s| s.time).unwrap_or(0.0);
                    for t in snapshots.iter().filter(|&&t| t > end + 0.5 * config.numerics.dt) {
                        eprintln!("note: no snapshot at t = {t:.2} s, the run ended at {end:.2} s");
                    }
                    say!(
                        "{} at t = {:.2} s, allocation {:?}, min distance {:.4} m, {:.1} s wall",
                        result.terminated_reason.map(|r| r.as_str()).unwrap_or("failed"),
                        last.map(|s| s.time).unwrap_or(0.0),
                        result.final_allocation,
                        result.min_distance(),
                        started.elapsed().as_secs_f64()
                    );
                    say!("outputs written to {}", out.display());
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(EXIT_RUNTIME)
                }
            }
        }
        Command::Validate { scenario } => match load(&scenario) {
            Ok(config) => {
                say!("{}", to_toml(&config).trim_end());
                ExitCode::SUCCESS
            }
            Err(code) => code,
        },
        Command::OracleCentroid { scenario, cell, grid } => {
            let config = match load(&scenario) {
                Ok(c) => c,
                Err(code) => return code,
            };
            if cell >= config.agent_count {
                eprintln!("error: cell: must be below {}", config.agent_count);
                return ExitCode::from(EXIT_VALIDATION);
            }
            let state = match SwarmState::initial(&config, 0) {
                Ok(s) => s,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(EXIT_RUNTIME);
                }
            };
            let target = &state.cells[cell];
            let quad = cell_moment(target, &state.field, config.numerics.resolution);
            let fine = fine_grid_moment(&target.region, &state.field, grid);
            match (quad, fine) {
                (Ok(q), Some(f)) => {
                    say!("quadrature  mass {:.9e} centroid ({:.9}, {:.9})", q.mass, q.centroid.x, q.centroid.y);
                    say!("fine grid   mass {:.9e} centroid ({:.9}, {:.9})", f.mass, f.centroid.x, f.centroid.y);
                    say!(
                        "centroid error {:.3e} m, relative mass error {:.3e}",
                        q.centroid.distance(f.centroid),
                        (q.mass - f.mass).abs() / f.mass
                    );
                    ExitCode::SUCCESS
                }
                _ => {
                    eprintln!("error: cell {cell} carries no mass");
                    ExitCode::from(EXIT_RUNTIME)
                }
            }
        }
    }
}
