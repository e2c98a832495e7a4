use std::collections::BTreeMap;
use std::path::Path;
use std::process::Command;

use coverage_cli::output::Metrics;
use coverage_cli::scenario::{parse_scenario_str, to_toml};
use coverage_cli::snapshot::snapshot_svg;
use coverage_cli::{bundled_scenario, execute, load_scenario, RunOptions, BUNDLED};
use coverage_core::engine::{Formation, ScenarioConfig, SwarmState};
use coverage_core::geometry::Point;

const BIN: &str = env!("CARGO_BIN_EXE_coverage-sim");

fn count_class(svg: &str, class: &str) -> usize {
    let doc = roxmltree::Document::parse(svg).expect("snapshot must be well-formed XML");
    doc.descendants().filter(|n| n.attribute("class") == Some(class)).count()
}

fn short_run(mut config: ScenarioConfig, t_max: f64) -> ScenarioConfig {
    config.stop.t_max = t_max;
    config
}

#[test]
fn bundled_scenario_one_parameters() {
    let cfg = load_scenario("scenario1").unwrap();
    assert_eq!(cfg.agent_count, 10);
    assert_eq!(cfg.targets.len(), 2);
    assert_eq!(cfg.gains.d_min, 0.64);
    for name in ["scenario2", "scenario3"] {
        let cfg = load_scenario(name).unwrap();
        assert_eq!((cfg.agent_count, cfg.targets.len(), cfg.gains.d_min), (15, 3, 0.52));
    }
    // Scenario 3 lists its targets by decreasing area.
    let areas: Vec<f64> = load_scenario("scenario3").unwrap().targets.iter().map(|t| t.area()).collect();
    assert!(areas.windows(2).all(|w| w[0] > w[1]), "{areas:?}");
}

#[test]
fn config_echo_round_trips() {
    for (name, src) in BUNDLED {
        let once = parse_scenario_str(src).unwrap();
        let twice = parse_scenario_str(&to_toml(&once)).unwrap();
        assert_eq!(once, twice, "{name}");
    }
}

#[test]
fn single_agent_snapshot_counts() {
    let mut cfg = load_scenario("scenario1").unwrap();
    cfg.agent_count = 1;
    cfg.formation = Formation::Explicit(vec![Point::new(5.0, 5.0)]);
    cfg.density.shapes.truncate(1);
    let state = SwarmState::initial(&cfg, 0).unwrap();
    let svg = snapshot_svg(&state, &state.field, &cfg);
    assert_eq!(count_class(&svg, "agent"), 1);
    assert_eq!(count_class(&svg, "sensor"), 1);
    assert_eq!(count_class(&svg, "cell"), 1);
    assert_eq!(count_class(&svg, "target"), 2);
    assert_eq!(count_class(&svg, "density"), 1);
}

#[test]
fn scenario_one_initial_snapshot_is_a_lattice() {
    let cfg = load_scenario("scenario1").unwrap();
    let state = SwarmState::initial(&cfg, 0).unwrap();
    let svg = snapshot_svg(&state, &state.field, &cfg);
    let doc = roxmltree::Document::parse(&svg).unwrap();
    let dots: Vec<(String, String)> = doc
        .descendants()
        .filter(|n| n.attribute("class") == Some("agent"))
        .map(|n| (n.attribute("cx").unwrap().to_string(), n.attribute("cy").unwrap().to_string()))
        .collect();
    assert_eq!(dots.len(), 10);
    let mut xs: Vec<&str> = dots.iter().map(|d| d.0.as_str()).collect();
    let mut ys: Vec<&str> = dots.iter().map(|d| d.1.as_str()).collect();
    xs.sort();
    xs.dedup();
    ys.sort();
    ys.dedup();
    assert_eq!((xs.len(), ys.len()), (5, 2));
    assert_eq!(count_class(&svg, "cell"), 10);
    assert_eq!(count_class(&svg, "sensor"), 10);
}

#[test]
fn snapshots_are_byte_identical() {
    let cfg = load_scenario("scenario2").unwrap();
    let state = SwarmState::initial(&cfg, 0).unwrap();
    let a = snapshot_svg(&state, &state.field, &cfg);
    let b = snapshot_svg(&state.clone(), &state.field.clone(), &cfg.clone());
    assert_eq!(a.as_bytes(), b.as_bytes());
}

fn read_metrics(dir: &Path) -> Metrics {
    serde_json::from_str(&std::fs::read_to_string(dir.join("metrics.json")).unwrap()).unwrap()
}

#[test]
fn trajectory_round_trip_matches_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = short_run(load_scenario("scenario1").unwrap(), 6.0);
    let options = RunOptions { seed: 0, snapshots: vec![0.0, 2.5], out_dir: dir.path().to_path_buf() };
    let result = execute(&cfg, &options).unwrap();

    let csv = std::fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("t,agent,x,y,ux,uy,rho"));
    let mut by_time: BTreeMap<String, Vec<Point>> = BTreeMap::new();
    let mut rows = 0;
    for line in lines {
        let f: Vec<&str> = line.split(',').collect();
        assert_eq!(f.len(), 7);
        by_time.entry(f[0].to_string()).or_default().push(Point::new(f[2].parse().unwrap(), f[3].parse().unwrap()));
        rows += 1;
    }
    assert_eq!(rows, 10 * result.samples.len());
    let parsed_min = by_time
        .values()
        .flat_map(|ps| {
            (0..ps.len()).flat_map(move |i| ((i + 1)..ps.len()).map(move |j| ps[i].distance(ps[j])))
        })
        .fold(f64::INFINITY, f64::min);
    let metrics = read_metrics(dir.path());
    assert!((parsed_min - metrics.min_distance.unwrap()).abs() <= 1e-9);
    assert_eq!(metrics.samples, result.samples.len());
    assert!(dir.path().join("snapshot_t0.00.svg").exists());
    assert!(dir.path().join("snapshot_t2.50.svg").exists());
}

#[test]
fn run_without_targets_stops_at_t_max() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = short_run(load_scenario("scenario1").unwrap(), 2.0);
    cfg.targets.clear();
    let options = RunOptions { seed: 0, snapshots: Vec::new(), out_dir: dir.path().to_path_buf() };
    execute(&cfg, &options).unwrap();
    let metrics = read_metrics(dir.path());
    assert_eq!(metrics.terminated_reason, "t_max");
    assert!(metrics.final_allocation.iter().all(|&c| c == 0));
    assert_eq!(metrics.unallocated, 10);
}

#[test]
fn command_line_flags_override_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let status = Command::new(BIN)
        .args(["run", "scenario1", "--dt", "0.1", "--resolution", "32", "--t-max", "0.5", "--out"])
        .arg(&out)
        .output()
        .unwrap();
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    let metrics = read_metrics(&out);
    assert_eq!(metrics.config.numerics.dt, 0.1);
    assert_eq!(metrics.config.numerics.resolution, 32);
    assert_eq!(metrics.config.stop.as_ref().unwrap().t_max, 0.5);
    // Echoed file re-parses to the overridden configuration.
    let echoed = metrics.config.resolve().unwrap();
    assert_eq!(echoed.numerics.dt, 0.1);
    assert_eq!(metrics.samples, 6);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, bundled_scenario("scenario1").unwrap().replace("spacing = 1.0", "spacing = -1")).unwrap();
    let out = Command::new(BIN).arg("validate").arg(&bad).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("spacing") && err.contains("must be positive"), "{err}");

    let ok = Command::new(BIN).args(["validate", "scenario2"]).output().unwrap();
    assert_eq!(ok.status.code(), Some(0));

    let oracle = Command::new(BIN).args(["oracle-centroid", "scenario1", "--cell", "3"]).output().unwrap();
    assert_eq!(oracle.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&oracle.stdout).contains("fine grid"));
    let missing = Command::new(BIN).args(["oracle-centroid", "scenario1", "--cell", "10"]).output().unwrap();
    assert_eq!(missing.status.code(), Some(1));
}
