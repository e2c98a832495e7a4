//! Density-driven coverage of initially unknown target areas.
//!
//! Agents sense rectangular targets with a finite-range sensor. Every agent
//! that currently senses a target adds a Gaussian bump to a shared density
//! field; all agents move toward the density-weighted centroids of their
//! Voronoi cells, and a joint quadratic program minimally modifies those
//! commands so that no two agents come closer than a safety distance.

pub mod coverage;
pub mod density;
pub mod engine;
pub mod geometry;
pub mod qp;
pub mod safety;

pub use coverage::{cell_moment, locational_cost, nominal_control, CellMoment, ControlInput};
pub use density::{build_density, evaluate_density, update_detection, DensityField, DetectionState, TargetRegion};
pub use engine::{run, step, RunResult, ScenarioConfig, SwarmState, Termination};
pub use geometry::{voronoi_tessellation, ConvexPolygon, Point, VoronoiCell, Workspace};
pub use safety::{assemble_constraints, barrier_value, solve_safety_qp, QpSolution, SafetyConstraint, SafetyParams};
