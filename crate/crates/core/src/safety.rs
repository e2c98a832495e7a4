//! Pairwise collision-avoidance barriers and the joint safety filter.
//!
//! Every unordered pair (i, j) contributes the barrier
//! h = ‖pᵢ − pⱼ‖² − d_min² and the linear row
//! 2(pᵢ − pⱼ)·uᵢ − 2(pᵢ − pⱼ)·uⱼ + γh ≥ 0 on the stacked input of all agents.
//! The filter returns the stacked input closest to the nominal one that
//! satisfies all rows, plus optional per-axis speed bounds.

use thiserror::Error;

use crate::coverage::ControlInput;
use crate::geometry::{Point, GEOMETRY_TOLERANCE};
use crate::qp::{kkt_residual, solve_projection, LinearRow, QpError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SafetyError {
    #[error("agents {first} and {second} coincide")]
    CoincidentAgents { first: usize, second: usize },
    #[error("safety QP infeasible at rows {rows:?}")]
    Infeasible { rows: Vec<usize> },
    #[error("safety QP did not converge within {0} iterations")]
    MaxIterations(usize),
    #[error("constraint refers to agent {agent} but only {agents} inputs were given")]
    AgentOutOfRange { agent: usize, agents: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SafetyParams {
    pub d_min: f64,
    pub gamma: f64,
}

impl Default for SafetyParams {
    fn default() -> Self {
        SafetyParams { d_min: 0.5, gamma: 1.0 }
    }
}

/// One barrier row: `grad_i·uᵢ + grad_j·uⱼ + offset ≥ 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SafetyConstraint {
    pub pair: (usize, usize),
    pub grad_i: Point,
    pub grad_j: Point,
    pub offset: f64,
}

impl SafetyConstraint {
    pub fn slack(&self, inputs: &[ControlInput]) -> f64 {
        let (i, j) = self.pair;
        self.grad_i.dot(inputs[i].as_vector()) + self.grad_j.dot(inputs[j].as_vector()) + self.offset
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QpSettings {
    /// Per-axis bound |u| ≤ u_max added as box rows when set.
    pub u_max: Option<f64>,
    pub max_iterations: usize,
    pub feasibility_tol: f64,
}

impl Default for QpSettings {
    fn default() -> Self {
        QpSettings { u_max: None, max_iterations: 10_000, feasibility_tol: 1e-12 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QpSolution {
    pub inputs: Vec<ControlInput>,
    /// Indices into the constraint list whose rows are active.
    pub active_set: Vec<usize>,
    /// One multiplier per barrier row.
    pub multipliers: Vec<f64>,
    pub kkt_residual: f64,
    pub iterations: usize,
}

pub fn barrier_value(pi: Point, pj: Point, d_min: f64) -> f64 {
    pi.distance_squared(pj) - d_min * d_min
}

/// One row per unordered pair, ordered lexicographically by (i, j).
pub fn assemble_constraints(positions: &[Point], params: &SafetyParams) -> Result<Vec<SafetyConstraint>, SafetyError> {
    let n = positions.len();
    let mut rows = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            let diff = positions[i] - positions[j];
            if diff.norm() <= GEOMETRY_TOLERANCE {
                return Err(SafetyError::CoincidentAgents { first: i, second: j });
            }
            rows.push(SafetyConstraint {
                pair: (i, j),
                grad_i: diff * 2.0,
                grad_j: diff * -2.0,
                offset: params.gamma * barrier_value(positions[i], positions[j], params.d_min),
            });
        }
    }
    Ok(rows)
}

pub fn solve_safety_qp(nominal: &[ControlInput], constraints: &[SafetyConstraint]) -> Result<QpSolution, SafetyError> {
    solve_safety_qp_with(nominal, constraints, &QpSettings::default())
}

pub fn solve_safety_qp_with(
    nominal: &[ControlInput],
    constraints: &[SafetyConstraint],
    settings: &QpSettings,
) -> Result<QpSolution, SafetyError> {
    let n = nominal.len();
    let dim = 2 * n;
    let target: Vec<f64> = nominal.iter().flat_map(|u| [u.ux, u.uy]).collect();

    let mut rows = Vec::with_capacity(constraints.len() + if settings.u_max.is_some() { 2 * dim } else { 0 });
    for c in constraints {
        let (i, j) = c.pair;
        for agent in [i, j] {
            if agent >= n {
                return Err(SafetyError::AgentOutOfRange { agent, agents: n });
            }
        }
        let mut normal = vec![0.0; dim];
        normal[2 * i] = c.grad_i.x;
        normal[2 * i + 1] = c.grad_i.y;
        normal[2 * j] = c.grad_j.x;
        normal[2 * j + 1] = c.grad_j.y;
        rows.push(LinearRow { normal, bound: -c.offset });
    }
    if let Some(limit) = settings.u_max {
        for k in 0..dim {
            for sign in [1.0, -1.0] {
                let mut normal = vec![0.0; dim];
                normal[k] = sign;
                rows.push(LinearRow { normal, bound: -limit });
            }
        }
    }

    let sol = solve_projection(&target, &rows, settings.feasibility_tol, settings.max_iterations).map_err(|e| match e {
        QpError::Infeasible { row } => SafetyError::Infeasible { rows: vec![row] },
        QpError::MaxIterations(k) => SafetyError::MaxIterations(k),
    })?;
    let residual = kkt_residual(&target, &rows, &sol.x, &sol.multipliers);

    let mut active_set: Vec<usize> = sol.active.iter().copied().filter(|&r| r < constraints.len()).collect();
    active_set.sort_unstable();
    Ok(QpSolution {
        inputs: sol.x.chunks_exact(2).map(|c| ControlInput::new(c[0], c[1])).collect(),
        active_set,
        multipliers: sol.multipliers[..constraints.len()].to_vec(),
        kkt_residual: residual,
        iterations: sol.iterations,
    })
}
