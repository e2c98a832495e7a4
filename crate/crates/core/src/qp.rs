//! Dense solver for projection QPs
//!
//! ```text
//!     minimize     ½‖x − x₀‖²
//!     subject to   aₖ·x ≥ bₖ
//! ```
//!
//! using the Goldfarb–Idnani dual active-set method specialised to an
//! identity Hessian. The iteration starts from the unconstrained minimiser
//! x₀, so no feasible starting point is needed, and each added constraint is
//! kept linearly independent of the current active set.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QpError {
    #[error("constraints are infeasible; blocking row {row}")]
    Infeasible { row: usize },
    #[error("no convergence after {0} iterations")]
    MaxIterations(usize),
}

/// One inequality row `normal · x ≥ bound`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearRow {
    pub normal: Vec<f64>,
    pub bound: f64,
}

impl LinearRow {
    pub fn slack(&self, x: &[f64]) -> f64 {
        dot(&self.normal, x) - self.bound
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseQpSolution {
    pub x: Vec<f64>,
    /// One multiplier per row; zero for inactive rows.
    pub multipliers: Vec<f64>,
    pub active: Vec<usize>,
    pub iterations: usize,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solves the SPD system `g y = rhs` in place via Cholesky. Returns `false` if
/// `g` is numerically singular.
fn cholesky_solve(g: &mut [f64], n: usize, rhs: &mut [f64]) -> bool {
    for j in 0..n {
        let mut d = g[j * n + j];
        for k in 0..j {
            d -= g[j * n + k] * g[j * n + k];
        }
        if d <= 1e-14 {
            return false;
        }
        let d = d.sqrt();
        g[j * n + j] = d;
        for i in (j + 1)..n {
            let mut s = g[i * n + j];
            for k in 0..j {
                s -= g[i * n + k] * g[j * n + k];
            }
            g[i * n + j] = s / d;
        }
    }
    for i in 0..n {
        let mut s = rhs[i];
        for k in 0..i {
            s -= g[i * n + k] * rhs[k];
        }
        rhs[i] = s / g[i * n + i];
    }
    for i in (0..n).rev() {
        let mut s = rhs[i];
        for k in (i + 1)..n {
            s -= g[k * n + i] * rhs[k];
        }
        rhs[i] = s / g[i * n + i];
    }
    true
}

/// Least-squares coefficients r of `v` in the span of the active normals,
/// r = (NᵀN)⁻¹Nᵀv.
fn active_coefficients(rows: &[LinearRow], active: &[usize], v: &[f64]) -> Option<Vec<f64>> {
    let k = active.len();
    if k == 0 {
        return Some(Vec::new());
    }
    let mut gram = vec![0.0; k * k];
    for a in 0..k {
        for b in 0..=a {
            let g = dot(&rows[active[a]].normal, &rows[active[b]].normal);
            gram[a * k + b] = g;
            gram[b * k + a] = g;
        }
    }
    let mut rhs: Vec<f64> = active.iter().map(|&r| dot(&rows[r].normal, v)).collect();
    cholesky_solve(&mut gram, k, &mut rhs).then_some(rhs)
}

pub fn solve_projection(
    target: &[f64],
    rows: &[LinearRow],
    feasibility_tol: f64,
    max_iterations: usize,
) -> Result<DenseQpSolution, QpError> {
    let n = target.len();
    let mut x = target.to_vec();
    let mut active: Vec<usize> = Vec::new();
    let mut lambda: Vec<f64> = Vec::new();
    let norms: Vec<f64> = rows.iter().map(|r| dot(&r.normal, &r.normal).sqrt()).collect();
    let mut iterations = 0;

    loop {
        // Most violated row, measured as a normalised distance.
        let mut pick: Option<(usize, f64)> = None;
        for (idx, row) in rows.iter().enumerate() {
            if active.contains(&idx) || norms[idx] == 0.0 {
                continue;
            }
            let s = row.slack(&x) / norms[idx];
            if s < -feasibility_tol && pick.is_none_or(|(_, best)| s < best) {
                pick = Some((idx, s));
            }
        }
        let Some((p, _)) = pick else { break };
        let np = &rows[p].normal;
        let mut lambda_p = 0.0;

        loop {
            iterations += 1;
            if iterations > max_iterations {
                return Err(QpError::MaxIterations(max_iterations));
            }
            let r = active_coefficients(rows, &active, np).ok_or(QpError::Infeasible { row: p })?;
            // Primal direction: component of n_p orthogonal to the active normals.
            let mut z = np.clone();
            for (coef, &a) in r.iter().zip(&active) {
                for (zi, ai) in z.iter_mut().zip(&rows[a].normal) {
                    *zi -= coef * ai;
                }
            }
            let zz = dot(&z, &z);
            let dependent = zz <= 1e-20 * dot(np, np);

            // Partial step: largest move before an active multiplier hits zero.
            let mut t_partial = f64::INFINITY;
            let mut blocking = None;
            for (slot, &rj) in r.iter().enumerate() {
                if rj > 0.0 {
                    let t = lambda[slot] / rj;
                    if t < t_partial {
                        t_partial = t;
                        blocking = Some(slot);
                    }
                }
            }
            let t_full = if dependent { f64::INFINITY } else { -rows[p].slack(&x) / dot(&z, np) };
            let t = t_partial.min(t_full);
            if !t.is_finite() {
                return Err(QpError::Infeasible { row: p });
            }

            if !dependent {
                for (xi, zi) in x.iter_mut().zip(&z) {
                    *xi += t * zi;
                }
            }
            for (l, rj) in lambda.iter_mut().zip(&r) {
                *l -= t * rj;
            }
            lambda_p += t;

            if !dependent && t_full <= t_partial {
                active.push(p);
                lambda.push(lambda_p);
                break;
            }
            let slot = blocking.expect("finite partial step has a blocking row");
            active.remove(slot);
            lambda.remove(slot);
        }
    }

    let mut multipliers = vec![0.0; rows.len()];
    for (&a, &l) in active.iter().zip(&lambda) {
        multipliers[a] = l.max(0.0);
    }
    debug_assert_eq!(x.len(), n);
    Ok(DenseQpSolution { x, multipliers, active, iterations })
}

/// Largest violation among stationarity, primal feasibility, dual feasibility
/// and complementary slackness.
pub fn kkt_residual(target: &[f64], rows: &[LinearRow], x: &[f64], multipliers: &[f64]) -> f64 {
    let mut grad: Vec<f64> = x.iter().zip(target).map(|(a, b)| a - b).collect();
    let mut worst: f64 = 0.0;
    for (row, &l) in rows.iter().zip(multipliers) {
        for (g, a) in grad.iter_mut().zip(&row.normal) {
            *g -= l * a;
        }
        let s = row.slack(x);
        worst = worst.max(-s).max(-l).max((l * s).abs());
    }
    grad.iter().fold(worst, |w, g| w.max(g.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn unconstrained_returns_target() {
        let sol = solve_projection(&[1.0, -2.0], &[], 1e-12, 10).unwrap();
        assert_eq!(sol.x, vec![1.0, -2.0]);
        assert_eq!(sol.iterations, 0);
    }

    #[test]
    fn single_halfspace_projection() {
        // x + 2y ≥ 1 from the origin → (0.2, 0.4).
        let rows = [LinearRow { normal: vec![1.0, 2.0], bound: 1.0 }];
        let sol = solve_projection(&[0.0, 0.0], &rows, 1e-12, 10).unwrap();
        assert_abs_diff_eq!(sol.x[0], 0.2, epsilon = 1e-15);
        assert_abs_diff_eq!(sol.x[1], 0.4, epsilon = 1e-15);
        assert_abs_diff_eq!(sol.multipliers[0], 0.2, epsilon = 1e-15);
    }

    #[test]
    fn corner_of_two_rows() {
        let rows = [
            LinearRow { normal: vec![1.0, 0.0], bound: 1.0 },
            LinearRow { normal: vec![0.0, 1.0], bound: 2.0 },
        ];
        let sol = solve_projection(&[0.0, 0.0], &rows, 1e-12, 10).unwrap();
        assert_eq!(sol.x, vec![1.0, 2.0]);
        assert!(kkt_residual(&[0.0, 0.0], &rows, &sol.x, &sol.multipliers) < 1e-12);
    }

    #[test]
    fn redundant_rows_are_handled() {
        let rows = [
            LinearRow { normal: vec![1.0, 1.0], bound: 1.0 },
            LinearRow { normal: vec![2.0, 2.0], bound: 2.0 },
            LinearRow { normal: vec![1.0, 0.0], bound: 0.75 },
        ];
        let sol = solve_projection(&[0.0, 0.0], &rows, 1e-12, 50).unwrap();
        assert_abs_diff_eq!(sol.x[0], 0.75, epsilon = 1e-12);
        assert_abs_diff_eq!(sol.x[1], 0.25, epsilon = 1e-12);
        assert!(kkt_residual(&[0.0, 0.0], &rows, &sol.x, &sol.multipliers) < 1e-12);
    }

    #[test]
    fn contradictory_rows_are_infeasible() {
        let rows = [
            LinearRow { normal: vec![1.0], bound: 1.0 },
            LinearRow { normal: vec![-1.0], bound: 0.0 },
        ];
        assert!(matches!(solve_projection(&[0.0], &rows, 1e-12, 50), Err(QpError::Infeasible { .. })));
    }
}
