//! Density-weighted cell integrals, the locational cost and the nominal
//! centroid-seeking controller.
//!
//! Integrals over a cell use a regular `resolution × resolution` grid laid
//! over the cell's bounding box. Grid squares fully inside the cell are
//! sampled at their midpoint; squares cut by the cell boundary are clipped to
//! the cell and sampled at the centroid of the clipped piece, weighted by its
//! exact area. Each sample also carries the second-order Taylor term
//! ½ tr(H·M), with H the Hessian of the integrand and M the piece's central
//! second-moment tensor, which removes the O(h²) error of the plain midpoint
//! rule. All sums run in row-major grid order.

use thiserror::Error;

use crate::density::{DensityField, Jet};
use crate::geometry::{ConvexPolygon, Point, VoronoiCell};

pub const MIN_RESOLUTION: usize = 16;
pub const DEFAULT_RESOLUTION: usize = 64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CoverageError {
    #[error("cell of agent {owner} is empty")]
    EmptyCell { owner: usize },
    #[error("quadrature resolution {0} is below the minimum of {MIN_RESOLUTION}")]
    ResolutionTooLow(usize),
    #[error("{cells} cells but {positions} positions")]
    LengthMismatch { cells: usize, positions: usize },
}

/// Mass and density-weighted centroid of one cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellMoment {
    pub mass: f64,
    pub centroid: Point,
}

/// Velocity command for one agent, in m/s.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ControlInput {
    pub ux: f64,
    pub uy: f64,
}

impl ControlInput {
    pub const ZERO: ControlInput = ControlInput { ux: 0.0, uy: 0.0 };

    pub fn new(ux: f64, uy: f64) -> Self {
        ControlInput { ux, uy }
    }

    pub fn as_vector(self) -> Point {
        Point::new(self.ux, self.uy)
    }

    pub fn norm(self) -> f64 {
        self.ux.hypot(self.uy)
    }
}

/// Everything one quadrature sweep over a cell yields.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellIntegrals {
    pub moment: CellMoment,
    /// ∫ ‖q − site‖² φ(q) dq over the cell.
    pub cost: f64,
}

/// One piece of the grid rule: centroid, area and central second moments
/// `[∫(x−cx)², ∫(x−cx)(y−cy), ∫(y−cy)²]`.
#[derive(Debug, Clone, Copy)]
struct Node {
    at: Point,
    area: f64,
    second: [f64; 3],
}

impl Node {
    /// ∫ f over the piece from f's value and Hessian at the centroid.
    fn integrate(&self, value: f64, hess: [f64; 3]) -> f64 {
        self.area * value + 0.5 * (hess[0] * self.second[0] + 2.0 * hess[1] * self.second[1] + hess[2] * self.second[2])
    }
}

fn piece_node(piece: &ConvexPolygon) -> Option<Node> {
    let area = piece.area();
    if area <= 0.0 {
        return None;
    }
    let c = piece.centroid()?;
    let mut m = [0.0; 3];
    for (a, b) in piece.edges() {
        let (a, b) = (a - c, b - c);
        let cr = a.cross(b);
        m[0] += cr * (a.x * a.x + a.x * b.x + b.x * b.x);
        m[1] += cr * (a.x * b.y + 2.0 * a.x * a.y + 2.0 * b.x * b.y + b.x * a.y);
        m[2] += cr * (a.y * a.y + a.y * b.y + b.y * b.y);
    }
    Some(Node { at: c, area, second: [m[0] / 12.0, m[1] / 24.0, m[2] / 12.0] })
}

/// Pieces of the grid rule over `poly`, row-major.
fn quadrature_nodes(poly: &ConvexPolygon, resolution: usize, mut visit: impl FnMut(Node)) {
    let Some((lo, hi)) = poly.bounding_box() else { return };
    let n = resolution;
    let hx = (hi.x - lo.x) / n as f64;
    let hy = (hi.y - lo.y) / n as f64;
    if hx <= 0.0 || hy <= 0.0 {
        return;
    }
    let grid_x = |i: usize| if i == n { hi.x } else { lo.x + i as f64 * hx };
    let grid_y = |j: usize| if j == n { hi.y } else { lo.y + j as f64 * hy };

    // Corner inside-flags are shared between neighbouring squares.
    let inside: Vec<bool> = (0..=n)
        .flat_map(|j| (0..=n).map(move |i| (i, j)))
        .map(|(i, j)| poly.contains(Point::new(grid_x(i), grid_y(j))))
        .collect();
    let corner = |i: usize, j: usize| inside[j * (n + 1) + i];

    for j in 0..n {
        let (y0, y1) = (grid_y(j), grid_y(j + 1));
        for i in 0..n {
            let (x0, x1) = (grid_x(i), grid_x(i + 1));
            if corner(i, j) && corner(i + 1, j) && corner(i, j + 1) && corner(i + 1, j + 1) {
                let (w, h) = (x1 - x0, y1 - y0);
                let area = w * h;
                visit(Node {
                    at: Point::new(0.5 * (x0 + x1), 0.5 * (y0 + y1)),
                    area,
                    second: [area * w * w / 12.0, 0.0, area * h * h / 12.0],
                });
                continue;
            }
            let piece = poly
                .edges()
                .fold(ConvexPolygon::rectangle(Point::new(x0, y0), Point::new(x1, y1)), |acc, (a, b)| {
                    // Left of the CCW edge a→b: (b − a) × (q − a) ≥ 0.
                    let edge = b - a;
                    let normal = Point::new(edge.y, -edge.x);
                    acc.clip_halfplane(normal, normal.dot(a))
                });
            if let Some(node) = piece_node(&piece) {
                visit(node);
            }
        }
    }
}

/// Mass, centroid and locational cost of `poly` about `site` in one sweep.
pub fn integrate_cell(
    poly: &ConvexPolygon,
    site: Point,
    field: &DensityField,
    resolution: usize,
) -> Option<CellIntegrals> {
    let mut mass = 0.0;
    let mut first = Point::ORIGIN;
    let mut cost = 0.0;
    quadrature_nodes(poly, resolution, |node| {
        let Jet { value: f, grad: g, hess: [fxx, fxy, fyy] } = field.jet(node.at);
        let q = node.at;
        let s = q - site;
        let r = s.norm_squared();
        mass += node.integrate(f, [fxx, fxy, fyy]);
        first.x += node.integrate(q.x * f, [2.0 * g.x + q.x * fxx, g.y + q.x * fxy, q.x * fyy]);
        first.y += node.integrate(q.y * f, [q.y * fxx, g.x + q.y * fxy, 2.0 * g.y + q.y * fyy]);
        cost += node.integrate(
            r * f,
            [
                2.0 * f + 4.0 * s.x * g.x + r * fxx,
                2.0 * (s.x * g.y + s.y * g.x) + r * fxy,
                2.0 * f + 4.0 * s.y * g.y + r * fyy,
            ],
        );
    });
    if mass <= 0.0 {
        return None;
    }
    Some(CellIntegrals { moment: CellMoment { mass, centroid: first * (1.0 / mass) }, cost })
}

fn check_resolution(resolution: usize) -> Result<(), CoverageError> {
    if resolution < MIN_RESOLUTION {
        Err(CoverageError::ResolutionTooLow(resolution))
    } else {
        Ok(())
    }
}

/// Mass and density-weighted centroid of a Voronoi cell.
pub fn cell_moment(cell: &VoronoiCell, field: &DensityField, resolution: usize) -> Result<CellMoment, CoverageError> {
    check_resolution(resolution)?;
    let site = cell.region.centroid().ok_or(CoverageError::EmptyCell { owner: cell.owner })?;
    integrate_cell(&cell.region, site, field, resolution)
        .map(|i| i.moment)
        .ok_or(CoverageError::EmptyCell { owner: cell.owner })
}

/// Σᵢ ∫_{Vᵢ} ‖q − pᵢ‖² φ(q) dq, summed in agent order.
pub fn locational_cost(
    cells: &[VoronoiCell],
    positions: &[Point],
    field: &DensityField,
    resolution: usize,
) -> Result<f64, CoverageError> {
    check_resolution(resolution)?;
    if cells.len() != positions.len() {
        return Err(CoverageError::LengthMismatch { cells: cells.len(), positions: positions.len() });
    }
    let mut total = 0.0;
    for (cell, &p) in cells.iter().zip(positions) {
        // Empty cells carry no mass and add nothing.
        if let Some(i) = integrate_cell(&cell.region, p, field, resolution) {
            total += i.cost;
        }
    }
    Ok(total)
}

/// u = −k (p − c).
pub fn nominal_control(position: Point, centroid: Point, gain: f64) -> ControlInput {
    ControlInput::new(-gain * (position.x - centroid.x), -gain * (position.y - centroid.y))
}
