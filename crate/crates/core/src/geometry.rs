//! Planar primitives and the bounded Voronoi tessellation of a rectangular
//! workspace.
//!
//! Cells are built by intersecting the workspace rectangle with one
//! bisector half-plane per neighbouring site, so every cell is a convex
//! polygon that never leaves the workspace.

use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use thiserror::Error;

/// Vertices closer than this (in meters) are merged, and points this close to
/// a boundary count as being on it.
pub const GEOMETRY_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("sites {first} and {second} coincide")]
    DuplicateSites { first: usize, second: usize },
    #[error("site {index} at ({x}, {y}) lies outside the workspace")]
    SiteOutsideWorkspace { index: usize, x: f64, y: f64 },
    #[error("invalid workspace: {0}")]
    InvalidWorkspace(String),
    #[error("non-finite coordinate")]
    NonFinite,
}

/// A point (or free vector) in the plane, in meters.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const ORIGIN: Point = Point { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn dot(self, other: Point) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the 3D cross product.
    pub fn cross(self, other: Point) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm_squared(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn distance(self, other: Point) -> f64 {
        (self - other).norm()
    }

    pub fn distance_squared(self, other: Point) -> f64 {
        (self - other).norm_squared()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn lerp(self, other: Point, t: f64) -> Point {
        self + (other - self) * t
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, rhs: Point) -> Point {
        Point::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl AddAssign for Point {
    fn add_assign(&mut self, rhs: Point) {
        self.x += rhs.x;
        self.y += rhs.y;
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, rhs: Point) -> Point {
        Point::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(self, rhs: f64) -> Point {
        Point::new(self.x * rhs, self.y * rhs)
    }
}

impl Neg for Point {
    type Output = Point;
    fn neg(self) -> Point {
        Point::new(-self.x, -self.y)
    }
}

/// Axis-aligned rectangular domain the agents live in.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Workspace {
    min_corner: Point,
    max_corner: Point,
}

impl Workspace {
    pub fn new(min_corner: Point, max_corner: Point) -> Result<Self, GeometryError> {
        if !min_corner.is_finite() || !max_corner.is_finite() {
            return Err(GeometryError::NonFinite);
        }
        if min_corner.x >= max_corner.x || min_corner.y >= max_corner.y {
            return Err(GeometryError::InvalidWorkspace(format!(
                "min corner ({}, {}) must be strictly below max corner ({}, {})",
                min_corner.x, min_corner.y, max_corner.x, max_corner.y
            )));
        }
        Ok(Workspace { min_corner, max_corner })
    }

    pub fn min_corner(&self) -> Point {
        self.min_corner
    }

    pub fn max_corner(&self) -> Point {
        self.max_corner
    }

    pub fn width(&self) -> f64 {
        self.max_corner.x - self.min_corner.x
    }

    pub fn height(&self) -> f64 {
        self.max_corner.y - self.min_corner.y
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn center(&self) -> Point {
        self.min_corner.lerp(self.max_corner, 0.5)
    }

    pub fn contains(&self, p: Point) -> bool {
        p.x >= self.min_corner.x - GEOMETRY_TOLERANCE
            && p.x <= self.max_corner.x + GEOMETRY_TOLERANCE
            && p.y >= self.min_corner.y - GEOMETRY_TOLERANCE
            && p.y <= self.max_corner.y + GEOMETRY_TOLERANCE
    }

    /// Projects `p` onto the workspace rectangle.
    pub fn clamp(&self, p: Point) -> Point {
        Point::new(
            p.x.clamp(self.min_corner.x, self.max_corner.x),
            p.y.clamp(self.min_corner.y, self.max_corner.y),
        )
    }

    pub fn to_polygon(&self) -> ConvexPolygon {
        ConvexPolygon::rectangle(self.min_corner, self.max_corner)
    }
}

/// Convex polygon with counter-clockwise vertices. Zero vertices means empty.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConvexPolygon {
    vertices: Vec<Point>,
}

impl ConvexPolygon {
    pub fn empty() -> Self {
        ConvexPolygon { vertices: Vec::new() }
    }

    pub fn rectangle(min_corner: Point, max_corner: Point) -> Self {
        ConvexPolygon {
            vertices: vec![
                min_corner,
                Point::new(max_corner.x, min_corner.y),
                max_corner,
                Point::new(min_corner.x, max_corner.y),
            ],
        }
    }

    /// Builds a polygon from vertices that are already convex. Clockwise input
    /// is reversed; degenerate input collapses to the empty polygon.
    pub fn from_vertices(vertices: Vec<Point>) -> Self {
        let mut poly = ConvexPolygon { vertices };
        if poly.signed_area() < 0.0 {
            poly.vertices.reverse();
        }
        poly.cleanup();
        poly
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Iterator over directed edges `(start, end)`.
    pub fn edges(&self) -> impl Iterator<Item = (Point, Point)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    pub fn signed_area(&self) -> f64 {
        0.5 * self.edges().map(|(a, b)| a.cross(b)).sum::<f64>()
    }

    /// Shoelace area; zero for the empty polygon.
    pub fn area(&self) -> f64 {
        self.signed_area().abs()
    }

    /// Area centroid, or `None` for a degenerate polygon.
    pub fn centroid(&self) -> Option<Point> {
        let mut twice_area = 0.0;
        let mut acc = Point::ORIGIN;
        // Shift to the first vertex to limit cancellation for small pieces far
        // from the origin.
        let anchor = *self.vertices.first()?;
        for (a, b) in self.edges() {
            let (a, b) = (a - anchor, b - anchor);
            let w = a.cross(b);
            twice_area += w;
            acc += (a + b) * w;
        }
        if twice_area.abs() <= f64::MIN_POSITIVE {
            return None;
        }
        Some(anchor + acc * (1.0 / (3.0 * twice_area)))
    }

    /// Returns `(min, max)` corners, or `None` when empty.
    pub fn bounding_box(&self) -> Option<(Point, Point)> {
        let first = *self.vertices.first()?;
        Some(self.vertices.iter().fold((first, first), |(lo, hi), v| {
            (
                Point::new(lo.x.min(v.x), lo.y.min(v.y)),
                Point::new(hi.x.max(v.x), hi.y.max(v.y)),
            )
        }))
    }

    /// Inside or on the boundary, within [`GEOMETRY_TOLERANCE`].
    pub fn contains(&self, pt: Point) -> bool {
        if self.vertices.len() < 3 {
            return false;
        }
        self.edges().all(|(a, b)| {
            let edge = b - a;
            let len = edge.norm();
            len == 0.0 || edge.cross(pt - a) / len >= -GEOMETRY_TOLERANCE
        })
    }

    /// Keeps the part of the polygon satisfying `normal · q <= offset`.
    pub fn clip_halfplane(&self, normal: Point, offset: f64) -> ConvexPolygon {
        if self.is_empty() {
            return ConvexPolygon::empty();
        }
        let scale = normal.norm();
        if scale == 0.0 {
            // Degenerate constraint 0 <= offset: all or nothing.
            return if offset >= 0.0 { self.clone() } else { ConvexPolygon::empty() };
        }
        let dist: Vec<f64> = self
            .vertices
            .iter()
            .map(|v| (normal.dot(*v) - offset) / scale)
            .collect();
        if dist.iter().all(|&d| d <= GEOMETRY_TOLERANCE) {
            return self.clone();
        }
        if dist.iter().all(|&d| d > GEOMETRY_TOLERANCE) {
            return ConvexPolygon::empty();
        }

        let n = self.vertices.len();
        let mut out = Vec::with_capacity(n + 1);
        for i in 0..n {
            let j = (i + 1) % n;
            let (cur, next) = (self.vertices[i], self.vertices[j]);
            let (dc, dn) = (dist[i], dist[j]);
            let cur_in = dc <= GEOMETRY_TOLERANCE;
            let next_in = dn <= GEOMETRY_TOLERANCE;
            if cur_in {
                out.push(cur);
            }
            if cur_in != next_in {
                let t = (dc / (dc - dn)).clamp(0.0, 1.0);
                out.push(cur.lerp(next, t));
            }
        }
        let mut poly = ConvexPolygon { vertices: out };
        poly.cleanup();
        poly
    }

    /// Merges near-coincident vertices and drops collinear ones; collapses to
    /// empty when fewer than three vertices survive.
    fn cleanup(&mut self) {
        let mut verts: Vec<Point> = Vec::with_capacity(self.vertices.len());
        for &v in &self.vertices {
            if verts.last().is_none_or(|&last: &Point| last.distance(v) > GEOMETRY_TOLERANCE) {
                verts.push(v);
            }
        }
        while verts.len() > 1 && verts[0].distance(verts[verts.len() - 1]) <= GEOMETRY_TOLERANCE {
            verts.pop();
        }

        let mut changed = true;
        while changed && verts.len() >= 3 {
            changed = false;
            let n = verts.len();
            for i in 0..n {
                let prev = verts[(i + n - 1) % n];
                let cur = verts[i];
                let next = verts[(i + 1) % n];
                let base = next - prev;
                let len = base.norm();
                if len <= GEOMETRY_TOLERANCE || (base.cross(cur - prev) / len).abs() <= GEOMETRY_TOLERANCE {
                    verts.remove(i);
                    changed = true;
                    break;
                }
            }
        }

        if verts.len() < 3 {
            verts.clear();
        }
        self.vertices = verts;
    }
}

/// Region of the workspace owned by one agent.
#[derive(Debug, Clone, PartialEq)]
pub struct VoronoiCell {
    pub owner: usize,
    pub region: ConvexPolygon,
}

/// Convenience wrapper around [`ConvexPolygon::clip_halfplane`].
pub fn clip_halfplane(poly: &ConvexPolygon, normal: Point, offset: f64) -> ConvexPolygon {
    poly.clip_halfplane(normal, offset)
}

pub fn polygon_area(poly: &ConvexPolygon) -> f64 {
    poly.area()
}

pub fn point_in_polygon(pt: Point, poly: &ConvexPolygon) -> bool {
    poly.contains(pt)
}

/// Checks that sites are finite, inside the workspace and pairwise distinct.
pub fn validate_sites(sites: &[Point], workspace: &Workspace) -> Result<(), GeometryError> {
    for (index, &p) in sites.iter().enumerate() {
        if !p.is_finite() {
            return Err(GeometryError::NonFinite);
        }
        if !workspace.contains(p) {
            return Err(GeometryError::SiteOutsideWorkspace { index, x: p.x, y: p.y });
        }
    }
    for i in 0..sites.len() {
        for j in (i + 1)..sites.len() {
            if sites[i].distance(sites[j]) <= GEOMETRY_TOLERANCE {
                return Err(GeometryError::DuplicateSites { first: i, second: j });
            }
        }
    }
    Ok(())
}

/// Voronoi cells of `sites` restricted to `workspace`, one per site in input
/// order.
pub fn voronoi_tessellation(sites: &[Point], workspace: &Workspace) -> Result<Vec<VoronoiCell>, GeometryError> {
    validate_sites(sites, workspace)?;
    let bounds = workspace.to_polygon();
    Ok(sites
        .iter()
        .enumerate()
        .map(|(owner, &site)| {
            let region = sites.iter().enumerate().filter(|&(other, _)| other != owner).fold(
                bounds.clone(),
                |poly, (_, &neighbor)| {
                    // ‖q − p_i‖ ≤ ‖q − p_j‖  ⇔  (p_j − p_i)·q ≤ (p_j − p_i)·(p_i + p_j)/2
                    let normal = neighbor - site;
                    let offset = normal.dot((site + neighbor) * 0.5);
                    poly.clip_halfplane(normal, offset)
                },
            );
            VoronoiCell { owner, region }
        })
        .collect())
}

/// Smallest pairwise distance, `f64::INFINITY` for fewer than two points.
pub fn min_pairwise_distance(points: &[Point]) -> f64 {
    let mut best = f64::INFINITY;
    for i in 0..points.len() {
        for j in (i + 1)..points.len() {
            best = best.min(points[i].distance(points[j]));
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn unit_square() -> ConvexPolygon {
        ConvexPolygon::rectangle(Point::new(0.0, 0.0), Point::new(1.0, 1.0))
    }

    fn ws10() -> Workspace {
        Workspace::new(Point::new(0.0, 0.0), Point::new(10.0, 10.0)).unwrap()
    }

    #[test]
    fn inactive_halfplane_leaves_square() {
        let clipped = clip_halfplane(&unit_square(), Point::new(1.0, 0.0), 2.0);
        assert_eq!(clipped, unit_square());
    }

    #[test]
    fn axis_cut_gives_half_rectangle() {
        let clipped = clip_halfplane(&unit_square(), Point::new(1.0, 0.0), 0.5);
        assert_abs_diff_eq!(clipped.area(), 0.5, epsilon = 1e-15);
        let (lo, hi) = clipped.bounding_box().unwrap();
        assert_eq!(lo, Point::new(0.0, 0.0));
        assert_eq!(hi, Point::new(0.5, 1.0));
        assert_eq!(clipped.vertices().len(), 4);
    }

    #[test]
    fn diagonal_cut_gives_triangle() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let clipped = clip_halfplane(&unit_square(), Point::new(s, s), s);
        assert_eq!(clipped.vertices().len(), 3);
        assert_abs_diff_eq!(clipped.area(), 0.5, epsilon = 1e-12);
        for corner in [Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(0.0, 1.0)] {
            assert!(clipped.vertices().iter().any(|v| v.distance(corner) < 1e-12));
        }
    }

    #[test]
    fn clipping_everything_away_is_empty() {
        let clipped = clip_halfplane(&unit_square(), Point::new(1.0, 0.0), -1.0);
        assert!(clipped.is_empty());
        assert_eq!(clipped.area(), 0.0);
    }

    #[test]
    fn areas() {
        assert_eq!(polygon_area(&ConvexPolygon::empty()), 0.0);
        assert_eq!(polygon_area(&unit_square()), 1.0);
        let tri = ConvexPolygon::from_vertices(vec![Point::new(0.0, 0.0), Point::new(4.0, 0.0), Point::new(0.0, 3.0)]);
        assert_eq!(polygon_area(&tri), 6.0);
    }

    #[test]
    fn clockwise_input_is_reoriented() {
        let tri = ConvexPolygon::from_vertices(vec![Point::new(0.0, 0.0), Point::new(0.0, 3.0), Point::new(4.0, 0.0)]);
        assert!(tri.signed_area() > 0.0);
    }

    #[test]
    fn containment_is_boundary_inclusive() {
        let sq = unit_square();
        assert!(point_in_polygon(Point::new(0.5, 0.5), &sq));
        assert!(!point_in_polygon(Point::new(1.5, 0.5), &sq));
        assert!(point_in_polygon(Point::new(1.0, 0.5), &sq));
        assert!(point_in_polygon(Point::new(1.0 + 5e-10, 0.5), &sq));
        assert!(!point_in_polygon(Point::new(0.5, 0.5), &ConvexPolygon::empty()));
    }

    #[test]
    fn polygon_centroid() {
        let c = unit_square().centroid().unwrap();
        assert_abs_diff_eq!(c.x, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(c.y, 0.5, epsilon = 1e-15);
        assert!(ConvexPolygon::empty().centroid().is_none());
    }

    #[test]
    fn single_site_owns_workspace() {
        let cells = voronoi_tessellation(&[Point::new(3.3, 7.1)], &ws10()).unwrap();
        assert_eq!(cells.len(), 1);
        assert_eq!(cells[0].region, ws10().to_polygon());
    }

    #[test]
    fn two_sites_split_at_bisector() {
        let cells = voronoi_tessellation(&[Point::new(2.5, 5.0), Point::new(7.5, 5.0)], &ws10()).unwrap();
        let expect = [
            ConvexPolygon::rectangle(Point::new(0.0, 0.0), Point::new(5.0, 10.0)),
            ConvexPolygon::rectangle(Point::new(5.0, 0.0), Point::new(10.0, 10.0)),
        ];
        for (cell, rect) in cells.iter().zip(expect.iter()) {
            assert_abs_diff_eq!(cell.region.area(), 50.0, epsilon = 1e-12);
            assert_eq!(cell.region.bounding_box(), rect.bounding_box());
        }
    }

    #[test]
    fn duplicate_and_outside_sites_rejected() {
        let err = voronoi_tessellation(&[Point::new(1.0, 1.0), Point::new(1.0, 1.0 + 1e-10)], &ws10()).unwrap_err();
        assert_eq!(err, GeometryError::DuplicateSites { first: 0, second: 1 });
        let err = voronoi_tessellation(&[Point::new(1.0, 1.0), Point::new(11.0, 1.0)], &ws10()).unwrap_err();
        assert!(matches!(err, GeometryError::SiteOutsideWorkspace { index: 1, .. }));
    }

    #[test]
    fn bad_workspace() {
        assert!(Workspace::new(Point::new(1.0, 0.0), Point::new(1.0, 2.0)).is_err());
        assert!(Workspace::new(Point::new(0.0, f64::NAN), Point::new(1.0, 2.0)).is_err());
    }

    proptest! {
        #[test]
        fn clipping_is_idempotent(
            nx in -1.0f64..1.0, ny in -1.0f64..1.0, offset in -1.0f64..2.0,
        ) {
            prop_assume!(nx.hypot(ny) > 1e-3);
            let normal = Point::new(nx, ny);
            let once = unit_square().clip_halfplane(normal, offset);
            let twice = once.clip_halfplane(normal, offset);
            prop_assert_eq!(once.clone(), twice);
            prop_assert!(once.signed_area() >= 0.0);
        }

        #[test]
        fn tessellation_partitions_workspace(
            raw in proptest::collection::vec((0.0f64..10.0, 0.0f64..10.0), 1..20)
        ) {
            let sites: Vec<Point> = raw.iter().map(|&(x, y)| Point::new(x, y)).collect();
            prop_assume!(validate_sites(&sites, &ws10()).is_ok());
            let cells = voronoi_tessellation(&sites, &ws10()).unwrap();
            let total: f64 = cells.iter().map(|c| c.region.area()).sum();
            prop_assert!((total - 100.0).abs() <= 1e-6 * 100.0);
            for cell in &cells {
                prop_assert!(cell.region.signed_area() >= 0.0);
            }
        }
    }
}
