//! Target regions, sensor detection and the event-triggered density field.
//!
//! The field is a positive baseline plus one anisotropic Gaussian bump per
//! agent that currently senses a target, centred on that agent.

use std::f64::consts::PI;

use crate::geometry::Point;

/// Axis-aligned rectangular target area. Unknown to the agents until sensed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TargetRegion {
    pub id: usize,
    pub min_corner: Point,
    pub max_corner: Point,
}

impl TargetRegion {
    pub fn new(id: usize, min_corner: Point, max_corner: Point) -> Self {
        TargetRegion { id, min_corner, max_corner }
    }

    pub fn area(&self) -> f64 {
        (self.max_corner.x - self.min_corner.x) * (self.max_corner.y - self.min_corner.y)
    }

    pub fn center(&self) -> Point {
        self.min_corner.lerp(self.max_corner, 0.5)
    }

    pub fn contains(&self, p: Point) -> bool {
        p.x >= self.min_corner.x && p.x <= self.max_corner.x && p.y >= self.min_corner.y && p.y <= self.max_corner.y
    }

    /// Closest point of the (filled) rectangle to `p`.
    pub fn closest_point(&self, p: Point) -> Point {
        Point::new(
            p.x.clamp(self.min_corner.x, self.max_corner.x),
            p.y.clamp(self.min_corner.y, self.max_corner.y),
        )
    }

    /// Euclidean distance from `p` to the rectangle, zero inside.
    pub fn distance_to(&self, p: Point) -> f64 {
        p.distance(self.closest_point(p))
    }

    /// True when the closed disk of `radius` about `center` touches the rectangle.
    pub fn intersects_disk(&self, center: Point, radius: f64) -> bool {
        self.closest_point(center).distance_squared(center) <= radius * radius
    }
}

/// Isotropic range sensor carried by every agent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensorModel {
    pub radius: f64,
}

/// Per-agent detection switches and the targets each agent currently sees.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DetectionState {
    pub flags: Vec<bool>,
    pub detected_regions: Vec<Vec<usize>>,
}

impl DetectionState {
    pub fn len(&self) -> usize {
        self.flags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.flags.is_empty()
    }

    pub fn detecting_count(&self) -> usize {
        self.flags.iter().filter(|&&f| f).count()
    }

    pub fn all_detect(&self) -> bool {
        self.flags.iter().all(|&f| f)
    }

    /// Keeps every switch that was on in `previous` switched on. Regions seen
    /// previously are retained for agents that lost sight of their target.
    pub fn latched(self, previous: &DetectionState) -> DetectionState {
        let mut next = self;
        for (i, prev_on) in previous.flags.iter().enumerate().take(next.flags.len()) {
            if *prev_on && !next.flags[i] {
                next.flags[i] = true;
                next.detected_regions[i] = previous.detected_regions[i].clone();
            }
        }
        next
    }
}

/// Switches each agent on iff its sensor disk intersects at least one target.
pub fn update_detection(positions: &[Point], sensor: &SensorModel, targets: &[TargetRegion]) -> DetectionState {
    let detected_regions: Vec<Vec<usize>> = positions
        .iter()
        .map(|&p| {
            targets
                .iter()
                .filter(|t| t.intersects_disk(p, sensor.radius))
                .map(|t| t.id)
                .collect()
        })
        .collect();
    let flags = detected_regions.iter().map(|r| !r.is_empty()).collect();
    DetectionState { flags, detected_regions }
}

/// Weight and spread of the bump an agent contributes once it detects.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComponentShape {
    pub weight: f64,
    pub sigma_x: f64,
    pub sigma_y: f64,
}

impl Default for ComponentShape {
    fn default() -> Self {
        ComponentShape { weight: 10.0, sigma_x: 0.5, sigma_y: 0.5 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianComponent {
    pub weight: f64,
    pub sigma_x: f64,
    pub sigma_y: f64,
    pub mean: Point,
}

impl GaussianComponent {
    pub fn new(shape: ComponentShape, mean: Point) -> Self {
        GaussianComponent { weight: shape.weight, sigma_x: shape.sigma_x, sigma_y: shape.sigma_y, mean }
    }

    pub fn peak(&self) -> f64 {
        self.weight / (2.0 * PI * self.sigma_x * self.sigma_y)
    }

    pub fn evaluate(&self, q: Point) -> f64 {
        let dx = (q.x - self.mean.x) / self.sigma_x;
        let dy = (q.y - self.mean.y) / self.sigma_y;
        self.peak() * (-0.5 * (dx * dx + dy * dy)).exp()
    }

    pub fn jet(&self, q: Point) -> Jet {
        let g = self.evaluate(q);
        let (ix, iy) = (1.0 / (self.sigma_x * self.sigma_x), 1.0 / (self.sigma_y * self.sigma_y));
        let ex = (q.x - self.mean.x) * ix;
        let ey = (q.y - self.mean.y) * iy;
        Jet { value: g, grad: Point::new(-g * ex, -g * ey), hess: [g * (ex * ex - ix), g * ex * ey, g * (ey * ey - iy)] }
    }
}

/// Value, gradient and Hessian `[fxx, fxy, fyy]` of a field at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    pub value: f64,
    pub grad: Point,
    pub hess: [f64; 3],
}

/// Part of a target that lies within some detecting agent's sensor disk.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectedPatch {
    pub region: TargetRegion,
    pub sensor_center: Point,
    pub sensor_radius: f64,
}

impl DetectedPatch {
    pub fn contains(&self, q: Point) -> bool {
        self.region.contains(q) && q.distance_squared(self.sensor_center) <= self.sensor_radius * self.sensor_radius
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityField {
    pub baseline: f64,
    pub components: Vec<GaussianComponent>,
    /// Uniform bonus added inside the union of `patches`; zero disables it.
    pub region_boost: f64,
    pub patches: Vec<DetectedPatch>,
}

impl DensityField {
    pub fn uniform(baseline: f64) -> Self {
        DensityField { baseline, components: Vec::new(), region_boost: 0.0, patches: Vec::new() }
    }

    pub fn with_components(baseline: f64, components: Vec<GaussianComponent>) -> Self {
        DensityField { components, ..DensityField::uniform(baseline) }
    }

    pub fn evaluate(&self, q: Point) -> f64 {
        let mut value = self.baseline;
        for c in &self.components {
            value += c.evaluate(q);
        }
        if self.region_boost > 0.0 && self.patches.iter().any(|p| p.contains(q)) {
            value += self.region_boost;
        }
        value
    }

    /// Second-order local expansion. The region boost is piecewise constant
    /// and contributes to the value only.
    pub fn jet(&self, q: Point) -> Jet {
        let mut jet = Jet { value: self.baseline, grad: Point::ORIGIN, hess: [0.0; 3] };
        for c in &self.components {
            let g = c.jet(q);
            jet.value += g.value;
            jet.grad += g.grad;
            for (h, gh) in jet.hess.iter_mut().zip(g.hess) {
                *h += gh;
            }
        }
        if self.region_boost > 0.0 && self.patches.iter().any(|p| p.contains(q)) {
            jet.value += self.region_boost;
        }
        jet
    }
}

/// One Gaussian per detecting agent, in agent order, centred on its current
/// position. `shapes` holds one entry per agent.
pub fn build_density(detection: &DetectionState, positions: &[Point], shapes: &[ComponentShape], baseline: f64) -> DensityField {
    let components = detection
        .flags
        .iter()
        .zip(positions)
        .zip(shapes)
        .filter(|((&on, _), _)| on)
        .map(|((_, &p), &shape)| GaussianComponent::new(shape, p))
        .collect();
    DensityField::with_components(baseline, components)
}

/// Adds a uniform `boost` inside the sensed portion of every detected target.
pub fn add_region_boost(
    field: &mut DensityField,
    detection: &DetectionState,
    positions: &[Point],
    targets: &[TargetRegion],
    sensor: &SensorModel,
    boost: f64,
) {
    field.region_boost = boost;
    field.patches = detection
        .detected_regions
        .iter()
        .zip(positions)
        .flat_map(|(ids, &p)| {
            ids.iter().filter_map(move |id| targets.iter().find(|t| t.id == *id)).map(move |t| DetectedPatch {
                region: *t,
                sensor_center: p,
                sensor_radius: sensor.radius,
            })
        })
        .collect();
}

pub fn evaluate_density(field: &DensityField, pt: Point) -> f64 {
    field.evaluate(pt)
}
