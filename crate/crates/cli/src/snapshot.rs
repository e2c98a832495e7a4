//! SVG snapshots of a swarm state.
//!
//! The left panel shows the gray workspace, red target rectangles, black
//! Voronoi edges, red sensor circles and black agent dots. The right panel is
//! a heatmap of the density field sampled on a 128 × 128 grid and embedded as
//! a PNG.

use std::fmt::Write as _;
use std::path::Path;

use base64::Engine as _;

use coverage_core::density::DensityField;
use coverage_core::engine::{ScenarioConfig, SwarmState};
use coverage_core::geometry::Point;

pub const HEATMAP_SAMPLES: usize = 128;
const PANEL: f64 = 480.0;
const MARGIN: f64 = 30.0;

struct Frame {
    origin_x: f64,
    min: Point,
    scale: f64,
    height: f64,
}

impl Frame {
    fn new(config: &ScenarioConfig, origin_x: f64) -> Frame {
        let ws = config.workspace;
        let scale = PANEL / ws.width().max(ws.height());
        Frame { origin_x, min: ws.min_corner(), scale, height: ws.height() * scale }
    }

    fn map(&self, p: Point) -> (f64, f64) {
        (
            self.origin_x + (p.x - self.min.x) * self.scale,
            MARGIN + self.height - (p.y - self.min.y) * self.scale,
        )
    }
}

/// Maps t ∈ [0, 1] to a dark-blue → yellow ramp.
fn colormap(t: f64) -> [u8; 3] {
    const STOPS: [[f64; 3]; 5] = [
        [68.0, 1.0, 84.0],
        [59.0, 82.0, 139.0],
        [33.0, 145.0, 140.0],
        [94.0, 201.0, 98.0],
        [253.0, 231.0, 37.0],
    ];
    let t = t.clamp(0.0, 1.0) * (STOPS.len() - 1) as f64;
    let i = (t.floor() as usize).min(STOPS.len() - 2);
    let f = t - i as f64;
    let mut rgb = [0u8; 3];
    for (c, out) in rgb.iter_mut().enumerate() {
        *out = (STOPS[i][c] + f * (STOPS[i + 1][c] - STOPS[i][c])).round() as u8;
    }
    rgb
}

/// Log-scaled density heatmap as PNG bytes, top row first.
fn heatmap_png(field: &DensityField, config: &ScenarioConfig) -> Vec<u8> {
    let n = HEATMAP_SAMPLES;
    let (lo, hi) = (config.workspace.min_corner(), config.workspace.max_corner());
    let values: Vec<f64> = (0..n)
        .flat_map(|row| (0..n).map(move |col| (row, col)))
        .map(|(row, col)| {
            let x = lo.x + (col as f64 + 0.5) / n as f64 * (hi.x - lo.x);
            let y = hi.y - (row as f64 + 0.5) / n as f64 * (hi.y - lo.y);
            field.evaluate(Point::new(x, y)).log10()
        })
        .collect();
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = if max > min { max - min } else { 1.0 };
    let pixels: Vec<u8> = values.iter().flat_map(|v| colormap((v - min) / span)).collect();

    let mut png_bytes = Vec::new();
    {
        let mut encoder = png::Encoder::new(&mut png_bytes, n as u32, n as u32);
        encoder.set_color(png::ColorType::Rgb);
        encoder.set_depth(png::BitDepth::Eight);
        let mut writer = encoder.write_header().expect("in-memory PNG header");
        writer.write_image_data(&pixels).expect("in-memory PNG data");
    }
    png_bytes
}

pub fn snapshot_svg(state: &SwarmState, field: &DensityField, config: &ScenarioConfig) -> String {
    let left = Frame::new(config, MARGIN);
    let right = Frame::new(config, 2.0 * MARGIN + PANEL);
    let width = 3.0 * MARGIN + 2.0 * PANEL;
    let height = 2.0 * MARGIN + left.height;
    let ws = config.workspace;
    let px = |v: f64| v * left.scale;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.2} {height:.2}">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="16">t = {:.2} s</text>"#,
        MARGIN,
        MARGIN - 10.0,
        state.time
    );

    let (wx, wy) = left.map(Point::new(ws.min_corner().x, ws.max_corner().y));
    let _ = writeln!(
        svg,
        r##"<rect class="workspace" x="{wx:.2}" y="{wy:.2}" width="{:.2}" height="{:.2}" fill="#bdbdbd"/>"##,
        px(ws.width()),
        px(ws.height())
    );
    for t in &config.targets {
        let (x, y) = left.map(Point::new(t.min_corner.x, t.max_corner.y));
        let _ = writeln!(
            svg,
            r##"<rect class="target" x="{x:.2}" y="{y:.2}" width="{:.2}" height="{:.2}" fill="#e53935" fill-opacity="0.6"/>"##,
            px(t.max_corner.x - t.min_corner.x),
            px(t.max_corner.y - t.min_corner.y)
        );
    }
    for cell in &state.cells {
        let points: Vec<String> = cell
            .region
            .vertices()
            .iter()
            .map(|&v| {
                let (x, y) = left.map(v);
                format!("{x:.2},{y:.2}")
            })
            .collect();
        let _ = writeln!(
            svg,
            r#"<polygon class="cell" points="{}" fill="none" stroke="black" stroke-width="1"/>"#,
            points.join(" ")
        );
    }
    for &p in &state.positions {
        let (x, y) = left.map(p);
        let _ = writeln!(
            svg,
            r#"<circle class="sensor" cx="{x:.2}" cy="{y:.2}" r="{:.2}" fill="none" stroke="red" stroke-width="1"/>"#,
            px(config.sensor.radius)
        );
    }
    for &p in &state.positions {
        let (x, y) = left.map(p);
        let _ = writeln!(svg, r#"<circle class="agent" cx="{x:.2}" cy="{y:.2}" r="4" fill="black"/>"#);
    }

    let encoded = base64::engine::general_purpose::STANDARD.encode(heatmap_png(field, config));
    let (hx, hy) = right.map(Point::new(ws.min_corner().x, ws.max_corner().y));
    let _ = writeln!(
        svg,
        r#"<image class="density" x="{hx:.2}" y="{hy:.2}" width="{:.2}" height="{:.2}" preserveAspectRatio="none" style="image-rendering:pixelated" href="data:image/png;base64,{encoded}"/>"#,
        px(ws.width()),
        px(ws.height())
    );
    svg.push_str("</svg>\n");
    svg
}

pub fn render_snapshot(
    state: &SwarmState,
    field: &DensityField,
    config: &ScenarioConfig,
    path: &Path,
) -> std::io::Result<()> {
    std::fs::write(path, snapshot_svg(state, field, config))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn colormap_endpoints() {
        assert_eq!(colormap(0.0), [68, 1, 84]);
        assert_eq!(colormap(1.0), [253, 231, 37]);
        assert_eq!(colormap(-3.0), colormap(0.0));
    }
}
