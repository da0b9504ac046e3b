//! Deterministic SVG emission: per-cell heatmaps with path overlays and
//! simple multi-series line charts. Byte-stable for identical inputs.

use std::fs;
use std::path::Path as FsPath;

use anyhow::{Context, Result};

use ipp_core::field::GridField;
use ipp_core::planner::Path;

/// Fixed viridis-like ramp anchors (sRGB), interpolated linearly.
const RAMP: [(u8, u8, u8); 9] = [
    (68, 1, 84),
    (71, 44, 122),
    (59, 81, 139),
    (44, 113, 142),
    (33, 144, 141),
    (39, 173, 129),
    (92, 200, 99),
    (170, 220, 50),
    (253, 231, 37),
];

/// Maps `t` in [0, 1] onto the color ramp.
pub fn ramp_color(t: f64) -> (u8, u8, u8) {
    let t = t.clamp(0.0, 1.0);
    let scaled = t * (RAMP.len() - 1) as f64;
    let lo = scaled.floor() as usize;
    let hi = (lo + 1).min(RAMP.len() - 1);
    let frac = scaled - lo as f64;
    let mix = |a: u8, b: u8| -> u8 {
        (a as f64 + (b as f64 - a as f64) * frac).round().clamp(0.0, 255.0) as u8
    };
    (mix(RAMP[lo].0, RAMP[hi].0), mix(RAMP[lo].1, RAMP[hi].1), mix(RAMP[lo].2, RAMP[hi].2))
}

const CELL_PX: usize = 16;

/// Renders a grid as colored cells (ramped over [min, max]) with an
/// optional waypoint overlay drawn as connected circles.
pub fn heatmap_svg(grid: &GridField, overlay: Option<&Path>) -> String {
    let (h, w) = grid.dims();
    let width = w * CELL_PX;
    let height = h * CELL_PX;
    let (lo, hi) = grid.min_max();
    let spread = if hi > lo { hi - lo } else { 1.0 };
    let mut out = String::with_capacity(h * w * 64);
    out.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" \
         viewBox=\"0 0 {width} {height}\">\n"
    ));
    for r in 0..h {
        for c in 0..w {
            let t = (grid.get(r, c) - lo) / spread;
            let (red, green, blue) = ramp_color(t);
            out.push_str(&format!(
                "<rect x=\"{}\" y=\"{}\" width=\"{CELL_PX}\" height=\"{CELL_PX}\" \
                 fill=\"#{red:02x}{green:02x}{blue:02x}\"/>\n",
                c * CELL_PX,
                r * CELL_PX,
            ));
        }
    }
    if let Some(path) = overlay {
        let center = |v: usize| v * CELL_PX + CELL_PX / 2;
        let points: Vec<String> = path
            .waypoints()
            .iter()
            .map(|cell| format!("{},{}", center(cell.col), center(cell.row)))
            .collect();
        if points.len() > 1 {
            out.push_str(&format!(
                "<polyline points=\"{}\" fill=\"none\" stroke=\"#ffffff\" stroke-width=\"2\"/>\n",
                points.join(" ")
            ));
        }
        for cell in path.waypoints() {
            out.push_str(&format!(
                "<circle cx=\"{}\" cy=\"{}\" r=\"4\" fill=\"none\" stroke=\"#ffffff\" \
                 stroke-width=\"2\"/>\n",
                center(cell.col),
                center(cell.row),
            ));
        }
    }
    out.push_str("</svg>\n");
    out
}

pub fn write_heatmap(path: &FsPath, grid: &GridField, overlay: Option<&Path>) -> Result<()> {
    fs::write(path, heatmap_svg(grid, overlay))
        .with_context(|| format!("writing heatmap {}", path.display()))?;
    Ok(())
}

const SERIES_COLORS: [&str; 10] = [
    "#4c72b0", "#dd8452", "#55a868", "#c44e52", "#8172b3", "#937860", "#da8bc3", "#8c8c8c",
    "#ccb974", "#64b5cd",
];

/// One named polyline of (x, y) points.
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

/// Renders labelled line series on fixed margins with min/max framing.
pub fn curve_svg(series: &[Series], x_label: &str, y_label: &str) -> String {
    const W: f64 = 640.0;
    const H: f64 = 420.0;
    const M: f64 = 50.0;
    let all_points = series.iter().flat_map(|s| s.points.iter());
    let (mut x_lo, mut x_hi) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut y_lo, mut y_hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in all_points {
        x_lo = x_lo.min(x);
        x_hi = x_hi.max(x);
        y_lo = y_lo.min(y);
        y_hi = y_hi.max(y);
    }
    if !x_lo.is_finite() {
        x_lo = 0.0;
        x_hi = 1.0;
        y_lo = 0.0;
        y_hi = 1.0;
    }
    if x_hi <= x_lo {
        x_hi = x_lo + 1.0;
    }
    if y_hi <= y_lo {
        y_hi = y_lo + 1.0;
    }
    let sx = |x: f64| M + (x - x_lo) / (x_hi - x_lo) * (W - 2.0 * M);
    let sy = |y: f64| H - M - (y - y_lo) / (y_hi - y_lo) * (H - 2.0 * M);
    let mut out = String::new();
    out.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" \
         viewBox=\"0 0 {W} {H}\">\n<rect width=\"{W}\" height=\"{H}\" fill=\"#ffffff\"/>\n"
    ));
    out.push_str(&format!(
        "<line x1=\"{M}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#000000\"/>\n",
        H - M,
        W - M,
        H - M
    ));
    out.push_str(&format!(
        "<line x1=\"{M}\" y1=\"{M}\" x2=\"{M}\" y2=\"{}\" stroke=\"#000000\"/>\n",
        H - M
    ));
    out.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" font-size=\"12\" text-anchor=\"middle\">{}</text>\n",
        W / 2.0,
        H - 12.0,
        xml_escape(x_label)
    ));
    out.push_str(&format!(
        "<text x=\"14\" y=\"{}\" font-size=\"12\" text-anchor=\"middle\" \
         transform=\"rotate(-90 14 {})\">{}</text>\n",
        H / 2.0,
        H / 2.0,
        xml_escape(y_label)
    ));
    // Axis extent labels.
    out.push_str(&format!(
        "<text x=\"{M}\" y=\"{}\" font-size=\"10\">{}</text>\n",
        H - M + 14.0,
        fmt_tick(x_lo)
    ));
    out.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" font-size=\"10\" text-anchor=\"end\">{}</text>\n",
        W - M,
        H - M + 14.0,
        fmt_tick(x_hi)
    ));
    out.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" font-size=\"10\" text-anchor=\"end\">{}</text>\n",
        M - 4.0,
        H - M,
        fmt_tick(y_lo)
    ));
    out.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" font-size=\"10\" text-anchor=\"end\">{}</text>\n",
        M - 4.0,
        M + 4.0,
        fmt_tick(y_hi)
    ));
    for (i, s) in series.iter().enumerate() {
        let color = SERIES_COLORS[i % SERIES_COLORS.len()];
        let pts: Vec<String> =
            s.points.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
        out.push_str(&format!(
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>\n",
            pts.join(" ")
        ));
        let ly = M + 16.0 * i as f64;
        out.push_str(&format!(
            "<line x1=\"{}\" y1=\"{ly}\" x2=\"{}\" y2=\"{ly}\" stroke=\"{color}\" \
             stroke-width=\"3\"/>\n",
            W - M - 110.0,
            W - M - 90.0
        ));
        out.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-size=\"11\">{}</text>\n",
            W - M - 84.0,
            ly + 4.0,
            xml_escape(&s.label)
        ));
    }
    out.push_str("</svg>\n");
    out
}

pub fn write_curves(path: &FsPath, series: &[Series], x_label: &str, y_label: &str) -> Result<()> {
    fs::write(path, curve_svg(series, x_label, y_label))
        .with_context(|| format!("writing curves {}", path.display()))?;
    Ok(())
}

fn fmt_tick(v: f64) -> String {
    format!("{v:.3}")
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;
    use ipp_core::field::Cell;

    #[test]
    fn two_by_two_grid_has_four_rects() {
        let grid = GridField::new(2, 2, vec![0.0, 0.5, 0.75, 1.0]).unwrap();
        let svg = heatmap_svg(&grid, None);
        assert_eq!(svg.matches("<rect").count(), 4);
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
    }

    #[test]
    fn constant_grid_paints_one_color() {
        let grid = GridField::filled(3, 3, 0.4).unwrap();
        let svg = heatmap_svg(&grid, None);
        let first_fill = svg.split("fill=\"").nth(1).unwrap().split('"').next().unwrap();
        assert_eq!(svg.matches(first_fill).count(), 9);
    }

    #[test]
    fn identical_inputs_produce_identical_bytes() {
        let grid = GridField::new(2, 3, vec![0.1, 0.9, 0.3, 0.7, 0.2, 0.5]).unwrap();
        let mut path = Path::new();
        path.push(Cell::new(0, 0)).unwrap();
        path.push(Cell::new(1, 2)).unwrap();
        assert_eq!(heatmap_svg(&grid, Some(&path)), heatmap_svg(&grid, Some(&path)));
        let s = [Series { label: "GS".into(), points: vec![(1.0, 0.4), (2.0, 0.3)] }];
        assert_eq!(curve_svg(&s, "t", "rmse"), curve_svg(&s, "t", "rmse"));
    }

    #[test]
    fn overlay_draws_circles_per_waypoint() {
        let grid = GridField::filled(4, 4, 0.0).unwrap();
        let mut path = Path::new();
        for i in 0..3 {
            path.push(Cell::new(i, i)).unwrap();
        }
        let svg = heatmap_svg(&grid, Some(&path));
        assert_eq!(svg.matches("<circle").count(), 3);
        assert_eq!(svg.matches("<polyline").count(), 1);
    }

    #[test]
    fn ramp_endpoints() {
        assert_eq!(ramp_color(0.0), (68, 1, 84));
        assert_eq!(ramp_color(1.0), (253, 231, 37));
    }
}
