//! Deterministic SVG map rendering.
//!
//! The page is a fixed 1000×1000 px viewport. World coordinates map onto the
//! page through one uniform scale (aspect ratio preserved) with the y axis
//! flipped. Numbers are printed with two decimals so identical inputs give
//! byte-identical files.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::density::DensityGrid;
use crate::error::{Error, Result};
use crate::geom::{Bounds, MultiPolygon, Point};

pub const PAGE_SIZE: f64 = 1000.0;
const MARGIN: f64 = 40.0;
const LEGEND_HEIGHT: f64 = 120.0;

const BORDER_STROKE: &str = "#000000";
const BUILT_UP_FILL: &str = "#bdbdbd";
const SERVED_FILL: &str = "#4caf50";
const UNSERVED_FILL: &str = "#e53935";
const SITE_FILL: &str = "#000000";

/// Density class colours, light to dark.
const CLASS_FILLS: [&str; 6] = ["#ffffb2", "#fed976", "#feb24c", "#fd8d3c", "#f03b20", "#bd0026"];

/// World → page transform.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MapTransform {
    pub world: Bounds,
    /// Pixels per meter.
    pub scale: f64,
    pub offset_x: f64,
    pub offset_y: f64,
}

impl MapTransform {
    /// Fits `world` into the drawing area above the legend band.
    pub fn fit(world: Bounds) -> Self {
        let avail_w = PAGE_SIZE - 2.0 * MARGIN;
        let avail_h = PAGE_SIZE - 2.0 * MARGIN - LEGEND_HEIGHT;
        let w = world.width().max(1e-9);
        let h = world.height().max(1e-9);
        let scale = (avail_w / w).min(avail_h / h);
        MapTransform {
            world,
            scale,
            offset_x: MARGIN + 0.5 * (avail_w - w * scale),
            offset_y: MARGIN + 0.5 * (avail_h - h * scale),
        }
    }

    pub fn apply(&self, p: &Point) -> (f64, f64) {
        (
            self.offset_x + (p.x - self.world.min.x) * self.scale,
            self.offset_y + (self.world.max.y - p.y) * self.scale,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaleBar {
    pub meters: f64,
    pub pixels: f64,
}

impl ScaleBar {
    /// Largest 1/2/5×10ᵏ m length not exceeding a quarter of the map width.
    pub fn for_transform(t: &MapTransform) -> Self {
        let target = (0.25 * t.world.width()).max(1e-3);
        let mag = 10f64.powf(target.log10().floor());
        let meters = [5.0, 2.0, 1.0]
            .into_iter()
            .map(|m| m * mag)
            .find(|m| *m <= target)
            .unwrap_or(mag);
        ScaleBar {
            meters,
            pixels: meters * t.scale,
        }
    }

    pub fn label(&self) -> String {
        if self.meters >= 1000.0 {
            format!("{} km", self.meters / 1000.0)
        } else {
            format!("{} m", self.meters)
        }
    }
}

fn path_data(m: &MultiPolygon, t: &MapTransform) -> String {
    let mut d = String::new();
    for ring in m.parts().iter().flat_map(|p| p.rings()) {
        for (i, v) in ring.vertices().iter().enumerate() {
            let (x, y) = t.apply(v);
            let _ = write!(d, "{}{x:.2} {y:.2} ", if i == 0 { "M" } else { "L" });
        }
        d.push_str("Z ");
    }
    d.trim_end().to_string()
}

fn header(out: &mut String, title: &str) {
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{PAGE_SIZE}\" height=\"{PAGE_SIZE}\" viewBox=\"0 0 {PAGE_SIZE} {PAGE_SIZE}\" preserveAspectRatio=\"xMidYMid meet\">"
    );
    let _ = writeln!(out, "<title>{}</title>", escape(title));
    let _ = writeln!(out, "<rect x=\"0\" y=\"0\" width=\"{PAGE_SIZE}\" height=\"{PAGE_SIZE}\" fill=\"#ffffff\"/>");
}

fn polygon_layer(out: &mut String, id: &str, m: &MultiPolygon, t: &MapTransform, style: &str) {
    if m.is_empty() {
        return;
    }
    let _ = writeln!(
        out,
        "<path id=\"{id}\" fill-rule=\"evenodd\" {style} d=\"{}\"/>",
        path_data(m, t)
    );
}

fn scale_bar(out: &mut String, t: &MapTransform) {
    let bar = ScaleBar::for_transform(t);
    let x = MARGIN;
    let y = PAGE_SIZE - MARGIN - 20.0;
    let _ = writeln!(
        out,
        "<rect id=\"scale-bar\" x=\"{x:.2}\" y=\"{y:.2}\" width=\"{:.2}\" height=\"6.00\" fill=\"#000000\"/>",
        bar.pixels
    );
    let _ = writeln!(
        out,
        "<text x=\"{x:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"14\">{}</text>",
        y - 6.0,
        bar.label()
    );
}

fn legend(out: &mut String, entries: &[(&str, String)]) {
    let x0 = PAGE_SIZE - MARGIN - 260.0;
    let y0 = PAGE_SIZE - MARGIN - LEGEND_HEIGHT + 10.0;
    let _ = writeln!(out, "<g id=\"legend\" font-family=\"sans-serif\" font-size=\"14\">");
    for (i, (style, label)) in entries.iter().enumerate() {
        let y = y0 + 20.0 * i as f64;
        let _ = writeln!(
            out,
            "<rect x=\"{x0:.2}\" y=\"{y:.2}\" width=\"14.00\" height=\"14.00\" {style}/><text x=\"{:.2}\" y=\"{:.2}\">{}</text>",
            x0 + 22.0,
            y + 12.0,
            escape(label)
        );
    }
    out.push_str("</g>\n");
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Coverage map: border outline, built-up, served, unserved, then sites.
pub fn render_map_svg(
    title: &str,
    border: &MultiPolygon,
    built_up: &MultiPolygon,
    served: &MultiPolygon,
    unserved: &MultiPolygon,
    sites: &[Point],
) -> Result<String> {
    let world = border
        .bounds()
        .ok_or_else(|| Error::Parameter("cannot render a map with an empty border".into()))?;
    let t = MapTransform::fit(world);
    let mut out = String::new();
    header(&mut out, title);
    let border_style = format!("fill=\"none\" stroke=\"{BORDER_STROKE}\" stroke-width=\"2\"");
    polygon_layer(&mut out, "border", border, &t, &border_style);
    polygon_layer(&mut out, "built-up", built_up, &t, &format!("fill=\"{BUILT_UP_FILL}\""));
    polygon_layer(&mut out, "served", served, &t, &format!("fill=\"{SERVED_FILL}\""));
    polygon_layer(&mut out, "unserved", unserved, &t, &format!("fill=\"{UNSERVED_FILL}\""));
    if !sites.is_empty() {
        out.push_str("<g id=\"sites\">\n");
        for s in sites {
            let (x, y) = t.apply(s);
            let _ = writeln!(out, "<circle cx=\"{x:.2}\" cy=\"{y:.2}\" r=\"3.00\" fill=\"{SITE_FILL}\"/>");
        }
        out.push_str("</g>\n");
    }
    let mut entries = vec![
        (border_style.clone(), "City border".to_string()),
        (format!("fill=\"{BUILT_UP_FILL}\""), "Built-up area".to_string()),
    ];
    if !served.is_empty() {
        entries.push((format!("fill=\"{SERVED_FILL}\""), "Served".to_string()));
    }
    if !unserved.is_empty() {
        entries.push((format!("fill=\"{UNSERVED_FILL}\""), "Unserved".to_string()));
    }
    if !sites.is_empty() {
        entries.push((format!("fill=\"{SITE_FILL}\""), "Facilities".to_string()));
    }
    let refs: Vec<(&str, String)> = entries.iter().map(|(s, l)| (s.as_str(), l.clone())).collect();
    legend(&mut out, &refs);
    scale_bar(&mut out, &t);
    out.push_str("</svg>\n");
    Ok(out)
}

pub fn render_map(
    out_path: &Path,
    title: &str,
    border: &MultiPolygon,
    built_up: &MultiPolygon,
    served: &MultiPolygon,
    unserved: &MultiPolygon,
    sites: &[Point],
) -> Result<()> {
    let svg = render_map_svg(title, border, built_up, served, unserved, sites)?;
    fs::write(out_path, svg).map_err(|e| Error::io(out_path, e))
}

/// Heat map: one square per unmasked, nonzero-class cell, border on top.
pub fn render_density_svg(
    title: &str,
    border: &MultiPolygon,
    grid: &DensityGrid,
    classes: &[Option<usize>],
    breaks: &[f64],
) -> Result<String> {
    let world = border
        .bounds()
        .ok_or_else(|| Error::Parameter("cannot render a map with an empty border".into()))?;
    let t = MapTransform::fit(world);
    let mut out = String::new();
    header(&mut out, title);
    let px = grid.cell_size * t.scale;
    out.push_str("<g id=\"density\">\n");
    for row in 0..grid.height {
        for col in 0..grid.width {
            let Some(class) = classes[row * grid.width + col] else {
                continue;
            };
            let fill = CLASS_FILLS[class.min(CLASS_FILLS.len() - 1)];
            // top-left corner of the cell on the page
            let corner = Point::new(
                grid.origin.x + col as f64 * grid.cell_size,
                grid.origin.y + (row + 1) as f64 * grid.cell_size,
            );
            let (x, y) = t.apply(&corner);
            let _ = writeln!(
                out,
                "<rect x=\"{x:.2}\" y=\"{y:.2}\" width=\"{px:.2}\" height=\"{px:.2}\" fill=\"{fill}\"/>"
            );
        }
    }
    out.push_str("</g>\n");
    let border_style = format!("fill=\"none\" stroke=\"{BORDER_STROKE}\" stroke-width=\"2\"");
    polygon_layer(&mut out, "border", border, &t, &border_style);
    let mut entries = Vec::new();
    for k in 0..=breaks.len() {
        let label = match k {
            0 if breaks.is_empty() => "all cells".to_string(),
            0 => format!("< {} services/km²", breaks[0]),
            k if k == breaks.len() => format!("≥ {} services/km²", breaks[k - 1]),
            k => format!("{}–{} services/km²", breaks[k - 1], breaks[k]),
        };
        entries.push((format!("fill=\"{}\"", CLASS_FILLS[k.min(CLASS_FILLS.len() - 1)]), label));
    }
    let refs: Vec<(&str, String)> = entries.iter().map(|(s, l)| (s.as_str(), l.clone())).collect();
    legend(&mut out, &refs);
    scale_bar(&mut out, &t);
    out.push_str("</svg>\n");
    Ok(out)
}
