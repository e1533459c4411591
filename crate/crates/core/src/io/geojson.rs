//! FeatureCollection reading and writing (RFC 7946 structure, planar meters).

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use log::warn;
use serde_json::{json, Map, Value};

use crate::boolops;
use crate::coverage::District;
use crate::error::{Error, Result};
use crate::geom::{MultiPolygon, Point, Polygon, Ring};
use crate::layer::PointLayer;
use crate::standards::ServiceCode;
use crate::voronoi::CatchmentCell;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LayerKind {
    Points,
    Polygons,
    Districts,
}

impl LayerKind {
    fn noun(self) -> &'static str {
        match self {
            LayerKind::Points => "Point/MultiPoint",
            LayerKind::Polygons | LayerKind::Districts => "Polygon/MultiPolygon",
        }
    }
}

/// What was found in a layer file.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerFile {
    pub path: PathBuf,
    pub kind: LayerKind,
    pub service_code: Option<ServiceCode>,
    pub feature_count: usize,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Layer {
    Points(PointLayer),
    Polygons(MultiPolygon),
    Districts(Vec<District>),
}

/// Service code from a `<CODE>_anything.geojson` file name.
pub fn service_code_from_path(path: &Path) -> Result<ServiceCode> {
    let stem = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or_default();
    let prefix = stem.split('_').next().unwrap_or_default();
    prefix.parse()
}

pub fn read_layer(path: &Path, expected: LayerKind) -> Result<(LayerFile, Layer)> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let value: Value = serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        offset: byte_offset(&text, e.line(), e.column()),
        message: e.to_string(),
    })?;
    let features = feature_array(path, &value)?;
    let offending: Vec<usize> = features
        .iter()
        .enumerate()
        .filter(|(_, f)| !geometry_type(f).is_some_and(|t| matches_kind(t, expected)))
        .map(|(i, _)| i)
        .collect();
    if !offending.is_empty() {
        return Err(Error::KindMismatch {
            path: path.to_path_buf(),
            expected: expected.noun(),
            offending,
        });
    }
    let mut info = LayerFile {
        path: path.to_path_buf(),
        kind: expected,
        service_code: None,
        feature_count: features.len(),
        warnings: Vec::new(),
    };
    let feature_err = |feature: usize, message: String| Error::Feature {
        path: path.to_path_buf(),
        feature,
        message,
    };
    let layer = match expected {
        LayerKind::Points => {
            let mut points = Vec::new();
            for (i, f) in features.iter().enumerate() {
                points.extend(parse_points(&f["geometry"]).map_err(|m| feature_err(i, m))?);
            }
            info.service_code = service_code_from_path(path).ok();
            let name = path
                .file_stem()
                .and_then(|s| s.to_str())
                .unwrap_or_default()
                .to_string();
            Layer::Points(PointLayer::new(name, info.service_code, points))
        }
        LayerKind::Polygons => {
            let mut parts = Vec::new();
            for (i, f) in features.iter().enumerate() {
                parts.extend(parse_polygons(&f["geometry"]).map_err(|m| feature_err(i, m))?);
            }
            Layer::Polygons(dissolve_if_overlapping(parts))
        }
        LayerKind::Districts => {
            let mut districts = Vec::new();
            for (i, f) in features.iter().enumerate() {
                let props = &f["properties"];
                let name = props["name"]
                    .as_str()
                    .ok_or_else(|| feature_err(i, "district is missing a string \"name\"".into()))?;
                let population = props["population"].as_f64().ok_or_else(|| {
                    feature_err(i, "district is missing a numeric \"population\"".into())
                })?;
                if population.is_nan() || population < 0.0 {
                    return Err(feature_err(i, format!("negative population {population}")));
                }
                let parts = parse_polygons(&f["geometry"]).map_err(|m| feature_err(i, m))?;
                districts.push(District {
                    name: name.to_string(),
                    geometry: dissolve_if_overlapping(parts),
                    population,
                });
            }
            Layer::Districts(districts)
        }
    };
    if looks_geographic(&layer) {
        let msg = format!(
            "{}: coordinates look like longitude/latitude; planar meters are expected",
            path.display()
        );
        warn!("{msg}");
        info.warnings.push(msg);
    }
    Ok((info, layer))
}

pub fn read_points(path: &Path) -> Result<PointLayer> {
    match read_layer(path, LayerKind::Points)?.1 {
        Layer::Points(p) => Ok(p),
        _ => unreachable!("points requested"),
    }
}

pub fn read_polygons(path: &Path) -> Result<MultiPolygon> {
    match read_layer(path, LayerKind::Polygons)?.1 {
        Layer::Polygons(p) => Ok(p),
        _ => unreachable!("polygons requested"),
    }
}

pub fn read_districts(path: &Path) -> Result<Vec<District>> {
    match read_layer(path, LayerKind::Districts)?.1 {
        Layer::Districts(d) => Ok(d),
        _ => unreachable!("districts requested"),
    }
}

fn byte_offset(text: &str, line: usize, column: usize) -> usize {
    if line == 0 {
        return 0;
    }
    let line_start: usize = text
        .split_inclusive('\n')
        .take(line - 1)
        .map(str::len)
        .sum();
    (line_start + column.saturating_sub(1)).min(text.len())
}

fn feature_array<'a>(path: &Path, value: &'a Value) -> Result<&'a Vec<Value>> {
    let not_fc = || Error::Parse {
        path: path.to_path_buf(),
        offset: 0,
        message: "top-level object is not a FeatureCollection".into(),
    };
    if value["type"] != "FeatureCollection" {
        return Err(not_fc());
    }
    value["features"].as_array().ok_or_else(not_fc)
}

fn geometry_type(feature: &Value) -> Option<&str> {
    feature["geometry"]["type"].as_str()
}

fn matches_kind(t: &str, kind: LayerKind) -> bool {
    match kind {
        LayerKind::Points => matches!(t, "Point" | "MultiPoint"),
        LayerKind::Polygons | LayerKind::Districts => matches!(t, "Polygon" | "MultiPolygon"),
    }
}

fn parse_position(v: &Value) -> Result<Point, String> {
    let arr = v
        .as_array()
        .filter(|a| a.len() >= 2)
        .ok_or_else(|| format!("position {v} is not an [x, y] array"))?;
    let x = arr[0].as_f64().ok_or("non-numeric coordinate")?;
    let y = arr[1].as_f64().ok_or("non-numeric coordinate")?;
    let p = Point::new(x, y);
    if !p.is_finite() {
        return Err("non-finite coordinate".into());
    }
    Ok(p)
}

fn parse_points(geometry: &Value) -> Result<Vec<Point>, String> {
    let coords = &geometry["coordinates"];
    match geometry["type"].as_str() {
        Some("Point") => Ok(vec![parse_position(coords)?]),
        Some("MultiPoint") => coords
            .as_array()
            .ok_or("MultiPoint coordinates are not an array")?
            .iter()
            .map(parse_position)
            .collect(),
        other => Err(format!("unexpected geometry type {other:?}")),
    }
}

fn parse_ring(v: &Value, which: &str) -> Result<Ring, String> {
    let positions: Vec<Point> = v
        .as_array()
        .ok_or_else(|| format!("{which} is not an array of positions"))?
        .iter()
        .map(parse_position)
        .collect::<Result<_, _>>()?;
    match (positions.first(), positions.last()) {
        (Some(a), Some(b)) if positions.len() >= 4 && a == b => {}
        _ => return Err(format!("{which} is not closed (first position must repeat as the last)")),
    }
    Ring::new(positions).map_err(|e| format!("{which}: {e}"))
}

fn parse_polygon(v: &Value) -> Result<Polygon, String> {
    let rings = v.as_array().ok_or("Polygon coordinates are not an array")?;
    let (first, rest) = rings.split_first().ok_or("Polygon has no rings")?;
    let exterior = parse_ring(first, "exterior ring")?;
    let holes = rest
        .iter()
        .enumerate()
        .map(|(k, r)| parse_ring(r, &format!("hole {k}")))
        .collect::<Result<Vec<_>, _>>()?;
    Polygon::new(exterior, holes).map_err(|e| e.to_string())
}

fn parse_polygons(geometry: &Value) -> Result<Vec<Polygon>, String> {
    let coords = &geometry["coordinates"];
    match geometry["type"].as_str() {
        Some("Polygon") => Ok(vec![parse_polygon(coords)?]),
        Some("MultiPolygon") => coords
            .as_array()
            .ok_or("MultiPolygon coordinates are not an array")?
            .iter()
            .enumerate()
            .map(|(k, p)| parse_polygon(p).map_err(|e| format!("part {k}: {e}")))
            .collect(),
        other => Err(format!("unexpected geometry type {other:?}")),
    }
}

/// Parts whose bounding boxes overlap are checked for shared area; if any
/// pair overlaps the whole set is dissolved, otherwise kept verbatim.
fn dissolve_if_overlapping(parts: Vec<Polygon>) -> MultiPolygon {
    let bounds: Vec<_> = parts.iter().map(Polygon::bounds).collect();
    let overlapping = (0..parts.len()).any(|i| {
        (i + 1..parts.len()).any(|j| {
            let (a, b) = (&bounds[i], &bounds[j]);
            let boxes = a.min.x < b.max.x && b.min.x < a.max.x && a.min.y < b.max.y && b.min.y < a.max.y;
            boxes
                && !boolops::intersection(&parts[i].clone().into(), &parts[j].clone().into())
                    .is_empty()
        })
    });
    if overlapping {
        let ms: Vec<MultiPolygon> = parts.into_iter().map(MultiPolygon::from).collect();
        boolops::union_all(&ms)
    } else {
        MultiPolygon::from_disjoint(parts)
    }
}

fn looks_geographic(layer: &Layer) -> bool {
    let small = |p: &Point| p.x.abs() <= 180.0 && p.y.abs() <= 90.0;
    let all_small = |ms: &mut dyn Iterator<Item = &Point>| {
        let mut any = false;
        for p in ms {
            if !small(p) {
                return false;
            }
            any = true;
        }
        any
    };
    let poly_points = |m: &MultiPolygon| -> Vec<Point> {
        m.parts()
            .iter()
            .flat_map(Polygon::rings)
            .flat_map(|r| r.vertices().iter().copied())
            .collect()
    };
    match layer {
        Layer::Points(p) => all_small(&mut p.points.iter()),
        Layer::Polygons(m) => all_small(&mut poly_points(m).iter()),
        Layer::Districts(ds) => {
            let pts: Vec<Point> = ds.iter().flat_map(|d| poly_points(&d.geometry)).collect();
            all_small(&mut pts.iter())
        }
    }
}

/// Coordinate precision of written layers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct WriteOptions {
    /// Round coordinates to this many decimals; `None` writes the shortest
    /// representation that reads back to the same `f64`.
    pub decimals: Option<u32>,
}

impl WriteOptions {
    pub fn millimeters() -> Self {
        WriteOptions { decimals: Some(3) }
    }

    fn coord(&self, v: f64) -> Value {
        let v = match self.decimals {
            Some(d) => {
                let f = 10f64.powi(d as i32);
                let r = (v * f).round() / f;
                if r == 0.0 {
                    0.0
                } else {
                    r
                }
            }
            None => v,
        };
        json!(v)
    }

    fn position(&self, p: &Point) -> Value {
        Value::Array(vec![self.coord(p.x), self.coord(p.y)])
    }

    fn ring(&self, r: &Ring) -> Value {
        let mut v: Vec<Value> = r.vertices().iter().map(|p| self.position(p)).collect();
        v.push(self.position(&r.vertices()[0]));
        Value::Array(v)
    }

    fn polygon(&self, p: &Polygon) -> Value {
        Value::Array(p.rings().map(|r| self.ring(r)).collect())
    }
}

fn feature(geometry: Value, properties: Map<String, Value>) -> Value {
    json!({"type": "Feature", "properties": Value::Object(properties), "geometry": geometry})
}

/// One feature per line between a fixed header and footer.
fn collection_text(features: &[Value]) -> String {
    let mut out = String::from("{\"type\":\"FeatureCollection\",\"features\":[");
    for (i, f) in features.iter().enumerate() {
        out.push_str(if i == 0 { "\n" } else { ",\n" });
        out.push_str(&serde_json::to_string(f).expect("feature serializes"));
    }
    if !features.is_empty() {
        out.push('\n');
    }
    out.push_str("]}\n");
    out
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn polygon_features(m: &MultiPolygon, opts: &WriteOptions) -> Vec<Value> {
    m.parts()
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let mut props = Map::new();
            props.insert("part".into(), json!(i));
            props.insert("area_km2".into(), json!(crate::geom::polygon_area(p)));
            feature(json!({"type": "Polygon", "coordinates": opts.polygon(p)}), props)
        })
        .collect()
}

/// One Polygon feature per part.
pub fn polygons_to_string(m: &MultiPolygon, opts: &WriteOptions) -> String {
    collection_text(&polygon_features(m, opts))
}

pub fn write_polygons(path: &Path, m: &MultiPolygon, opts: &WriteOptions) -> Result<()> {
    write_text(path, &polygons_to_string(m, opts))
}

pub fn points_to_string(layer: &PointLayer, opts: &WriteOptions) -> String {
    let features: Vec<Value> = layer
        .points
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let mut props = Map::new();
            props.insert("index".into(), json!(i));
            if let Some(code) = layer.service {
                props.insert("service".into(), json!(code.as_str()));
            }
            feature(json!({"type": "Point", "coordinates": opts.position(p)}), props)
        })
        .collect();
    collection_text(&features)
}

pub fn write_points(path: &Path, layer: &PointLayer, opts: &WriteOptions) -> Result<()> {
    write_text(path, &points_to_string(layer, opts))
}

fn multipolygon_geometry(m: &MultiPolygon, opts: &WriteOptions) -> Value {
    json!({
        "type": "MultiPolygon",
        "coordinates": Value::Array(m.parts().iter().map(|p| opts.polygon(p)).collect()),
    })
}

pub fn districts_to_string(districts: &[District], opts: &WriteOptions) -> String {
    let features: Vec<Value> = districts
        .iter()
        .map(|d| {
            let mut props = Map::new();
            props.insert("name".into(), json!(d.name));
            props.insert("population".into(), json!(d.population));
            feature(multipolygon_geometry(&d.geometry, opts), props)
        })
        .collect();
    collection_text(&features)
}

pub fn write_districts(path: &Path, districts: &[District], opts: &WriteOptions) -> Result<()> {
    write_text(path, &districts_to_string(districts, opts))
}

/// Catchment cells with their site index, area and coverage distance.
pub fn cells_to_string(cells: &[CatchmentCell], opts: &WriteOptions) -> String {
    let features: Vec<Value> = cells
        .iter()
        .filter(|c| !c.cell.is_empty())
        .map(|c| {
            let mut props = Map::new();
            props.insert("site_index".into(), json!(c.site_index));
            props.insert("area_km2".into(), json!(c.area_km2));
            props.insert("coverage_distance_km".into(), json!(c.coverage_distance_km));
            feature(multipolygon_geometry(&c.cell, opts), props)
        })
        .collect();
    collection_text(&features)
}

pub fn write_cells(path: &Path, cells: &[CatchmentCell], opts: &WriteOptions) -> Result<()> {
    write_text(path, &cells_to_string(cells, opts))
}

pub fn write_layer(path: &Path, layer: &Layer, opts: &WriteOptions) -> Result<()> {
    match layer {
        Layer::Points(p) => write_points(path, p, opts),
        Layer::Polygons(m) => write_polygons(path, m, opts),
        Layer::Districts(d) => write_districts(path, d, opts),
    }
}

/// Human-readable summary used in logs.
pub fn describe(info: &LayerFile) -> String {
    let mut s = String::new();
    let _ = write!(s, "{} ({} features", info.path.display(), info.feature_count);
    if let Some(code) = info.service_code {
        let _ = write!(s, ", service {code}");
    }
    s.push(')');
    s
}
