//! Polygon overlay and circular buffering.
//!
//! The overlay itself runs on `geo`'s `BooleanOps`; this module owns the
//! conversion, orientation normalisation and sliver removal around it.

use geo::BooleanOps;

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::geom::{MultiPolygon, Point, Polygon, Ring};

/// Overlay output rings and parts smaller than this (m²) are dropped.
pub const SLIVER_AREA_M2: f64 = 1.0;

pub const DEFAULT_SEGMENTS_PER_CIRCLE: usize = 64;

const MIN_SEGMENTS_PER_CIRCLE: usize = 8;

pub fn intersection(a: &MultiPolygon, b: &MultiPolygon) -> MultiPolygon {
    if a.is_empty() || b.is_empty() || !bounds_overlap(a, b) {
        return MultiPolygon::empty();
    }
    from_geo(&to_geo(a).intersection(&to_geo(b)))
}

/// Points of `a` outside the interior of `b`.
pub fn difference(a: &MultiPolygon, b: &MultiPolygon) -> MultiPolygon {
    if a.is_empty() {
        return MultiPolygon::empty();
    }
    if b.is_empty() || !bounds_overlap(a, b) {
        return a.clone();
    }
    from_geo(&to_geo(a).difference(&to_geo(b)))
}

/// Dissolves all inputs into one region. An empty list gives an empty region.
pub fn union_all(gs: &[MultiPolygon]) -> MultiPolygon {
    union_all_with(gs, Execution::Serial)
}

/// As [`union_all`], merging chunks in parallel before the final dissolve.
pub fn union_all_with(gs: &[MultiPolygon], exec: Execution) -> MultiPolygon {
    let parts: Vec<geo::Polygon<f64>> = gs
        .iter()
        .flat_map(|m| m.parts().iter().map(polygon_to_geo))
        .collect();
    match parts.len() {
        0 => MultiPolygon::empty(),
        1 => from_geo(&geo::MultiPolygon(parts)),
        _ => from_geo(&dissolve(&parts, exec)),
    }
}

const MERGE_CHUNK: usize = 64;

fn dissolve(parts: &[geo::Polygon<f64>], exec: Execution) -> geo::MultiPolygon<f64> {
    // Same merge tree on both paths so the output does not depend on `exec`.
    if parts.len() <= MERGE_CHUNK {
        return geo::unary_union(parts);
    }
    let chunks: Vec<&[geo::Polygon<f64>]> = parts.chunks(MERGE_CHUNK).collect();
    let merged: Vec<geo::MultiPolygon<f64>> = exec.map(&chunks, |c| geo::unary_union(*c));
    let flat: Vec<geo::Polygon<f64>> = merged.into_iter().flat_map(|m| m.0).collect();
    geo::unary_union(&flat)
}

/// Regular polygon with `segments` vertices inscribed in the circle of
/// `radius_m` around `center`, first vertex due east.
pub fn regular_polygon(center: &Point, radius_m: f64, segments: usize) -> Polygon {
    let step = std::f64::consts::TAU / segments as f64;
    let vertices = (0..segments)
        .map(|k| {
            let t = step * k as f64;
            Point::new(center.x + radius_m * t.cos(), center.y + radius_m * t.sin())
        })
        .collect();
    Polygon::from_rings_unchecked(Ring::from_vertices_unchecked(vertices), Vec::new())
}

/// Union of inscribed regular polygons of radius `radius_km` around every site.
pub fn buffer(sites: &[Point], radius_km: f64, segments_per_circle: usize) -> Result<MultiPolygon> {
    buffer_with(sites, radius_km, segments_per_circle, Execution::Serial)
}

pub fn buffer_with(
    sites: &[Point],
    radius_km: f64,
    segments_per_circle: usize,
    exec: Execution,
) -> Result<MultiPolygon> {
    if !(radius_km > 0.0 && radius_km.is_finite()) {
        return Err(Error::Parameter(format!(
            "buffer radius must be positive, got {radius_km} km"
        )));
    }
    if segments_per_circle < MIN_SEGMENTS_PER_CIRCLE {
        return Err(Error::Parameter(format!(
            "segments_per_circle must be at least {MIN_SEGMENTS_PER_CIRCLE}, got {segments_per_circle}"
        )));
    }
    let radius_m = radius_km * 1000.0;
    let disks: Vec<MultiPolygon> = sites
        .iter()
        .map(|s| regular_polygon(s, radius_m, segments_per_circle).into())
        .collect();
    Ok(union_all_with(&disks, exec))
}

fn bounds_overlap(a: &MultiPolygon, b: &MultiPolygon) -> bool {
    match (a.bounds(), b.bounds()) {
        (Some(a), Some(b)) => {
            a.min.x <= b.max.x && b.min.x <= a.max.x && a.min.y <= b.max.y && b.min.y <= a.max.y
        }
        _ => false,
    }
}

fn ring_to_geo(r: &Ring) -> geo::LineString<f64> {
    let mut coords: Vec<geo::Coord<f64>> = r
        .vertices()
        .iter()
        .map(|p| geo::Coord { x: p.x, y: p.y })
        .collect();
    coords.push(coords[0]);
    geo::LineString(coords)
}

fn polygon_to_geo(p: &Polygon) -> geo::Polygon<f64> {
    geo::Polygon::new(
        ring_to_geo(p.exterior()),
        p.holes().iter().map(ring_to_geo).collect(),
    )
}

pub(crate) fn to_geo(m: &MultiPolygon) -> geo::MultiPolygon<f64> {
    geo::MultiPolygon(m.parts().iter().map(polygon_to_geo).collect())
}

fn ring_from_geo(ls: &geo::LineString<f64>) -> Option<Ring> {
    let ring = Ring::from_vertices_unchecked(ls.0.iter().map(|c| Point::new(c.x, c.y)).collect());
    (ring.len() >= 3 && ring.area_m2() >= SLIVER_AREA_M2).then_some(ring)
}

pub(crate) fn from_geo(m: &geo::MultiPolygon<f64>) -> MultiPolygon {
    let parts = m
        .0
        .iter()
        .filter_map(|p| {
            let exterior = ring_from_geo(p.exterior())?;
            let holes = p.interiors().iter().filter_map(ring_from_geo).collect();
            let poly = Polygon::from_rings_unchecked(exterior, holes);
            (poly.area_m2() >= SLIVER_AREA_M2).then_some(poly)
        })
        .collect();
    MultiPolygon::from_disjoint(parts)
}
