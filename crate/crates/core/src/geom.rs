//! Planar geometry primitives.
//!
//! Coordinates are projected meters. Areas are computed in m² and reported
//! in km² by the free functions at the bottom of this module. Closed-set
//! semantics throughout: a point on a boundary is inside.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Two vertices closer than this (meters) are the same vertex.
pub const SNAP_TOLERANCE_M: f64 = 1e-6;

const M2_PER_KM2: f64 = 1.0e6;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn distance_to(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub(crate) fn coincides(&self, other: &Point) -> bool {
        self.distance_to(other) <= SNAP_TOLERANCE_M
    }

    pub fn translate(&self, dx: f64, dy: f64) -> Point {
        Point::new(self.x + dx, self.y + dy)
    }

    pub(crate) fn as_robust(&self) -> robust::Coord<f64> {
        robust::Coord {
            x: self.x,
            y: self.y,
        }
    }
}

/// Exact sign of the turn a → b → c: positive for counterclockwise.
pub(crate) fn orient(a: &Point, b: &Point, c: &Point) -> f64 {
    robust::orient2d(a.as_robust(), b.as_robust(), c.as_robust())
}

/// Axis-aligned bounding box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounds {
    pub min: Point,
    pub max: Point,
}

impl Bounds {
    pub fn of_points<'a>(points: impl IntoIterator<Item = &'a Point>) -> Option<Bounds> {
        let mut it = points.into_iter();
        let first = *it.next()?;
        let mut b = Bounds {
            min: first,
            max: first,
        };
        for p in it {
            b.include(p);
        }
        Some(b)
    }

    pub fn include(&mut self, p: &Point) {
        self.min.x = self.min.x.min(p.x);
        self.min.y = self.min.y.min(p.y);
        self.max.x = self.max.x.max(p.x);
        self.max.y = self.max.y.max(p.y);
    }

    pub fn union(&self, other: &Bounds) -> Bounds {
        let mut b = *self;
        b.include(&other.min);
        b.include(&other.max);
        b
    }

    pub fn width(&self) -> f64 {
        self.max.x - self.min.x
    }

    pub fn height(&self) -> f64 {
        self.max.y - self.min.y
    }

    pub fn center(&self) -> Point {
        Point::new(
            0.5 * (self.min.x + self.max.x),
            0.5 * (self.min.y + self.max.y),
        )
    }

    pub fn contains(&self, p: &Point) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }
}

/// A closed simple ring, stored without the repeated closing vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct Ring {
    vertices: Vec<Point>,
}

impl Ring {
    /// Validates and builds a ring.
    ///
    /// An explicit closing vertex is dropped and consecutive vertices within
    /// [`SNAP_TOLERANCE_M`] are merged. The result must keep at least three
    /// vertices, enclose nonzero area and be simple.
    pub fn new(vertices: Vec<Point>) -> Result<Ring> {
        if let Some(bad) = vertices.iter().position(|p| !p.is_finite()) {
            return Err(Error::Validation(format!(
                "vertex {bad} has a non-finite coordinate"
            )));
        }
        let vertices = dedup_closed(vertices);
        if vertices.len() < 3 {
            return Err(Error::Validation(format!(
                "ring has {} distinct vertices, at least 3 required",
                vertices.len()
            )));
        }
        let ring = Ring { vertices };
        if let Some((i, j)) = ring.first_self_intersection() {
            return Err(Error::Validation(format!(
                "ring self-intersects between edges {i} and {j}"
            )));
        }
        if ring.signed_area_m2() == 0.0 {
            return Err(Error::Validation("ring encloses zero area".into()));
        }
        Ok(ring)
    }

    /// Builds a ring from trusted vertices (overlay output, generated shapes).
    pub(crate) fn from_vertices_unchecked(vertices: Vec<Point>) -> Ring {
        Ring {
            vertices: dedup_closed(vertices),
        }
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Edges as (start, end) pairs, including the closing edge.
    pub fn edges(&self) -> impl Iterator<Item = (&Point, &Point)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (&self.vertices[i], &self.vertices[(i + 1) % n]))
    }

    /// Shoelace area, positive when counterclockwise. Evaluated relative to
    /// the first vertex so large projected offsets do not cost precision.
    pub fn signed_area_m2(&self) -> f64 {
        let Some(o) = self.vertices.first() else {
            return 0.0;
        };
        let mut twice = 0.0;
        for (a, b) in self.edges() {
            twice += (a.x - o.x) * (b.y - o.y) - (b.x - o.x) * (a.y - o.y);
        }
        0.5 * twice
    }

    pub fn area_m2(&self) -> f64 {
        self.signed_area_m2().abs()
    }

    pub fn is_ccw(&self) -> bool {
        self.signed_area_m2() > 0.0
    }

    pub fn reversed(&self) -> Ring {
        let mut vertices = self.vertices.clone();
        vertices.reverse();
        Ring { vertices }
    }

    fn oriented(self, ccw: bool) -> Ring {
        if self.is_ccw() == ccw {
            self
        } else {
            self.reversed()
        }
    }

    pub fn bounds(&self) -> Bounds {
        Bounds::of_points(&self.vertices).expect("ring has vertices")
    }

    /// Whether `p` lies on the ring within snap tolerance.
    pub fn on_boundary(&self, p: &Point) -> bool {
        self.edges()
            .any(|(a, b)| point_segment_distance(p, a, b) <= SNAP_TOLERANCE_M)
    }

    /// Crossing-number test for the open interior; boundary handled by the caller.
    fn encloses(&self, p: &Point) -> bool {
        let mut inside = false;
        for (a, b) in self.edges() {
            if (a.y > p.y) != (b.y > p.y) {
                // side of p relative to the upward-oriented edge
                let o = if b.y > a.y {
                    orient(a, b, p)
                } else {
                    orient(b, a, p)
                };
                if o > 0.0 {
                    inside = !inside;
                }
            }
        }
        inside
    }

    /// Closed containment: interior or boundary.
    pub fn contains(&self, p: &Point) -> bool {
        self.on_boundary(p) || self.encloses(p)
    }

    pub fn translate(&self, dx: f64, dy: f64) -> Ring {
        Ring {
            vertices: self.vertices.iter().map(|p| p.translate(dx, dy)).collect(),
        }
    }

    pub fn map_points(&self, f: impl Fn(&Point) -> Point) -> Ring {
        Ring {
            vertices: self.vertices.iter().map(f).collect(),
        }
    }

    fn first_self_intersection(&self) -> Option<(usize, usize)> {
        let n = self.vertices.len();
        let segs: Vec<Segment> = (0..n)
            .map(|i| Segment::new(self.vertices[i], self.vertices[(i + 1) % n]))
            .collect();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| segs[a].min_x().total_cmp(&segs[b].min_x()));
        for (k, &i) in order.iter().enumerate() {
            let max_x = segs[i].max_x();
            for &j in &order[k + 1..] {
                if segs[j].min_x() > max_x {
                    break;
                }
                let adjacent = (i + 1) % n == j || (j + 1) % n == i;
                let contact = segs[i].contact(&segs[j]);
                let bad = if adjacent {
                    // neighbours share a vertex; they may only fold back onto each other
                    contact == Contact::Overlap
                } else {
                    contact != Contact::None
                };
                if bad {
                    return Some((i.min(j), i.max(j)));
                }
            }
        }
        None
    }
}

fn dedup_closed(mut vertices: Vec<Point>) -> Vec<Point> {
    vertices.dedup_by(|b, a| a.coincides(b));
    while vertices.len() > 1 && vertices[0].coincides(vertices.last().unwrap()) {
        vertices.pop();
    }
    vertices
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Contact {
    None,
    /// Interiors cross at a single point.
    Proper,
    /// Contact at an endpoint of at least one segment.
    Touch,
    /// Collinear with a shared stretch of positive length.
    Overlap,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Segment {
    pub a: Point,
    pub b: Point,
}

impl Segment {
    pub fn new(a: Point, b: Point) -> Self {
        Segment { a, b }
    }

    fn min_x(&self) -> f64 {
        self.a.x.min(self.b.x)
    }

    fn max_x(&self) -> f64 {
        self.a.x.max(self.b.x)
    }

    pub fn contact(&self, other: &Segment) -> Contact {
        let (p, q, r, s) = (&self.a, &self.b, &other.a, &other.b);
        let o1 = orient(p, q, r);
        let o2 = orient(p, q, s);
        let o3 = orient(r, s, p);
        let o4 = orient(r, s, q);
        if o1 == 0.0 && o2 == 0.0 {
            return collinear_contact(p, q, r, s);
        }
        if o1 * o2 < 0.0 && o3 * o4 < 0.0 {
            return Contact::Proper;
        }
        let touches = (o1 == 0.0 && within_box(p, q, r))
            || (o2 == 0.0 && within_box(p, q, s))
            || (o3 == 0.0 && within_box(r, s, p))
            || (o4 == 0.0 && within_box(r, s, q));
        if touches {
            Contact::Touch
        } else {
            Contact::None
        }
    }
}

fn within_box(a: &Point, b: &Point, p: &Point) -> bool {
    p.x >= a.x.min(b.x) && p.x <= a.x.max(b.x) && p.y >= a.y.min(b.y) && p.y <= a.y.max(b.y)
}

fn collinear_contact(p: &Point, q: &Point, r: &Point, s: &Point) -> Contact {
    // project onto the dominant axis
    let key = |pt: &Point| {
        if (q.x - p.x).abs() >= (q.y - p.y).abs() {
            pt.x
        } else {
            pt.y
        }
    };
    let (a0, a1) = minmax(key(p), key(q));
    let (b0, b1) = minmax(key(r), key(s));
    let lo = a0.max(b0);
    let hi = a1.min(b1);
    if lo < hi {
        Contact::Overlap
    } else if lo == hi {
        Contact::Touch
    } else {
        Contact::None
    }
}

fn minmax(a: f64, b: f64) -> (f64, f64) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

pub(crate) fn point_segment_distance(p: &Point, a: &Point, b: &Point) -> f64 {
    let (dx, dy) = (b.x - a.x, b.y - a.y);
    let len2 = dx * dx + dy * dy;
    if len2 == 0.0 {
        return p.distance_to(a);
    }
    let t = (((p.x - a.x) * dx + (p.y - a.y) * dy) / len2).clamp(0.0, 1.0);
    p.distance_to(&Point::new(a.x + t * dx, a.y + t * dy))
}

/// Exterior ring (counterclockwise) with zero or more holes (clockwise).
///
/// Holes must lie inside the exterior and be pairwise disjoint. Rings of one
/// polygon may touch at isolated points but never cross or share an edge.
#[derive(Debug, Clone, PartialEq)]
pub struct Polygon {
    exterior: Ring,
    holes: Vec<Ring>,
}

impl Polygon {
    pub fn new(exterior: Ring, holes: Vec<Ring>) -> Result<Polygon> {
        let poly = Polygon::from_rings_unchecked(exterior, holes);
        poly.validate_nesting()?;
        Ok(poly)
    }

    /// Orients the rings but skips nesting checks.
    pub(crate) fn from_rings_unchecked(exterior: Ring, holes: Vec<Ring>) -> Polygon {
        Polygon {
            exterior: exterior.oriented(true),
            holes: holes.into_iter().map(|h| h.oriented(false)).collect(),
        }
    }

    /// Convenience constructor for a hole-free polygon.
    pub fn from_exterior(vertices: Vec<Point>) -> Result<Polygon> {
        Polygon::new(Ring::new(vertices)?, Vec::new())
    }

    /// Axis-aligned rectangle with the given corners.
    pub fn rectangle(min: Point, max: Point) -> Result<Polygon> {
        Polygon::from_exterior(vec![
            min,
            Point::new(max.x, min.y),
            max,
            Point::new(min.x, max.y),
        ])
    }

    pub fn exterior(&self) -> &Ring {
        &self.exterior
    }

    pub fn holes(&self) -> &[Ring] {
        &self.holes
    }

    pub fn rings(&self) -> impl Iterator<Item = &Ring> {
        std::iter::once(&self.exterior).chain(self.holes.iter())
    }

    pub fn area_m2(&self) -> f64 {
        let holes: f64 = self.holes.iter().map(Ring::area_m2).sum();
        (self.exterior.area_m2() - holes).max(0.0)
    }

    pub fn contains(&self, p: &Point) -> bool {
        if !self.exterior.contains(p) {
            return false;
        }
        // inside a hole's open interior means outside; its boundary stays inside
        !self
            .holes
            .iter()
            .any(|h| !h.on_boundary(p) && h.encloses(p))
    }

    pub fn bounds(&self) -> Bounds {
        self.exterior.bounds()
    }

    pub fn on_boundary(&self, p: &Point) -> bool {
        self.rings().any(|r| r.on_boundary(p))
    }

    pub fn map_points(&self, f: impl Fn(&Point) -> Point) -> Polygon {
        Polygon::from_rings_unchecked(
            self.exterior.map_points(&f),
            self.holes.iter().map(|h| h.map_points(&f)).collect(),
        )
    }

    fn validate_nesting(&self) -> Result<()> {
        let rings: Vec<&Ring> = self.rings().collect();
        if rings.len() == 1 {
            return Ok(());
        }
        // no crossings or shared edges between rings
        for i in 0..rings.len() {
            for j in i + 1..rings.len() {
                if !rings[i].bounds_overlap(rings[j]) {
                    continue;
                }
                for (a, b) in rings[i].edges() {
                    for (c, d) in rings[j].edges() {
                        let contact = Segment::new(*a, *b).contact(&Segment::new(*c, *d));
                        if matches!(contact, Contact::Proper | Contact::Overlap) {
                            return Err(Error::Validation(format!(
                                "rings {i} and {j} of a polygon cross"
                            )));
                        }
                    }
                }
            }
        }
        for (k, hole) in self.holes.iter().enumerate() {
            let probe = ring_probe(hole, &self.exterior);
            if !probe.is_some_and(|p| self.exterior.encloses(&p)) {
                return Err(Error::Validation(format!(
                    "hole {k} is not inside the exterior ring"
                )));
            }
            for (m, other) in self.holes.iter().enumerate() {
                if m == k {
                    continue;
                }
                if ring_probe(hole, other).is_some_and(|p| other.encloses(&p)) {
                    return Err(Error::Validation(format!(
                        "holes {k} and {m} overlap"
                    )));
                }
            }
        }
        Ok(())
    }
}

impl Ring {
    fn bounds_overlap(&self, other: &Ring) -> bool {
        let a = self.bounds();
        let b = other.bounds();
        a.min.x <= b.max.x && b.min.x <= a.max.x && a.min.y <= b.max.y && b.min.y <= a.max.y
    }
}

/// A vertex of `ring` that is not on `other`'s boundary, if any.
fn ring_probe(ring: &Ring, other: &Ring) -> Option<Point> {
    ring.vertices()
        .iter()
        .find(|v| !other.on_boundary(v))
        .copied()
}

/// Polygons with pairwise disjoint interiors. May be empty.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MultiPolygon {
    parts: Vec<Polygon>,
}

impl MultiPolygon {
    pub fn empty() -> Self {
        MultiPolygon { parts: Vec::new() }
    }

    /// Wraps parts the caller guarantees to be interior-disjoint.
    /// Overlapping inputs should go through [`crate::boolops::union_all`].
    pub fn from_disjoint(parts: Vec<Polygon>) -> Self {
        MultiPolygon { parts }
    }

    pub fn parts(&self) -> &[Polygon] {
        &self.parts
    }

    pub fn into_parts(self) -> Vec<Polygon> {
        self.parts
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    pub fn area_m2(&self) -> f64 {
        // fold from +0.0: an empty float sum is -0.0
        self.parts.iter().map(Polygon::area_m2).fold(0.0, |a, b| a + b)
    }

    pub fn contains(&self, p: &Point) -> bool {
        self.parts.iter().any(|poly| poly.contains(p))
    }

    pub fn bounds(&self) -> Option<Bounds> {
        self.parts
            .iter()
            .map(Polygon::bounds)
            .reduce(|a, b| a.union(&b))
    }

    pub fn vertex_count(&self) -> usize {
        self.parts
            .iter()
            .flat_map(Polygon::rings)
            .map(Ring::len)
            .sum()
    }

    pub fn map_points(&self, f: impl Fn(&Point) -> Point) -> MultiPolygon {
        MultiPolygon {
            parts: self.parts.iter().map(|p| p.map_points(&f)).collect(),
        }
    }

    pub fn translate(&self, dx: f64, dy: f64) -> MultiPolygon {
        self.map_points(|p| p.translate(dx, dy))
    }
}

impl From<Polygon> for MultiPolygon {
    fn from(p: Polygon) -> Self {
        MultiPolygon { parts: vec![p] }
    }
}

/// Common surface of [`Polygon`] and [`MultiPolygon`].
pub trait Areal {
    fn area_m2(&self) -> f64;
    fn contains_point(&self, p: &Point) -> bool;
    fn polygons(&self) -> &[Polygon];
}

impl Areal for Polygon {
    fn area_m2(&self) -> f64 {
        Polygon::area_m2(self)
    }

    fn contains_point(&self, p: &Point) -> bool {
        self.contains(p)
    }

    fn polygons(&self) -> &[Polygon] {
        std::slice::from_ref(self)
    }
}

impl Areal for MultiPolygon {
    fn area_m2(&self) -> f64 {
        MultiPolygon::area_m2(self)
    }

    fn contains_point(&self, p: &Point) -> bool {
        self.contains(p)
    }

    fn polygons(&self) -> &[Polygon] {
        &self.parts
    }
}

/// Area in km² (exterior minus holes, summed over parts).
pub fn polygon_area<G: Areal + ?Sized>(g: &G) -> f64 {
    g.area_m2() / M2_PER_KM2
}

/// Closed-region containment.
pub fn point_in_polygon<G: Areal + ?Sized>(p: &Point, g: &G) -> bool {
    g.contains_point(p)
}

/// Euclidean distance in meters.
pub fn distance(a: &Point, b: &Point) -> f64 {
    a.distance_to(b)
}

/// Farthest boundary point of `g` from `site`, in km.
///
/// Distance from a fixed point to a segment is convex along the segment, so
/// the maximum over the boundary is attained at a vertex; this holds for
/// non-convex polygons and for hole rings as well.
pub fn max_distance_to_boundary<G: Areal + ?Sized>(site: &Point, g: &G) -> Result<f64> {
    if !g.contains_point(site) {
        return Err(Error::Precondition(format!(
            "site ({}, {}) lies outside the polygon",
            site.x, site.y
        )));
    }
    let max_m = g
        .polygons()
        .iter()
        .flat_map(Polygon::rings)
        .flat_map(|r| r.vertices().iter())
        .map(|v| v.distance_to(site))
        .fold(0.0_f64, f64::max);
    Ok(max_m / 1000.0)
}

pub fn m2_to_km2(m2: f64) -> f64 {
    m2 / M2_PER_KM2
}

pub fn km2_to_m2(km2: f64) -> f64 {
    km2 * M2_PER_KM2
}
