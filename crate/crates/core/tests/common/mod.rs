//! Reference implementations and generators shared by the integration tests.
//! Nothing here calls into the library's predicates, so it can serve as an
//! oracle for them.

#![allow(dead_code)]

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use urbanreach::{Bounds, MultiPolygon, Point, Polygon};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Vertices on an ellipse at sorted random angles; always convex.
pub fn convex_ring(rng: &mut impl Rng, center: Point, rx: f64, ry: f64, n: usize) -> Vec<Point> {
    let mut angles: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..TAU)).collect();
    angles.sort_by(f64::total_cmp);
    angles.dedup_by(|a, b| (*a - *b).abs() < 1e-3);
    angles
        .iter()
        .map(|t| Point::new(center.x + rx * t.cos(), center.y + ry * t.sin()))
        .collect()
}

pub fn convex_polygon(rng: &mut impl Rng, center: Point, rx: f64, ry: f64, n: usize) -> Polygon {
    Polygon::from_exterior(convex_ring(rng, center, rx, ry, n)).expect("convex ring is valid")
}

/// Star-shaped ring around `center`: simple, usually non-convex.
pub fn star_ring(rng: &mut impl Rng, center: Point, rmin: f64, rmax: f64, n: usize) -> Vec<Point> {
    (0..n)
        .map(|k| {
            let t = TAU * (k as f64 + rng.random_range(0.1..0.9)) / n as f64;
            let r = rng.random_range(rmin..rmax);
            Point::new(center.x + r * t.cos(), center.y + r * t.sin())
        })
        .collect()
}

/// Winding number of `ring` around `p` (Sunday's formulation).
pub fn winding_number(p: &Point, ring: &[Point]) -> i32 {
    let n = ring.len();
    let mut wn = 0;
    for i in 0..n {
        let a = ring[i];
        let b = ring[(i + 1) % n];
        let cross = (b.x - a.x) * (p.y - a.y) - (p.x - a.x) * (b.y - a.y);
        if a.y <= p.y {
            if b.y > p.y && cross > 0.0 {
                wn += 1;
            }
        } else if b.y <= p.y && cross < 0.0 {
            wn -= 1;
        }
    }
    wn
}

/// Interior test by winding numbers: inside the exterior, outside every hole.
pub fn oracle_inside(p: &Point, poly: &Polygon) -> bool {
    winding_number(p, poly.exterior().vertices()) != 0
        && poly.holes().iter().all(|h| winding_number(p, h.vertices()) == 0)
}

pub fn oracle_inside_multi(p: &Point, m: &MultiPolygon) -> bool {
    m.parts().iter().any(|poly| oracle_inside(p, poly))
}

/// Distance from `p` to the nearest edge of any ring of `m`.
pub fn distance_to_edges(p: &Point, m: &MultiPolygon) -> f64 {
    let mut best = f64::INFINITY;
    for ring in m.parts().iter().flat_map(|q| q.rings()) {
        let v = ring.vertices();
        for i in 0..v.len() {
            best = best.min(segment_distance(p, &v[i], &v[(i + 1) % v.len()]));
        }
    }
    best
}

pub fn segment_distance(p: &Point, a: &Point, b: &Point) -> f64 {
    let (dx, dy) = (b.x - a.x, b.y - a.y);
    let len2 = dx * dx + dy * dy;
    let t = if len2 > 0.0 {
        (((p.x - a.x) * dx + (p.y - a.y) * dy) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    ((p.x - a.x - t * dx).powi(2) + (p.y - a.y - t * dy).powi(2)).sqrt()
}

pub fn uniform_point(rng: &mut impl Rng, b: &Bounds) -> Point {
    Point::new(
        rng.random_range(b.min.x..b.max.x),
        rng.random_range(b.min.y..b.max.y),
    )
}

/// Index and distance of the nearest site, by exhaustive scan.
pub fn brute_nearest(p: &Point, sites: &[Point]) -> (usize, f64) {
    sites
        .iter()
        .enumerate()
        .map(|(i, s)| (i, ((p.x - s.x).powi(2) + (p.y - s.y).powi(2)).sqrt()))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("at least one site")
}

/// Uniform points inside `m`, by rejection from its bounding box.
pub fn points_inside(rng: &mut impl Rng, m: &MultiPolygon, n: usize) -> Vec<Point> {
    let b = m.bounds().expect("nonempty region");
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let p = uniform_point(rng, &b);
        if oracle_inside_multi(&p, m) {
            out.push(p);
        }
    }
    out
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}
