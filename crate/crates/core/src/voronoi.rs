//! Delaunay triangulation, Voronoi catchment cells clipped to a boundary,
//! and per-facility catchment metrics.
//!
//! The triangulation is an incremental Bowyer–Watson construction over
//! exact orientation and in-circle predicates. The hull is closed with ghost
//! triangles (one per hull edge, sharing a vertex at infinity), so points
//! outside the current hull need no enclosing super-triangle. Sites are
//! inserted in index order, which fixes how cocircular ties are broken.

use std::collections::HashMap;

use log::warn;

use crate::boolops;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::geom::{self, orient, Bounds, MultiPolygon, Point, Polygon, Ring, SNAP_TOLERANCE_M};

const GHOST: usize = usize::MAX;

#[derive(Debug, Clone, PartialEq)]
pub struct Triangulation {
    pub sites: Vec<Point>,
    /// Counterclockwise vertex-index triples into `sites`.
    pub triangles: Vec<[usize; 3]>,
}

impl Triangulation {
    /// Sorted, deduplicated Delaunay neighbours of every site.
    pub fn neighbors(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.sites.len()];
        for t in &self.triangles {
            for k in 0..3 {
                adj[t[k]].push(t[(k + 1) % 3]);
                adj[t[(k + 1) % 3]].push(t[k]);
            }
        }
        for a in &mut adj {
            a.sort_unstable();
            a.dedup();
        }
        adj
    }
}

/// Indices of the sites kept after merging points closer than the snap
/// tolerance; the first occurrence wins.
pub fn dedup_sites(sites: &[Point]) -> Vec<usize> {
    let cell = SNAP_TOLERANCE_M;
    let key = |p: &Point| ((p.x / cell).floor() as i64, (p.y / cell).floor() as i64);
    let mut grid: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    let mut kept = Vec::with_capacity(sites.len());
    for (i, p) in sites.iter().enumerate() {
        let (kx, ky) = key(p);
        let duplicate = (-1..=1).any(|dx| {
            (-1..=1).any(|dy| {
                grid.get(&(kx + dx, ky + dy))
                    .is_some_and(|ids| ids.iter().any(|&j| sites[j].coincides(p)))
            })
        });
        if !duplicate {
            grid.entry((kx, ky)).or_default().push(i);
            kept.push(i);
        }
    }
    kept
}

/// Delaunay triangulation of `sites` after duplicate merging.
///
/// Fails with [`Error::Degenerate`] for fewer than three distinct sites or
/// when all sites are collinear.
pub fn delaunay(sites: &[Point]) -> Result<Triangulation> {
    if let Some(i) = sites.iter().position(|p| !p.is_finite()) {
        return Err(Error::Parameter(format!("site {i} has a non-finite coordinate")));
    }
    let kept: Vec<Point> = dedup_sites(sites).into_iter().map(|i| sites[i]).collect();
    let triangles = triangulate(&kept)?;
    Ok(Triangulation {
        sites: kept,
        triangles,
    })
}

fn triangulate(pts: &[Point]) -> Result<Vec<[usize; 3]>> {
    if pts.len() < 3 {
        return Err(Error::Degenerate(format!(
            "{} distinct sites, at least 3 required",
            pts.len()
        )));
    }
    let third = (2..pts.len())
        .find(|&k| orient(&pts[0], &pts[1], &pts[k]) != 0.0)
        .ok_or_else(|| Error::Degenerate("all sites are collinear".into()))?;
    let mut mesh = Mesh::new(pts);
    mesh.seed(0, 1, third);
    for k in 2..pts.len() {
        if k != third {
            mesh.insert(k);
        }
    }
    Ok(mesh.finish())
}

struct Mesh<'a> {
    pts: &'a [Point],
    tris: Vec<[usize; 3]>,
    alive: Vec<bool>,
}

impl<'a> Mesh<'a> {
    fn new(pts: &'a [Point]) -> Self {
        Mesh {
            pts,
            tris: Vec::with_capacity(4 * pts.len()),
            alive: Vec::with_capacity(4 * pts.len()),
        }
    }

    fn push(&mut self, t: [usize; 3]) {
        self.tris.push(t);
        self.alive.push(true);
    }

    fn seed(&mut self, a: usize, b: usize, c: usize) {
        let (a, b, c) = if orient(&self.pts[a], &self.pts[b], &self.pts[c]) > 0.0 {
            (a, b, c)
        } else {
            (a, c, b)
        };
        self.push([a, b, c]);
        // one ghost per hull edge, traversed opposite to the real triangle
        self.push([b, a, GHOST]);
        self.push([c, b, GHOST]);
        self.push([a, c, GHOST]);
    }

    /// Whether point `p` conflicts with (lies in the circumdisk of) triangle `t`.
    fn conflicts(&self, t: &[usize; 3], p: &Point) -> bool {
        match t.iter().position(|&v| v == GHOST) {
            None => {
                let [a, b, c] = t.map(|v| self.pts[v].as_robust());
                robust::incircle(a, b, c, p.as_robust()) > 0.0
            }
            Some(g) => {
                // ghost (u, v, ∞): open half-plane left of u→v plus the open segment
                let u = &self.pts[t[(g + 1) % 3]];
                let v = &self.pts[t[(g + 2) % 3]];
                let o = orient(u, v, p);
                o > 0.0 || (o == 0.0 && strictly_between(u, v, p))
            }
        }
    }

    fn insert(&mut self, k: usize) {
        let p = self.pts[k];
        let bad: Vec<usize> = (0..self.tris.len())
            .filter(|&i| self.alive[i] && self.conflicts(&self.tris[i], &p))
            .collect();
        let mut edges: HashMap<(usize, usize), usize> = HashMap::new();
        let mut order = Vec::with_capacity(3 * bad.len());
        for &i in &bad {
            let t = self.tris[i];
            for e in 0..3 {
                let edge = (t[e], t[(e + 1) % 3]);
                *edges.entry(edge).or_insert(0) += 1;
                order.push(edge);
            }
            self.alive[i] = false;
        }
        for (u, v) in order {
            if edges.contains_key(&(v, u)) {
                continue; // interior edge of the cavity
            }
            self.push([u, v, k]);
        }
    }

    fn finish(self) -> Vec<[usize; 3]> {
        self.tris
            .into_iter()
            .zip(self.alive)
            .filter(|(t, alive)| *alive && !t.contains(&GHOST))
            .map(|(t, _)| t)
            .collect()
    }
}

fn strictly_between(u: &Point, v: &Point, p: &Point) -> bool {
    let dot = (p.x - u.x) * (v.x - u.x) + (p.y - u.y) * (v.y - u.y);
    let len2 = (v.x - u.x).powi(2) + (v.y - u.y).powi(2);
    dot > 0.0 && dot < len2
}

/// One facility's catchment: its Voronoi cell clipped to the city boundary.
///
/// A non-convex boundary can split a cell into several parts, so the cell is
/// a [`MultiPolygon`].
#[derive(Debug, Clone, PartialEq)]
pub struct CatchmentCell {
    /// Index of the generating site in the input layer.
    pub site_index: usize,
    pub site: Point,
    pub cell: MultiPolygon,
    pub area_km2: f64,
    /// Farthest cell boundary point from the site, km.
    pub coverage_distance_km: f64,
}

/// Cells plus the bookkeeping of sites that did not get one.
#[derive(Debug, Clone, Default)]
pub struct CatchmentSet {
    pub cells: Vec<CatchmentCell>,
    /// Input indices of sites outside the boundary.
    pub excluded: Vec<usize>,
    /// (dropped, kept) input indices of merged duplicate sites.
    pub merged: Vec<(usize, usize)>,
}

impl CatchmentSet {
    pub fn warnings(&self) -> Vec<String> {
        let mut w: Vec<String> = self
            .excluded
            .iter()
            .map(|i| format!("site {i} lies outside the boundary and was excluded"))
            .collect();
        if !self.merged.is_empty() {
            w.push(format!("{} duplicate sites merged", self.merged.len()));
        }
        w
    }
}

/// Voronoi cells of `sites` clipped to `boundary`, with metrics attached.
pub fn voronoi_cells(sites: &[Point], boundary: &MultiPolygon) -> Result<CatchmentSet> {
    voronoi_cells_with(sites, boundary, Execution::Serial)
}

pub fn voronoi_cells_with(
    sites: &[Point],
    boundary: &MultiPolygon,
    exec: Execution,
) -> Result<CatchmentSet> {
    if sites.is_empty() {
        return Err(Error::Parameter("service layer has no sites".into()));
    }
    if boundary.is_empty() {
        return Err(Error::Parameter("boundary is empty".into()));
    }
    let mut set = CatchmentSet::default();
    let mut inside = Vec::new();
    for (i, p) in sites.iter().enumerate() {
        if p.is_finite() && boundary.contains(p) {
            inside.push(i);
        } else {
            warn!("site {i} at ({}, {}) lies outside the boundary; excluded", p.x, p.y);
            set.excluded.push(i);
        }
    }
    if inside.is_empty() {
        return Err(Error::Parameter("no site lies inside the boundary".into()));
    }
    let candidates: Vec<Point> = inside.iter().map(|&i| sites[i]).collect();
    let kept_local = dedup_sites(&candidates);
    {
        let mut kept_iter = kept_local.iter().peekable();
        for (local, &input) in inside.iter().enumerate() {
            if kept_iter.peek() == Some(&&local) {
                kept_iter.next();
            } else {
                let keeper = kept_local
                    .iter()
                    .map(|&j| inside[j])
                    .find(|&j| sites[j].coincides(&sites[input]))
                    .unwrap_or(input);
                set.merged.push((input, keeper));
            }
        }
    }
    if !set.merged.is_empty() {
        log::info!("merged {} duplicate sites", set.merged.len());
    }
    let kept: Vec<usize> = kept_local.iter().map(|&j| inside[j]).collect();
    let site_pts: Vec<Point> = kept.iter().map(|&i| sites[i]).collect();

    // Work in a frame centred on the data so the half-plane arithmetic does
    // not lose digits to large projected offsets.
    let frame = boundary
        .bounds()
        .expect("nonempty boundary")
        .union(&Bounds::of_points(&site_pts).expect("nonempty sites"));
    let origin = frame.center();
    let local: Vec<Point> = site_pts
        .iter()
        .map(|p| Point::new(p.x - origin.x, p.y - origin.y))
        .collect();
    let pad = frame.width().max(frame.height()).max(1.0);
    let half_w = 0.5 * frame.width() + pad;
    let half_h = 0.5 * frame.height() + pad;
    let frame_box = vec![
        Point::new(-half_w, -half_h),
        Point::new(half_w, -half_h),
        Point::new(half_w, half_h),
        Point::new(-half_w, half_h),
    ];

    let neighbors: Vec<Vec<usize>> = match triangulate(&local) {
        Ok(tris) => Triangulation {
            sites: local.clone(),
            triangles: tris,
        }
        .neighbors(),
        // one or two sites, or a collinear layout: bisect against every other site
        Err(Error::Degenerate(_)) => (0..local.len())
            .map(|i| (0..local.len()).filter(|&j| j != i).collect())
            .collect(),
        Err(e) => return Err(e),
    };

    let indices: Vec<usize> = (0..local.len()).collect();
    let cells = exec.map(&indices, |&i| {
        let convex = clip_to_bisectors(&frame_box, &local, i, &neighbors[i]);
        let world: Vec<Point> = convex
            .iter()
            .map(|p| Point::new(p.x + origin.x, p.y + origin.y))
            .collect();
        let region = if world.len() >= 3 {
            let poly = Polygon::from_rings_unchecked(Ring::from_vertices_unchecked(world), Vec::new());
            boolops::intersection(&poly.into(), boundary)
        } else {
            MultiPolygon::empty()
        };
        CatchmentCell::new(kept[i], site_pts[i], region)
    });
    set.cells = cells;
    Ok(set)
}

/// Intersection of the convex `frame` with the half-planes closer to site
/// `i` than to each neighbour.
fn clip_to_bisectors(frame: &[Point], sites: &[Point], i: usize, neighbors: &[usize]) -> Vec<Point> {
    let s = sites[i];
    let mut poly = frame.to_vec();
    for &j in neighbors {
        let t = sites[j];
        // |p - s|² <= |p - t|²  <=>  (t - s)·p <= (|t|² - |s|²) / 2
        let (nx, ny) = (t.x - s.x, t.y - s.y);
        let c = 0.5 * ((t.x * t.x + t.y * t.y) - (s.x * s.x + s.y * s.y));
        poly = clip_half_plane(&poly, nx, ny, c);
        if poly.is_empty() {
            break;
        }
    }
    poly
}

/// Sutherland–Hodgman step: keep the part of a convex polygon with n·p <= c.
fn clip_half_plane(poly: &[Point], nx: f64, ny: f64, c: f64) -> Vec<Point> {
    let mut out = Vec::with_capacity(poly.len() + 1);
    let value = |p: &Point| nx * p.x + ny * p.y - c;
    for k in 0..poly.len() {
        let a = poly[k];
        let b = poly[(k + 1) % poly.len()];
        let (va, vb) = (value(&a), value(&b));
        if va <= 0.0 {
            out.push(a);
        }
        if (va < 0.0 && vb > 0.0) || (va > 0.0 && vb < 0.0) {
            let t = va / (va - vb);
            out.push(Point::new(a.x + t * (b.x - a.x), a.y + t * (b.y - a.y)));
        }
    }
    out
}

impl CatchmentCell {
    fn new(site_index: usize, site: Point, cell: MultiPolygon) -> Self {
        let (area_km2, coverage_distance_km) = metrics_of(&site, &cell);
        CatchmentCell {
            site_index,
            site,
            cell,
            area_km2,
            coverage_distance_km,
        }
    }
}

fn metrics_of(site: &Point, cell: &MultiPolygon) -> (f64, f64) {
    let area = geom::polygon_area(cell);
    // the clipped cell contains its site up to overlay rounding; measure from
    // the vertices directly so a boundary-grazing site still gets a distance
    let coverage = geom::max_distance_to_boundary(site, cell).unwrap_or_else(|_| {
        cell.parts()
            .iter()
            .flat_map(Polygon::rings)
            .flat_map(|r| r.vertices().iter())
            .map(|v| v.distance_to(site) / 1000.0)
            .fold(0.0, f64::max)
    });
    (area, coverage)
}

/// Recomputes (area km², coverage distance km) for each cell and stores it.
pub fn catchment_metrics(cells: &mut [CatchmentCell]) -> Vec<(f64, f64)> {
    cells
        .iter_mut()
        .map(|c| {
            let (a, d) = metrics_of(&c.site, &c.cell);
            c.area_km2 = a;
            c.coverage_distance_km = d;
            (a, d)
        })
        .collect()
}
