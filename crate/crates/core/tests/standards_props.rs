mod common;

use common::*;
use rand::seq::SliceRandom;
use rand::Rng;
use urbanreach::standards::{derive_standard, derive_standard_with, StandardKind, Statistic};
use urbanreach::voronoi::voronoi_cells;
use urbanreach::{MultiPolygon, Point, ServiceCode};

fn five_facility_city() -> (MultiPolygon, Vec<Point>) {
    let mut r = rng(70);
    let boundary: MultiPolygon = convex_polygon(&mut r, Point::new(3.1e5, 2.7e6), 2500.0, 1800.0, 11).into();
    let sites = points_inside(&mut r, &boundary, 5);
    (boundary, sites)
}

/// Farthest boundary point of each cell found by dense edge sampling.
fn sampled_coverage_km(cell: &MultiPolygon, site: &Point) -> f64 {
    let mut best = 0.0f64;
    for ring in cell.parts().iter().flat_map(|p| p.rings()) {
        let v = ring.vertices();
        for i in 0..v.len() {
            let (a, b) = (v[i], v[(i + 1) % v.len()]);
            for k in 0..=2_000 {
                let t = k as f64 / 2_000.0;
                let q = Point::new(a.x + t * (b.x - a.x), a.y + t * (b.y - a.y));
                best = best.max((q.x - site.x).hypot(q.y - site.y));
            }
        }
    }
    best / 1000.0
}

#[test]
fn mean_of_oracle_distances() {
    let (boundary, sites) = five_facility_city();
    let set = voronoi_cells(&sites, &boundary).unwrap();
    let oracle: f64 =
        set.cells.iter().map(|c| sampled_coverage_km(&c.cell, &c.site)).sum::<f64>() / set.cells.len() as f64;
    let s = derive_standard(&set.cells, ServiceCode::Pri).unwrap();
    assert!((s.max_km.unwrap() - oracle).abs() < 1e-9);
    assert_eq!(s.min_km.unwrap(), s.max_km.unwrap() / 2.0);
    assert_eq!(s.kind, StandardKind::DistanceDerived);
}

#[test]
fn homogeneous_under_scaling() {
    let (boundary, sites) = five_facility_city();
    let base = derive_standard(&voronoi_cells(&sites, &boundary).unwrap().cells, ServiceCode::Kg).unwrap();
    for k in [0.5, 2.0, 3.0] {
        let scale = |p: &Point| Point::new(k * p.x, k * p.y);
        let cells = voronoi_cells(&sites.iter().map(scale).collect::<Vec<_>>(), &boundary.map_points(scale))
            .unwrap()
            .cells;
        let s = derive_standard(&cells, ServiceCode::Kg).unwrap();
        assert!(rel_err(s.max_km.unwrap(), k * base.max_km.unwrap()) < 1e-9, "k = {k}");
    }
}

#[test]
fn order_independent() {
    let mut r = rng(71);
    let boundary: MultiPolygon = convex_polygon(&mut r, Point::new(0.0, 0.0), 4000.0, 4000.0, 16).into();
    let mut sites = points_inside(&mut r, &boundary, 30);
    let mut cells = voronoi_cells(&sites, &boundary).unwrap().cells;
    let a = derive_standard(&cells, ServiceCode::Mosq).unwrap();
    cells.shuffle(&mut r);
    let b = derive_standard(&cells, ServiceCode::Mosq).unwrap();
    assert!(rel_err(a.max_km.unwrap(), b.max_km.unwrap()) < 1e-12);
    sites.shuffle(&mut r);
    let c = derive_standard(&voronoi_cells(&sites, &boundary).unwrap().cells, ServiceCode::Mosq).unwrap();
    assert!(rel_err(a.max_km.unwrap(), c.max_km.unwrap()) < 1e-9);
    let m1 = derive_standard_with(&cells, ServiceCode::Mosq, Statistic::Median).unwrap();
    cells.reverse();
    let m2 = derive_standard_with(&cells, ServiceCode::Mosq, Statistic::Median).unwrap();
    assert_eq!(m1, m2);
}

#[test]
fn halving_rule_for_every_derived_code() {
    let (boundary, sites) = five_facility_city();
    let cells = voronoi_cells(&sites, &boundary).unwrap().cells;
    for code in ServiceCode::ALL.iter().filter(|c| c.is_derived()) {
        let s = derive_standard(&cells, *code).unwrap();
        assert_eq!(s.min_km.unwrap() * 2.0, s.max_km.unwrap());
        s.validate().unwrap();
    }
    let mut r = rng(72);
    for _ in 0..100 {
        let max = r.random_range(0.01..100.0);
        let s = urbanreach::PlanningStandard::derived(ServiceCode::Fire, max);
        assert_eq!(s.min_km.unwrap(), s.max_km.unwrap() / 2.0);
    }
}
