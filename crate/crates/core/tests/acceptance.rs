//! Acceptance checks, one line per criterion. Run with
//! `cargo test -p urbanreach --test acceptance`.

mod common;

use std::f64::consts::PI;
use std::fs;
use std::path::Path;
use std::time::{Duration, Instant};

use common::*;
use rand::Rng;
use urbanreach::boolops::buffer;
use urbanreach::coverage::{
    aggregate_coverage, nearest_neighbor_index, parks_assessment_from_areas, ServedShare,
};
use urbanreach::density::quartic_kernel;
use urbanreach::standards::derive_standard;
use urbanreach::{
    evaluate_coverage, kde_grid, run_batch, voronoi_cells, Mode, MultiPolygon, PlanningStandard,
    Point, Polygon, RunConfig, ServiceCode, ServiceInput,
};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn within_budget(elapsed: Duration, budget: Duration, detail: String) -> Outcome {
    check(elapsed < budget, format!("{detail}; {elapsed:.2?} (budget {budget:?})"))
}

fn parks_table() -> Outcome {
    let pops = [47335.0, 36164.0, 33496.0, 111715.0, 9345.0];
    let parks = [0.153187, 0.016685, 0.005144, 0.073085, 0.007956];
    let share = [0.520686, 0.397804, 0.368456, 1.228874, 0.102801, 2.618624];
    let pct = [29.42, 4.19, 1.40, 5.95, 7.74, 9.78];
    let deficiency = [0.367499, 0.381119, 0.363312, 1.155789, 0.094845, 2.362567];
    let deficiency_pct = [70.58, 95.81, 98.60, 94.05, 92.26, 90.22];

    let rows: Vec<(String, f64, f64)> =
        (0..5).map(|i| (format!("district {}", i + 1), pops[i], parks[i])).collect();
    let start = Instant::now();
    let report = parks_assessment_from_areas(&rows, 11.0).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();

    let mut worst_km2 = 0.0f64;
    let mut worst_pp = 0.0f64;
    for (i, row) in report.per_district.iter().chain([&report.totals]).enumerate() {
        worst_km2 = worst_km2
            .max((row.share_km2 - share[i]).abs())
            .max((row.deficiency_km2 - deficiency[i]).abs());
        worst_pp = worst_pp
            .max((row.pct_of_share - pct[i]).abs())
            .max((row.deficiency_pct - deficiency_pct[i]).abs());
    }
    let detail = format!("max |Δ| {worst_km2:.2e} km², {worst_pp:.3} pp");
    if worst_km2 > 0.01 || worst_pp > 0.05 {
        return Err(detail);
    }
    within_budget(elapsed, Duration::from_millis(1), detail)
}

fn coverage_table() -> Outcome {
    let rows = [
        (11.24, 1.71, 86.8),
        (11.29, 1.66, 87.2),
        (11.46, 1.49, 88.5),
        (10.36, 2.59, 80.0),
        (12.92, 0.03, 99.8),
        (6.57, 6.38, 50.7),
        (12.95, 0.0, 100.0),
        (11.14, 1.81, 86.0),
        (10.15, 2.8, 78.44),
        (12.85, 0.1, 99.2),
        (11.83, 1.12, 91.4),
        (12.84, 0.11, 99.15),
    ];
    let start = Instant::now();
    let worst = rows
        .iter()
        .map(|(s, u, p): &(f64, f64, f64)| (s / (s + u) * 100.0 - p).abs())
        .fold(0.0, f64::max);
    let mut pcts: Vec<(String, f64)> =
        rows.iter().enumerate().map(|(i, r)| (format!("row {i}"), r.2)).collect();
    pcts.insert(10, ("parks".into(), 9.78));
    let shares: Vec<&dyn ServedShare> = pcts.iter().map(|p| p as &dyn ServedShare).collect();
    let agg = aggregate_coverage(&shares).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let detail = format!("max row |Δ| {worst:.3} pp, aggregate {:.4}%", agg.served_pct);
    if worst > 0.1 || (agg.served_pct - 81.31).abs() > 0.005 {
        return Err(detail);
    }
    within_budget(elapsed, Duration::from_millis(1), detail)
}

fn halving_law() -> Outcome {
    let published: [(f64, f64); 10] = [
        (0.358, 0.715),
        (0.377, 0.753),
        (0.440, 0.880),
        (0.548, 1.097),
        (1.228, 2.456),
        (0.538, 1.076),
        (0.207, 0.414),
        (1.016, 2.032),
        (0.752, 1.504),
        (1.440, 2.880),
    ];
    let worst = published.iter().map(|(lo, hi)| (lo - hi / 2.0).abs()).fold(0.0, f64::max);

    let mut r = rng(1001);
    let mut derived = 0;
    for _ in 0..50 {
        let boundary: MultiPolygon = convex_polygon(&mut r, Point::new(0.0, 0.0), 5000.0, 3000.0, 12).into();
        let n = r.random_range(3..60);
        let cells = voronoi_cells(&points_inside(&mut r, &boundary, n), &boundary)
            .map_err(|e| e.to_string())?
            .cells;
        for code in ServiceCode::ALL.iter().filter(|c| c.is_derived()) {
            let s = derive_standard(&cells, *code).map_err(|e| e.to_string())?;
            if s.min_km != Some(s.max_km.unwrap() / 2.0) {
                return Err(format!("{code}: min {:?} max {:?}", s.min_km, s.max_km));
            }
            derived += 1;
        }
    }
    check(
        worst <= 0.001 + 1e-12,
        format!("{derived} derived standards exact; published pairs max |min − max/2| {worst:.4} km"),
    )
}

fn voronoi_oracle() -> Outcome {
    let start = Instant::now();
    let mut r = rng(1002);
    let mut worst_area = 0.0f64;
    for instance in 0..20 {
        let (rx, ry) = (r.random_range(2e3..8e3), r.random_range(2e3..8e3));
        let boundary: MultiPolygon = convex_polygon(&mut r, Point::new(4.5e5, 2.89e6), rx, ry, 24).into();
        let n = if instance == 0 { 3 } else if instance == 19 { 200 } else { r.random_range(3..=200) };
        let sites = points_inside(&mut r, &boundary, n);
        let set = voronoi_cells(&sites, &boundary).map_err(|e| e.to_string())?;
        let mut by_site = vec![None; n];
        for c in &set.cells {
            by_site[c.site_index] = Some(&c.cell);
        }
        let total: f64 = set.cells.iter().map(|c| c.cell.area_m2()).sum();
        worst_area = worst_area.max(rel_err(total, boundary.area_m2()));
        for p in points_inside(&mut r, &boundary, 10_000) {
            let (i, _) = brute_nearest(&p, &sites);
            let cell = by_site[i].ok_or(format!("instance {instance}: site {i} has no cell"))?;
            if !cell.contains(&p) {
                return Err(format!("instance {instance}: {p:?} not in the cell of site {i}"));
            }
        }
    }
    let detail = format!("20 instances × 10⁴ points; worst area rel err {worst_area:.1e}");
    if worst_area > 1e-4 {
        return Err(detail);
    }
    within_budget(start.elapsed(), Duration::from_secs(10), detail)
}

fn coverage_oracle() -> Outcome {
    let start = Instant::now();
    let mut r = rng(1003);
    let mut worst_sigma = 0.0f64;
    for instance in 0..10 {
        let center = Point::new(3.0e5, 3.1e6);
        let built_up: MultiPolygon =
            Polygon::from_exterior(star_ring(&mut r, center, 1500.0, 4000.0, 14)).unwrap().into();
        let border: MultiPolygon =
            Polygon::rectangle(Point::new(center.x - 5000.0, center.y - 5000.0), Point::new(center.x + 5000.0, center.y + 5000.0))
                .unwrap()
                .into();
        let n_sites = r.random_range(1..30);
        let sites = points_inside(&mut r, &border, n_sites);
        let max_km = r.random_range(0.3..2.0);
        let std = PlanningStandard::derived(ServiceCode::Kg, max_km);
        let report = evaluate_coverage(&sites, &std, &border, &built_up, &[]).map_err(|e| e.to_string())?;

        let n = 100_000;
        let radius = max_km * 1000.0;
        let served = points_inside(&mut r, &built_up, n)
            .iter()
            .filter(|p| sites.iter().any(|s| (p.x - s.x).hypot(p.y - s.y) <= radius))
            .count();
        let p = served as f64 / n as f64;
        let sigma = (p * (1.0 - p) / n as f64).sqrt().max(0.5 / n as f64) * 100.0;
        let dev = (report.served_pct - p * 100.0).abs() / sigma;
        worst_sigma = worst_sigma.max(dev);
        if dev > 3.0 {
            return Err(format!(
                "instance {instance}: served {:.3}% vs sampled {:.3}% ({dev:.2}σ)",
                report.served_pct,
                p * 100.0
            ));
        }
    }
    within_budget(
        start.elapsed(),
        Duration::from_secs(20),
        format!("10 instances × 10⁵ points; worst {worst_sigma:.2}σ"),
    )
}

fn buffer_convergence() -> Outcome {
    let n = 64.0;
    let b = buffer(&[Point::new(612_345.0, 2_890_000.0)], 1.0, 64).map_err(|e| e.to_string())?;
    let area = b.area_m2() / 1e6;
    let formula = n / 2.0 * (2.0 * PI / n).sin();
    let vs_formula = rel_err(area, formula);
    let vs_circle = rel_err(area, PI);
    check(
        vs_formula < 1e-6 && vs_circle < 0.002,
        format!("{area:.6} km²; rel err {vs_formula:.1e} vs formula, {:.3}% vs πr²", vs_circle * 100.0),
    )
}

fn kde_mass() -> Outcome {
    let h = 500.0;
    let cell = h / 20.0;
    let border: MultiPolygon = Polygon::rectangle(Point::new(0.0, 0.0), Point::new(6.0 * h, 6.0 * h)).unwrap().into();
    // on a cell centre so the peak is sampled
    let site = Point::new(60.5 * cell, 60.5 * cell);
    let g = kde_grid(&[site], &border, cell, h).map_err(|e| e.to_string())?;
    let mass = g.integrated_count();
    let peak = 3.0 / (PI * h * h);
    let grid_peak = g.max_value() / 1e6;
    let kernel_peak = quartic_kernel(0.0, h);
    check(
        (mass - 1.0).abs() <= 0.01 && rel_err(grid_peak, peak) <= 0.005 && rel_err(kernel_peak, peak) <= 0.005,
        format!("mass {mass:.5}; peak rel err {:.1e}", rel_err(grid_peak, peak)),
    )
}

fn nni_anchors() -> Outcome {
    let same = vec![Point::new(1000.0, 1000.0); 50];
    let r0 = nearest_neighbor_index(&same, 1.0).map_err(|e| e.to_string())?.r;

    let mut r = rng(1008);
    let side = 10_000.0;
    let random: Vec<Point> =
        (0..10_000).map(|_| Point::new(r.random_range(0.0..side), r.random_range(0.0..side))).collect();
    let r_random = nearest_neighbor_index(&random, side * side / 1e6).map_err(|e| e.to_string())?.r;

    let (k, d) = (100usize, 50.0);
    let grid: Vec<Point> = (0..k * k).map(|i| Point::new((i % k) as f64 * d, (i / k) as f64 * d)).collect();
    let area_km2 = (k * k) as f64 * d * d / 1e6;
    let r_grid = nearest_neighbor_index(&grid, area_km2).map_err(|e| e.to_string())?.r;

    check(
        r0 == 0.0 && (0.9..=1.1).contains(&r_random) && (r_grid - 2.0).abs() <= 0.02,
        format!("coincident {r0}, random {r_random:.4}, grid {r_grid:.4}"),
    )
}

fn bundled_config(services: &Path, workspace: &Path) -> RunConfig {
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/synthetic_city");
    let mut c = RunConfig::new(
        Mode::Full,
        ServiceInput::Folder(services.into()),
        data.join("border.geojson"),
        workspace.into(),
    );
    c.built_up = Some(data.join("built_up.geojson"));
    c.districts = Some(data.join("districts.geojson"));
    c.parks = Some(data.join("parks.geojson"));
    c
}

fn end_to_end() -> Outcome {
    let services = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/synthetic_city/services");
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));

    let start = Instant::now();
    let ra = run_batch(&bundled_config(&services, &a)).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let rb = run_batch(&bundled_config(&services, &b)).map_err(|e| e.to_string())?;
    if !ra.succeeded() || !rb.succeeded() {
        return Err(format!("clean run reported errors: {:?}", ra.errors));
    }
    let mut compared = 0;
    for entry in &ra.manifest {
        if entry.file.ends_with("run_report.json") {
            continue;
        }
        let (x, y) = (fs::read(a.join(&entry.file)), fs::read(b.join(&entry.file)));
        match (x, y) {
            (Ok(x), Ok(y)) if x == y => compared += 1,
            _ => return Err(format!("{} differs between runs", entry.file)),
        }
    }

    // a copy of the layers with one of them corrupted
    let broken = tmp.path().join("services");
    fs::create_dir_all(&broken).map_err(|e| e.to_string())?;
    for f in fs::read_dir(&services).map_err(|e| e.to_string())? {
        let f = f.map_err(|e| e.to_string())?;
        fs::copy(f.path(), broken.join(f.file_name())).map_err(|e| e.to_string())?;
    }
    fs::write(broken.join("MOSQ_mosques.geojson"), "{\"type\": \"FeatureCollection\", \"features\": [ {").unwrap();
    let c = tmp.path().join("c");
    let rc = run_batch(&bundled_config(&broken, &c)).map_err(|e| e.to_string())?;
    let completed = ServiceCode::ALL
        .iter()
        .filter(|code| c.join(format!("city_{code}_coverage.csv")).exists())
        .count();
    let detail = format!(
        "{compared} outputs identical; corrupted layer gave {} error(s), {completed} layers completed",
        rc.errors.len()
    );
    if rc.errors.len() != 1 || !rc.errors[0].source.contains("MOSQ") || completed != 9 {
        return Err(detail);
    }
    within_budget(elapsed, Duration::from_secs(10), detail)
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("parks per-capita table", parks_table),
        ("coverage table arithmetic and aggregate", coverage_table),
        ("min = max / 2 for derived standards", halving_law),
        ("Voronoi cells against brute-force nearest site", voronoi_oracle),
        ("coverage against Monte-Carlo classification", coverage_oracle),
        ("64-gon buffer area", buffer_convergence),
        ("KDE mass and peak", kde_mass),
        ("nearest-neighbour index anchors", nni_anchors),
        ("bundled city end to end", end_to_end),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        match f() {
            Ok(detail) => println!("PASS {}. {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {}. {name}: {detail}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
