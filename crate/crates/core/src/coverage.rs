//! Service coverage of the built-up area, city-wide and per district; the
//! per-capita parks deficiency model; aggregation across services; and the
//! nearest-neighbour index for point patterns.

use std::collections::HashMap;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::boolops;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::geom::{self, MultiPolygon, Point, SNAP_TOLERANCE_M};
use crate::standards::{PlanningStandard, ServiceCode, StandardKind};

/// A named administrative division.
#[derive(Debug, Clone, PartialEq)]
pub struct District {
    pub name: String,
    pub geometry: MultiPolygon,
    pub population: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistrictCoverage {
    pub name: String,
    /// Built-up area inside the district.
    pub built_up_km2: f64,
    pub served_km2: f64,
    pub unserved_km2: f64,
    /// Percent of the district's built-up share; 0 when the share is empty.
    pub served_pct: f64,
    pub unserved_pct: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub service: ServiceCode,
    pub standard_used: PlanningStandard,
    pub built_up_km2: f64,
    pub served_km2: f64,
    pub unserved_km2: f64,
    pub served_pct: f64,
    pub unserved_pct: f64,
    pub per_district: Vec<DistrictCoverage>,
    #[serde(skip)]
    pub served_geometry: MultiPolygon,
    #[serde(skip)]
    pub unserved_geometry: MultiPolygon,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub warnings: Vec<String>,
}

/// Knobs for [`evaluate_coverage_with`].
#[derive(Debug, Clone, Copy)]
pub struct CoverageOptions {
    pub segments_per_circle: usize,
    pub exec: Execution,
}

impl Default for CoverageOptions {
    fn default() -> Self {
        CoverageOptions {
            segments_per_circle: boolops::DEFAULT_SEGMENTS_PER_CIRCLE,
            exec: Execution::Serial,
        }
    }
}

/// Allowed area of `built_up` outside `border`, relative to the built-up area.
const CONTAINMENT_TOLERANCE: f64 = 1e-6;

pub fn evaluate_coverage(
    sites: &[Point],
    standard: &PlanningStandard,
    border: &MultiPolygon,
    built_up: &MultiPolygon,
    districts: &[District],
) -> Result<CoverageReport> {
    evaluate_coverage_with(sites, standard, border, built_up, districts, CoverageOptions::default())
}

/// Served = built-up ∩ border ∩ buffer(sites, max_km); unserved = built-up − served.
pub fn evaluate_coverage_with(
    sites: &[Point],
    standard: &PlanningStandard,
    border: &MultiPolygon,
    built_up: &MultiPolygon,
    districts: &[District],
    opts: CoverageOptions,
) -> Result<CoverageReport> {
    let max_km = match (standard.kind, standard.max_km) {
        (StandardKind::PerCapita, _) => {
            return Err(Error::WrongKind {
                service: standard.service,
                found: "per-capita",
                expected: "distance",
            })
        }
        (_, Some(m)) => m,
        (_, None) => {
            return Err(Error::Parameter(format!(
                "{} standard has no max_km",
                standard.service
            )))
        }
    };
    if !max_km.is_finite() || max_km * 1000.0 <= SNAP_TOLERANCE_M {
        return Err(Error::Parameter(format!(
            "coverage radius {max_km} km is below the snap tolerance"
        )));
    }
    let built_up_m2 = built_up.area_m2();
    if built_up_m2 <= 0.0 {
        return Err(Error::Parameter("built-up area is empty".into()));
    }
    let outside = boolops::difference(built_up, border).area_m2();
    if outside > CONTAINMENT_TOLERANCE * built_up_m2 {
        return Err(Error::Precondition(format!(
            "built-up area extends {:.1} m² outside the city border",
            outside
        )));
    }

    let mut warnings = Vec::new();
    let served_geometry = if sites.is_empty() {
        let msg = format!("{}: empty layer, nothing is served", standard.service);
        warn!("{msg}");
        warnings.push(msg);
        MultiPolygon::empty()
    } else {
        let reach = boolops::buffer_with(sites, max_km, opts.segments_per_circle, opts.exec)?;
        let in_border = boolops::intersection(border, &reach);
        boolops::intersection(built_up, &in_border)
    };
    let unserved_geometry = boolops::difference(built_up, &served_geometry);

    let built_up_km2 = geom::m2_to_km2(built_up_m2);
    let served_km2 = geom::polygon_area(&served_geometry);
    let unserved_km2 = geom::polygon_area(&unserved_geometry);

    let per_district = opts.exec.map(districts, |d| {
        let share = geom::polygon_area(&boolops::intersection(built_up, &d.geometry));
        let served = geom::polygon_area(&boolops::intersection(&served_geometry, &d.geometry));
        let unserved = geom::polygon_area(&boolops::intersection(&unserved_geometry, &d.geometry));
        let pct = |v: f64| if share > 0.0 { (v / share * 100.0).clamp(0.0, 100.0) } else { 0.0 };
        DistrictCoverage {
            name: d.name.clone(),
            built_up_km2: share,
            served_km2: served,
            unserved_km2: unserved,
            served_pct: pct(served),
            unserved_pct: pct(unserved),
        }
    });

    Ok(CoverageReport {
        service: standard.service,
        standard_used: standard.clone(),
        built_up_km2,
        served_km2,
        unserved_km2,
        served_pct: served_km2 / built_up_km2 * 100.0,
        unserved_pct: unserved_km2 / built_up_km2 * 100.0,
        per_district,
        served_geometry,
        unserved_geometry,
        warnings,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParksRow {
    pub name: String,
    pub population: f64,
    /// Population times the per-capita standard.
    pub share_km2: f64,
    pub parks_km2: f64,
    /// Satisfied share in percent, capped at 100.
    pub pct_of_share: f64,
    pub deficiency_km2: f64,
    pub deficiency_pct: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParksReport {
    pub per_capita_m2: f64,
    pub per_district: Vec<ParksRow>,
    pub totals: ParksRow,
}

/// Park area per district from geometry, then [`parks_assessment_from_areas`].
pub fn parks_assessment(
    districts: &[District],
    parks: &[MultiPolygon],
    per_capita_m2: f64,
) -> Result<ParksReport> {
    if parks.len() != districts.len() {
        return Err(Error::Parameter(format!(
            "{} districts but {} park geometries",
            districts.len(),
            parks.len()
        )));
    }
    let rows: Vec<(String, f64, f64)> = districts
        .iter()
        .zip(parks)
        .map(|(d, p)| (d.name.clone(), d.population, geom::polygon_area(p)))
        .collect();
    parks_assessment_from_areas(&rows, per_capita_m2)
}

/// Clips one city-wide park layer to every district.
pub fn parks_by_district(districts: &[District], parks: &MultiPolygon) -> Vec<MultiPolygon> {
    districts
        .iter()
        .map(|d| boolops::intersection(parks, &d.geometry))
        .collect()
}

/// Rows are (district name, population, park area km²).
pub fn parks_assessment_from_areas(
    rows: &[(String, f64, f64)],
    per_capita_m2: f64,
) -> Result<ParksReport> {
    if !(per_capita_m2 > 0.0 && per_capita_m2.is_finite()) {
        return Err(Error::Parameter(format!(
            "per-capita standard must be positive, got {per_capita_m2}"
        )));
    }
    let mut per_district = Vec::with_capacity(rows.len());
    for (name, population, parks_km2) in rows {
        if population.is_nan() || *population < 0.0 || parks_km2.is_nan() || *parks_km2 < 0.0 {
            return Err(Error::Parameter(format!(
                "district {name}: population and park area must be non-negative"
            )));
        }
        let share_km2 = population * per_capita_m2 / 1.0e6;
        per_district.push(parks_row(name.clone(), *population, share_km2, *parks_km2));
    }
    let population: f64 = per_district.iter().map(|r| r.population).fold(0.0, |a, b| a + b);
    let share_km2: f64 = per_district.iter().map(|r| r.share_km2).fold(0.0, |a, b| a + b);
    let parks_km2: f64 = per_district.iter().map(|r| r.parks_km2).fold(0.0, |a, b| a + b);
    let deficiency_km2: f64 = per_district.iter().map(|r| r.deficiency_km2).fold(0.0, |a, b| a + b);
    let pct_of_share = satisfied_pct(share_km2, parks_km2);
    let totals = ParksRow {
        name: "Total".into(),
        population,
        share_km2,
        parks_km2,
        pct_of_share,
        deficiency_km2,
        deficiency_pct: 100.0 - pct_of_share,
    };
    Ok(ParksReport {
        per_capita_m2,
        per_district,
        totals,
    })
}

fn satisfied_pct(share: f64, parks: f64) -> f64 {
    if share > 0.0 {
        (parks / share * 100.0).min(100.0)
    } else {
        100.0
    }
}

fn parks_row(name: String, population: f64, share_km2: f64, parks_km2: f64) -> ParksRow {
    let pct_of_share = satisfied_pct(share_km2, parks_km2);
    ParksRow {
        name,
        population,
        share_km2,
        parks_km2,
        pct_of_share,
        deficiency_km2: (share_km2 - parks_km2).max(0.0),
        deficiency_pct: 100.0 - pct_of_share,
    }
}

/// Anything that contributes one served percentage to the city average.
pub trait ServedShare {
    fn label(&self) -> String;
    fn served_pct(&self) -> f64;
}

impl ServedShare for CoverageReport {
    fn label(&self) -> String {
        self.service.to_string()
    }

    fn served_pct(&self) -> f64 {
        self.served_pct
    }
}

impl ServedShare for ParksReport {
    fn label(&self) -> String {
        ServiceCode::Park.to_string()
    }

    fn served_pct(&self) -> f64 {
        self.totals.pct_of_share
    }
}

impl ServedShare for (String, f64) {
    fn label(&self) -> String {
        self.0.clone()
    }

    fn served_pct(&self) -> f64 {
        self.1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub service: String,
    pub served_pct: f64,
    pub unserved_pct: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateCoverage {
    pub rows: Vec<AggregateRow>,
    pub served_pct: f64,
    pub unserved_pct: f64,
}

/// Unweighted mean of per-service served percentages.
pub fn aggregate_coverage(rows: &[&dyn ServedShare]) -> Result<AggregateCoverage> {
    if rows.is_empty() {
        return Err(Error::Parameter("nothing to aggregate".into()));
    }
    let rows: Vec<AggregateRow> = rows
        .iter()
        .map(|r| AggregateRow {
            service: r.label(),
            served_pct: r.served_pct(),
            unserved_pct: 100.0 - r.served_pct(),
        })
        .collect();
    let served_pct = rows.iter().map(|r| r.served_pct).sum::<f64>() / rows.len() as f64;
    Ok(AggregateCoverage {
        rows,
        served_pct,
        unserved_pct: 100.0 - served_pct,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PointPattern {
    Clustered,
    Random,
    Dispersed,
}

/// |R − 1| within this band counts as random.
pub const RANDOM_BAND: f64 = 0.15;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NearestNeighborIndex {
    pub r: f64,
    pub observed_mean_km: f64,
    pub expected_mean_km: f64,
    pub pattern: PointPattern,
}

/// Clark–Evans ratio R = observed mean nearest-neighbour distance over
/// 0.5·√(A/N).
pub fn nearest_neighbor_index(points: &[Point], study_area_km2: f64) -> Result<NearestNeighborIndex> {
    if points.len() < 2 {
        return Err(Error::Parameter(format!(
            "nearest-neighbour index needs at least 2 points, got {}",
            points.len()
        )));
    }
    if !(study_area_km2 > 0.0 && study_area_km2.is_finite()) {
        return Err(Error::Parameter(format!(
            "study area must be positive, got {study_area_km2} km²"
        )));
    }
    let nn = nearest_neighbor_distances(points);
    let observed_mean_km = nn.iter().sum::<f64>() / nn.len() as f64 / 1000.0;
    let expected_mean_km = 0.5 * (study_area_km2 / points.len() as f64).sqrt();
    let r = observed_mean_km / expected_mean_km;
    let pattern = if (r - 1.0).abs() <= RANDOM_BAND {
        PointPattern::Random
    } else if r < 1.0 {
        PointPattern::Clustered
    } else {
        PointPattern::Dispersed
    };
    Ok(NearestNeighborIndex {
        r,
        observed_mean_km,
        expected_mean_km,
        pattern,
    })
}

/// Distance (m) from each point to its nearest other point, via a uniform
/// bucket grid searched in growing square rings.
pub fn nearest_neighbor_distances(points: &[Point]) -> Vec<f64> {
    let bounds = geom::Bounds::of_points(points).expect("at least one point");
    let extent = bounds.width().max(bounds.height());
    if extent == 0.0 {
        return vec![0.0; points.len()];
    }
    let cell = (extent / (points.len() as f64).sqrt()).max(f64::MIN_POSITIVE);
    let key = |p: &Point| {
        (
            ((p.x - bounds.min.x) / cell).floor() as i64,
            ((p.y - bounds.min.y) / cell).floor() as i64,
        )
    };
    let mut grid: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    for (i, p) in points.iter().enumerate() {
        grid.entry(key(p)).or_default().push(i);
    }
    let max_ring = (extent / cell).ceil() as i64 + 1;
    points
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let (kx, ky) = key(p);
            let mut best = f64::INFINITY;
            for ring in 0..=max_ring {
                // every point in ring `ring` is at least (ring - 1) cells away
                if best.is_finite() && best <= (ring - 1) as f64 * cell {
                    break;
                }
                for dx in -ring..=ring {
                    for dy in -ring..=ring {
                        if dx.abs() != ring && dy.abs() != ring {
                            continue;
                        }
                        if let Some(ids) = grid.get(&(kx + dx, ky + dy)) {
                            for &j in ids {
                                if j != i {
                                    best = best.min(p.distance_to(&points[j]));
                                }
                            }
                        }
                    }
                }
            }
            best
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Polygon;

    fn square(x0: f64, y0: f64, side: f64) -> MultiPolygon {
        Polygon::rectangle(Point::new(x0, y0), Point::new(x0 + side, y0 + side))
            .unwrap()
            .into()
    }

    fn ngon_km2(n: usize, r_km: f64) -> f64 {
        0.5 * n as f64 * r_km * r_km * (std::f64::consts::TAU / n as f64).sin()
    }

    #[test]
    fn centred_site_in_large_square() {
        let city = square(0.0, 0.0, 10_000.0);
        let std = PlanningStandard::derived(ServiceCode::Kg, 1.0);
        let r = evaluate_coverage(&[Point::new(5000.0, 5000.0)], &std, &city, &city, &[]).unwrap();
        let expected = ngon_km2(64, 1.0);
        assert!((r.served_km2 - expected).abs() < 1e-6);
        assert!((r.served_pct - expected).abs() < 1e-6, "100 km² city");
        assert!((r.served_km2 + r.unserved_km2 - 100.0).abs() < 1e-6 * 100.0);
        assert!((r.served_pct + r.unserved_pct - 100.0).abs() < 0.01);
    }

    #[test]
    fn tiny_radius_rejected() {
        let city = square(0.0, 0.0, 1000.0);
        let mut std = PlanningStandard::derived(ServiceCode::Kg, 1.0);
        std.max_km = Some(1e-10);
        assert!(matches!(
            evaluate_coverage(&[Point::new(5.0, 5.0)], &std, &city, &city, &[]),
            Err(Error::Parameter(_))
        ));
    }

    #[test]
    fn per_capita_is_wrong_kind() {
        let city = square(0.0, 0.0, 1000.0);
        let std = PlanningStandard::per_capita(ServiceCode::Park, 11.0);
        assert!(matches!(
            evaluate_coverage(&[Point::new(5.0, 5.0)], &std, &city, &city, &[]),
            Err(Error::WrongKind { .. })
        ));
    }

    #[test]
    fn empty_layer_serves_nothing() {
        let city = square(0.0, 0.0, 1000.0);
        let std = PlanningStandard::derived(ServiceCode::Kg, 1.0);
        let r = evaluate_coverage(&[], &std, &city, &city, &[]).unwrap();
        assert_eq!(r.served_pct, 0.0);
        assert!((r.unserved_pct - 100.0).abs() < 1e-9);
        assert_eq!(r.warnings.len(), 1);
    }

    #[test]
    fn built_up_outside_border_rejected() {
        let border = square(0.0, 0.0, 1000.0);
        let built = square(500.0, 0.0, 1000.0);
        let std = PlanningStandard::derived(ServiceCode::Kg, 1.0);
        assert!(matches!(
            evaluate_coverage(&[Point::new(5.0, 5.0)], &std, &border, &built, &[]),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn districts_split_coverage() {
        let city = square(0.0, 0.0, 4000.0);
        let west = District {
            name: "west".into(),
            geometry: Polygon::rectangle(Point::new(0.0, 0.0), Point::new(2000.0, 4000.0))
                .unwrap()
                .into(),
            population: 10.0,
        };
        let east = District {
            name: "east".into(),
            geometry: Polygon::rectangle(Point::new(2000.0, 0.0), Point::new(4000.0, 4000.0))
                .unwrap()
                .into(),
            population: 10.0,
        };
        let std = PlanningStandard::fixed(ServiceCode::Cult, 0.5, 1.0);
        let r = evaluate_coverage(&[Point::new(1000.0, 2000.0)], &std, &city, &city, &[west, east]).unwrap();
        assert!(r.per_district[0].served_pct > 30.0);
        assert_eq!(r.per_district[1].served_pct, 0.0);
        assert!((r.per_district[1].unserved_pct - 100.0).abs() < 1e-6);
        let weighted: f64 = r
            .per_district
            .iter()
            .map(|d| d.served_pct * d.built_up_km2)
            .sum::<f64>()
            / r.built_up_km2;
        assert!((weighted - r.served_pct).abs() < 0.1);
    }

    #[test]
    fn parks_rows_from_areas() {
        let rows = vec![("Al-Hemadeat".to_string(), 47_335.0, 0.153187)];
        let r = parks_assessment_from_areas(&rows, 11.0).unwrap();
        let d = &r.per_district[0];
        assert!((d.share_km2 - 0.520685).abs() < 1e-9);
        assert!((d.pct_of_share - 29.42).abs() < 0.005);
        assert!((d.deficiency_km2 - 0.367498).abs() < 1e-6);
    }

    #[test]
    fn parks_zero_population() {
        let r = parks_assessment_from_areas(&[("empty".into(), 0.0, 0.0)], 11.0).unwrap();
        let d = &r.per_district[0];
        assert_eq!(d.share_km2, 0.0);
        assert_eq!(d.pct_of_share, 100.0);
        assert_eq!(d.deficiency_km2, 0.0);
        assert_eq!(d.deficiency_pct, 0.0);
        let r = parks_assessment_from_areas(&[("empty".into(), 0.0, 0.4)], 11.0).unwrap();
        assert_eq!(r.per_district[0].pct_of_share, 100.0);
        assert_eq!(r.per_district[0].deficiency_km2, 0.0);
    }

    #[test]
    fn parks_surplus_is_capped() {
        let r = parks_assessment_from_areas(&[("green".into(), 1000.0, 1.0)], 11.0).unwrap();
        let d = &r.per_district[0];
        assert_eq!(d.pct_of_share, 100.0);
        assert_eq!(d.deficiency_km2, 0.0);
        assert!((d.pct_of_share + d.deficiency_pct - 100.0).abs() < 0.01);
    }

    #[test]
    fn parks_geometry_path() {
        let d = District {
            name: "a".into(),
            geometry: square(0.0, 0.0, 5000.0),
            population: 10_000.0,
        };
        let parks = square(0.0, 0.0, 100.0);
        let per = parks_by_district(std::slice::from_ref(&d), &parks);
        let r = parks_assessment(&[d], &per, 11.0).unwrap();
        assert!((r.per_district[0].parks_km2 - 0.01).abs() < 1e-12);
        assert!((r.per_district[0].pct_of_share - 0.01 / 0.11 * 100.0).abs() < 1e-9);
    }

    #[test]
    fn aggregate_simple() {
        let full = ("a".to_string(), 100.0);
        let none = ("b".to_string(), 0.0);
        assert_eq!(aggregate_coverage(&[&full]).unwrap().served_pct, 100.0);
        let two = aggregate_coverage(&[&full, &none]).unwrap();
        assert_eq!(two.served_pct, 50.0);
        assert_eq!(two.unserved_pct, 50.0);
        assert!(aggregate_coverage(&[]).is_err());
    }

    #[test]
    fn nni_coincident_points() {
        let pts = vec![Point::new(3.0, 3.0); 10];
        let n = nearest_neighbor_index(&pts, 1.0).unwrap();
        assert_eq!(n.r, 0.0);
        assert_eq!(n.pattern, PointPattern::Clustered);
    }

    #[test]
    fn nni_grid_is_dispersed() {
        let d = 100.0;
        let pts: Vec<Point> = (0..100)
            .map(|k| Point::new((k % 10) as f64 * d, (k / 10) as f64 * d))
            .collect();
        let area_km2 = 100.0 * d * d / 1e6;
        let n = nearest_neighbor_index(&pts, area_km2).unwrap();
        assert!((n.r - 2.0).abs() < 1e-12);
        assert_eq!(n.pattern, PointPattern::Dispersed);
    }

    #[test]
    fn nni_errors() {
        assert!(nearest_neighbor_index(&[Point::new(0.0, 0.0)], 1.0).is_err());
        assert!(nearest_neighbor_index(&[Point::new(0.0, 0.0), Point::new(1.0, 0.0)], 0.0).is_err());
    }

    #[test]
    fn bucket_search_matches_brute_force() {
        let pts: Vec<Point> = (0..500)
            .map(|i| {
                let f = i as f64;
                Point::new((f * 12.9898).sin() * 43758.5 % 1000.0, (f * 78.233).cos() * 12345.6 % 700.0)
            })
            .collect();
        let fast = nearest_neighbor_distances(&pts);
        for (i, p) in pts.iter().enumerate() {
            let brute = pts
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, q)| p.distance_to(q))
                .fold(f64::INFINITY, f64::min);
            assert_eq!(fast[i], brute);
        }
    }
}
