//! A small deterministic city for demos, benches and end-to-end tests.
//!
//! The city is roughly 7 × 6.5 km with a non-convex border, a two-part
//! built-up mass with one hole, five strip districts, a scatter of parks and
//! ten facility layers clustered towards the centre. The same seed always
//! gives the same city.

use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::boolops;
use crate::coverage::District;
use crate::error::{Error, Result};
use crate::geom::{MultiPolygon, Point, Polygon, Ring};
use crate::io::geojson::{write_districts, write_points, write_polygons, WriteOptions};
use crate::layer::PointLayer;
use crate::standards::ServiceCode;

/// Seed of the dataset bundled under `data/synthetic_city`.
pub const BUNDLED_SEED: u64 = 7;

/// Easting/northing of the local origin, so coordinates look projected.
const ORIGIN: Point = Point { x: 452_000.0, y: 2_890_000.0 };

#[derive(Debug, Clone)]
pub struct SyntheticCity {
    pub border: MultiPolygon,
    pub built_up: MultiPolygon,
    pub districts: Vec<District>,
    pub parks: MultiPolygon,
    pub services: Vec<PointLayer>,
}

const LAYERS: [(ServiceCode, &str, usize); 10] = [
    (ServiceCode::Kg, "kindergartens", 40),
    (ServiceCode::Pri, "primary_schools", 30),
    (ServiceCode::Pre, "preparatory_schools", 20),
    (ServiceCode::Sec, "secondary_schools", 12),
    (ServiceCode::Amb, "ambulance_points", 5),
    (ServiceCode::Hu, "health_units", 15),
    (ServiceCode::Hosp, "hospitals", 2),
    (ServiceCode::Mosq, "mosques", 60),
    (ServiceCode::Chur, "churches", 8),
    (ServiceCode::Cult, "cultural_centres", 3),
];

const DISTRICTS: [(&str, f64); 5] = [
    ("West End", 42_000.0),
    ("Old Town", 38_000.0),
    ("Market", 51_000.0),
    ("Station", 64_000.0),
    ("East Gate", 12_000.0),
];

fn local(coords: &[(f64, f64)]) -> Vec<Point> {
    coords
        .iter()
        .map(|&(x, y)| Point::new(ORIGIN.x + x, ORIGIN.y + y))
        .collect()
}

fn rect(x0: f64, y0: f64, x1: f64, y1: f64) -> Polygon {
    Polygon::rectangle(
        Point::new(ORIGIN.x + x0, ORIGIN.y + y0),
        Point::new(ORIGIN.x + x1, ORIGIN.y + y1),
    )
    .expect("rectangle is valid")
}

fn border() -> MultiPolygon {
    Polygon::from_exterior(local(&[
        (0.0, 0.0),
        (3200.0, -400.0),
        (6400.0, 200.0),
        (7000.0, 2600.0),
        (6600.0, 5200.0),
        (5000.0, 4900.0),
        (4200.0, 6200.0),
        (1800.0, 5800.0),
        (-300.0, 4200.0),
        (-600.0, 1800.0),
    ]))
    .expect("border ring is valid")
    .into()
}

fn built_up() -> MultiPolygon {
    let core = local(&[
        (1200.0, 1000.0),
        (3500.0, 700.0),
        (5600.0, 1300.0),
        (5900.0, 3000.0),
        (5300.0, 4300.0),
        (3600.0, 4700.0),
        (1800.0, 4300.0),
        (800.0, 2800.0),
    ]);
    let cemetery = local(&[(3000.0, 2400.0), (3000.0, 2800.0), (3400.0, 2800.0), (3400.0, 2400.0)]);
    let core = Polygon::new(
        Ring::new(core).expect("built-up ring is valid"),
        vec![Ring::new(cemetery).expect("hole ring is valid")],
    )
    .expect("built-up core is valid");
    let village = rect(300.0, 500.0, 900.0, 1000.0);
    MultiPolygon::from_disjoint(vec![core, village])
}

fn districts(border: &MultiPolygon) -> Vec<District> {
    let cuts = [-1000.0, 1500.0, 2900.0, 4200.0, 5500.0, 8000.0];
    DISTRICTS
        .iter()
        .enumerate()
        .map(|(i, (name, population))| {
            let strip: MultiPolygon = rect(cuts[i], -1000.0, cuts[i + 1], 7000.0).into();
            District {
                name: name.to_string(),
                geometry: boolops::intersection(border, &strip),
                population: *population,
            }
        })
        .collect()
}

fn round_cm(v: f64) -> f64 {
    (v * 100.0).round() / 100.0
}

fn parks(rng: &mut ChaCha8Rng, built_up: &MultiPolygon) -> MultiPolygon {
    let bounds = built_up.bounds().expect("built-up is not empty");
    let mut placed: Vec<Polygon> = Vec::new();
    let mut attempts = 0;
    while placed.len() < 12 && attempts < 10_000 {
        attempts += 1;
        let w = rng.random_range(60.0..260.0_f64).round();
        let h = rng.random_range(60.0..200.0_f64).round();
        let x = round_cm(rng.random_range(bounds.min.x..bounds.max.x - w));
        let y = round_cm(rng.random_range(bounds.min.y..bounds.max.y - h));
        let min = Point::new(x, y);
        let max = Point::new(x + w, y + h);
        let corners = [min, max, Point::new(min.x, max.y), Point::new(max.x, min.y)];
        if !corners.iter().all(|c| built_up.contains(c)) {
            continue;
        }
        let candidate = Polygon::rectangle(min, max).expect("park rectangle is valid");
        // keep a gap so parks never touch
        let clear = placed.iter().all(|p| {
            let b = p.bounds();
            max.x + 20.0 < b.min.x || b.max.x + 20.0 < min.x || max.y + 20.0 < b.min.y || b.max.y + 20.0 < min.y
        });
        let m: MultiPolygon = candidate.clone().into();
        if clear && boolops::difference(&m, built_up).area_m2() == 0.0 {
            placed.push(candidate);
        }
    }
    MultiPolygon::from_disjoint(placed)
}

fn facilities(rng: &mut ChaCha8Rng, built_up: &MultiPolygon, count: usize) -> Vec<Point> {
    let bounds = built_up.bounds().expect("built-up is not empty");
    let centre = Point::new(ORIGIN.x + 3400.0, ORIGIN.y + 2700.0);
    let spread = Normal::new(0.0, 1000.0).expect("valid spread");
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let p = if rng.random_bool(0.6) {
            Point::new(centre.x + spread.sample(rng), centre.y + spread.sample(rng))
        } else {
            Point::new(
                rng.random_range(bounds.min.x..bounds.max.x),
                rng.random_range(bounds.min.y..bounds.max.y),
            )
        };
        let p = Point::new(round_cm(p.x), round_cm(p.y));
        if built_up.contains(&p) {
            out.push(p);
        }
    }
    out
}

/// Generates the city for `seed`.
pub fn synthetic_city(seed: u64) -> SyntheticCity {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let border = border();
    let built_up = built_up();
    let districts = districts(&border);
    let parks = parks(&mut rng, &built_up);
    let services = LAYERS
        .iter()
        .map(|&(code, name, count)| {
            PointLayer::new(name, Some(code), facilities(&mut rng, &built_up, count))
        })
        .collect();
    SyntheticCity {
        border,
        built_up,
        districts,
        parks,
        services,
    }
}

impl SyntheticCity {
    /// Writes `border`, `built_up`, `districts` and `parks` layers into `dir`
    /// and one `<CODE>_<name>.geojson` per service into `dir/services`.
    pub fn write_to(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        let services_dir = dir.join("services");
        fs::create_dir_all(&services_dir).map_err(|e| Error::io(&services_dir, e))?;
        let opts = WriteOptions::default();
        let mut written = Vec::new();
        let path = dir.join("border.geojson");
        write_polygons(&path, &self.border, &opts)?;
        written.push(path);
        let path = dir.join("built_up.geojson");
        write_polygons(&path, &self.built_up, &opts)?;
        written.push(path);
        let path = dir.join("districts.geojson");
        write_districts(&path, &self.districts, &opts)?;
        written.push(path);
        let path = dir.join("parks.geojson");
        write_polygons(&path, &self.parks, &opts)?;
        written.push(path);
        for layer in &self.services {
            let code = layer.service.expect("synthetic layers carry a code");
            let path = services_dir.join(format!("{code}_{}.geojson", layer.name));
            write_points(&path, layer, &opts)?;
            written.push(path);
        }
        Ok(written)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_city() {
        let a = synthetic_city(3);
        let b = synthetic_city(3);
        assert_eq!(a.parks, b.parks);
        assert_eq!(a.services, b.services);
        assert_ne!(synthetic_city(4).services, a.services);
    }

    #[test]
    fn layout_is_consistent() {
        let c = synthetic_city(BUNDLED_SEED);
        assert_eq!(c.services.len(), 10);
        assert!(boolops::difference(&c.built_up, &c.border).is_empty());
        let district_area: f64 = c.districts.iter().map(|d| d.geometry.area_m2()).sum();
        assert!((district_area - c.border.area_m2()).abs() / c.border.area_m2() < 1e-9);
        assert!(c.parks.parts().len() >= 8);
        for layer in &c.services {
            assert!(layer.points.iter().all(|p| c.built_up.contains(p)));
        }
    }
}
