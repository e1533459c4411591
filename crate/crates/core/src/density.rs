//! Facility density surface on a regular grid (services per km²).

use std::f64::consts::PI;

use log::warn;

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::geom::{MultiPolygon, Point};

pub const DEFAULT_CELL_SIZE_M: f64 = 50.0;
pub const DEFAULT_BANDWIDTH_M: f64 = 500.0;
/// Class breaks in services/km²: <5, 5–25, 25–45, ≥45.
pub const DEFAULT_BREAKS: [f64; 3] = [5.0, 25.0, 45.0];

/// Row-major grid; row 0 is the southernmost row and `origin` its
/// south-west corner.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityGrid {
    pub origin: Point,
    pub cell_size: f64,
    pub width: usize,
    pub height: usize,
    /// Density at each cell centre; zero where masked.
    pub values: Vec<f64>,
    /// True for cells whose centre lies inside the border.
    pub mask: Vec<bool>,
}

impl DensityGrid {
    pub fn cell_center(&self, col: usize, row: usize) -> Point {
        Point::new(
            self.origin.x + (col as f64 + 0.5) * self.cell_size,
            self.origin.y + (row as f64 + 0.5) * self.cell_size,
        )
    }

    /// Density of an unmasked cell.
    pub fn value(&self, col: usize, row: usize) -> Option<f64> {
        let i = row * self.width + col;
        self.mask[i].then(|| self.values[i])
    }

    pub fn cell_area_km2(&self) -> f64 {
        self.cell_size * self.cell_size / 1.0e6
    }

    /// Σ value × cell area over unmasked cells: the number of facilities the
    /// surface accounts for.
    pub fn integrated_count(&self) -> f64 {
        let a = self.cell_area_km2();
        self.values
            .iter()
            .zip(&self.mask)
            .filter(|(_, m)| **m)
            .map(|(v, _)| v * a)
            .sum()
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }
}

/// Quartic kernel weight per m² at distance² `d2` for bandwidth `h`.
pub fn quartic_kernel(d2: f64, h: f64) -> f64 {
    let h2 = h * h;
    if d2 >= h2 {
        return 0.0;
    }
    let u = 1.0 - d2 / h2;
    3.0 / (PI * h2) * u * u
}

/// Kernel density of `sites` over the border's bounding box; cells whose
/// centre falls outside the border are masked.
pub fn kde_grid(
    sites: &[Point],
    border: &MultiPolygon,
    cell_size: f64,
    bandwidth: f64,
) -> Result<DensityGrid> {
    kde_grid_with(sites, border, cell_size, bandwidth, Execution::Serial)
}

pub fn kde_grid_with(
    sites: &[Point],
    border: &MultiPolygon,
    cell_size: f64,
    bandwidth: f64,
    exec: Execution,
) -> Result<DensityGrid> {
    if !(cell_size > 0.0 && cell_size.is_finite()) {
        return Err(Error::Parameter(format!("cell size must be positive, got {cell_size}")));
    }
    if !(bandwidth > 0.0 && bandwidth.is_finite()) {
        return Err(Error::Parameter(format!("bandwidth must be positive, got {bandwidth}")));
    }
    if bandwidth < cell_size {
        return Err(Error::Parameter(format!(
            "bandwidth {bandwidth} m is smaller than the cell size {cell_size} m"
        )));
    }
    let bounds = border
        .bounds()
        .ok_or_else(|| Error::Parameter("border is empty".into()))?;
    let width = ((bounds.width() / cell_size).ceil() as usize).max(1);
    let height = ((bounds.height() / cell_size).ceil() as usize).max(1);
    let origin = bounds.min;
    if sites.is_empty() {
        warn!("density grid over an empty layer is zero everywhere");
    }

    // Sites sorted by y so each row only visits the band within reach.
    let mut by_y: Vec<Point> = sites.to_vec();
    by_y.sort_by(|a, b| a.y.total_cmp(&b.y));

    let mut values = vec![0.0; width * height];
    let mut mask = vec![false; width * height];
    let h = bandwidth;
    let h2 = h * h;
    exec.fill_chunks(&mut mask, width, |row, out| {
        for (col, m) in out.iter_mut().enumerate() {
            let c = Point::new(
                origin.x + (col as f64 + 0.5) * cell_size,
                origin.y + (row as f64 + 0.5) * cell_size,
            );
            *m = border.contains(&c);
        }
    });
    exec.fill_chunks(&mut values, width, |row, out| {
        let cy = origin.y + (row as f64 + 0.5) * cell_size;
        let lo = by_y.partition_point(|p| p.y <= cy - h);
        for p in by_y[lo..].iter().take_while(|p| p.y < cy + h) {
            let dy = cy - p.y;
            // columns whose centres lie within h of p horizontally
            let rel = (p.x - origin.x) / cell_size - 0.5;
            let reach = h / cell_size;
            let c0 = (rel - reach).ceil().max(0.0) as usize;
            let c1 = ((rel + reach).floor() as i64).min(width as i64 - 1);
            if c1 < 0 {
                continue;
            }
            for (col, v) in out.iter_mut().enumerate().take(c1 as usize + 1).skip(c0) {
                let dx = origin.x + (col as f64 + 0.5) * cell_size - p.x;
                let d2 = dx * dx + dy * dy;
                if d2 < h2 {
                    // per m² → per km²
                    *v += quartic_kernel(d2, h) * 1.0e6;
                }
            }
        }
    });
    for (v, m) in values.iter_mut().zip(&mask) {
        if !m {
            *v = 0.0;
        }
    }
    Ok(DensityGrid {
        origin,
        cell_size,
        width,
        height,
        values,
        mask,
    })
}

/// Class index per cell (`None` where masked). Classes are left-closed:
/// class k holds values in [breaks[k-1], breaks[k]).
pub fn classify_density(grid: &DensityGrid, breaks: &[f64]) -> Result<Vec<Option<usize>>> {
    if breaks.windows(2).any(|w| w[0].partial_cmp(&w[1]) != Some(std::cmp::Ordering::Less)) {
        return Err(Error::Parameter(format!(
            "class breaks must be strictly increasing, got {breaks:?}"
        )));
    }
    Ok(grid
        .values
        .iter()
        .zip(&grid.mask)
        .map(|(v, m)| m.then(|| classify_value(*v, breaks)))
        .collect())
}

pub fn classify_value(v: f64, breaks: &[f64]) -> usize {
    breaks.partition_point(|b| *b <= v)
}
