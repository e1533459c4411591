//! Service catchment analysis for urban planning.
//!
//! Derives distance standards from Voronoi catchments of existing facilities,
//! evaluates how much of a city's built-up area each service reaches, and
//! summarises the pattern with a density surface and a nearest-neighbour
//! index. Coordinates are planar meters; areas are reported in km².

pub mod boolops;
pub mod coverage;
pub mod density;
pub mod error;
pub mod exec;
pub mod geom;
pub mod io;
pub mod layer;
pub mod pipeline;
pub mod standards;
pub mod synthetic;
pub mod voronoi;

pub use coverage::{
    aggregate_coverage, evaluate_coverage, evaluate_coverage_with, nearest_neighbor_index,
    parks_assessment, AggregateCoverage, CoverageOptions, CoverageReport, District,
    NearestNeighborIndex, ParksReport, PointPattern,
};
pub use density::{classify_density, kde_grid, kde_grid_with, DensityGrid};
pub use error::{Error, Result};
pub use exec::Execution;
pub use geom::{Bounds, MultiPolygon, Point, Polygon, Ring};
pub use layer::PointLayer;
pub use standards::{derive_standard, PlanningStandard, ServiceCode, StandardsTable};
pub use voronoi::{delaunay, voronoi_cells, voronoi_cells_with, CatchmentCell, CatchmentSet};
pub use pipeline::{run_batch, Mode, RunConfig, RunReport, ServiceInput};
