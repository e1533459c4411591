//! Layer ingestion and report, raster and map emission.

pub mod geojson;
pub mod report;
pub mod svg;

pub use geojson::{
    read_districts, read_layer, read_points, read_polygons, service_code_from_path, write_cells,
    write_districts, write_layer, write_points, write_polygons, Layer, LayerFile, LayerKind,
    WriteOptions,
};
pub use report::ascii_grid;
pub use svg::{render_density_svg, render_map, render_map_svg, MapTransform, ScaleBar};
