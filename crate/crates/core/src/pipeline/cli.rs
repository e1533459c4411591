use std::ffi::OsString;
use std::path::PathBuf;

use clap::{ArgGroup, Parser, ValueEnum};

use crate::boolops::DEFAULT_SEGMENTS_PER_CIRCLE;
use crate::density::{DEFAULT_BANDWIDTH_M, DEFAULT_CELL_SIZE_M};
use crate::error::Error;
use crate::standards::{ServiceCode, Statistic};

use super::{run_batch, Mode, RunConfig, ServiceInput};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    /// Voronoi catchments and the standards table only
    DeriveStandards,
    /// Coverage against the table given with --standards
    Evaluate,
    /// Derive standards, evaluate coverage, then density, NNI and the aggregate table
    Full,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Mode {
        match m {
            ModeArg::DeriveStandards => Mode::DeriveStandards,
            ModeArg::Evaluate => Mode::Evaluate,
            ModeArg::Full => Mode::Full,
        }
    }
}

/// Derive service planning standards from Voronoi catchments and evaluate
/// how much of a city's built-up area each service covers.
///
/// Layers are FeatureCollections in planar meters. Service layers in a
/// folder must be named <CODE>_*.geojson, where CODE is one of KG, PRI, PRE,
/// SEC, AMB, HU, HOSP, MOSQ, CHUR, CULT, POST, FIRE.
#[derive(Debug, Parser)]
#[command(name = "urbanreach", version)]
#[command(group(ArgGroup::new("service_input").required(true).args(["points", "services_dir"])))]
struct Args {
    /// Label used in output file names and map titles [default: city]
    #[arg(long)]
    city_name: Option<String>,

    #[arg(long, value_enum, default_value_t = ModeArg::Full)]
    mode: ModeArg,

    /// Service code of the layer given with --points
    #[arg(long, requires = "points")]
    service_code: Option<String>,

    /// A single service point layer (needs --service-code)
    #[arg(long, requires = "service_code")]
    points: Option<PathBuf>,

    /// Folder of <CODE>_*.geojson service point layers
    #[arg(long)]
    services_dir: Option<PathBuf>,

    /// City border polygons
    #[arg(long)]
    border: PathBuf,

    /// Built-up area polygons (required by evaluate and full)
    #[arg(long)]
    built_up: Option<PathBuf>,

    /// Districts with "name" and "population" properties
    #[arg(long)]
    districts: Option<PathBuf>,

    /// Park and open-space polygons for the per-capita assessment
    #[arg(long)]
    parks: Option<PathBuf>,

    /// Study area for the nearest-neighbour index [default: border area]
    #[arg(long)]
    city_area_km2: Option<f64>,

    /// Output directory
    #[arg(long, env = "URBANREACH_WORKSPACE")]
    workspace: PathBuf,

    /// Standards table JSON written by an earlier run (evaluate mode)
    #[arg(long)]
    standards: Option<PathBuf>,

    /// Density grid cell size in meters
    #[arg(long, default_value_t = DEFAULT_CELL_SIZE_M)]
    cell_size: f64,

    /// Quartic kernel bandwidth in meters
    #[arg(long, default_value_t = DEFAULT_BANDWIDTH_M)]
    bandwidth: f64,

    /// Vertices per buffer circle
    #[arg(long, default_value_t = DEFAULT_SEGMENTS_PER_CIRCLE)]
    buffer_segments: usize,

    /// Worker threads; 0 uses every core, 1 runs serially
    #[arg(long, default_value_t = 0)]
    jobs: usize,

    /// Use the median cell coverage distance instead of the mean
    #[arg(long)]
    median: bool,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad flags, or a request for help/version text.
    #[error("{0}")]
    Usage(#[from] clap::Error),

    #[error(transparent)]
    Invalid(#[from] Error),
}

impl CliError {
    /// 0 for help/version, 1 for usage errors, otherwise the library code.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(e) if !e.use_stderr() => 0,
            CliError::Usage(_) => 1,
            CliError::Invalid(e) => e.exit_code(),
        }
    }
}

/// Parses command-line arguments (program name first) into a run config.
pub fn cli_parse<I, T>(argv: I) -> Result<RunConfig, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args = Args::try_parse_from(argv)?;
    let services = match (args.points, args.services_dir) {
        (Some(path), None) => {
            let code: ServiceCode = args
                .service_code
                .as_deref()
                .expect("clap enforces --service-code with --points")
                .parse()?;
            ServiceInput::Single { path, code }
        }
        (None, Some(dir)) => ServiceInput::Folder(dir),
        _ => unreachable!("clap enforces exactly one service input"),
    };
    let mut config = RunConfig::new(args.mode.into(), services, args.border, args.workspace);
    config.city_name = args.city_name;
    config.built_up = args.built_up;
    config.districts = args.districts;
    config.parks = args.parks;
    config.city_area_km2 = args.city_area_km2;
    config.standards_path = args.standards;
    config.cell_size_m = args.cell_size;
    config.bandwidth_m = args.bandwidth;
    config.segments_per_circle = args.buffer_segments;
    config.jobs = args.jobs;
    if args.median {
        config.statistic = Statistic::Median;
    }
    config.validate()?;
    Ok(config)
}

/// Parses, runs and prints the report; returns the process exit status.
pub fn cli_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let config = match cli_parse(argv) {
        Ok(c) => c,
        Err(CliError::Usage(e)) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
        Err(e) => {
            eprintln!("error: {e}");
            return e.exit_code();
        }
    };
    match run_batch(&config) {
        Ok(report) => {
            print!("{}", report.summary());
            report.exit_code()
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn argv(extra: &[&str]) -> Vec<String> {
        let mut v = vec!["urbanreach".to_string()];
        v.extend(extra.iter().map(|s| s.to_string()));
        v
    }

    #[test]
    fn full_mode_folder() {
        let c = cli_parse(argv(&[
            "--mode", "full", "--services-dir", "data/", "--border", "b.geojson", "--built-up",
            "u.geojson", "--districts", "d.geojson", "--workspace", "out/",
        ]))
        .unwrap();
        assert_eq!(c.mode, Mode::Full);
        assert_eq!(c.services, ServiceInput::Folder("data/".into()));
        assert_eq!(c.cell_size_m, 50.0);
        assert_eq!(c.bandwidth_m, 500.0);
        assert_eq!(c.segments_per_circle, 64);
        assert_eq!(c.prefix(), "city");
    }

    #[test]
    fn both_inputs_is_usage_error() {
        let e = cli_parse(argv(&[
            "--points", "p.geojson", "--service-code", "KG", "--services-dir", "data/",
            "--border", "b.geojson", "--built-up", "u.geojson", "--workspace", "out/",
        ]))
        .unwrap_err();
        assert_eq!(e.exit_code(), 1);
    }

    #[test]
    fn neither_input_is_usage_error() {
        let e = cli_parse(argv(&["--border", "b.geojson", "--workspace", "out/"])).unwrap_err();
        assert_eq!(e.exit_code(), 1);
    }

    #[test]
    fn unknown_code_names_the_set() {
        let e = cli_parse(argv(&[
            "--points", "p.geojson", "--service-code", "XYZ", "--border", "b.geojson",
            "--built-up", "u.geojson", "--workspace", "out/",
        ]))
        .unwrap_err();
        assert_eq!(e.exit_code(), 2);
        let msg = e.to_string();
        assert!(msg.contains("XYZ") && msg.contains("KG") && msg.contains("FIRE"), "{msg}");
    }

    #[test]
    fn evaluate_needs_standards() {
        let e = cli_parse(argv(&[
            "--mode", "evaluate", "--services-dir", "d", "--border", "b", "--built-up", "u",
            "--workspace", "o",
        ]))
        .unwrap_err();
        assert_eq!(e.exit_code(), 2);
    }

    #[test]
    fn help_exits_zero() {
        let e = cli_parse(argv(&["--help"])).unwrap_err();
        assert_eq!(e.exit_code(), 0);
    }

    #[test]
    fn nonpositive_city_area_rejected() {
        let e = cli_parse(argv(&[
            "--services-dir", "d", "--border", "b", "--built-up", "u", "--workspace", "o",
            "--city-area-km2", "0",
        ]))
        .unwrap_err();
        assert_eq!(e.exit_code(), 2);
    }
}
