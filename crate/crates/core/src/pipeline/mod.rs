//! Batch analysis over a city's service layers, and the command line around it.

mod cli;
mod run;

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::Serialize;

use crate::boolops::DEFAULT_SEGMENTS_PER_CIRCLE;
use crate::density::{DEFAULT_BANDWIDTH_M, DEFAULT_BREAKS, DEFAULT_CELL_SIZE_M};
use crate::error::{Error, Result};
use crate::standards::{ServiceCode, Statistic};

pub use cli::{cli_main, cli_parse, CliError};
pub use run::run_batch;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// Voronoi catchments and the standards table only.
    DeriveStandards,
    /// Coverage against a supplied standards table.
    Evaluate,
    /// Derive, then evaluate, then the city-wide summaries.
    Full,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::DeriveStandards => "derive-standards",
            Mode::Evaluate => "evaluate",
            Mode::Full => "full",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "derive-standards" => Ok(Mode::DeriveStandards),
            "evaluate" => Ok(Mode::Evaluate),
            "full" => Ok(Mode::Full),
            other => Err(Error::Config(format!(
                "unknown mode `{other}` (expected derive-standards, evaluate or full)"
            ))),
        }
    }
}

/// Where the service layers come from.
#[derive(Debug, Clone, PartialEq)]
pub enum ServiceInput {
    /// One point layer with an explicit code.
    Single { path: PathBuf, code: ServiceCode },
    /// Every `<CODE>_*.geojson` in a folder.
    Folder(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub city_name: Option<String>,
    pub mode: Mode,
    pub services: ServiceInput,
    pub border: PathBuf,
    pub built_up: Option<PathBuf>,
    pub districts: Option<PathBuf>,
    pub parks: Option<PathBuf>,
    /// Study area for the nearest-neighbour index; the border area otherwise.
    pub city_area_km2: Option<f64>,
    pub workspace: PathBuf,
    pub standards_path: Option<PathBuf>,
    pub cell_size_m: f64,
    pub bandwidth_m: f64,
    pub density_breaks: Vec<f64>,
    pub segments_per_circle: usize,
    /// Worker threads; 0 uses every core, 1 runs serially.
    pub jobs: usize,
    pub statistic: Statistic,
}

impl RunConfig {
    /// A config with default analysis parameters.
    pub fn new(mode: Mode, services: ServiceInput, border: PathBuf, workspace: PathBuf) -> Self {
        RunConfig {
            city_name: None,
            mode,
            services,
            border,
            built_up: None,
            districts: None,
            parks: None,
            city_area_km2: None,
            workspace,
            standards_path: None,
            cell_size_m: DEFAULT_CELL_SIZE_M,
            bandwidth_m: DEFAULT_BANDWIDTH_M,
            density_breaks: DEFAULT_BREAKS.to_vec(),
            segments_per_circle: DEFAULT_SEGMENTS_PER_CIRCLE,
            jobs: 0,
            statistic: Statistic::Mean,
        }
    }

    /// Checks the invariants that do not need the file system.
    pub fn validate(&self) -> Result<()> {
        if let Some(a) = self.city_area_km2 {
            if !(a > 0.0 && a.is_finite()) {
                return Err(Error::Config(format!("city area must be positive, got {a} km²")));
            }
        }
        if self.mode != Mode::DeriveStandards && self.built_up.is_none() {
            return Err(Error::Config(format!(
                "{} mode needs a built-up layer (--built-up)",
                self.mode
            )));
        }
        if self.mode == Mode::Evaluate && self.standards_path.is_none() {
            return Err(Error::Config(
                "evaluate mode needs a standards table (--standards)".into(),
            ));
        }
        if !(self.cell_size_m > 0.0 && self.bandwidth_m >= self.cell_size_m) {
            return Err(Error::Config(format!(
                "need 0 < cell size ≤ bandwidth, got {} m and {} m",
                self.cell_size_m, self.bandwidth_m
            )));
        }
        if self.segments_per_circle < 8 {
            return Err(Error::Config(format!(
                "buffer segments must be at least 8, got {}",
                self.segments_per_circle
            )));
        }
        Ok(())
    }

    /// Output file prefix: the city name reduced to `[A-Za-z0-9_-]`.
    pub fn prefix(&self) -> String {
        let name = self.city_name.as_deref().unwrap_or("city").trim();
        let clean: String = name
            .chars()
            .map(|c| {
                if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                    c
                } else {
                    '_'
                }
            })
            .collect();
        if clean.is_empty() {
            "city".into()
        } else {
            clean
        }
    }
}

/// One timed analysis step.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepLog {
    pub analysis: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub service: Option<ServiceCode>,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ManifestEntry {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub service: Option<ServiceCode>,
    pub artifact: String,
    /// File name inside the workspace.
    pub file: String,
}

/// A failure confined to one input or output.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunError {
    pub source: String,
    pub message: String,
    pub exit_code: i32,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub city: String,
    pub mode: Mode,
    pub steps: Vec<StepLog>,
    pub manifest: Vec<ManifestEntry>,
    pub errors: Vec<RunError>,
    pub warnings: Vec<String>,
    pub total_seconds: f64,
}

impl RunReport {
    pub fn succeeded(&self) -> bool {
        self.errors.is_empty()
    }

    /// Exit status of the run: 0, or the most severe per-layer error code.
    pub fn exit_code(&self) -> i32 {
        self.errors.iter().map(|e| e.exit_code).max().unwrap_or(0)
    }

    /// Text summary: one line per step, then errors and the manifest size.
    pub fn summary(&self) -> String {
        let mut out = String::new();
        for s in &self.steps {
            let service = s.service.map(|c| c.to_string()).unwrap_or_default();
            out.push_str(&format!("{:<20} {:<5} {:>8.3} s\n", s.analysis, service, s.seconds));
        }
        for w in &self.warnings {
            out.push_str(&format!("warning: {w}\n"));
        }
        for e in &self.errors {
            out.push_str(&format!("error: {}: {}\n", e.source, e.message));
        }
        out.push_str(&format!(
            "{} files written in {:.3} s\n",
            self.manifest.len(),
            self.total_seconds
        ));
        out
    }
}
