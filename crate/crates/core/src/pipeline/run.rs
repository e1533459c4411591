use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use log::{info, warn};

use crate::coverage::{
    aggregate_coverage, evaluate_coverage_with, nearest_neighbor_index, parks_assessment,
    parks_by_district, CoverageOptions, CoverageReport, District, ParksReport, ServedShare,
};
use crate::density::{classify_density, kde_grid_with};
use crate::error::{Error, Result};
use crate::exec::{with_jobs, Execution};
use crate::geom::{polygon_area, MultiPolygon, Point};
use crate::io::geojson::{
    cells_to_string, polygons_to_string, read_districts, read_layer, read_polygons,
    service_code_from_path, Layer, LayerKind, WriteOptions,
};
use crate::io::report::{self, NniRow};
use crate::io::svg::{render_density_svg, render_map_svg};
use crate::standards::{
    derive_standard_with, fixed_standards, PlanningStandard, Provenance, ServiceCode,
    StandardKind, StandardsTable, PARK_M2_PER_PERSON,
};
use crate::voronoi::voronoi_cells_with;

use super::{ManifestEntry, Mode, RunConfig, RunError, RunReport, ServiceInput, StepLog};

const LAYER_PATTERN: &str = "<CODE>_*.geojson";

/// A file to be written: contents are produced before anything touches disk.
struct Artifact {
    service: Option<ServiceCode>,
    artifact: &'static str,
    file: String,
    contents: String,
}

struct Inputs {
    border: MultiPolygon,
    built_up: Option<MultiPolygon>,
    districts: Vec<District>,
    parks: Option<MultiPolygon>,
}

struct Job {
    path: PathBuf,
    code: ServiceCode,
}

#[derive(Default)]
struct Outcome {
    points: Vec<Point>,
    derived: Option<(PlanningStandard, usize)>,
    coverage: Option<CoverageReport>,
    artifacts: Vec<Artifact>,
    steps: Vec<StepLog>,
    warnings: Vec<String>,
}

struct Ctx<'a> {
    config: &'a RunConfig,
    inputs: &'a Inputs,
    standards: Option<&'a StandardsTable>,
    exec: Execution,
    prefix: String,
}

impl Ctx<'_> {
    fn file(&self, code: Option<ServiceCode>, artifact: &str, ext: &str) -> String {
        match code {
            Some(c) => format!("{}_{c}_{artifact}.{ext}", self.prefix),
            None => format!("{}_{artifact}.{ext}", self.prefix),
        }
    }

    fn artifact(
        &self,
        code: Option<ServiceCode>,
        artifact: &'static str,
        ext: &str,
        contents: String,
    ) -> Artifact {
        Artifact {
            service: code,
            artifact,
            file: self.file(code, artifact, ext),
            contents,
        }
    }
}

fn timed<T>(steps: &mut Vec<StepLog>, analysis: &str, service: Option<ServiceCode>, f: impl FnOnce() -> T) -> T {
    let t = Instant::now();
    let out = f();
    let seconds = t.elapsed().as_secs_f64();
    info!(
        "{analysis}{} took {seconds:.3} s",
        service.map(|c| format!(" [{c}]")).unwrap_or_default()
    );
    steps.push(StepLog {
        analysis: analysis.to_string(),
        service,
        seconds,
    });
    out
}

fn run_error(source: impl Into<String>, e: &Error) -> RunError {
    RunError {
        source: source.into(),
        message: e.to_string(),
        exit_code: e.exit_code(),
    }
}

/// Runs the configured analysis and writes every output into the workspace.
///
/// Fatal problems (bad configuration, unreadable border or built-up layer)
/// return `Err`. Failures confined to one service layer or one summary are
/// recorded in the report and the rest of the run continues.
pub fn run_batch(config: &RunConfig) -> Result<RunReport> {
    config.validate()?;
    let exec = Execution::from_jobs(config.jobs);
    with_jobs(config.jobs, || run_inner(config, exec))
}

fn run_inner(config: &RunConfig, exec: Execution) -> Result<RunReport> {
    let start = Instant::now();
    let mut steps = Vec::new();
    let mut errors = Vec::new();
    let mut warnings = Vec::new();
    let prefix = config.prefix();

    fs::create_dir_all(&config.workspace).map_err(|e| Error::io(&config.workspace, e))?;
    let inputs = timed(&mut steps, "load inputs", None, || load_inputs(config))?;
    let supplied = match (&config.standards_path, config.mode) {
        (Some(path), Mode::Evaluate) => {
            let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            Some(StandardsTable::from_json(&text)?)
        }
        _ => None,
    };
    let jobs = discover(config, &mut errors)?;

    let ctx = Ctx {
        config,
        inputs: &inputs,
        standards: supplied.as_ref(),
        exec,
        prefix: prefix.clone(),
    };
    let results = exec.map(&jobs, |job| process_layer(&ctx, job));

    let mut artifacts = Vec::new();
    let mut table = fixed_standards();
    let mut coverage: Vec<CoverageReport> = Vec::new();
    let mut pooled: Vec<(ServiceCode, Vec<Point>)> = Vec::new();
    for (job, result) in jobs.iter().zip(results) {
        match result {
            Ok(out) => {
                steps.extend(out.steps);
                warnings.extend(out.warnings);
                artifacts.extend(out.artifacts);
                if let Some((standard, facilities)) = out.derived {
                    table.insert(standard, Provenance::Derived { facilities });
                }
                if let Some(r) = out.coverage {
                    coverage.push(r);
                }
                pooled.push((job.code, out.points));
            }
            Err((e, layer_steps)) => {
                steps.extend(layer_steps);
                warn!("{}: {e}", job.path.display());
                errors.push(run_error(job.path.display().to_string(), &e));
            }
        }
    }

    if config.mode != Mode::Evaluate {
        artifacts.push(ctx.artifact(None, "standards", "json", table.to_json()));
        artifacts.push(ctx.artifact(None, "standards", "csv", table.to_csv()));
    }

    if config.mode != Mode::DeriveStandards {
        let per_capita = supplied
            .as_ref()
            .unwrap_or(&table)
            .get(ServiceCode::Park)
            .and_then(|s| s.per_capita_m2)
            .unwrap_or(PARK_M2_PER_PERSON);
        let parks = match &inputs.parks {
            None => None,
            Some(_) if inputs.districts.is_empty() => {
                let e = Error::Config("parks assessment needs a districts layer (--districts)".into());
                errors.push(run_error("parks", &e));
                None
            }
            Some(p) => match timed(&mut steps, "parks assessment", Some(ServiceCode::Park), || {
                parks_assessment(&inputs.districts, &parks_by_district(&inputs.districts, p), per_capita)
            }) {
                Ok(r) => Some(r),
                Err(e) => {
                    errors.push(run_error("parks", &e));
                    None
                }
            },
        };
        if let Some(p) = &parks {
            artifacts.push(ctx.artifact(Some(ServiceCode::Park), "assessment", "csv", report::parks_csv(p)));
            artifacts.push(ctx.artifact(Some(ServiceCode::Park), "assessment", "json", report::to_json(p)));
        }
        summaries(&ctx, &coverage, parks.as_ref(), &pooled, &mut artifacts, &mut steps, &mut errors, &mut warnings);
    }

    let report_file = ctx.file(None, "run_report", "json");
    let mut manifest = Vec::new();
    remove_stale(&config.workspace, &report_file, &artifacts);
    for a in artifacts {
        let path = config.workspace.join(&a.file);
        match fs::write(&path, &a.contents) {
            Ok(()) => manifest.push(ManifestEntry {
                service: a.service,
                artifact: a.artifact.to_string(),
                file: a.file,
            }),
            Err(e) => errors.push(run_error(a.file.clone(), &Error::io(&path, e))),
        }
    }
    manifest.push(ManifestEntry {
        service: None,
        artifact: "run_report".into(),
        file: report_file.clone(),
    });
    let report = RunReport {
        city: config.city_name.clone().unwrap_or_else(|| prefix.clone()),
        mode: config.mode,
        steps,
        manifest,
        errors,
        warnings,
        total_seconds: start.elapsed().as_secs_f64(),
    };
    let path = config.workspace.join(&report_file);
    fs::write(&path, report::to_json(&report)).map_err(|e| Error::io(&path, e))?;
    Ok(report)
}

fn load_inputs(config: &RunConfig) -> Result<Inputs> {
    let required = |path: &Path, what: &str| -> Result<MultiPolygon> {
        if !path.exists() {
            return Err(Error::Config(format!("{what} layer not found: {}", path.display())));
        }
        let m = read_polygons(path)?;
        if m.is_empty() {
            return Err(Error::Config(format!("{what} layer {} is empty", path.display())));
        }
        Ok(m)
    };
    let border = required(&config.border, "border")?;
    let built_up = match &config.built_up {
        Some(p) => Some(required(p, "built-up")?),
        None => None,
    };
    let districts = match &config.districts {
        Some(p) => read_districts(p)?,
        None => Vec::new(),
    };
    let parks = match &config.parks {
        Some(p) => Some(read_polygons(p)?),
        None => None,
    };
    Ok(Inputs {
        border,
        built_up,
        districts,
        parks,
    })
}

/// Service layers to process, in file-name order. Files whose code cannot be
/// used are reported and skipped.
fn discover(config: &RunConfig, errors: &mut Vec<RunError>) -> Result<Vec<Job>> {
    let candidates: Vec<(PathBuf, Result<ServiceCode>)> = match &config.services {
        ServiceInput::Single { path, code } => vec![(path.clone(), Ok(*code))],
        ServiceInput::Folder(dir) => {
            let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
            let mut paths: Vec<PathBuf> = entries
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| {
                    p.is_file()
                        && p.extension()
                            .and_then(|x| x.to_str())
                            .is_some_and(|x| x.eq_ignore_ascii_case("geojson"))
                })
                .collect();
            if paths.is_empty() {
                return Err(Error::Config(format!(
                    "no service layers in {}; expected files named {LAYER_PATTERN}",
                    dir.display()
                )));
            }
            paths.sort();
            paths
                .into_iter()
                .map(|p| {
                    let code = service_code_from_path(&p);
                    (p, code)
                })
                .collect()
        }
    };
    let mut seen = BTreeSet::new();
    let mut jobs = Vec::new();
    for (path, code) in candidates {
        let source = path.display().to_string();
        match code {
            Err(e) => errors.push(run_error(source, &e)),
            Ok(ServiceCode::Park) => errors.push(run_error(
                source,
                &Error::Config("PARK is assessed per capita from the parks polygons (--parks), not from points".into()),
            )),
            Ok(code) if !seen.insert(code) => errors.push(run_error(
                source,
                &Error::Config(format!("a second {code} layer; one layer per service code is allowed")),
            )),
            Ok(code) => jobs.push(Job { path, code }),
        }
    }
    Ok(jobs)
}

fn process_layer(ctx: &Ctx<'_>, job: &Job) -> std::result::Result<Outcome, (Error, Vec<StepLog>)> {
    let mut out = Outcome::default();
    match layer_steps(ctx, job, &mut out) {
        Ok(()) => Ok(out),
        Err(e) => Err((e, out.steps)),
    }
}

fn layer_steps(ctx: &Ctx<'_>, job: &Job, out: &mut Outcome) -> Result<()> {
    let code = Some(job.code);
    let (info, layer) = timed(&mut out.steps, "read layer", code, || read_layer(&job.path, LayerKind::Points))?;
    out.warnings.extend(info.warnings);
    let Layer::Points(layer) = layer else {
        unreachable!("points requested");
    };
    let sites = layer.points;

    let standard = match ctx.config.mode {
        Mode::Evaluate => ctx.standards.and_then(|t| t.get(job.code)).cloned().ok_or_else(|| {
            Error::Config(format!("the supplied standards table has no entry for {}", job.code))
        })?,
        _ if job.code.is_derived() => {
            let set = timed(&mut out.steps, "voronoi", code, || {
                voronoi_cells_with(&sites, &ctx.inputs.border, ctx.exec)
            })?;
            out.warnings
                .extend(set.warnings().into_iter().map(|w| format!("{}: {w}", job.code)));
            let standard = timed(&mut out.steps, "derive standard", code, || {
                derive_standard_with(&set.cells, job.code, ctx.config.statistic)
            })?;
            out.artifacts.push(ctx.artifact(
                code,
                "cells",
                "geojson",
                cells_to_string(&set.cells, &WriteOptions::default()),
            ));
            out.derived = Some((standard.clone(), set.cells.len()));
            standard
        }
        _ => fixed_standards().get(job.code).cloned().ok_or_else(|| {
            Error::Config(format!("no fixed standard for {}", job.code))
        })?,
    };

    if ctx.config.mode != Mode::DeriveStandards {
        if standard.kind == StandardKind::PerCapita {
            return Err(Error::WrongKind {
                service: job.code,
                found: "per-capita",
                expected: "distance",
            });
        }
        let built_up = ctx.inputs.built_up.as_ref().expect("validated: built-up present");
        let opts = CoverageOptions {
            segments_per_circle: ctx.config.segments_per_circle,
            exec: ctx.exec,
        };
        let r = timed(&mut out.steps, "coverage", code, || {
            evaluate_coverage_with(&sites, &standard, &ctx.inputs.border, built_up, &ctx.inputs.districts, opts)
        })?;
        out.warnings
            .extend(r.warnings.iter().map(|w| format!("{}: {w}", job.code)));
        let title = format!(
            "{}: {} within {:.3} km",
            ctx.config.city_name.as_deref().unwrap_or(&ctx.prefix),
            job.code.label(),
            standard.max_km.unwrap_or_default()
        );
        let svg = timed(&mut out.steps, "render map", code, || {
            render_map_svg(&title, &ctx.inputs.border, built_up, &r.served_geometry, &r.unserved_geometry, &sites)
        })?;
        let opts = WriteOptions::default();
        out.artifacts.push(ctx.artifact(code, "served", "geojson", polygons_to_string(&r.served_geometry, &opts)));
        out.artifacts.push(ctx.artifact(code, "unserved", "geojson", polygons_to_string(&r.unserved_geometry, &opts)));
        out.artifacts.push(ctx.artifact(code, "coverage", "csv", report::coverage_csv(&r)));
        out.artifacts.push(ctx.artifact(code, "coverage", "json", report::to_json(&r)));
        out.artifacts.push(ctx.artifact(code, "map", "svg", svg));
        out.coverage = Some(r);
    }
    out.points = sites;
    Ok(())
}

/// Aggregate coverage, pooled density surface and per-service NNI.
#[allow(clippy::too_many_arguments)]
fn summaries(
    ctx: &Ctx<'_>,
    coverage: &[CoverageReport],
    parks: Option<&ParksReport>,
    pooled: &[(ServiceCode, Vec<Point>)],
    artifacts: &mut Vec<Artifact>,
    steps: &mut Vec<StepLog>,
    errors: &mut Vec<RunError>,
    warnings: &mut Vec<String>,
) {
    // Table order: service code order, parks in its own slot.
    let mut rows: Vec<(ServiceCode, &dyn ServedShare)> =
        coverage.iter().map(|r| (r.service, r as &dyn ServedShare)).collect();
    if let Some(p) = parks {
        rows.push((ServiceCode::Park, p as &dyn ServedShare));
    }
    rows.sort_by_key(|(c, _)| *c);
    if !rows.is_empty() {
        let shares: Vec<&dyn ServedShare> = rows.iter().map(|(_, r)| *r).collect();
        match timed(steps, "aggregate coverage", None, || aggregate_coverage(&shares)) {
            Ok(a) => {
                artifacts.push(ctx.artifact(None, "aggregate", "csv", report::aggregate_csv(&a)));
                artifacts.push(ctx.artifact(None, "aggregate", "json", report::to_json(&a)));
            }
            Err(e) => errors.push(run_error("aggregate", &e)),
        }
    }

    let all: Vec<Point> = pooled.iter().flat_map(|(_, p)| p.iter().copied()).collect();
    if all.is_empty() {
        warnings.push("no facilities loaded; density surface skipped".into());
    } else {
        let cfg = ctx.config;
        let density = timed(steps, "density", None, || -> Result<(String, String)> {
            let grid = kde_grid_with(&all, &ctx.inputs.border, cfg.cell_size_m, cfg.bandwidth_m, ctx.exec)?;
            let classes = classify_density(&grid, &cfg.density_breaks)?;
            let title = format!(
                "{}: services per km²",
                cfg.city_name.as_deref().unwrap_or(&ctx.prefix)
            );
            let svg = render_density_svg(&title, &ctx.inputs.border, &grid, &classes, &cfg.density_breaks)?;
            Ok((report::ascii_grid(&grid), svg))
        });
        match density {
            Ok((asc, svg)) => {
                artifacts.push(ctx.artifact(None, "density", "asc", asc));
                artifacts.push(ctx.artifact(None, "density", "svg", svg));
            }
            Err(e) => errors.push(run_error("density", &e)),
        }
    }

    let study_area = ctx
        .config
        .city_area_km2
        .unwrap_or_else(|| polygon_area(&ctx.inputs.border));
    if ctx.config.city_area_km2.is_some() {
        info!("nearest-neighbour study area overridden to {study_area} km²");
    }
    let mut nni = Vec::new();
    timed(steps, "nearest neighbour", None, || {
        for (code, points) in pooled {
            match nearest_neighbor_index(points, study_area) {
                Ok(index) => nni.push(NniRow {
                    service: *code,
                    points: points.len(),
                    index,
                }),
                Err(e) => warnings.push(format!("{code}: nearest-neighbour index skipped: {e}")),
            }
        }
    });
    if !nni.is_empty() {
        artifacts.push(ctx.artifact(None, "nni", "csv", report::nni_csv(&nni)));
        artifacts.push(ctx.artifact(None, "nni", "json", report::to_json(&nni)));
    }
}

/// Deletes files a previous run listed in its report that this run will not
/// rewrite, so the workspace holds exactly this run's manifest.
fn remove_stale(workspace: &Path, report_file: &str, artifacts: &[Artifact]) {
    let path = workspace.join(report_file);
    let Ok(text) = fs::read_to_string(&path) else {
        return;
    };
    let Ok(previous) = serde_json::from_str::<serde_json::Value>(&text) else {
        return;
    };
    let keep: BTreeSet<&str> = artifacts.iter().map(|a| a.file.as_str()).collect();
    let files = previous["manifest"].as_array().into_iter().flatten();
    for file in files.filter_map(|e| e["file"].as_str()) {
        // only bare file names, never anything outside the workspace
        if file.contains(['/', '\\']) || file == report_file || keep.contains(file) {
            continue;
        }
        let stale = workspace.join(file);
        if stale.is_file() {
            if let Err(e) = fs::remove_file(&stale) {
                warn!("could not remove stale output {}: {e}", stale.display());
            }
        }
    }
}
