//! CSV and JSON renderings of analysis reports. All output is deterministic
//! for identical inputs.

use serde::Serialize;

use crate::coverage::{AggregateCoverage, CoverageReport, NearestNeighborIndex, ParksReport};
use crate::density::DensityGrid;
use crate::standards::ServiceCode;

pub const NODATA: f64 = -9999.0;

pub fn to_json<T: Serialize + ?Sized>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("report serializes") + "\n"
}

fn csv_text(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(&r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("utf-8 csv")
}

fn km2(v: f64) -> String {
    format!("{v:.6}")
}

fn pct(v: f64) -> String {
    format!("{v:.2}")
}

/// City row first, then one row per district.
pub fn coverage_csv(r: &CoverageReport) -> String {
    let city = vec![
        r.service.to_string(),
        "city".to_string(),
        km2(r.built_up_km2),
        km2(r.served_km2),
        pct(r.served_pct),
        km2(r.unserved_km2),
        pct(r.unserved_pct),
    ];
    let districts = r.per_district.iter().map(|d| {
        vec![
            r.service.to_string(),
            d.name.clone(),
            km2(d.built_up_km2),
            km2(d.served_km2),
            pct(d.served_pct),
            km2(d.unserved_km2),
            pct(d.unserved_pct),
        ]
    });
    csv_text(
        &[
            "service",
            "area",
            "built_up_km2",
            "served_km2",
            "served_pct",
            "unserved_km2",
            "unserved_pct",
        ],
        std::iter::once(city).chain(districts),
    )
}

/// Per-service served/unserved rows followed by the average row.
pub fn aggregate_csv(a: &AggregateCoverage) -> String {
    let rows = a
        .rows
        .iter()
        .map(|r| vec![r.service.clone(), pct(r.served_pct), pct(r.unserved_pct)])
        .chain(std::iter::once(vec![
            "Average".to_string(),
            pct(a.served_pct),
            pct(a.unserved_pct),
        ]));
    csv_text(&["service", "served_pct", "unserved_pct"], rows)
}

pub fn parks_csv(p: &ParksReport) -> String {
    let rows = p
        .per_district
        .iter()
        .chain(std::iter::once(&p.totals))
        .map(|r| {
            vec![
                r.name.clone(),
                format!("{}", r.population),
                km2(r.share_km2),
                km2(r.parks_km2),
                pct(r.pct_of_share),
                km2(r.deficiency_km2),
                pct(r.deficiency_pct),
            ]
        });
    csv_text(
        &[
            "district",
            "population",
            "share_km2",
            "parks_km2",
            "pct_of_share",
            "deficiency_km2",
            "deficiency_pct",
        ],
        rows,
    )
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NniRow {
    pub service: ServiceCode,
    pub points: usize,
    #[serde(flatten)]
    pub index: NearestNeighborIndex,
}

pub fn nni_csv(rows: &[NniRow]) -> String {
    csv_text(
        &["service", "points", "r", "observed_mean_km", "expected_mean_km", "pattern"],
        rows.iter().map(|r| {
            vec![
                r.service.to_string(),
                r.points.to_string(),
                format!("{:.4}", r.index.r),
                format!("{:.4}", r.index.observed_mean_km),
                format!("{:.4}", r.index.expected_mean_km),
                format!("{:?}", r.index.pattern).to_lowercase(),
            ]
        }),
    )
}

/// ESRI ASCII grid; rows written north to south, masked cells as NODATA.
pub fn ascii_grid(g: &DensityGrid) -> String {
    let mut out = format!(
        "ncols {}\nnrows {}\nxllcorner {}\nyllcorner {}\ncellsize {}\nNODATA_value {}\n",
        g.width, g.height, g.origin.x, g.origin.y, g.cell_size, NODATA
    );
    for row in (0..g.height).rev() {
        let line: Vec<String> = (0..g.width)
            .map(|col| match g.value(col, row) {
                Some(v) => format!("{v:.6}"),
                None => format!("{NODATA}"),
            })
            .collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

/// Header keywords with their values, then rows north to south.
pub type AsciiGrid = (Vec<(String, f64)>, Vec<Vec<f64>>);

/// Reads an ASCII grid back.
pub fn parse_ascii_grid(text: &str) -> Option<AsciiGrid> {
    let mut lines = text.lines();
    let mut header = Vec::new();
    for _ in 0..6 {
        let mut it = lines.next()?.split_whitespace();
        let key = it.next()?.to_string();
        let value: f64 = it.next()?.parse().ok()?;
        header.push((key, value));
    }
    let rows = lines
        .map(|l| l.split_whitespace().map(|v| v.parse().ok()).collect::<Option<Vec<f64>>>())
        .collect::<Option<Vec<_>>>()?;
    Some((header, rows))
}
