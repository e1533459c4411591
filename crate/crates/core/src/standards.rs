//! City planning standards: per-service coverage distances derived from
//! catchment cells, plus the fixed standards for services that are not
//! derived (hospitals, cultural centres, parks).

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::voronoi::CatchmentCell;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum ServiceCode {
    Kg,
    Pri,
    Pre,
    Sec,
    Amb,
    Hu,
    Hosp,
    Mosq,
    Chur,
    Cult,
    Park,
    Post,
    Fire,
}

impl ServiceCode {
    pub const ALL: [ServiceCode; 13] = [
        ServiceCode::Kg,
        ServiceCode::Pri,
        ServiceCode::Pre,
        ServiceCode::Sec,
        ServiceCode::Amb,
        ServiceCode::Hu,
        ServiceCode::Hosp,
        ServiceCode::Mosq,
        ServiceCode::Chur,
        ServiceCode::Cult,
        ServiceCode::Park,
        ServiceCode::Post,
        ServiceCode::Fire,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ServiceCode::Kg => "KG",
            ServiceCode::Pri => "PRI",
            ServiceCode::Pre => "PRE",
            ServiceCode::Sec => "SEC",
            ServiceCode::Amb => "AMB",
            ServiceCode::Hu => "HU",
            ServiceCode::Hosp => "HOSP",
            ServiceCode::Mosq => "MOSQ",
            ServiceCode::Chur => "CHUR",
            ServiceCode::Cult => "CULT",
            ServiceCode::Park => "PARK",
            ServiceCode::Post => "POST",
            ServiceCode::Fire => "FIRE",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            ServiceCode::Kg => "Kindergarten",
            ServiceCode::Pri => "Primary schools",
            ServiceCode::Pre => "Preparatory schools",
            ServiceCode::Sec => "Secondary schools",
            ServiceCode::Amb => "Ambulance",
            ServiceCode::Hu => "Health units",
            ServiceCode::Hosp => "Hospitals",
            ServiceCode::Mosq => "Mosques",
            ServiceCode::Chur => "Churches",
            ServiceCode::Cult => "Libraries and cultural centres",
            ServiceCode::Park => "Parks and open areas",
            ServiceCode::Post => "Postal services",
            ServiceCode::Fire => "Fire extinguishing points",
        }
    }

    pub fn group(self) -> &'static str {
        match self {
            ServiceCode::Kg | ServiceCode::Pri | ServiceCode::Pre | ServiceCode::Sec => {
                "Educational services"
            }
            ServiceCode::Amb | ServiceCode::Hu | ServiceCode::Hosp => "Health services",
            ServiceCode::Mosq | ServiceCode::Chur => "Religious services",
            ServiceCode::Cult | ServiceCode::Park => "Cultural and recreational services",
            ServiceCode::Post | ServiceCode::Fire => "Other services",
        }
    }

    /// Whether the standard for this service comes from its catchment cells.
    pub fn is_derived(self) -> bool {
        !matches!(self, ServiceCode::Hosp | ServiceCode::Cult | ServiceCode::Park)
    }
}

impl fmt::Display for ServiceCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ServiceCode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let upper = s.trim().to_ascii_uppercase();
        ServiceCode::ALL
            .into_iter()
            .find(|c| c.as_str() == upper)
            .ok_or_else(|| Error::UnknownServiceCode(s.to_string()))
    }
}

impl TryFrom<String> for ServiceCode {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<ServiceCode> for String {
    fn from(c: ServiceCode) -> String {
        c.as_str().to_string()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StandardKind {
    DistanceDerived,
    DistanceFixed,
    PerCapita,
}

impl StandardKind {
    pub fn as_str(self) -> &'static str {
        match self {
            StandardKind::DistanceDerived => "distance-derived",
            StandardKind::DistanceFixed => "distance-fixed",
            StandardKind::PerCapita => "per-capita",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanningStandard {
    pub service: ServiceCode,
    pub kind: StandardKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_km: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_km: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_capita_m2: Option<f64>,
}

impl PlanningStandard {
    /// Minimum service limit as half the maximum.
    pub fn derived(service: ServiceCode, max_km: f64) -> Self {
        PlanningStandard {
            service,
            kind: StandardKind::DistanceDerived,
            min_km: Some(max_km / 2.0),
            max_km: Some(max_km),
            per_capita_m2: None,
        }
    }

    pub fn fixed(service: ServiceCode, min_km: f64, max_km: f64) -> Self {
        PlanningStandard {
            service,
            kind: StandardKind::DistanceFixed,
            min_km: Some(min_km),
            max_km: Some(max_km),
            per_capita_m2: None,
        }
    }

    pub fn per_capita(service: ServiceCode, m2_per_person: f64) -> Self {
        PlanningStandard {
            service,
            kind: StandardKind::PerCapita,
            min_km: None,
            max_km: None,
            per_capita_m2: Some(m2_per_person),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Parameter(format!("{} standard: {msg}", self.service)));
        match self.kind {
            StandardKind::DistanceDerived | StandardKind::DistanceFixed => {
                let (Some(min), Some(max)) = (self.min_km, self.max_km) else {
                    return bad("distance standard needs min_km and max_km".into());
                };
                if !(min > 0.0 && min < max && max.is_finite()) {
                    return bad(format!("need 0 < min_km < max_km, got {min} / {max}"));
                }
                if self.kind == StandardKind::DistanceDerived && (min - max / 2.0).abs() > 1e-12 * max {
                    return bad(format!("derived min_km must be max_km / 2, got {min} / {max}"));
                }
                if self.per_capita_m2.is_some() {
                    return bad("distance standard carries a per-capita value".into());
                }
            }
            StandardKind::PerCapita => {
                if !self.per_capita_m2.is_some_and(|v| v > 0.0 && v.is_finite()) {
                    return bad("per-capita standard needs per_capita_m2 > 0".into());
                }
                if self.min_km.is_some() || self.max_km.is_some() {
                    return bad("per-capita standard carries distances".into());
                }
            }
        }
        Ok(())
    }
}

/// How per-cell coverage distances are summarised into the maximum limit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Statistic {
    #[default]
    Mean,
    Median,
}

/// Maximum limit = mean cell coverage distance; minimum = half of it.
pub fn derive_standard(cells: &[CatchmentCell], service: ServiceCode) -> Result<PlanningStandard> {
    derive_standard_with(cells, service, Statistic::Mean)
}

pub fn derive_standard_with(
    cells: &[CatchmentCell],
    service: ServiceCode,
    statistic: Statistic,
) -> Result<PlanningStandard> {
    if !service.is_derived() {
        return Err(Error::WrongKind {
            service,
            found: if service == ServiceCode::Park {
                "per-capita"
            } else {
                "distance-fixed"
            },
            expected: "distance-derived",
        });
    }
    if cells.is_empty() {
        return Err(Error::Parameter(format!(
            "no catchment cells to derive the {service} standard from"
        )));
    }
    let mut distances: Vec<f64> = cells.iter().map(|c| c.coverage_distance_km).collect();
    let max_km = match statistic {
        Statistic::Mean => distances.iter().sum::<f64>() / distances.len() as f64,
        Statistic::Median => {
            distances.sort_by(f64::total_cmp);
            let n = distances.len();
            if n % 2 == 1 {
                distances[n / 2]
            } else {
                0.5 * (distances[n / 2 - 1] + distances[n / 2])
            }
        }
    };
    Ok(PlanningStandard::derived(service, max_km))
}

pub const PARK_M2_PER_PERSON: f64 = 11.0;

/// Hospitals 40–50 km, cultural centres 3–5 km, parks 11 m² per person.
pub fn fixed_standards() -> StandardsTable {
    let mut t = StandardsTable::default();
    t.insert(
        PlanningStandard::fixed(ServiceCode::Hosp, 40.0, 50.0),
        Provenance::Fixed,
    );
    t.insert(
        PlanningStandard::fixed(ServiceCode::Cult, 3.0, 5.0),
        Provenance::Fixed,
    );
    t.insert(
        PlanningStandard::per_capita(ServiceCode::Park, PARK_M2_PER_PERSON),
        Provenance::Fixed,
    );
    t
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "kebab-case")]
pub enum Provenance {
    /// Derived from a layer of `facilities` catchment cells.
    Derived { facilities: usize },
    Fixed,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Provenance::Derived { facilities } => {
                write!(f, "derived from {facilities} facilities; min = max / 2")
            }
            Provenance::Fixed => f.write_str("fixed"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandardsEntry {
    #[serde(flatten)]
    pub standard: PlanningStandard,
    pub provenance: Provenance,
}

/// At most one standard per service, ordered by service code.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct StandardsTable {
    entries: BTreeMap<ServiceCode, StandardsEntry>,
}

impl StandardsTable {
    /// Inserts or replaces the entry for the standard's service.
    pub fn insert(&mut self, standard: PlanningStandard, provenance: Provenance) {
        self.entries.insert(
            standard.service,
            StandardsEntry {
                standard,
                provenance,
            },
        );
    }

    pub fn get(&self, service: ServiceCode) -> Option<&PlanningStandard> {
        self.entries.get(&service).map(|e| &e.standard)
    }

    pub fn entry(&self, service: ServiceCode) -> Option<&StandardsEntry> {
        self.entries.get(&service)
    }

    pub fn entries(&self) -> impl Iterator<Item = &StandardsEntry> {
        self.entries.values()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Adds entries of `other` for services not already present.
    pub fn merge_missing(&mut self, other: &StandardsTable) {
        for (code, e) in &other.entries {
            self.entries.entry(*code).or_insert_with(|| e.clone());
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (code, e) in &self.entries {
            if *code != e.standard.service {
                return Err(Error::Parameter(format!(
                    "table key {code} holds a {} standard",
                    e.standard.service
                )));
            }
            e.standard.validate()?;
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("standards table serializes") + "\n"
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let table: StandardsTable = serde_json::from_str(text)
            .map_err(|e| Error::Parameter(format!("standards table: {e}")))?;
        table.validate()?;
        Ok(table)
    }

    /// CSV with columns group, service, code, min_km, max_km, per_capita_m2,
    /// kind, provenance. Distances are rounded to three decimals here only.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "group",
            "service",
            "code",
            "min_km",
            "max_km",
            "per_capita_m2",
            "kind",
            "provenance",
        ])
        .expect("in-memory write");
        let fmt3 = |v: Option<f64>| v.map(|x| format!("{x:.3}")).unwrap_or_default();
        for e in self.entries.values() {
            let s = &e.standard;
            w.write_record([
                s.service.group().to_string(),
                s.service.label().to_string(),
                s.service.to_string(),
                fmt3(s.min_km),
                fmt3(s.max_km),
                s.per_capita_m2.map(|v| format!("{v}")).unwrap_or_default(),
                s.kind.as_str().to_string(),
                e.provenance.to_string(),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf-8 csv")
    }
}
