//! Historical project records: CSV ingestion, validation and the per-record
//! inaccuracy measures.
//!
//! Cost inaccuracy is actual minus estimated cost as a percent of the
//! estimate (positive = overrun). Traffic inaccuracy is actual minus forecast
//! traffic as a percent of the forecast (negative = shortfall). Costs are
//! expected in constant prices; `cost_unit` is a label and nothing is
//! deflated here.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Exact CSV header, in column order.
pub const CSV_HEADER: [&str; 12] = [
    "id",
    "name",
    "project_type",
    "region",
    "decision_year",
    "completion_year",
    "estimated_cost",
    "actual_cost",
    "cost_unit",
    "estimated_traffic",
    "actual_traffic",
    "traffic_unit",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProjectType {
    Rail,
    Road,
    BridgeTunnel,
    Other,
}

impl ProjectType {
    pub const ALL: [ProjectType; 4] =
        [ProjectType::Rail, ProjectType::Road, ProjectType::BridgeTunnel, ProjectType::Other];

    pub fn as_str(self) -> &'static str {
        match self {
            ProjectType::Rail => "rail",
            ProjectType::Road => "road",
            ProjectType::BridgeTunnel => "bridge_tunnel",
            ProjectType::Other => "other",
        }
    }
}

impl fmt::Display for ProjectType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ProjectType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rail" => Ok(ProjectType::Rail),
            "road" => Ok(ProjectType::Road),
            "bridge_tunnel" => Ok(ProjectType::BridgeTunnel),
            "other" => Ok(ProjectType::Other),
            _ => {
                Err(Error::invalid(format!("unknown project type {s:?} (expected rail, road, bridge_tunnel or other)")))
            }
        }
    }
}

/// One historical (or planned) project.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectRecord<T> {
    pub id: String,
    pub name: String,
    pub project_type: ProjectType,
    pub region: String,
    pub decision_year: i32,
    pub completion_year: Option<i32>,
    pub estimated_cost: T,
    pub actual_cost: Option<T>,
    pub cost_unit: String,
    pub estimated_traffic: Option<T>,
    pub actual_traffic: Option<T>,
    pub traffic_unit: String,
}

impl<T: Scalar> ProjectRecord<T> {
    pub fn has_cost_outcome(&self) -> bool {
        self.actual_cost.is_some()
    }

    pub fn has_traffic_outcome(&self) -> bool {
        self.estimated_traffic.is_some() && self.actual_traffic.is_some()
    }
}

/// A rule broken by a record. Violations are data, not errors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub field: &'static str,
    pub rule: &'static str,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} violates {}", self.field, self.rule)
    }
}

pub const RULE_POSITIVE: &str = "positivity (must be finite and > 0)";
pub const RULE_YEAR_ORDER: &str = "year order (completion_year >= decision_year)";
pub const RULE_TRAFFIC_PAIR: &str = "traffic pairing (estimated and actual traffic present together)";
pub const RULE_NON_EMPTY: &str = "non-empty id";

/// Checks every record invariant. An empty list means the record is valid.
pub fn validate_record<T: Scalar>(record: &ProjectRecord<T>) -> Vec<Violation> {
    let mut out = Vec::new();
    let positive = |v: T| v.is_finite() && v > T::zero();

    if record.id.trim().is_empty() {
        out.push(Violation { field: "id", rule: RULE_NON_EMPTY });
    }
    if !positive(record.estimated_cost) {
        out.push(Violation { field: "estimated_cost", rule: RULE_POSITIVE });
    }
    if record.actual_cost.is_some_and(|v| !positive(v)) {
        out.push(Violation { field: "actual_cost", rule: RULE_POSITIVE });
    }
    if record.estimated_traffic.is_some_and(|v| !positive(v)) {
        out.push(Violation { field: "estimated_traffic", rule: RULE_POSITIVE });
    }
    if record.actual_traffic.is_some_and(|v| !positive(v)) {
        out.push(Violation { field: "actual_traffic", rule: RULE_POSITIVE });
    }
    match (record.estimated_traffic, record.actual_traffic) {
        (Some(_), None) => out.push(Violation { field: "actual_traffic", rule: RULE_TRAFFIC_PAIR }),
        (None, Some(_)) => out.push(Violation { field: "estimated_traffic", rule: RULE_TRAFFIC_PAIR }),
        _ => {}
    }
    if let Some(done) = record.completion_year {
        if done < record.decision_year {
            out.push(Violation { field: "completion_year", rule: RULE_YEAR_ORDER });
        }
    }
    out
}

fn inaccuracy<T: Scalar>(estimated: T, actual: T) -> T {
    T::hundred() * (actual - estimated) / estimated
}

/// Cost overrun in percent: `100 * (actual - estimated) / estimated`.
pub fn cost_inaccuracy<T: Scalar>(record: &ProjectRecord<T>) -> Result<T> {
    let actual =
        record.actual_cost.ok_or_else(|| Error::IncompleteRecord { id: record.id.clone(), field: "actual_cost" })?;
    Ok(inaccuracy(record.estimated_cost, actual))
}

/// Traffic inaccuracy in percent; negative means actual traffic fell short.
pub fn traffic_inaccuracy<T: Scalar>(record: &ProjectRecord<T>) -> Result<T> {
    let estimated = record
        .estimated_traffic
        .ok_or_else(|| Error::IncompleteRecord { id: record.id.clone(), field: "estimated_traffic" })?;
    let actual = record
        .actual_traffic
        .ok_or_else(|| Error::IncompleteRecord { id: record.id.clone(), field: "actual_traffic" })?;
    Ok(inaccuracy(estimated, actual))
}

/// Validated collection of records with unique ids.
///
/// Immutable once built; share it freely between readers.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<T> {
    records: Vec<ProjectRecord<T>>,
    provenance: String,
}

impl<T: Scalar> Dataset<T> {
    /// Builds a dataset, checking id uniqueness and every record invariant.
    pub fn new(records: Vec<ProjectRecord<T>>, provenance: impl Into<String>) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::invalid("dataset has no records"));
        }
        let mut seen = HashSet::new();
        for (i, r) in records.iter().enumerate() {
            if let Some(v) = validate_record(r).first() {
                return Err(Error::Row { row: i + 1, message: format!("record {}: {v}", r.id) });
            }
            if !seen.insert(r.id.as_str()) {
                return Err(Error::Row { row: i + 1, message: format!("duplicate id {:?}", r.id) });
            }
        }
        Ok(Dataset { records, provenance: provenance.into() })
    }

    pub fn records(&self) -> &[ProjectRecord<T>] {
        &self.records
    }

    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&ProjectRecord<T>> {
        self.records.iter().find(|r| r.id == id)
    }

    /// Writes the dataset back out in the ingestion format. Provenance lines
    /// are emitted as leading `#` comments.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for line in self.provenance.lines() {
            out.push_str("# ");
            out.push_str(line);
            out.push('\n');
        }
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(CSV_HEADER).expect("in-memory write");
        for r in &self.records {
            let opt = |v: Option<T>| v.map(|x| x.to_string()).unwrap_or_default();
            let year = |v: Option<i32>| v.map(|x| x.to_string()).unwrap_or_default();
            w.write_record([
                r.id.clone(),
                r.name.clone(),
                r.project_type.to_string(),
                r.region.clone(),
                r.decision_year.to_string(),
                year(r.completion_year),
                r.estimated_cost.to_string(),
                opt(r.actual_cost),
                r.cost_unit.clone(),
                opt(r.estimated_traffic),
                opt(r.actual_traffic),
                r.traffic_unit.clone(),
            ])
            .expect("in-memory write");
        }
        let bytes = w.into_inner().expect("in-memory flush");
        out.push_str(&String::from_utf8(bytes).expect("utf-8 fields"));
        out
    }
}

/// Parses the dataset CSV. All-or-nothing: the first bad row aborts with its
/// line number. Leading lines starting with `#` are kept as provenance.
/// Name and unit columns are taken verbatim; other fields are trimmed.
pub fn parse_dataset<T: Scalar>(csv_text: &str) -> Result<Dataset<T>> {
    let mut provenance = Vec::new();
    let mut skipped = 0usize;
    let mut body = csv_text;
    while let Some(rest) = body.strip_prefix('#') {
        let (line, tail) = match rest.find('\n') {
            Some(i) => (&rest[..i], &rest[i + 1..]),
            None => (rest, ""),
        };
        let line = line.trim_end_matches('\r');
        provenance.push(line.strip_prefix(' ').unwrap_or(line));
        skipped += 1;
        body = tail;
    }

    let mut reader = csv::ReaderBuilder::new().has_headers(false).flexible(true).from_reader(body.as_bytes());
    let mut rows = reader.records();

    let header = match rows.next() {
        Some(h) => h.map_err(|e| Error::Csv(e.to_string()))?,
        None => return Err(Error::Csv("missing header".into())),
    };
    let header_row = skipped + 1;
    if header.iter().map(str::trim).ne(CSV_HEADER.iter().copied()) {
        return Err(Error::Row {
            row: header_row,
            message: format!("header must be exactly `{}`", CSV_HEADER.join(",")),
        });
    }

    let mut records = Vec::new();
    let mut seen = HashSet::new();
    for row in rows {
        let row = row.map_err(|e| Error::Csv(e.to_string()))?;
        let line = row.position().map_or(0, |p| p.line() as usize) + skipped;
        let fail = |message: String| Error::Row { row: line, message };
        if row.len() == 1 && row.get(0).is_some_and(|f| f.trim().is_empty()) {
            continue;
        }
        if row.len() != CSV_HEADER.len() {
            return Err(fail(format!("expected {} columns, found {}", CSV_HEADER.len(), row.len())));
        }
        let record = parse_row::<T>(&row).map_err(fail)?;
        if let Some(v) = validate_record(&record).first() {
            return Err(fail(v.to_string()));
        }
        if !seen.insert(record.id.clone()) {
            return Err(fail(format!("duplicate id {:?}", record.id)));
        }
        records.push(record);
    }
    if records.is_empty() {
        return Err(Error::Csv("no data rows".into()));
    }
    Ok(Dataset { records, provenance: provenance.join("\n") })
}

fn parse_row<T: Scalar>(row: &csv::StringRecord) -> std::result::Result<ProjectRecord<T>, String> {
    let raw = |i: usize| row.get(i).unwrap_or("");
    let field = |i: usize| raw(i).trim();
    let optional = |i: usize| Some(field(i)).filter(|s| !s.is_empty());

    let number = |i: usize| -> std::result::Result<Option<T>, String> {
        optional(i).map(|s| s.parse::<T>().map_err(|_| format!("{} is not numeric: {s:?}", CSV_HEADER[i]))).transpose()
    };
    let year = |i: usize| -> std::result::Result<Option<i32>, String> {
        optional(i).map(|s| s.parse::<i32>().map_err(|_| format!("{} is not a year: {s:?}", CSV_HEADER[i]))).transpose()
    };

    Ok(ProjectRecord {
        id: field(0).to_string(),
        name: raw(1).to_string(),
        project_type: field(2).parse().map_err(|e: Error| e.to_string())?,
        region: field(3).to_string(),
        decision_year: year(4)?.ok_or("decision_year is required")?,
        completion_year: year(5)?,
        estimated_cost: number(6)?.ok_or("estimated_cost is required")?,
        actual_cost: number(7)?,
        cost_unit: raw(8).to_string(),
        estimated_traffic: number(9)?,
        actual_traffic: number(10)?,
        traffic_unit: raw(11).to_string(),
    })
}
