//! Historical project records and the measurement constructs built on them.
//!
//! Cost overrun is actual over estimated cost, both in constant local currency
//! with the decision year as base year. Schedule slippage is actual over
//! estimated implementation months. A project "suffered an overrun" when its
//! ratio is strictly above 1 and "breaks" a threshold `τ` when its ratio is
//! at least `τ`.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::quantile::quantile_sorted;
use crate::{Error, Result};

pub const CSV_HEADER: [&str; 12] = [
    "id",
    "name",
    "country",
    "region",
    "project_type",
    "decision_year",
    "est_cost",
    "act_cost",
    "est_months",
    "act_months",
    "est_benefit",
    "act_benefit",
];

/// Quantile levels reported by [`summarize`] unless others are requested.
pub const DEFAULT_QUANTILES: [f64; 7] = [0.10, 0.20, 0.25, 0.50, 0.75, 0.80, 0.90];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Region {
    NorthAmerica,
    SouthAmerica,
    Africa,
    Asia,
    Europe,
    Oceania,
}

impl Region {
    pub const ALL: [Region; 6] = [
        Region::NorthAmerica,
        Region::SouthAmerica,
        Region::Africa,
        Region::Asia,
        Region::Europe,
        Region::Oceania,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Region::NorthAmerica => "NorthAmerica",
            Region::SouthAmerica => "SouthAmerica",
            Region::Africa => "Africa",
            Region::Asia => "Asia",
            Region::Europe => "Europe",
            Region::Oceania => "Oceania",
        }
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Region {
    type Err = Error;

    /// Case-insensitive; spaces, underscores and hyphens are ignored, so
    /// `north america` and `North_America` both parse.
    fn from_str(s: &str) -> Result<Self> {
        let key: String = s
            .chars()
            .filter(|c| !matches!(c, ' ' | '_' | '-'))
            .flat_map(char::to_lowercase)
            .collect();
        Region::ALL
            .into_iter()
            .find(|r| r.as_str().to_lowercase() == key)
            .ok_or_else(|| {
                Error::InvalidInput(format!(
                    "unknown region `{s}` (expected one of NorthAmerica, SouthAmerica, Africa, Asia, Europe, Oceania)"
                ))
            })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectRecord {
    pub id: String,
    pub name: String,
    pub country: String,
    pub region: Region,
    pub project_type: String,
    pub decision_year: i32,
    pub est_cost: f64,
    pub act_cost: f64,
    pub est_months: f64,
    pub act_months: f64,
    pub est_benefit: Option<f64>,
    pub act_benefit: Option<f64>,
}

impl ProjectRecord {
    /// Checks the record invariants, naming the offending field.
    pub fn validate(&self) -> std::result::Result<(), (&'static str, String)> {
        if self.id.trim().is_empty() {
            return Err(("id", "must not be empty".into()));
        }
        if !(1900..=2100).contains(&self.decision_year) {
            return Err(("decision_year", format!("{} outside [1900, 2100]", self.decision_year)));
        }
        for (field, v) in [
            ("est_cost", self.est_cost),
            ("act_cost", self.act_cost),
            ("est_months", self.est_months),
            ("act_months", self.act_months),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err((field, format!("{v} must be positive and finite")));
            }
        }
        for (field, v) in [("est_benefit", self.est_benefit), ("act_benefit", self.act_benefit)] {
            if let Some(v) = v {
                if !(v.is_finite() && v >= 0.0) {
                    return Err((field, format!("{v} must be non-negative and finite")));
                }
            }
        }
        Ok(())
    }

    pub fn decade(&self) -> i32 {
        self.decision_year.div_euclid(10) * 10
    }
}

pub fn cost_overrun_ratio(rec: &ProjectRecord) -> f64 {
    rec.act_cost / rec.est_cost
}

pub fn schedule_slippage(rec: &ProjectRecord) -> f64 {
    rec.act_months / rec.est_months
}

/// Actual over estimated benefits, when both are recorded and the estimate is
/// positive.
pub fn benefit_ratio(rec: &ProjectRecord) -> Option<f64> {
    match (rec.est_benefit, rec.act_benefit) {
        (Some(e), Some(a)) if e > 0.0 => Some(a / e),
        _ => None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Cost,
    Schedule,
    /// Records missing either benefit field are left out.
    Benefit,
}

impl Metric {
    pub fn ratio(&self, rec: &ProjectRecord) -> Option<f64> {
        match self {
            Metric::Cost => Some(cost_overrun_ratio(rec)),
            Metric::Schedule => Some(schedule_slippage(rec)),
            Metric::Benefit => benefit_ratio(rec),
        }
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "cost" => Ok(Metric::Cost),
            "schedule" => Ok(Metric::Schedule),
            "benefit" => Ok(Metric::Benefit),
            _ => Err(Error::InvalidInput(format!("unknown metric `{s}` (cost, schedule or benefit)"))),
        }
    }
}

/// A labelled collection of records with unique ids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceClass {
    pub label: String,
    records: Vec<ProjectRecord>,
}

impl ReferenceClass {
    pub fn new(label: impl Into<String>, records: Vec<ProjectRecord>) -> Result<Self> {
        let mut seen = HashSet::new();
        for (i, rec) in records.iter().enumerate() {
            if let Err((field, msg)) = rec.validate() {
                return Err(Error::InvalidInput(format!("record {i} (`{}`), {field}: {msg}", rec.id)));
            }
            if !seen.insert(rec.id.as_str()) {
                return Err(Error::InvalidInput(format!("duplicate record id `{}`", rec.id)));
            }
        }
        Ok(Self {
            label: label.into(),
            records,
        })
    }

    pub fn records(&self) -> &[ProjectRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn ratios(&self, metric: Metric) -> Vec<f64> {
        self.records.iter().filter_map(|r| metric.ratio(r)).collect()
    }

    pub fn filter(&self, label: impl Into<String>, pred: impl Fn(&ProjectRecord) -> bool) -> ReferenceClass {
        ReferenceClass {
            label: label.into(),
            records: self.records.iter().filter(|r| pred(r)).cloned().collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Strictness {
    /// Abort on the first malformed row.
    #[default]
    Strict,
    /// Skip malformed rows and report them.
    Lenient,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ingested {
    pub class: ReferenceClass,
    /// Row diagnostics for skipped rows (always empty in strict mode).
    pub skipped: Vec<Error>,
}

/// Reads records from CSV with the [`CSV_HEADER`] columns (any order).
/// Empty strings stand for absent benefits.
pub fn read_csv<R: Read>(reader: R, label: &str, mode: Strictness) -> Result<Ingested> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let mut col = HashMap::new();
    for (i, h) in headers.iter().enumerate() {
        col.insert(h.trim().to_string(), i);
    }
    let missing: Vec<&str> = CSV_HEADER.iter().copied().filter(|h| !col.contains_key(*h)).collect();
    if !missing.is_empty() {
        return Err(Error::Row {
            row: 1,
            field: None,
            message: format!("header is missing column(s): {}", missing.join(", ")),
        });
    }

    let mut records = Vec::new();
    let mut skipped = Vec::new();
    let mut seen: HashSet<String> = HashSet::new();
    for (i, row) in rdr.records().enumerate() {
        let outcome = row.map_err(Error::from).and_then(|row| {
            let line = row.position().map(|p| p.line() as usize).unwrap_or(i + 2);
            let rec = parse_row(&row, &col, line)?;
            if !seen.insert(rec.id.clone()) {
                return Err(Error::Row {
                    row: line,
                    field: Some("id".into()),
                    message: format!("duplicate id `{}`", rec.id),
                });
            }
            Ok(rec)
        });
        match (outcome, mode) {
            (Ok(rec), _) => records.push(rec),
            (Err(e), Strictness::Strict) => return Err(e),
            (Err(e), Strictness::Lenient) => skipped.push(e),
        }
    }
    Ok(Ingested {
        class: ReferenceClass::new(label, records)?,
        skipped,
    })
}

fn parse_row(row: &csv::StringRecord, col: &HashMap<String, usize>, line: usize) -> Result<ProjectRecord> {
    let raw = |name: &str| row.get(col[name]).unwrap_or("");
    // Text fields are kept verbatim; numbers and enums tolerate padding.
    let get = |name: &str| raw(name).trim();
    let err = |field: &str, message: String| Error::Row {
        row: line,
        field: Some(field.to_string()),
        message,
    };
    let num = |name: &str| -> Result<f64> {
        get(name)
            .parse::<f64>()
            .map_err(|_| err(name, format!("`{}` is not a number", get(name))))
    };
    let opt = |name: &str| -> Result<Option<f64>> {
        match get(name) {
            "" => Ok(None),
            s => s
                .parse::<f64>()
                .map(Some)
                .map_err(|_| err(name, format!("`{s}` is not a number"))),
        }
    };
    let rec = ProjectRecord {
        id: raw("id").to_string(),
        name: raw("name").to_string(),
        country: raw("country").to_string(),
        region: get("region").parse().map_err(|e: Error| err("region", e.to_string()))?,
        project_type: raw("project_type").to_string(),
        decision_year: get("decision_year")
            .parse()
            .map_err(|_| err("decision_year", format!("`{}` is not a year", get("decision_year"))))?,
        est_cost: num("est_cost")?,
        act_cost: num("act_cost")?,
        est_months: num("est_months")?,
        act_months: num("act_months")?,
        est_benefit: opt("est_benefit")?,
        act_benefit: opt("act_benefit")?,
    };
    rec.validate().map_err(|(field, msg)| err(field, msg))?;
    Ok(rec)
}

/// Writes records in [`CSV_HEADER`] order. Numbers use the shortest
/// representation that reads back to the same value.
pub fn write_csv<W: Write>(class: &ReferenceClass, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(CSV_HEADER)?;
    let opt = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
    for r in class.records() {
        w.write_record([
            r.id.clone(),
            r.name.clone(),
            r.country.clone(),
            r.region.to_string(),
            r.project_type.clone(),
            r.decision_year.to_string(),
            r.est_cost.to_string(),
            r.act_cost.to_string(),
            r.est_months.to_string(),
            r.act_months.to_string(),
            opt(r.est_benefit),
            opt(r.act_benefit),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Converts nominal amounts into base-year prices:
/// `amount * index(base_year) / index(year)`.
pub fn deflate(nominal: &[(i32, f64)], index: &[(i32, f64)], base_year: i32) -> Result<Vec<(i32, f64)>> {
    let idx: HashMap<i32, f64> = index.iter().copied().collect();
    if let Some((y, v)) = index.iter().find(|(_, v)| !(v.is_finite() && *v > 0.0)) {
        return Err(Error::InvalidInput(format!("price index for {y} must be positive (got {v})")));
    }
    let base = *idx
        .get(&base_year)
        .ok_or_else(|| Error::MissingData(format!("price index has no entry for base year {base_year}")))?;
    nominal
        .iter()
        .map(|&(year, amount)| {
            idx.get(&year)
                .map(|level| (year, amount * base / level))
                .ok_or_else(|| Error::MissingData(format!("price index has no entry for year {year}")))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantilePoint {
    pub p: f64,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdShare {
    pub threshold: f64,
    pub share: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryStats {
    pub n: usize,
    pub mean: f64,
    pub median: f64,
    /// P75 - P25.
    pub iqr: f64,
    pub quantiles: Vec<QuantilePoint>,
    /// Share of ratios strictly above 1.
    pub share_over_1: f64,
    /// Share of ratios at or above each threshold.
    pub share_breaking: Vec<ThresholdShare>,
}

impl SummaryStats {
    pub fn quantile(&self, p: f64) -> Option<f64> {
        self.quantiles.iter().find(|q| q.p == p).map(|q| q.value)
    }

    pub fn share_breaking(&self, threshold: f64) -> Option<f64> {
        self.share_breaking.iter().find(|s| s.threshold == threshold).map(|s| s.share)
    }
}

/// Summary statistics of raw ratios. The result does not depend on the order
/// of `values`.
pub fn summarize_ratios(values: &[f64], thresholds: &[f64], levels: &[f64]) -> Result<SummaryStats> {
    if values.is_empty() {
        return Err(Error::InvalidInput("cannot summarize an empty reference class".into()));
    }
    if let Some(v) = values.iter().find(|v| !v.is_finite()) {
        return Err(Error::InvalidInput(format!("non-finite ratio {v}")));
    }
    if let Some(p) = levels.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::Domain(format!("quantile level {p} outside [0, 1]")));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let share = |count: usize| count as f64 / n as f64;
    let mut levels = levels.to_vec();
    levels.sort_by(f64::total_cmp);
    levels.dedup();
    Ok(SummaryStats {
        n,
        mean: sorted.iter().sum::<f64>() / n as f64,
        median: quantile_sorted(&sorted, 0.5),
        iqr: quantile_sorted(&sorted, 0.75) - quantile_sorted(&sorted, 0.25),
        quantiles: levels
            .iter()
            .map(|&p| QuantilePoint {
                p,
                value: quantile_sorted(&sorted, p),
            })
            .collect(),
        share_over_1: share(n - sorted.partition_point(|&v| v <= 1.0)),
        share_breaking: thresholds
            .iter()
            .map(|&t| ThresholdShare {
                threshold: t,
                share: share(n - sorted.partition_point(|&v| v < t)),
            })
            .collect(),
    })
}

pub fn summarize(class: &ReferenceClass, metric: Metric, thresholds: &[f64]) -> Result<SummaryStats> {
    summarize_ratios(&class.ratios(metric), thresholds, &DEFAULT_QUANTILES)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupKey {
    Region,
    ProjectType,
    Decade,
}

impl GroupKey {
    pub fn key_of(&self, rec: &ProjectRecord) -> String {
        match self {
            GroupKey::Region => rec.region.to_string(),
            GroupKey::ProjectType => rec.project_type.clone(),
            GroupKey::Decade => format!("{}s", rec.decade()),
        }
    }
}

impl FromStr for GroupKey {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "region" => Ok(GroupKey::Region),
            "type" | "project_type" => Ok(GroupKey::ProjectType),
            "decade" => Ok(GroupKey::Decade),
            _ => Err(Error::InvalidInput(format!("unknown grouping `{s}` (region, type or decade)"))),
        }
    }
}

/// [`summarize`] per group. Groups without any ratio for `metric` are omitted.
pub fn group_stats(
    class: &ReferenceClass,
    key: GroupKey,
    metric: Metric,
    thresholds: &[f64],
) -> Result<BTreeMap<String, SummaryStats>> {
    let mut groups: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for rec in class.records() {
        if let Some(v) = metric.ratio(rec) {
            groups.entry(key.key_of(rec)).or_default().push(v);
        }
    }
    groups
        .into_iter()
        .map(|(k, vs)| summarize_ratios(&vs, thresholds, &DEFAULT_QUANTILES).map(|s| (k, s)))
        .collect()
}

/// Share of a debt increase accounted for by one project's cost.
pub fn debt_burden_share(debt_start: f64, debt_end: f64, project_cost: f64) -> Result<f64> {
    let increase = debt_end - debt_start;
    if !(increase > 0.0 && increase.is_finite()) {
        return Err(Error::Domain(format!(
            "debt must increase over the period (start {debt_start}, end {debt_end})"
        )));
    }
    Ok(project_cost / increase)
}
