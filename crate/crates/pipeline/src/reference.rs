//! Bundled reference estimates for the US-state and country samples.
//!
//! `sample` is `pre_vaccination` or `full`; `mf` is written `5-2` or
//! `8-2.5`.

use std::collections::BTreeMap;

use crate::bundle::R0Row;
use crate::compare::KeyedTable;
use crate::error::{PipelineError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReferenceTable {
    UsR0,
    CountryR0,
    UsR0NoMitigation,
    CountryR0NoMitigation,
    UsCoefficients,
    CountryCoefficients,
    UsFitSummary,
    CountryFitSummary,
}

impl ReferenceTable {
    pub const ALL: [ReferenceTable; 8] = [
        ReferenceTable::UsR0,
        ReferenceTable::CountryR0,
        ReferenceTable::UsR0NoMitigation,
        ReferenceTable::CountryR0NoMitigation,
        ReferenceTable::UsCoefficients,
        ReferenceTable::CountryCoefficients,
        ReferenceTable::UsFitSummary,
        ReferenceTable::CountryFitSummary,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ReferenceTable::UsR0 => "us_r0",
            ReferenceTable::CountryR0 => "country_r0",
            ReferenceTable::UsR0NoMitigation => "us_r0_no_mitigation",
            ReferenceTable::CountryR0NoMitigation => "country_r0_no_mitigation",
            ReferenceTable::UsCoefficients => "us_coefficients",
            ReferenceTable::CountryCoefficients => "country_coefficients",
            ReferenceTable::UsFitSummary => "us_fit_summary",
            ReferenceTable::CountryFitSummary => "country_fit_summary",
        }
    }

    pub fn from_name(name: &str) -> Option<ReferenceTable> {
        ReferenceTable::ALL.into_iter().find(|t| t.name() == name)
    }

    pub fn text(self) -> &'static str {
        match self {
            ReferenceTable::UsR0 => include_str!("../reference/us_r0.csv"),
            ReferenceTable::CountryR0 => include_str!("../reference/country_r0.csv"),
            ReferenceTable::UsR0NoMitigation => include_str!("../reference/us_r0_no_mitigation.csv"),
            ReferenceTable::CountryR0NoMitigation => include_str!("../reference/country_r0_no_mitigation.csv"),
            ReferenceTable::UsCoefficients => include_str!("../reference/us_coefficients.csv"),
            ReferenceTable::CountryCoefficients => include_str!("../reference/country_coefficients.csv"),
            ReferenceTable::UsFitSummary => include_str!("../reference/us_fit_summary.csv"),
            ReferenceTable::CountryFitSummary => include_str!("../reference/country_fit_summary.csv"),
        }
    }

    fn records(self) -> Vec<BTreeMap<String, String>> {
        let mut rdr = csv::Reader::from_reader(self.text().as_bytes());
        let header: Vec<String> = rdr
            .headers()
            .expect("bundled header")
            .iter()
            .map(str::to_owned)
            .collect();
        rdr.records()
            .map(|r| {
                let r = r.expect("bundled reference row");
                header.iter().cloned().zip(r.iter().map(str::to_owned)).collect()
            })
            .collect()
    }
}

pub const SAMPLES: [&str; 2] = ["pre_vaccination", "full"];
pub const MF_GRID: [&str; 2] = ["5-2", "8-2.5"];

#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceR0 {
    pub region: String,
    pub sample: String,
    pub mf: String,
    pub estimate: f64,
    pub se_robust2: f64,
}

fn num(v: &str) -> f64 {
    v.parse().expect("bundled reference number")
}

pub fn r0_rows(table: ReferenceTable) -> Vec<ReferenceR0> {
    table
        .records()
        .into_iter()
        .map(|r| ReferenceR0 {
            region: r["region"].clone(),
            sample: r["sample"].clone(),
            mf: r["mf"].clone(),
            estimate: num(&r["estimate"]),
            se_robust2: num(&r["se_robust2"]),
        })
        .collect()
}

/// Rows of one sample and MF as an R0 table, as if read from a bundle.
pub fn r0_bundle_rows(table: ReferenceTable, sample: &str, mf: &str) -> Result<Vec<R0Row>> {
    let rows: Vec<R0Row> = r0_rows(table)
        .into_iter()
        .filter(|r| r.sample == sample && r.mf == mf)
        .map(|r| R0Row {
            region: r.region,
            estimate: r.estimate,
            se_usual: None,
            se_robust1: None,
            se_robust2: Some(r.se_robust2),
        })
        .collect();
    if rows.is_empty() {
        return Err(PipelineError::Input(format!(
            "reference {} has no rows for sample {sample:?} and mf {mf:?}",
            table.name()
        )));
    }
    Ok(rows)
}

pub fn r0_keyed(table: ReferenceTable, sample: &str, mf: &str) -> Result<KeyedTable> {
    let rows = r0_bundle_rows(table, sample, mf)?;
    Ok(KeyedTable {
        label: format!("{}[{sample}, {mf}]", table.name()),
        values: rows.into_iter().map(|r| (r.region, r.estimate)).collect(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceCoefficient {
    pub name: String,
    pub sample: String,
    pub mf: String,
    pub estimate: f64,
    /// `(se, t)` for usual, robust1 and robust2.
    pub usual: (f64, f64),
    pub robust1: (f64, f64),
    pub robust2: (f64, f64),
}

pub fn coefficient_rows(table: ReferenceTable) -> Vec<ReferenceCoefficient> {
    table
        .records()
        .into_iter()
        .map(|r| ReferenceCoefficient {
            name: r["name"].clone(),
            sample: r["sample"].clone(),
            mf: r["mf"].clone(),
            estimate: num(&r["estimate"]),
            usual: (num(&r["se_usual"]), num(&r["t_usual"])),
            robust1: (num(&r["se_robust1"]), num(&r["t_robust1"])),
            robust2: (num(&r["se_robust2"]), num(&r["t_robust2"])),
        })
        .collect()
}

pub fn coefficients_keyed(table: ReferenceTable, sample: &str, mf: &str) -> Result<KeyedTable> {
    let values: BTreeMap<String, f64> = coefficient_rows(table)
        .into_iter()
        .filter(|r| r.sample == sample && r.mf == mf)
        .map(|r| (r.name, r.estimate))
        .collect();
    if values.is_empty() {
        return Err(PipelineError::Input(format!(
            "reference {} has no rows for sample {sample:?} and mf {mf:?}",
            table.name()
        )));
    }
    Ok(KeyedTable {
        label: format!("{}[{sample}, {mf}]", table.name()),
        values,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitSummary {
    pub sample: String,
    pub mf: String,
    pub tau: f64,
    pub r_squared: f64,
    pub obs_count: usize,
    pub region_count: usize,
    pub t_min: usize,
    pub t_max: usize,
}

pub fn fit_summaries(table: ReferenceTable) -> Vec<FitSummary> {
    table
        .records()
        .into_iter()
        .map(|r| FitSummary {
            sample: r["sample"].clone(),
            mf: r["mf"].clone(),
            tau: num(&r["tau"]),
            r_squared: num(&r["r_squared"]),
            obs_count: r["obs_count"].parse().expect("bundled count"),
            region_count: r["region_count"].parse().expect("bundled count"),
            t_min: r["t_min"].parse().expect("bundled count"),
            t_max: r["t_max"].parse().expect("bundled count"),
        })
        .collect()
}

/// `5-2` style key for an MF pair.
pub fn mf_key(start: f64, end: f64) -> String {
    format!("{start}-{end}")
}
