//! Results bundle: the files written by `estimate` and `counterfactual`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::canonical::{column, fmt_f64, read_rows, write_rows, WARNINGS_FILE};
use crate::error::{read_to_string, write_file, PipelineError, Result};
use crate::warnings::{read_jsonl, to_jsonl, WarningRecord};

pub const R0_TABLE_FILE: &str = "r0_table.csv";
pub const COEFFICIENTS_FILE: &str = "coefficients.csv";
pub const FIT_META_FILE: &str = "fit_meta.json";

pub const BUNDLE_FILES: [&str; 4] = [R0_TABLE_FILE, COEFFICIENTS_FILE, FIT_META_FILE, WARNINGS_FILE];

#[derive(Debug, Clone, PartialEq)]
pub struct R0Row {
    pub region: String,
    pub estimate: f64,
    pub se_usual: Option<f64>,
    pub se_robust1: Option<f64>,
    pub se_robust2: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientRow {
    pub name: String,
    pub estimate: f64,
    /// `(se, t)` for usual, robust1 and robust2.
    pub usual: (f64, f64),
    pub robust1: (f64, f64),
    pub robust2: (f64, f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Full,
    Counterfactual,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdMeta {
    pub grid_size: usize,
    pub grid_min: f64,
    pub grid_max: f64,
    /// `None` when the statistic is unbounded (exact fit).
    pub sup_f: Option<f64>,
    pub weak_identification: bool,
    pub indicator_identified: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitMeta {
    pub scenario: String,
    pub model: ModelKind,
    pub mf_start: f64,
    pub mf_end: f64,
    pub tau: Option<f64>,
    pub kappa: Option<f64>,
    pub r_squared: f64,
    pub ssr: f64,
    pub obs_count: usize,
    pub region_count: usize,
    pub t_min: usize,
    pub t_max: usize,
    pub truncation_lag: usize,
    pub threshold: Option<ThresholdMeta>,
    pub warning_count: usize,
    /// Resolved run configuration.
    pub config: serde_json::Value,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bundle {
    pub r0: Vec<R0Row>,
    pub coefficients: Vec<CoefficientRow>,
    pub meta: FitMeta,
    pub warnings: Vec<WarningRecord>,
}

fn opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

pub fn r0_table_csv(rows: &[R0Row]) -> Vec<u8> {
    let header = ["region", "estimate", "se_usual", "se_robust1", "se_robust2"].map(String::from);
    write_rows(
        &header,
        rows.iter().map(|r| {
            vec![
                r.region.clone(),
                fmt_f64(r.estimate),
                opt(r.se_usual),
                opt(r.se_robust1),
                opt(r.se_robust2),
            ]
        }),
    )
}

pub fn coefficients_csv(rows: &[CoefficientRow]) -> Vec<u8> {
    let header = [
        "name",
        "estimate",
        "se_usual",
        "t_usual",
        "se_robust1",
        "t_robust1",
        "se_robust2",
        "t_robust2",
    ]
    .map(String::from);
    write_rows(
        &header,
        rows.iter().map(|r| {
            vec![
                r.name.clone(),
                fmt_f64(r.estimate),
                fmt_f64(r.usual.0),
                fmt_f64(r.usual.1),
                fmt_f64(r.robust1.0),
                fmt_f64(r.robust1.1),
                fmt_f64(r.robust2.0),
                fmt_f64(r.robust2.1),
            ]
        }),
    )
}

pub fn fit_meta_json(meta: &FitMeta) -> String {
    let mut s = serde_json::to_string_pretty(meta).expect("fit meta serializes");
    s.push('\n');
    s
}

impl Bundle {
    pub fn write(&self, dir: &Path) -> Result<()> {
        write_file(&dir.join(R0_TABLE_FILE), r0_table_csv(&self.r0))?;
        write_file(&dir.join(COEFFICIENTS_FILE), coefficients_csv(&self.coefficients))?;
        write_file(&dir.join(FIT_META_FILE), fit_meta_json(&self.meta))?;
        write_file(&dir.join(WARNINGS_FILE), to_jsonl(&self.warnings))
    }

    pub fn read(dir: &Path) -> Result<Bundle> {
        let meta_path = dir.join(FIT_META_FILE);
        let meta = serde_json::from_str(&read_to_string(&meta_path)?)
            .map_err(|e| PipelineError::parse(&meta_path, e.line() as u64, e.to_string()))?;
        Ok(Bundle {
            r0: read_r0_table(&dir.join(R0_TABLE_FILE))?,
            coefficients: read_coefficients(&dir.join(COEFFICIENTS_FILE))?,
            meta,
            warnings: read_jsonl(&dir.join(WARNINGS_FILE))?,
        })
    }
}

fn parse_num(path: &Path, line: u64, text: &str) -> Result<f64> {
    text.trim()
        .parse()
        .map_err(|_| PipelineError::parse(path, line, format!("invalid number {text:?}")))
}

/// Reads an R0 table. Only `region` and `estimate` are required, so tables
/// typed in by hand can be reported and compared.
pub fn read_r0_table(path: &Path) -> Result<Vec<R0Row>> {
    let (header, rows) = read_rows(path)?;
    let cr = column(path, &header, "region")?;
    let ce = column(path, &header, "estimate")?;
    let se_cols = ["se_usual", "se_robust1", "se_robust2"].map(|n| header.iter().position(|h| h == n));
    rows.into_iter()
        .map(|(line, f)| {
            let se = |k: usize| -> Result<Option<f64>> {
                match se_cols[k].map(|c| f[c].trim()) {
                    None | Some("") => Ok(None),
                    Some(t) => parse_num(path, line, t).map(Some),
                }
            };
            Ok(R0Row {
                region: f[cr].clone(),
                estimate: parse_num(path, line, &f[ce])?,
                se_usual: se(0)?,
                se_robust1: se(1)?,
                se_robust2: se(2)?,
            })
        })
        .collect()
}

pub fn read_coefficients(path: &Path) -> Result<Vec<CoefficientRow>> {
    let (header, rows) = read_rows(path)?;
    let names = [
        "name",
        "estimate",
        "se_usual",
        "t_usual",
        "se_robust1",
        "t_robust1",
        "se_robust2",
        "t_robust2",
    ];
    let cols = names
        .iter()
        .map(|n| column(path, &header, n))
        .collect::<Result<Vec<_>>>()?;
    rows.into_iter()
        .map(|(line, f)| {
            let n = |k: usize| parse_num(path, line, &f[cols[k]]);
            Ok(CoefficientRow {
                name: f[cols[0]].clone(),
                estimate: n(1)?,
                usual: (n(2)?, n(3)?),
                robust1: (n(4)?, n(5)?),
                robust2: (n(6)?, n(7)?),
            })
        })
        .collect()
}
