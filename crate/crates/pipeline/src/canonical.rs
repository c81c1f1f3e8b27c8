//! Canonical CSV layouts shared by `ingest`, `simulate` and `estimate`.
//!
//! Floats are written with Rust's shortest round-trip formatting, so reading
//! a file and writing it back reproduces the same bytes.

use std::collections::BTreeMap;
use std::path::Path;

use r0_core::panel::{Panel, PanelObservation};
use r0_core::simulate::Truth;
use r0_core::{CovariateSet, Day, RegionSeries};
use serde::{Deserialize, Serialize};

use crate::dates::parse_iso;
use crate::error::{open_csv, read_to_string, write_file, PipelineError, Result};

pub const CASES_FILE: &str = "cases.csv";
pub const COVARIATES_FILE: &str = "covariates.csv";
pub const PANEL_FILE: &str = "panel.csv";
pub const TRUTH_FILE: &str = "truth.json";
pub const WARNINGS_FILE: &str = "warnings.jsonl";

/// Canonical float text.
pub fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

fn csv_writer() -> csv::Writer<Vec<u8>> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new())
}

fn finish(w: csv::Writer<Vec<u8>>) -> Vec<u8> {
    w.into_inner().expect("in-memory csv writer")
}

pub(crate) fn write_rows<I, R>(header: &[String], rows: I) -> Vec<u8>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut w = csv_writer();
    w.write_record(header).expect("in-memory write");
    for row in rows {
        w.write_record(row.into_iter().collect::<Vec<_>>())
            .expect("in-memory write");
    }
    finish(w)
}

/// `(line, fields)` pairs.
pub(crate) type Rows = Vec<(u64, Vec<String>)>;

/// Reads a CSV into its header and rows.
pub(crate) fn read_rows(path: &Path) -> Result<(Vec<String>, Rows)> {
    let mut rdr = open_csv(path)?;
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| PipelineError::csv(path, e))?
        .iter()
        .map(str::to_owned)
        .collect();
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| PipelineError::csv(path, e))?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        rows.push((line, rec.iter().map(str::to_owned).collect()));
    }
    Ok((header, rows))
}

pub(crate) fn column(path: &Path, header: &[String], name: &str) -> Result<usize> {
    header
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| PipelineError::parse(path, 1, format!("missing column {name:?}")))
}

fn number(path: &Path, line: u64, text: &str, what: &str) -> Result<f64> {
    text.trim()
        .parse::<f64>()
        .map_err(|_| PipelineError::parse(path, line, format!("invalid {what} {text:?}")))
}

fn optional_number(path: &Path, line: u64, text: &str, what: &str) -> Result<Option<f64>> {
    if text.trim().is_empty() {
        Ok(None)
    } else {
        number(path, line, text, what).map(Some)
    }
}

fn date(path: &Path, line: u64, text: &str) -> Result<Day> {
    parse_iso(text).ok_or_else(|| PipelineError::parse(path, line, format!("malformed date {text:?}")))
}

pub fn cases_csv(series: &[RegionSeries]) -> Vec<u8> {
    let header = ["region_id", "population", "date", "new_cases"].map(String::from);
    let rows = series.iter().flat_map(|s| {
        s.reported_new_cases().iter().enumerate().map(move |(k, v)| {
            vec![
                s.region_id().to_owned(),
                s.population().to_string(),
                s.date(k).to_string(),
                fmt_f64(*v),
            ]
        })
    });
    write_rows(&header, rows)
}

pub fn write_cases(path: &Path, series: &[RegionSeries]) -> Result<()> {
    write_file(path, cases_csv(series))
}

/// Reads canonical cases; regions come back sorted by id.
pub fn read_cases(path: &Path) -> Result<Vec<RegionSeries>> {
    let (header, rows) = read_rows(path)?;
    let [ci, cp, cd, cn] = ["region_id", "population", "date", "new_cases"].map(|n| column(path, &header, n));
    let (ci, cp, cd, cn) = (ci?, cp?, cd?, cn?);
    let mut by_region: BTreeMap<String, (u64, BTreeMap<Day, f64>)> = BTreeMap::new();
    for (line, f) in rows {
        let region = f[ci].clone();
        let pop: u64 = f[cp]
            .trim()
            .parse()
            .map_err(|_| PipelineError::parse(path, line, format!("invalid population {:?}", f[cp])))?;
        let day = date(path, line, &f[cd])?;
        let cases = number(path, line, &f[cn], "new_cases")?;
        let entry = by_region.entry(region.clone()).or_insert((pop, BTreeMap::new()));
        if entry.0 != pop {
            return Err(PipelineError::parse(
                path,
                line,
                format!("population of {region} changes"),
            ));
        }
        if entry.1.insert(day, cases).is_some() {
            return Err(PipelineError::parse(
                path,
                line,
                format!("duplicate key ({region}, {day})"),
            ));
        }
    }
    by_region
        .into_iter()
        .map(|(region, (pop, days))| {
            let dates: Vec<Day> = days.keys().copied().collect();
            let values: Vec<f64> = days.into_values().collect();
            RegionSeries::from_dated(region.clone(), pop, &dates, values)
                .map_err(|e| PipelineError::Input(format!("{}: region {region}: {e}", path.display())))
        })
        .collect()
}

pub fn covariates_csv(set: &CovariateSet) -> Vec<u8> {
    let mut header = vec!["region_id".to_owned(), "date".to_owned()];
    header.extend(set.names().iter().cloned());
    let rows = set.regions().flat_map(|region| {
        set.rows(region).map(move |(day, values)| {
            let mut row = vec![region.to_owned(), day.to_string()];
            row.extend(values.iter().map(|v| fmt_opt(*v)));
            row
        })
    });
    write_rows(&header, rows)
}

pub fn write_covariates(path: &Path, set: &CovariateSet) -> Result<()> {
    write_file(path, covariates_csv(set))
}

pub fn read_covariates(path: &Path) -> Result<CovariateSet> {
    let (header, rows) = read_rows(path)?;
    let ci = column(path, &header, "region_id")?;
    let cd = column(path, &header, "date")?;
    let value_cols: Vec<usize> = (0..header.len()).filter(|&c| c != ci && c != cd).collect();
    let mut set = CovariateSet::new(value_cols.iter().map(|&c| header[c].clone()).collect());
    for (line, f) in rows {
        let day = date(path, line, &f[cd])?;
        if set.row(&f[ci], day).is_some() {
            return Err(PipelineError::parse(
                path,
                line,
                format!("duplicate key ({}, {day})", f[ci]),
            ));
        }
        let values = value_cols
            .iter()
            .map(|&c| optional_number(path, line, &f[c], &header[c]))
            .collect::<Result<Vec<_>>>()?;
        set.insert(&f[ci], day, values);
    }
    Ok(set)
}

pub fn panel_csv(panel: &Panel) -> Vec<u8> {
    let mut header = vec!["region_id".to_owned(), "date".to_owned(), "y".to_owned()];
    header.extend(panel.covariate_names().iter().cloned());
    header.push("thr_var".into());
    let regions = panel.regions();
    let rows = panel.observations().iter().map(|o| {
        let mut row = vec![regions[o.region].clone(), o.date.to_string(), fmt_f64(o.y)];
        row.extend(o.x.iter().map(|v| fmt_f64(*v)));
        row.push(fmt_f64(o.thr_var));
        row
    });
    write_rows(&header, rows)
}

pub fn write_panel(path: &Path, panel: &Panel) -> Result<()> {
    write_file(path, panel_csv(panel))
}

pub fn read_panel(path: &Path) -> Result<Panel> {
    let (header, rows) = read_rows(path)?;
    if header.len() < 4 || header[..3] != ["region_id", "date", "y"] || header[header.len() - 1] != "thr_var" {
        return Err(PipelineError::parse(path, 1, "expected region_id,date,y,...,thr_var"));
    }
    let names: Vec<String> = header[3..header.len() - 1].to_vec();
    let mut regions: Vec<String> = Vec::new();
    let mut index: BTreeMap<String, usize> = BTreeMap::new();
    let mut observations = Vec::with_capacity(rows.len());
    for (line, f) in rows {
        let region = *index.entry(f[0].clone()).or_insert_with(|| {
            regions.push(f[0].clone());
            regions.len() - 1
        });
        let x = (3..header.len() - 1)
            .map(|c| number(path, line, &f[c], &header[c]))
            .collect::<Result<Vec<_>>>()?;
        observations.push(PanelObservation {
            region,
            date: date(path, line, &f[1])?,
            y: number(path, line, &f[2], "y")?,
            x,
            thr_var: number(path, line, &f[header.len() - 1], "thr_var")?,
        });
    }
    Panel::new(names, regions, observations).map_err(PipelineError::Data)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionTruthRecord {
    pub region_id: String,
    pub alpha: f64,
    pub population: u64,
    pub outbreak_date: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub halted_date: Option<String>,
    pub clamped_days: usize,
    pub final_c: f64,
}

/// Ground truth of a simulated data set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthFile {
    pub regions: Vec<RegionTruthRecord>,
    pub covariate_names: Vec<String>,
    pub psi: Vec<f64>,
    pub kappa: f64,
    pub tau: f64,
    pub gamma: f64,
    pub lag_p: usize,
    pub noise_sd: f64,
    pub mf_start: f64,
    pub mf_end: f64,
    pub seed: u64,
}

impl TruthFile {
    pub fn from_truth(truth: &Truth, series: &[RegionSeries]) -> TruthFile {
        let regions = truth
            .regions
            .iter()
            .zip(series)
            .map(|(r, s)| RegionTruthRecord {
                region_id: r.region_id.clone(),
                alpha: r.alpha,
                population: r.population,
                outbreak_date: s.date(r.outbreak).to_string(),
                halted_date: r.halted_at.map(|k| s.date(k).to_string()),
                clamped_days: r.clamped_days,
                final_c: r.final_c,
            })
            .collect();
        TruthFile {
            regions,
            covariate_names: truth.covariate_names.clone(),
            psi: truth.psi.clone(),
            kappa: truth.kappa,
            tau: truth.tau,
            gamma: truth.gamma,
            lag_p: truth.lag_p,
            noise_sd: truth.noise_sd,
            mf_start: truth.mf_start,
            mf_end: truth.mf_end,
            seed: truth.seed,
        }
    }

    pub fn alpha_of(&self, region: &str) -> Option<f64> {
        self.regions.iter().find(|r| r.region_id == region).map(|r| r.alpha)
    }
}

pub fn write_truth(path: &Path, truth: &TruthFile) -> Result<()> {
    let mut text = serde_json::to_string_pretty(truth).expect("truth serializes");
    text.push('\n');
    write_file(path, text)
}

pub fn read_truth(path: &Path) -> Result<TruthFile> {
    serde_json::from_str(&read_to_string(path)?).map_err(|e| PipelineError::parse(path, e.line() as u64, e.to_string()))
}
