//! State-level case file.

use std::collections::BTreeMap;
use std::path::Path;

use r0_core::{Day, RegionSeries};

use super::mapping::Mapping;
use super::regions::contiguous_by_abbreviation;
use super::source::{case_series, cell_number, row_date, Keyed, RawTable};
use crate::error::{PipelineError, Result};
use crate::warnings::WarningRecord;

const SOURCE: &str = "cdc";

/// Parses state case counts, keeping the contiguous states and DC. Region
/// ids are full state names. `requested` names states that must be present.
pub fn parse_cdc_states(
    path: &Path,
    mapping: &Mapping,
    requested: Option<&[String]>,
    warnings: &mut Vec<WarningRecord>,
) -> Result<Vec<RegionSeries>> {
    let cols = &mapping.cdc;
    let table = RawTable::load(path)?;
    let cs = table.col(&cols.state)?;
    let cd = table.col(&cols.date)?;
    let (value_col, cumulative) = match (&cols.new_cases, &cols.total_cases) {
        (Some(c), _) => (table.col(c)?, false),
        (None, Some(c)) => (table.col(c)?, true),
        (None, None) => {
            return Err(PipelineError::Config(
                "cdc mapping needs new_cases or total_cases".into(),
            ))
        }
    };
    let states = contiguous_by_abbreviation();
    let mut direct = Keyed::default();
    let mut merged = Keyed::default();
    let mut merge_target: BTreeMap<String, String> = BTreeMap::new();
    let mut dropped: BTreeMap<String, usize> = BTreeMap::new();
    for (line, f) in &table.rows {
        let raw = f[cs].trim();
        let (abbr, is_merge) = match cols.merge.get(raw) {
            Some(target) => (target.as_str(), true),
            None => (raw, false),
        };
        let Some(info) = states.get(abbr) else {
            *dropped.entry(raw.to_owned()).or_default() += 1;
            continue;
        };
        let Some(day) = row_date(&f[cd], &cols.date_format, SOURCE, *line, warnings) else {
            continue;
        };
        let v =
            cell_number(&f[value_col]).map_err(|_| table.error(*line, format!("invalid number {:?}", f[value_col])))?;
        if is_merge {
            merge_target.insert(raw.to_owned(), info.name.clone());
            merged.insert(&table, *line, raw, day, v)?;
        } else {
            direct.insert(&table, *line, &info.name, day, v)?;
        }
    }
    for (code, days) in merged.values {
        for (day, v) in days {
            direct.accumulate(&merge_target[&code], day, v);
        }
    }
    for (code, rows) in dropped {
        warnings.push(
            WarningRecord::new(
                SOURCE,
                "filtered",
                format!("{rows} rows outside the contiguous states and DC"),
            )
            .region(&code),
        );
    }
    if let Some(req) = requested {
        let missing: Vec<&str> = req
            .iter()
            .filter(|r| !direct.values.contains_key(r.as_str()))
            .map(String::as_str)
            .collect();
        if !missing.is_empty() {
            return Err(PipelineError::Input(format!(
                "{}: states missing from the file: {}",
                path.display(),
                missing.join(", ")
            )));
        }
    }
    let population: BTreeMap<&str, u64> = states.values().map(|s| (s.name.as_str(), s.population)).collect();
    let mut out = Vec::new();
    for (name, days) in &direct.values {
        if requested.is_some_and(|r| !r.contains(name)) {
            continue;
        }
        let reports = if cumulative { difference(days) } else { days.clone() };
        if let Some(s) = case_series(SOURCE, name, population[name.as_str()], &reports, warnings)? {
            out.push(s);
        }
    }
    Ok(out)
}

/// Daily increments of a cumulative series; the first report counts in full.
fn difference(days: &BTreeMap<Day, Option<f64>>) -> BTreeMap<Day, Option<f64>> {
    let mut prev: Option<f64> = None;
    days.iter()
        .map(|(d, v)| {
            let inc = v.map(|v| v - prev.unwrap_or(0.0));
            if v.is_some() {
                prev = *v;
            }
            (*d, inc)
        })
        .collect()
}
