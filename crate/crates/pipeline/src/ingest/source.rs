//! Helpers shared by the raw-source parsers.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use r0_core::{Day, RegionSeries};

use crate::canonical::{column, read_rows};
use crate::dates::parse_with;
use crate::error::{PipelineError, Result};
use crate::warnings::WarningRecord;

/// Shares may overshoot [0, 1] by at most this much before it is an error.
pub const SHARE_SLACK: f64 = 1e-6;

pub(crate) struct RawTable {
    pub path: PathBuf,
    pub header: Vec<String>,
    pub rows: Vec<(u64, Vec<String>)>,
}

impl RawTable {
    pub fn load(path: &Path) -> Result<RawTable> {
        let (header, rows) = read_rows(path)?;
        Ok(RawTable {
            path: path.to_path_buf(),
            header,
            rows,
        })
    }

    pub fn col(&self, name: &str) -> Result<usize> {
        column(&self.path, &self.header, name)
    }

    pub fn error(&self, line: u64, msg: impl Into<String>) -> PipelineError {
        PipelineError::parse(&self.path, line, msg)
    }
}

/// `Ok(None)` for an empty cell.
pub(crate) fn cell_number(text: &str) -> std::result::Result<Option<f64>, ()> {
    let t = text.trim();
    if t.is_empty() || t.eq_ignore_ascii_case("nan") || t.eq_ignore_ascii_case("na") {
        return Ok(None);
    }
    t.parse::<f64>().ok().filter(|v| v.is_finite()).map(Some).ok_or(())
}

/// Parses a date cell, recording a rejected row on failure.
pub(crate) fn row_date(
    text: &str,
    format: &str,
    source: &str,
    line: u64,
    warnings: &mut Vec<WarningRecord>,
) -> Option<Day> {
    let d = parse_with(text, format);
    if d.is_none() {
        warnings.push(WarningRecord::new(source, "row_rejected", format!("malformed date {text:?}")).line(line));
    }
    d
}

/// Checks a share against [0, 1], clamping overshoots within [`SHARE_SLACK`].
pub(crate) fn checked_share(v: f64, what: &str, table: &RawTable, line: u64) -> Result<f64> {
    if (-SHARE_SLACK..=1.0 + SHARE_SLACK).contains(&v) {
        Ok(v.clamp(0.0, 1.0))
    } else {
        Err(table.error(line, format!("{what} {v} outside [0, 1]")))
    }
}

/// Daily values per region with a duplicate-key check.
#[derive(Debug, Default)]
pub(crate) struct Keyed {
    pub values: BTreeMap<String, BTreeMap<Day, Option<f64>>>,
}

impl Keyed {
    pub fn insert(&mut self, table: &RawTable, line: u64, region: &str, day: Day, v: Option<f64>) -> Result<()> {
        let slot = self.values.entry(region.to_owned()).or_default();
        if slot.insert(day, v).is_some() {
            return Err(table.error(line, format!("duplicate key ({region}, {day})")));
        }
        Ok(())
    }

    /// Adds to an existing value instead of rejecting duplicates.
    pub fn accumulate(&mut self, region: &str, day: Day, v: Option<f64>) {
        let slot = self
            .values
            .entry(region.to_owned())
            .or_default()
            .entry(day)
            .or_insert(None);
        *slot = match (*slot, v) {
            (Some(a), Some(b)) => Some(a + b),
            (a, b) => a.or(b),
        };
    }
}

/// Turns sparse daily new-case reports into a contiguous series. Empty days
/// before the first report are zero; the series ends at the last report;
/// empty or absent days in between are filled with zero and reported;
/// negative counts are floored at zero, one warning per day.
pub(crate) fn case_series(
    source: &str,
    region: &str,
    population: u64,
    reports: &BTreeMap<Day, Option<f64>>,
    warnings: &mut Vec<WarningRecord>,
) -> Result<Option<RegionSeries>> {
    let Some(first_row) = reports.keys().next().copied() else {
        return Ok(None);
    };
    let reported: Vec<Day> = reports.iter().filter(|(_, v)| v.is_some()).map(|(d, _)| *d).collect();
    let (Some(&first), Some(&last)) = (reported.first(), reported.last()) else {
        warnings.push(WarningRecord::new(source, "no_reports", "no case counts reported").region(region));
        return Ok(None);
    };
    let mut values = Vec::with_capacity((last.0 - first_row.0 + 1) as usize);
    let mut gaps = 0usize;
    let mut first_gap = None;
    for day in crate::dates::days(first_row, last) {
        let v = match reports.get(&day).copied().flatten() {
            Some(v) if v < 0.0 => {
                warnings.push(
                    WarningRecord::new(source, "negative_floored", format!("daily count {v} set to 0"))
                        .region(region)
                        .date(day),
                );
                0.0
            }
            Some(v) => v,
            None if day < first => 0.0,
            None => {
                gaps += 1;
                first_gap.get_or_insert(day);
                0.0
            }
        };
        values.push(v);
    }
    if let Some(day) = first_gap {
        warnings.push(
            WarningRecord::new(source, "gap_filled", format!("{gaps} days without a report set to 0"))
                .region(region)
                .date(day),
        );
    }
    RegionSeries::new(region, population, first_row, values)
        .map(Some)
        .map_err(|e| PipelineError::Input(format!("{source}: region {region}: {e}")))
}
