//! Delta variant share from sequencing summaries.

use std::collections::BTreeMap;
use std::path::Path;

use r0_core::Day;

use super::mapping::Mapping;
use super::source::{cell_number, checked_share, row_date, RawTable};
use crate::config::VariantFill;
use crate::error::{PipelineError, Result};
use crate::warnings::WarningRecord;

const SOURCE: &str = "variants";

/// Share reports per region on the source's own cadence.
pub type VariantReports = BTreeMap<String, BTreeMap<Day, f64>>;

pub fn parse_variants(path: &Path, mapping: &Mapping, warnings: &mut Vec<WarningRecord>) -> Result<VariantReports> {
    let cols = &mapping.variants;
    let table = RawTable::load(path)?;
    let cr = table.col(&cols.region)?;
    let cd = table.col(&cols.date)?;
    enum Layout {
        Share(usize),
        Counts(usize, usize),
    }
    let layout = match (&cols.share, &cols.delta, &cols.total) {
        (Some(s), _, _) => Layout::Share(table.col(s)?),
        (None, Some(d), Some(t)) => Layout::Counts(table.col(d)?, table.col(t)?),
        _ => {
            return Err(PipelineError::Config(
                "variants mapping needs share or delta and total".into(),
            ))
        }
    };
    let mut out = VariantReports::new();
    for (line, f) in &table.rows {
        let key = mapping.canonical(f[cr].trim()).to_owned();
        let Some(day) = row_date(&f[cd], &cols.date_format, SOURCE, *line, warnings) else {
            continue;
        };
        let num = |c: usize| cell_number(&f[c]).map_err(|_| table.error(*line, format!("invalid number {:?}", f[c])));
        let share = match layout {
            Layout::Share(c) => num(c)?,
            Layout::Counts(d, t) => match (num(d)?, num(t)?) {
                (Some(d), Some(t)) if t > 0.0 => Some(d / t),
                _ => None,
            },
        };
        let Some(share) = share else { continue };
        let share = checked_share(share, "delta share", &table, *line)?;
        if out.entry(key.clone()).or_default().insert(day, share).is_some() {
            return Err(table.error(*line, format!("duplicate key ({key}, {day})")));
        }
    }
    Ok(out)
}

/// Expands sparse reports to `first..=last`. Days before the first report
/// are zero; after the last report the final value is held.
pub fn daily_share(reports: &BTreeMap<Day, f64>, first: Day, last: Day, fill: VariantFill) -> Vec<f64> {
    crate::dates::days(first, last)
        .map(|day| {
            let before = reports.range(..=day).next_back();
            let after = reports.range(day..).next();
            match (before, after, fill) {
                (None, _, _) => 0.0,
                (Some((_, &v)), None, _) | (Some((_, &v)), Some(_), VariantFill::Step) => v,
                (Some((&d0, &v0)), Some((&d1, &v1)), VariantFill::Linear) => {
                    if d1 == d0 {
                        v0
                    } else {
                        v0 + (v1 - v0) * day.days_since(d0) as f64 / d1.days_since(d0) as f64
                    }
                }
            }
        })
        .collect()
}
