//! Policy stringency and economic support indices.

use std::collections::BTreeMap;
use std::path::Path;

use r0_core::Day;

use super::mapping::Mapping;
use super::source::{cell_number, checked_share, row_date, RawTable};
use crate::config::SourceKind;
use crate::error::Result;
use crate::warnings::WarningRecord;

const SOURCE: &str = "oxcgrt";

/// Both indices rescaled from 0-100 to [0, 1].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolicyDay {
    pub stringency: Option<f64>,
    pub economic_support: Option<f64>,
}

pub type PolicyData = BTreeMap<String, BTreeMap<Day, PolicyDay>>;

/// Reads national rows for countries or state rows for the US. Region keys
/// are country names or state names after aliasing.
pub fn parse_oxcgrt(
    path: &Path,
    mapping: &Mapping,
    kind: SourceKind,
    warnings: &mut Vec<WarningRecord>,
) -> Result<PolicyData> {
    let cols = &mapping.oxcgrt;
    let table = RawTable::load(path)?;
    let cc = table.col(&cols.country)?;
    let cr = table.col(&cols.region).ok();
    let cj = table.col(&cols.jurisdiction).ok();
    let cd = table.col(&cols.date)?;
    let cs = table.col(&cols.stringency)?;
    let ce = table.col(&cols.economic_support)?;
    let mut out = PolicyData::new();
    for (line, f) in &table.rows {
        let region_name = cr.map(|c| f[c].trim()).unwrap_or("");
        let jurisdiction = cj.map(|c| f[c].trim());
        let national = match jurisdiction {
            Some(j) => j == cols.national_jurisdiction,
            None => region_name.is_empty(),
        };
        let key = match kind {
            SourceKind::Countries if national => f[cc].trim(),
            SourceKind::UsStates
                if !national
                    && f[cc].trim() == cols.state_country
                    && jurisdiction.is_none_or(|j| j == cols.state_jurisdiction) =>
            {
                region_name
            }
            _ => continue,
        };
        let key = mapping.canonical(key).to_owned();
        let Some(day) = row_date(&f[cd], &cols.date_format, SOURCE, *line, warnings) else {
            continue;
        };
        let index = |c: usize, what: &str| -> Result<Option<f64>> {
            let v = cell_number(&f[c]).map_err(|_| table.error(*line, format!("invalid number {:?}", f[c])))?;
            v.map(|v| checked_share(v / 100.0, what, &table, *line)).transpose()
        };
        let value = PolicyDay {
            stringency: index(cs, "stringency index / 100")?,
            economic_support: index(ce, "economic support index / 100")?,
        };
        if out.entry(key.clone()).or_default().insert(day, value).is_some() {
            return Err(table.error(*line, format!("duplicate key ({key}, {day})")));
        }
    }
    Ok(out)
}
