//! Country case, population and vaccination file.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use r0_core::{Day, RegionSeries};

use super::mapping::{Mapping, OwidColumns};
use super::source::{case_series, cell_number, checked_share, row_date, Keyed, RawTable};
use crate::error::Result;
use crate::warnings::WarningRecord;

const SOURCE: &str = "owid";

#[derive(Debug, Clone, Default, PartialEq)]
pub struct OwidData {
    pub series: Vec<RegionSeries>,
    /// Fully vaccinated share on reporting days.
    pub vaccinated: BTreeMap<String, BTreeMap<Day, f64>>,
}

fn wanted(requested: Option<&[String]>) -> Option<BTreeSet<&str>> {
    requested.map(|r| r.iter().map(String::as_str).collect())
}

/// Requested regions that never appeared in the file.
fn reject_unknown(
    requested: Option<&[String]>,
    seen: &BTreeSet<String>,
    path: &Path,
    warnings: &mut Vec<WarningRecord>,
) {
    for r in requested.unwrap_or_default() {
        if !seen.contains(r) {
            warnings.push(
                WarningRecord::new(SOURCE, "unknown_region", format!("not found in {}", path.display())).region(r),
            );
        }
    }
}

pub fn parse_owid(
    path: &Path,
    mapping: &Mapping,
    requested: Option<&[String]>,
    warnings: &mut Vec<WarningRecord>,
) -> Result<OwidData> {
    let cols: &OwidColumns = &mapping.owid;
    let table = RawTable::load(path)?;
    let (cl, cd, cn, cv, cp) = (
        table.col(&cols.location)?,
        table.col(&cols.date)?,
        table.col(&cols.new_cases)?,
        table.col(&cols.people_fully_vaccinated)?,
        table.col(&cols.population)?,
    );
    let keep = wanted(requested);
    let mut cases = Keyed::default();
    let mut vaccinated_people = Keyed::default();
    let mut population: BTreeMap<String, u64> = BTreeMap::new();
    let mut seen = BTreeSet::new();
    for (line, f) in &table.rows {
        let region = mapping.canonical(&f[cl]).to_owned();
        if keep.as_ref().is_some_and(|k| !k.contains(region.as_str())) {
            continue;
        }
        seen.insert(region.clone());
        let Some(day) = row_date(&f[cd], &cols.date_format, SOURCE, *line, warnings) else {
            continue;
        };
        let parse = |c: usize| cell_number(&f[c]).map_err(|_| table.error(*line, format!("invalid number {:?}", f[c])));
        cases.insert(&table, *line, &region, day, parse(cn)?)?;
        vaccinated_people.accumulate(&region, day, parse(cv)?);
        if let Some(p) = parse(cp)? {
            if p <= 0.0 {
                return Err(table.error(*line, format!("population {p} must be positive")));
            }
            population.insert(region.clone(), p.round() as u64);
        }
    }
    reject_unknown(requested, &seen, path, warnings);

    let mut out = OwidData::default();
    for (region, reports) in &cases.values {
        let Some(&pop) = population.get(region) else {
            warnings.push(WarningRecord::new(SOURCE, "no_population", "region skipped").region(region));
            continue;
        };
        if let Some(s) = case_series(SOURCE, region, pop, reports, warnings)? {
            out.series.push(s);
        }
        let shares = share_reports(&table, region, pop, &vaccinated_people.values[region])?;
        out.vaccinated.insert(region.clone(), shares);
    }
    Ok(out)
}

fn share_reports(
    table: &RawTable,
    region: &str,
    pop: u64,
    people: &BTreeMap<Day, Option<f64>>,
) -> Result<BTreeMap<Day, f64>> {
    people
        .iter()
        .filter_map(|(d, v)| v.map(|v| (*d, v)))
        .map(|(d, v)| {
            let share = checked_share(
                v / pop as f64,
                &format!("vaccinated share of {region} on {d}"),
                table,
                0,
            )?;
            Ok((d, share))
        })
        .collect()
}

/// Vaccination-only file in the same layout, with populations supplied by
/// the caller (the population column is not read).
pub fn parse_vaccinations(
    path: &Path,
    mapping: &Mapping,
    populations: &BTreeMap<String, u64>,
    requested: Option<&[String]>,
    warnings: &mut Vec<WarningRecord>,
) -> Result<BTreeMap<String, BTreeMap<Day, f64>>> {
    let cols = &mapping.owid;
    let table = RawTable::load(path)?;
    let (cl, cd, cv) = (
        table.col(&cols.location)?,
        table.col(&cols.date)?,
        table.col(&cols.people_fully_vaccinated)?,
    );
    let keep = wanted(requested);
    let mut people = Keyed::default();
    let mut seen = BTreeSet::new();
    for (line, f) in &table.rows {
        let region = mapping.canonical(&f[cl]).to_owned();
        if keep.as_ref().is_some_and(|k| !k.contains(region.as_str())) || !populations.contains_key(&region) {
            continue;
        }
        seen.insert(region.clone());
        let Some(day) = row_date(&f[cd], &cols.date_format, SOURCE, *line, warnings) else {
            continue;
        };
        let v = cell_number(&f[cv]).map_err(|_| table.error(*line, format!("invalid number {:?}", f[cv])))?;
        people.insert(&table, *line, &region, day, v)?;
    }
    reject_unknown(requested, &seen, path, warnings);
    people
        .values
        .iter()
        .map(|(region, days)| {
            Ok((
                region.clone(),
                share_reports(&table, region, populations[region], days)?,
            ))
        })
        .collect()
}
