//! Party of each state's governor as a step function of the date.

use std::collections::BTreeMap;
use std::path::Path;

use r0_core::Day;

use super::regions::states;
use crate::dates::parse_iso;
use crate::error::{read_to_string, PipelineError, Result};

const BUNDLED: &str = include_str!("../../data/governors.csv");

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Term {
    pub party: String,
    pub from: Day,
    /// Last day in office; open-ended when `None`.
    pub to: Option<Day>,
}

/// Terms keyed by full state name.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct GovernorTable {
    pub terms: BTreeMap<String, Vec<Term>>,
}

impl GovernorTable {
    pub fn bundled() -> GovernorTable {
        GovernorTable::parse(BUNDLED, Path::new("governors.csv")).expect("bundled governor table")
    }

    pub fn load(path: &Path) -> Result<GovernorTable> {
        GovernorTable::parse(&read_to_string(path)?, path)
    }

    /// Columns `state,party,from,to`; `state` is a two-letter code.
    pub fn parse(text: &str, path: &Path) -> Result<GovernorTable> {
        let names: BTreeMap<String, String> = states().into_iter().map(|s| (s.abbreviation, s.name)).collect();
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let mut table = GovernorTable::default();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| PipelineError::csv(path, e))?;
            let line = rec.position().map(|p| p.line()).unwrap_or(0);
            let bad = |m: String| PipelineError::parse(path, line, m);
            let name = names
                .get(&rec[0])
                .ok_or_else(|| bad(format!("unknown state code {:?}", &rec[0])))?;
            let from = parse_iso(&rec[2]).ok_or_else(|| bad(format!("malformed date {:?}", &rec[2])))?;
            let to = match rec[3].trim() {
                "" => None,
                t => Some(parse_iso(t).ok_or_else(|| bad(format!("malformed date {t:?}")))?),
            };
            if to.is_some_and(|t| t < from) {
                return Err(bad("term ends before it starts".into()));
            }
            let terms = table.terms.entry(name.clone()).or_default();
            if terms
                .iter()
                .any(|t| t.to.is_none_or(|e| e >= from) && to.is_none_or(|e| e >= t.from))
            {
                return Err(bad(format!("overlapping terms for {name}")));
            }
            terms.push(Term {
                party: rec[1].to_owned(),
                from,
                to,
            });
        }
        Ok(table)
    }

    /// 1 for a Republican governor, 0 otherwise, `None` when no term covers
    /// the day.
    pub fn rep_governor(&self, state: &str, day: Day) -> Option<f64> {
        self.terms
            .get(state)?
            .iter()
            .find(|t| t.from <= day && t.to.is_none_or(|e| day <= e))
            .map(|t| if t.party == "R" { 1.0 } else { 0.0 })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn day(s: &str) -> Day {
        parse_iso(s).unwrap()
    }

    #[test]
    fn bundled_steps() {
        let g = GovernorTable::bundled();
        assert_eq!(g.rep_governor("Montana", day("2021-01-03")), Some(0.0));
        assert_eq!(g.rep_governor("Montana", day("2021-01-04")), Some(1.0));
        assert_eq!(g.rep_governor("District of Columbia", day("2020-06-01")), Some(0.0));
        assert_eq!(g.rep_governor("Texas", day("2021-11-30")), Some(1.0));
        assert_eq!(g.rep_governor("California", day("2021-11-30")), Some(0.0));
        assert_eq!(g.rep_governor("Texas", day("2019-06-01")), None);
        let contiguous_r = g
            .terms
            .keys()
            .filter(|s| s.as_str() != "Alaska" && g.rep_governor(s, day("2020-06-01")) == Some(1.0))
            .count();
        assert_eq!(contiguous_r, 25);
    }

    #[test]
    fn overlapping_terms_rejected() {
        let text = "state,party,from,to\nMT,D,2020-01-01,2021-01-10\nMT,R,2021-01-04,\n";
        assert!(GovernorTable::parse(text, Path::new("g.csv")).is_err());
    }
}
