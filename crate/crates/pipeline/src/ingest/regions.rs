//! Bundled US state reference data.

use std::collections::BTreeMap;

const STATES_CSV: &str = include_str!("../../data/states.csv");

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateInfo {
    pub name: String,
    pub abbreviation: String,
    /// 2019 resident population estimate.
    pub population: u64,
    pub contiguous: bool,
}

pub fn states() -> Vec<StateInfo> {
    let mut rdr = csv::Reader::from_reader(STATES_CSV.as_bytes());
    rdr.records()
        .map(|r| {
            let r = r.expect("bundled states table");
            StateInfo {
                name: r[0].to_owned(),
                abbreviation: r[1].to_owned(),
                population: r[2].parse().expect("bundled population"),
                contiguous: &r[3] == "true",
            }
        })
        .collect()
}

/// The 48 contiguous states plus the District of Columbia, keyed by
/// abbreviation.
pub fn contiguous_by_abbreviation() -> BTreeMap<String, StateInfo> {
    states()
        .into_iter()
        .filter(|s| s.contiguous)
        .map(|s| (s.abbreviation.clone(), s))
        .collect()
}

pub fn population_by_name() -> BTreeMap<String, u64> {
    states().into_iter().map(|s| (s.name, s.population)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_shape() {
        let all = states();
        assert_eq!(all.len(), 51);
        let cont = contiguous_by_abbreviation();
        assert_eq!(cont.len(), 49);
        assert!(!cont.contains_key("AK") && !cont.contains_key("HI"));
        assert_eq!(cont["DC"].name, "District of Columbia");
        assert_eq!(population_by_name()["California"], 39_512_223);
    }
}
