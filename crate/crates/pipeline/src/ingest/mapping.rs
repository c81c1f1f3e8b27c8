//! Column names of the raw sources, loaded from a TOML mapping file.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{read_to_string, PipelineError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct Mapping {
    pub owid: OwidColumns,
    pub cdc: CdcColumns,
    pub oxcgrt: OxcgrtColumns,
    pub variants: VariantColumns,
    /// Source spelling -> canonical region id, applied to every source.
    pub aliases: BTreeMap<String, String>,
}

impl Mapping {
    pub fn load(path: &Path) -> Result<Mapping> {
        toml::from_str(&read_to_string(path)?).map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))
    }

    pub fn canonical<'a>(&'a self, name: &'a str) -> &'a str {
        self.aliases.get(name).map(String::as_str).unwrap_or(name)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OwidColumns {
    pub location: String,
    pub date: String,
    pub date_format: String,
    pub new_cases: String,
    pub people_fully_vaccinated: String,
    pub population: String,
}

impl Default for OwidColumns {
    fn default() -> Self {
        OwidColumns {
            location: "location".into(),
            date: "date".into(),
            date_format: "%Y-%m-%d".into(),
            new_cases: "new_cases".into(),
            people_fully_vaccinated: "people_fully_vaccinated".into(),
            population: "population".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CdcColumns {
    pub state: String,
    pub date: String,
    pub date_format: String,
    /// Daily new cases; when absent, `total_cases` is differenced.
    pub new_cases: Option<String>,
    pub total_cases: Option<String>,
    /// Jurisdictions reported separately that belong to a state.
    pub merge: BTreeMap<String, String>,
}

impl Default for CdcColumns {
    fn default() -> Self {
        CdcColumns {
            state: "state".into(),
            date: "submission_date".into(),
            date_format: "%m/%d/%Y".into(),
            new_cases: Some("new_case".into()),
            total_cases: None,
            merge: BTreeMap::from([("NYC".to_owned(), "NY".to_owned())]),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OxcgrtColumns {
    pub country: String,
    pub region: String,
    pub jurisdiction: String,
    pub date: String,
    pub date_format: String,
    pub stringency: String,
    pub economic_support: String,
    pub national_jurisdiction: String,
    pub state_jurisdiction: String,
    /// Country whose sub-national rows hold the US states.
    pub state_country: String,
}

impl Default for OxcgrtColumns {
    fn default() -> Self {
        OxcgrtColumns {
            country: "CountryName".into(),
            region: "RegionName".into(),
            jurisdiction: "Jurisdiction".into(),
            date: "Date".into(),
            date_format: "%Y%m%d".into(),
            stringency: "StringencyIndex".into(),
            economic_support: "EconomicSupportIndex".into(),
            national_jurisdiction: "NAT_TOTAL".into(),
            state_jurisdiction: "STATE_TOTAL".into(),
            state_country: "United States".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VariantColumns {
    pub region: String,
    pub date: String,
    pub date_format: String,
    /// Share column in [0, 1]; when absent the share is `delta / total`.
    pub share: Option<String>,
    pub delta: Option<String>,
    pub total: Option<String>,
}

impl Default for VariantColumns {
    fn default() -> Self {
        VariantColumns {
            region: "region".into(),
            date: "date".into(),
            date_format: "%Y-%m-%d".into(),
            share: None,
            delta: Some("delta".into()),
            total: Some("total".into()),
        }
    }
}
