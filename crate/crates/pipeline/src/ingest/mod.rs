//! Raw source snapshots to canonical cases and covariates.

pub mod cdc;
pub mod governors;
pub mod mapping;
pub mod owid;
pub mod oxcgrt;
pub mod regions;
pub mod source;
pub mod variants;

use std::collections::BTreeMap;

use r0_core::{CovariateSet, Day, RegionSeries};

pub use cdc::parse_cdc_states;
pub use governors::GovernorTable;
pub use mapping::Mapping;
pub use owid::{parse_owid, parse_vaccinations};
pub use oxcgrt::parse_oxcgrt;
pub use variants::{daily_share, parse_variants};

use crate::config::{
    RunConfig, SourceKind, SourcesSection, VariantFill, DELTA_SHARE, ECONOMIC_SUPPORT, REP_GOVERNOR, STRINGENCY,
    VACCINATED_SHARE,
};
use crate::error::Result;
use crate::warnings::WarningRecord;

#[derive(Debug, Clone, PartialEq)]
pub struct Ingested {
    pub series: Vec<RegionSeries>,
    pub covariates: CovariateSet,
    pub warnings: Vec<WarningRecord>,
}

pub fn ingest_sources(cfg: &RunConfig, sources: &SourcesSection, requested: Option<&[String]>) -> Result<Ingested> {
    let mapping = match &sources.mapping {
        Some(p) => Mapping::load(&cfg.resolve(p))?,
        None => Mapping::default(),
    };
    let mut warnings = Vec::new();
    let (series, vaccinated) = match sources.kind {
        SourceKind::Countries => {
            let path = cfg.resolve_data(sources.owid.as_deref().expect("validated"));
            let data = parse_owid(&path, &mapping, requested, &mut warnings)?;
            (data.series, Some(data.vaccinated))
        }
        SourceKind::UsStates => {
            let path = cfg.resolve_data(sources.cdc.as_deref().expect("validated"));
            let series = parse_cdc_states(&path, &mapping, requested, &mut warnings)?;
            let vaccinated = match &sources.vaccinations {
                Some(p) => {
                    let pops = series
                        .iter()
                        .map(|s| (s.region_id().to_owned(), s.population()))
                        .collect();
                    Some(parse_vaccinations(
                        &cfg.resolve_data(p),
                        &mapping,
                        &pops,
                        requested,
                        &mut warnings,
                    )?)
                }
                None => None,
            };
            (series, vaccinated)
        }
    };
    let policy = parse_oxcgrt(
        &cfg.resolve_data(&sources.oxcgrt),
        &mapping,
        sources.kind,
        &mut warnings,
    )?;
    let variants = match &sources.variants {
        Some(p) => Some(parse_variants(&cfg.resolve_data(p), &mapping, &mut warnings)?),
        None => None,
    };
    let governors = match (sources.kind, &sources.governors) {
        (SourceKind::Countries, _) => None,
        (SourceKind::UsStates, Some(p)) => Some(GovernorTable::load(&cfg.resolve_data(p))?),
        (SourceKind::UsStates, None) => Some(GovernorTable::bundled()),
    };
    let covariates = assemble_covariates(
        &series,
        &policy,
        vaccinated.as_ref(),
        variants.as_ref().map(|v| (v, sources.variant_fill)),
        governors.as_ref(),
        &mut warnings,
    );
    Ok(Ingested {
        series,
        covariates,
        warnings,
    })
}

/// Covariate rows over each region's case-series span. Columns exist only
/// for sources that were supplied.
pub fn assemble_covariates(
    series: &[RegionSeries],
    policy: &oxcgrt::PolicyData,
    vaccinated: Option<&BTreeMap<String, BTreeMap<Day, f64>>>,
    variants: Option<(&variants::VariantReports, VariantFill)>,
    governors: Option<&GovernorTable>,
    warnings: &mut Vec<WarningRecord>,
) -> CovariateSet {
    let mut names = vec![STRINGENCY.to_owned(), ECONOMIC_SUPPORT.to_owned()];
    if vaccinated.is_some() {
        names.push(VACCINATED_SHARE.into());
    }
    if variants.is_some() {
        names.push(DELTA_SHARE.into());
    }
    if governors.is_some() {
        names.push(REP_GOVERNOR.into());
    }
    let mut set = CovariateSet::new(names);
    let empty = BTreeMap::new();
    for s in series {
        let region = s.region_id();
        let (first, last) = (s.start(), s.end());
        let pol = policy.get(region).unwrap_or_else(|| {
            warnings.push(WarningRecord::new("oxcgrt", "no_policy_data", "region has no index rows").region(region));
            &empty
        });
        let vac = vaccinated.map(|v| {
            let reports = v.get(region).cloned().unwrap_or_default();
            daily_share(&reports, first, last, VariantFill::Step)
        });
        let delta = variants.map(|(v, fill)| {
            let reports = v.get(region).cloned().unwrap_or_else(|| {
                warnings.push(
                    WarningRecord::new("variants", "no_variant_data", "share taken as 0 throughout").region(region),
                );
                BTreeMap::new()
            });
            daily_share(&reports, first, last, fill)
        });
        for (k, day) in crate::dates::days(first, last).enumerate() {
            let p = pol.get(&day);
            let mut row = vec![p.and_then(|p| p.stringency), p.and_then(|p| p.economic_support)];
            if let Some(v) = &vac {
                row.push(Some(v[k]));
            }
            if let Some(d) = &delta {
                row.push(Some(d[k]));
            }
            if let Some(g) = governors {
                row.push(g.rep_governor(region, day));
            }
            set.insert(region, day, row);
        }
    }
    set
}
