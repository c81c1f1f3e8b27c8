use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use super::{CovariateSet, Panel, PanelObservation};
use crate::calendar::Day;
use crate::epi::EpiFrame;
use crate::error::{Error, Result};

/// Product of two base covariate columns, e.g. a party dummy times a policy
/// index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Interaction {
    pub name: String,
    pub left: String,
    pub right: String,
}

impl Interaction {
    pub fn new(name: &str, left: &str, right: &str) -> Self {
        Interaction {
            name: name.into(),
            left: left.into(),
            right: right.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PanelSpec {
    pub lag_p: usize,
    /// Base covariate columns entering the regression directly.
    pub regressors: Vec<String>,
    pub interactions: Vec<Interaction>,
    /// First admissible observation day.
    pub sample_start: Option<Day>,
    /// Last day whose case count may be used, i.e. `t + 1 <= sample_end`.
    pub sample_end: Option<Day>,
}

impl PanelSpec {
    pub fn new(lag_p: usize, regressors: &[&str]) -> Self {
        PanelSpec {
            lag_p,
            regressors: regressors.iter().map(|s| String::from(*s)).collect(),
            interactions: Vec::new(),
            sample_start: None,
            sample_end: None,
        }
    }

    pub fn column_names(&self) -> Vec<String> {
        self.regressors
            .iter()
            .cloned()
            .chain(self.interactions.iter().map(|i| i.name.clone()))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum WarningKind {
    RegionDropped { reason: String },
    CovariateGap { dates_dropped: usize, first: Day },
    MissingOutcome { days: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PanelWarning {
    pub region_id: String,
    pub kind: WarningKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PanelBuild {
    pub panel: Panel,
    pub warnings: Vec<PanelWarning>,
}

enum Column {
    Base(usize),
    Product(usize, usize),
}

fn resolve(covariates: &CovariateSet, name: &str) -> Result<usize> {
    covariates
        .column_index(name)
        .ok_or_else(|| Error::UnknownCovariate(name.into()))
}

/// Stacks regions into the estimating panel. Each observation pairs the
/// transmission value for `t -> t + 1` with covariates and the threshold
/// variable dated `t - lag_p`.
pub fn build_panel(frames: &[EpiFrame], covariates: &CovariateSet, spec: &PanelSpec) -> Result<PanelBuild> {
    let mut columns = Vec::new();
    for name in &spec.regressors {
        columns.push(Column::Base(resolve(covariates, name)?));
    }
    for inter in &spec.interactions {
        columns.push(Column::Product(
            resolve(covariates, &inter.left)?,
            resolve(covariates, &inter.right)?,
        ));
    }
    let p = spec.lag_p;
    let mut regions = Vec::new();
    let mut observations = Vec::new();
    let mut warnings = Vec::new();

    for frame in frames {
        let warn = |kind| PanelWarning {
            region_id: frame.region_id.clone(),
            kind,
        };
        let usable = frame.len() - frame.outbreak;
        if usable < p + 2 {
            warnings.push(warn(WarningKind::RegionDropped {
                reason: format!("{usable} usable days, need at least {}", p + 2),
            }));
            continue;
        }
        let region = regions.len();
        let mut rows = Vec::new();
        let (mut gaps, mut first_gap, mut missing_y) = (0usize, None, 0usize);
        for t in frame.outbreak..frame.len().saturating_sub(1) {
            let date = frame.date(t);
            if spec.sample_start.is_some_and(|s| date < s) || spec.sample_end.is_some_and(|e| date + 1 > e) {
                continue;
            }
            if t < p {
                continue;
            }
            let Some(y) = frame.y[t + 1] else {
                missing_y += 1;
                continue;
            };
            let lag_date = date - p as i32;
            let lagged = |c: usize| covariates.get(&frame.region_id, lag_date, c);
            let x: Option<Vec<f64>> = columns
                .iter()
                .map(|col| match *col {
                    Column::Base(c) => lagged(c),
                    Column::Product(a, b) => Some(lagged(a)? * lagged(b)?),
                })
                .collect();
            let Some(x) = x else {
                gaps += 1;
                first_gap.get_or_insert(lag_date);
                continue;
            };
            rows.push(PanelObservation {
                region,
                date,
                y,
                x,
                thr_var: frame.dc_per_100k[t - p],
            });
        }
        if gaps > 0 {
            warnings.push(warn(WarningKind::CovariateGap {
                dates_dropped: gaps,
                first: first_gap.unwrap_or(frame.start),
            }));
        }
        if missing_y > 0 {
            warnings.push(warn(WarningKind::MissingOutcome { days: missing_y }));
        }
        if rows.len() < 2 {
            warnings.push(warn(WarningKind::RegionDropped {
                reason: format!("{} usable observations", rows.len()),
            }));
            continue;
        }
        regions.push(frame.region_id.clone());
        observations.extend(rows);
    }
    let panel = Panel::new(spec.column_names(), regions, observations)?;
    Ok(PanelBuild { panel, warnings })
}
