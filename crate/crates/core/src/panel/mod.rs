//! Unbalanced panel assembly and fixed-effects threshold estimation.

mod build;
mod fit;
mod threshold;

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use crate::calendar::Day;
use crate::error::{Error, Result};

pub use build::{build_panel, Interaction, PanelBuild, PanelSpec, PanelWarning, WarningKind};
pub(crate) use fit::Design;
pub use fit::{counterfactual_fit, fit_fixed_effects, fit_model, ModelSpec, ThresholdFit, INDICATOR_NAME};
pub use threshold::{
    default_tau_grid, profile_threshold_search, ProfilePoint, ThresholdSearch, ANCHOR_TAUS, SUP_F_TRIM,
    WEAK_IDENTIFICATION_SUP_F,
};

/// Dated covariate values per region, with one shared column layout.
/// Missing values are `None`; they are never imputed.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CovariateSet {
    names: Vec<String>,
    regions: BTreeMap<String, BTreeMap<Day, Vec<Option<f64>>>>,
}

impl CovariateSet {
    pub fn new(names: Vec<String>) -> Self {
        CovariateSet {
            names,
            regions: BTreeMap::new(),
        }
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// Sets a full row. Panics if `values` does not match the layout.
    pub fn insert(&mut self, region: &str, day: Day, values: Vec<Option<f64>>) {
        assert_eq!(values.len(), self.names.len(), "covariate row width");
        self.regions.entry(region.into()).or_default().insert(day, values);
    }

    /// Sets one cell, creating an all-missing row if needed.
    pub fn set(&mut self, region: &str, day: Day, column: usize, value: Option<f64>) {
        let width = self.names.len();
        let row = self
            .regions
            .entry(region.into())
            .or_default()
            .entry(day)
            .or_insert_with(|| alloc::vec![None; width]);
        row[column] = value;
    }

    pub fn get(&self, region: &str, day: Day, column: usize) -> Option<f64> {
        self.regions.get(region)?.get(&day)?.get(column).copied().flatten()
    }

    pub fn row(&self, region: &str, day: Day) -> Option<&[Option<f64>]> {
        self.regions.get(region)?.get(&day).map(Vec::as_slice)
    }

    pub fn regions(&self) -> impl Iterator<Item = &str> {
        self.regions.keys().map(String::as_str)
    }

    pub fn rows(&self, region: &str) -> impl Iterator<Item = (Day, &[Option<f64>])> {
        self.regions
            .get(region)
            .into_iter()
            .flat_map(|m| m.iter().map(|(d, v)| (*d, v.as_slice())))
    }
}

/// One `(region, day)` row of the estimating equation. `date` is the day `t`
/// on which `i_t` is measured; `y` is the transmission value for the step to
/// `t + 1`, and `x` and `thr_var` are dated `t - p`.
#[derive(Debug, Clone, PartialEq)]
pub struct PanelObservation {
    pub region: usize,
    pub date: Day,
    pub y: f64,
    pub x: Vec<f64>,
    pub thr_var: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Panel {
    covariate_names: Vec<String>,
    regions: Vec<String>,
    observations: Vec<PanelObservation>,
}

impl Panel {
    /// Validates and sorts the observations by region, then date.
    pub fn new(
        covariate_names: Vec<String>,
        regions: Vec<String>,
        mut observations: Vec<PanelObservation>,
    ) -> Result<Panel> {
        if observations.is_empty() {
            return Err(Error::EmptyPanel);
        }
        let k = covariate_names.len();
        for obs in &observations {
            if obs.x.len() != k {
                return Err(Error::LengthMismatch {
                    what: "observation covariates vs layout",
                    left: obs.x.len(),
                    right: k,
                });
            }
            if obs.region >= regions.len() {
                return Err(Error::LengthMismatch {
                    what: "region index vs region list",
                    left: obs.region,
                    right: regions.len(),
                });
            }
            if !obs.y.is_finite() {
                return Err(Error::NonFinite("y"));
            }
            if !obs.thr_var.is_finite() {
                return Err(Error::NonFinite("thr_var"));
            }
            if obs.x.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("x"));
            }
        }
        observations.sort_by_key(|o| (o.region, o.date));
        if let Some(w) = observations
            .windows(2)
            .find(|w| w[0].region == w[1].region && w[0].date == w[1].date)
        {
            return Err(Error::DuplicateObservation {
                region: regions[w[0].region].clone(),
                day: w[0].date.0,
            });
        }
        // Regions without observations are removed and indices compacted.
        let mut used = alloc::vec![false; regions.len()];
        for o in &observations {
            used[o.region] = true;
        }
        let mut remap = alloc::vec![usize::MAX; regions.len()];
        let mut kept = Vec::new();
        for (j, name) in regions.into_iter().enumerate() {
            if used[j] {
                remap[j] = kept.len();
                kept.push(name);
            }
        }
        for o in &mut observations {
            o.region = remap[o.region];
        }
        Ok(Panel {
            covariate_names,
            regions: kept,
            observations,
        })
    }

    pub fn covariate_names(&self) -> &[String] {
        &self.covariate_names
    }

    pub fn regions(&self) -> &[String] {
        &self.regions
    }

    pub fn observations(&self) -> &[PanelObservation] {
        &self.observations
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    pub fn region_count(&self) -> usize {
        self.regions.len()
    }

    /// Observation count per region.
    pub fn region_counts(&self) -> Vec<usize> {
        let mut n = alloc::vec![0usize; self.regions.len()];
        for o in &self.observations {
            n[o.region] += 1;
        }
        n
    }

    /// Calendar span in days (last - first + 1) covered by each region.
    pub fn region_spans(&self) -> Vec<usize> {
        let mut first = alloc::vec![i32::MAX; self.regions.len()];
        let mut last = alloc::vec![i32::MIN; self.regions.len()];
        for o in &self.observations {
            first[o.region] = first[o.region].min(o.date.0);
            last[o.region] = last[o.region].max(o.date.0);
        }
        first.iter().zip(&last).map(|(f, l)| (l - f + 1) as usize).collect()
    }

    /// Shortest and longest region spans.
    pub fn span_range(&self) -> (usize, usize) {
        let spans = self.region_spans();
        (
            spans.iter().copied().min().unwrap_or(0),
            spans.iter().copied().max().unwrap_or(0),
        )
    }

    /// Rebuilds the panel with one covariate column multiplied by `s`.
    pub fn with_scaled_column(&self, column: usize, s: f64) -> Panel {
        let mut p = self.clone();
        for o in &mut p.observations {
            o.x[column] *= s;
        }
        p
    }

    /// Rebuilds the panel with `y` replaced through `f(observation)`.
    pub fn map_y(&self, mut f: impl FnMut(&PanelObservation) -> f64) -> Panel {
        let mut p = self.clone();
        for o in &mut p.observations {
            o.y = f(o);
        }
        p
    }
}
