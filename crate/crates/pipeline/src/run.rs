//! Loading inputs, building panels and fitting, as driven by a [`RunConfig`].

use std::collections::BTreeSet;

use r0_core::inference::covariance_report;
use r0_core::panel::{build_panel, counterfactual_fit, default_tau_grid, profile_threshold_search};
use r0_core::simulate::{simulate_panel, spread, SimConfig};
use r0_core::{CovariateSet, EpiFrame, Error as CoreError, Panel, RegionSeries, SeFlavor};

use crate::bundle::{Bundle, CoefficientRow, FitMeta, ModelKind, R0Row, ThresholdMeta};
use crate::canonical::{read_cases, read_covariates, TruthFile};
use crate::config::{MfPair, RunConfig, SimDesign, TauGrid};
use crate::error::{PipelineError, Result};
use crate::ingest::ingest_sources;
use crate::warnings::WarningRecord;

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub series: Vec<RegionSeries>,
    pub covariates: CovariateSet,
    pub warnings: Vec<WarningRecord>,
    pub truth: Option<TruthFile>,
}

pub fn sim_config(cfg: &RunConfig) -> Result<SimConfig> {
    let s = cfg
        .simulation
        .as_ref()
        .ok_or_else(|| PipelineError::Config("no [simulation] section".into()))?;
    let mut sim = match s.design {
        SimDesign::Oracle => SimConfig::oracle_design(s.n_regions, s.horizon, s.seed),
        SimDesign::Realistic => SimConfig::realistic_design(s.n_regions, s.horizon, s.seed),
    };
    sim.gamma = cfg.model.gamma;
    sim.lag_p = cfg.model.lag_p;
    if let Some([lo, hi]) = s.alpha_range {
        sim.true_alpha = spread(s.n_regions, lo, hi);
    }
    if let Some(psi) = &s.psi {
        sim.true_psi = psi.clone();
    }
    if let Some(k) = s.kappa {
        sim.true_kappa = k;
    }
    if let Some(t) = s.tau {
        sim.true_tau = t;
    }
    if let Some(sd) = s.noise_sd {
        sim.noise_sd = sd;
    }
    if let Some(m) = s.mf_start {
        sim.mf_start = m;
    }
    if let Some(m) = s.mf_end {
        sim.mf_end = m;
    }
    if let Some(b) = s.threshold_smoothing {
        sim.threshold_smoothing = b;
    }
    sim.validate().map_err(|e| PipelineError::Config(e.to_string()))?;
    Ok(sim)
}

/// Simulated data with its truth record.
pub fn simulate(cfg: &RunConfig) -> Result<Dataset> {
    let sim = sim_config(cfg)?;
    let out = simulate_panel(&sim).map_err(|e| PipelineError::Config(e.to_string()))?;
    let truth = TruthFile::from_truth(&out.truth, &out.series);
    let warnings = out
        .truth
        .regions
        .iter()
        .zip(&truth.regions)
        .filter_map(|(r, rec)| {
            let date = rec.halted_date.clone()?;
            Some(
                WarningRecord::new("simulate", "halted", format!("cumulative share reached {}", r.final_c))
                    .region(&r.region_id)
                    .date(date),
            )
        })
        .collect();
    Ok(Dataset {
        series: out.series,
        covariates: out.covariates,
        warnings,
        truth: Some(truth),
    })
}

/// Reads whichever input the config names: canonical files, raw sources or
/// a simulation.
pub fn load_dataset(cfg: &RunConfig) -> Result<Dataset> {
    if cfg.simulation.is_some() {
        return simulate(cfg);
    }
    let data = cfg.data.as_ref().expect("validated config has data or simulation");
    let requested = data.regions.as_deref();
    let mut dataset = match &data.sources {
        Some(sources) => {
            let ing = ingest_sources(cfg, sources, requested)?;
            Dataset {
                series: ing.series,
                covariates: ing.covariates,
                warnings: ing.warnings,
                truth: None,
            }
        }
        None => {
            let cases = cfg.resolve_data(data.cases.as_deref().expect("validated"));
            let covariates = cfg.resolve_data(data.covariates.as_deref().expect("validated"));
            Dataset {
                series: read_cases(&cases)?,
                covariates: read_covariates(&covariates)?,
                warnings: Vec::new(),
                truth: None,
            }
        }
    };
    if let Some(req) = requested {
        let have: BTreeSet<&str> = dataset.series.iter().map(RegionSeries::region_id).collect();
        let missing: Vec<&str> = req.iter().map(String::as_str).filter(|r| !have.contains(r)).collect();
        if !missing.is_empty() {
            return Err(PipelineError::Input(format!(
                "requested regions without case data: {}",
                missing.join(", ")
            )));
        }
        dataset.series.retain(|s| req.iter().any(|r| r == s.region_id()));
    }
    Ok(dataset)
}

/// Cuts every series at the window end so the MF schedule runs over the
/// sample only.
fn clip_to_window(
    cfg: &RunConfig,
    series: &[RegionSeries],
    warnings: &mut Vec<WarningRecord>,
) -> Result<Vec<RegionSeries>> {
    let Some((_, end)) = cfg.window_days()? else {
        return Ok(series.to_vec());
    };
    let mut out = Vec::with_capacity(series.len());
    for s in series {
        if s.start() > end {
            warnings.push(
                WarningRecord::new("panel", "region_dropped", "series starts after the window").region(s.region_id()),
            );
            continue;
        }
        if s.end() <= end {
            out.push(s.clone());
            continue;
        }
        let keep = (end.days_since(s.start()) + 1) as usize;
        let clipped = RegionSeries::new(
            s.region_id(),
            s.population(),
            s.start(),
            s.reported_new_cases()[..keep].to_vec(),
        )
        .map_err(PipelineError::Data)?;
        out.push(clipped);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PanelRun {
    pub panel: Panel,
    pub warnings: Vec<WarningRecord>,
}

/// Transforms every series with the MF pair and stacks the panel.
pub fn build(cfg: &RunConfig, data: &Dataset, mf: MfPair) -> Result<PanelRun> {
    let mut warnings = data.warnings.clone();
    let opts = cfg.epi_options(mf)?;
    let mut frames = Vec::with_capacity(data.series.len());
    for s in clip_to_window(cfg, &data.series, &mut warnings)? {
        match EpiFrame::build(&s, &opts) {
            Ok(f) => frames.push(f),
            Err(CoreError::NoOutbreak(region)) => {
                warnings.push(WarningRecord::new("panel", "region_dropped", "no positive case count").region(&region))
            }
            Err(e) => return Err(PipelineError::Input(format!("region {}: {e}", s.region_id()))),
        }
    }
    let built = build_panel(&frames, &data.covariates, &cfg.panel_spec()?).map_err(PipelineError::Data)?;
    warnings.extend(built.warnings.iter().map(WarningRecord::from));
    Ok(PanelRun {
        panel: built.panel,
        warnings,
    })
}

/// Fits the panel and packages the results.
pub fn estimate_panel(cfg: &RunConfig, run: &PanelRun, mf: MfPair) -> Result<Bundle> {
    let panel = &run.panel;
    let (fit, threshold) = if cfg.model.no_mitigation {
        (counterfactual_fit(panel).map_err(PipelineError::Estimation)?, None)
    } else {
        let grid = match cfg.model.tau_grid()? {
            TauGrid::Default => default_tau_grid(panel),
            TauGrid::Explicit(g) => g,
        };
        let search = profile_threshold_search(panel, &grid).map_err(PipelineError::Estimation)?;
        let identified = search
            .profile
            .iter()
            .find(|p| Some(p.tau) == search.fit.tau())
            .is_some_and(|p| p.indicator_identified);
        let meta = ThresholdMeta {
            grid_size: grid.len(),
            grid_min: grid[0],
            grid_max: grid[grid.len() - 1],
            sup_f: search.sup_f.is_finite().then_some(search.sup_f),
            weak_identification: search.weak_identification,
            indicator_identified: identified,
        };
        (search.fit, Some(meta))
    };
    let cov = covariance_report(&fit, panel, cfg.model.se_lag).map_err(PipelineError::Estimation)?;
    let se: Vec<Vec<f64>> = SeFlavor::ALL.iter().map(|f| cov.se(*f)).collect();
    let t: Vec<Vec<f64>> = SeFlavor::ALL.iter().map(|f| cov.t_ratios(*f)).collect();
    let r0 = (0..cov.n_intercepts)
        .map(|j| R0Row {
            region: cov.names[j].clone(),
            estimate: cov.estimates[j],
            se_usual: Some(se[0][j]),
            se_robust1: Some(se[1][j]),
            se_robust2: Some(se[2][j]),
        })
        .collect();
    let coefficients = (cov.n_intercepts..cov.names.len())
        .map(|k| CoefficientRow {
            name: cov.names[k].clone(),
            estimate: cov.estimates[k],
            usual: (se[0][k], t[0][k]),
            robust1: (se[1][k], t[1][k]),
            robust2: (se[2][k], t[2][k]),
        })
        .collect();
    let mut echo = cfg.clone();
    echo.out_dir = None;
    echo.mf = vec![mf];
    let meta = FitMeta {
        scenario: cfg.scenario.clone(),
        model: if cfg.model.no_mitigation {
            ModelKind::Counterfactual
        } else {
            ModelKind::Full
        },
        mf_start: mf.start,
        mf_end: mf.end,
        tau: fit.tau(),
        kappa: fit.kappa,
        r_squared: fit.r_squared,
        ssr: fit.ssr,
        obs_count: fit.obs_count,
        region_count: fit.region_count,
        t_min: fit.t_min,
        t_max: fit.t_max,
        truncation_lag: cov.truncation_lag,
        threshold,
        warning_count: run.warnings.len(),
        config: serde_json::to_value(&echo).expect("config serializes"),
    };
    Ok(Bundle {
        r0,
        coefficients,
        meta,
        warnings: run.warnings.clone(),
    })
}

/// One bundle per MF pair, labelled by [`MfPair::label`].
pub fn estimate(cfg: &RunConfig) -> Result<Vec<(MfPair, Bundle)>> {
    let data = load_dataset(cfg)?;
    cfg.mf
        .iter()
        .map(|&mf| {
            let run = build(cfg, &data, mf)?;
            Ok((mf, estimate_panel(cfg, &run, mf)?))
        })
        .collect()
}
