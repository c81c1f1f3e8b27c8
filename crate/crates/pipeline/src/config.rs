//! Scenario configuration files.
//!
//! A scenario is a TOML file. Relative paths inside it are resolved against
//! the directory holding the file.

use std::path::{Path, PathBuf};

use r0_core::epi::{MfHorizon, Smoothing, ThresholdSource, GAMMA};
use r0_core::{Day, EpiOptions, Interaction, PanelSpec};
use serde::{Deserialize, Serialize};

use crate::dates::parse_iso;
use crate::error::{read_to_string, PipelineError, Result};

pub const STRINGENCY: &str = "stringency";
pub const ECONOMIC_SUPPORT: &str = "economic_support";
pub const VACCINATED_SHARE: &str = "vaccinated_share";
pub const DELTA_SHARE: &str = "delta_share";
pub const REP_GOVERNOR: &str = "rep_governor";
pub const REP_X_ECONOMIC_SUPPORT: &str = "rep_x_economic_support";

/// Environment variable that overrides `data.dir`.
pub const DATA_DIR_ENV: &str = "R0_DATA_DIR";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub scenario: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<Window>,
    #[serde(default = "default_mf")]
    pub mf: Vec<MfPair>,
    #[serde(default)]
    pub model: ModelSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data: Option<DataSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulation: Option<SimulationSection>,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Window {
    pub start: String,
    pub end: String,
}

impl Window {
    pub fn days(&self) -> Result<(Day, Day)> {
        let parse = |s: &str| parse_iso(s).ok_or_else(|| PipelineError::Config(format!("invalid window date {s:?}")));
        Ok((parse(&self.start)?, parse(&self.end)?))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MfPair {
    pub start: f64,
    pub end: f64,
}

impl MfPair {
    /// Directory-safe label such as `mf_5-2`.
    pub fn label(&self) -> String {
        format!("mf_{}-{}", self.start, self.end)
    }
}

fn default_mf() -> Vec<MfPair> {
    vec![MfPair { start: 5.0, end: 2.0 }]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SmoothingChoice {
    Off,
    SmoothThenScale,
    ScaleThenSmooth,
}

impl From<SmoothingChoice> for Smoothing {
    fn from(c: SmoothingChoice) -> Smoothing {
        match c {
            SmoothingChoice::Off => Smoothing::Off,
            SmoothingChoice::SmoothThenScale => Smoothing::SmoothThenScale,
            SmoothingChoice::ScaleThenSmooth => Smoothing::ScaleThenSmooth,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdChoice {
    Reported,
    Adjusted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MfHorizonChoice {
    /// From each region's first case to the end of the sample.
    PerRegion,
    /// Over the sample window, identical for every region.
    Window,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelSection {
    pub gamma: f64,
    pub lag_p: usize,
    /// `default`, `lo:hi:step` or a comma separated list.
    pub tau_grid: String,
    pub covariates: Vec<String>,
    pub vaccination: bool,
    pub delta: bool,
    pub governor_interaction: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub se_lag: Option<usize>,
    pub smoothing: SmoothingChoice,
    pub threshold_source: ThresholdChoice,
    pub mf_horizon: MfHorizonChoice,
    pub no_mitigation: bool,
}

impl Default for ModelSection {
    fn default() -> Self {
        ModelSection {
            gamma: GAMMA,
            lag_p: 10,
            tau_grid: "default".into(),
            covariates: vec![STRINGENCY.into(), ECONOMIC_SUPPORT.into()],
            vaccination: false,
            delta: false,
            governor_interaction: false,
            se_lag: None,
            smoothing: SmoothingChoice::SmoothThenScale,
            threshold_source: ThresholdChoice::Reported,
            mf_horizon: MfHorizonChoice::PerRegion,
            no_mitigation: false,
        }
    }
}

impl ModelSection {
    /// Base covariate columns entering the regression.
    pub fn regressors(&self) -> Vec<String> {
        let mut r = self.covariates.clone();
        if self.vaccination {
            r.push(VACCINATED_SHARE.into());
        }
        if self.delta {
            r.push(DELTA_SHARE.into());
        }
        r
    }

    pub fn interactions(&self) -> Vec<Interaction> {
        if self.governor_interaction {
            vec![Interaction::new(REP_X_ECONOMIC_SUPPORT, REP_GOVERNOR, ECONOMIC_SUPPORT)]
        } else {
            Vec::new()
        }
    }

    pub fn tau_grid(&self) -> Result<TauGrid> {
        TauGrid::parse(&self.tau_grid)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TauGrid {
    /// Percentile-bounded grid at step 0.01 (see `default_tau_grid`).
    Default,
    Explicit(Vec<f64>),
}

impl TauGrid {
    pub fn parse(spec: &str) -> Result<TauGrid> {
        let spec = spec.trim();
        let bad = |why: &str| PipelineError::Config(format!("tau grid {spec:?}: {why}"));
        if spec.eq_ignore_ascii_case("default") {
            return Ok(TauGrid::Default);
        }
        let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad("not a number"));
        let mut values = if spec.contains(':') {
            let parts: Vec<&str> = spec.split(':').collect();
            let [lo, hi, step] = parts[..] else {
                return Err(bad("expected lo:hi:step"));
            };
            let (lo, hi, step) = (num(lo)?, num(hi)?, num(step)?);
            if !(step > 0.0) || hi < lo {
                return Err(bad("need step > 0 and hi >= lo"));
            }
            let n = ((hi - lo) / step + 1e-9).floor() as usize;
            (0..=n)
                .map(|k| ((lo + k as f64 * step) * 1e12).round() / 1e12)
                .collect()
        } else {
            spec.split(',').map(num).collect::<Result<Vec<f64>>>()?
        };
        if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(bad("values must be finite and non-negative"));
        }
        values.sort_by(f64::total_cmp);
        values.dedup();
        if values.is_empty() {
            return Err(bad("empty"));
        }
        Ok(TauGrid::Explicit(values))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSection {
    /// Base directory for the file names below. `R0_DATA_DIR` overrides it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
    /// Canonical cases file as written by `ingest` or `simulate`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cases: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub covariates: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sources: Option<SourcesSection>,
    /// Regions to keep; every region in the input when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub regions: Option<Vec<String>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceKind {
    UsStates,
    Countries,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum VariantFill {
    #[default]
    Step,
    Linear,
}

/// Raw downloaded snapshots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourcesSection {
    pub kind: SourceKind,
    /// Column mapping file, relative to the config file; built-in defaults
    /// when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mapping: Option<PathBuf>,
    /// Country cases, population and vaccinations.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub owid: Option<PathBuf>,
    /// State cases.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cdc: Option<PathBuf>,
    /// State vaccinations in the country-file layout.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vaccinations: Option<PathBuf>,
    pub oxcgrt: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variants: Option<PathBuf>,
    /// Governor terms; the bundled table when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub governors: Option<PathBuf>,
    #[serde(default)]
    pub variant_fill: VariantFill,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SimDesign {
    #[default]
    Oracle,
    Realistic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSection {
    #[serde(default)]
    pub design: SimDesign,
    #[serde(default = "default_regions")]
    pub n_regions: usize,
    #[serde(default = "default_horizon")]
    pub horizon: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha_range: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub psi: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise_sd: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mf_start: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mf_end: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold_smoothing: Option<bool>,
}

fn default_regions() -> usize {
    10
}

fn default_horizon() -> usize {
    200
}

/// Command-line overrides applied on top of a loaded file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub out_dir: Option<PathBuf>,
    pub mf_start: Option<f64>,
    pub mf_end: Option<f64>,
    /// `START:END` in ISO dates.
    pub window: Option<String>,
    pub lag_p: Option<usize>,
    pub tau_grid: Option<String>,
    pub no_mitigation: bool,
    pub seed: Option<u64>,
    pub se_lag: Option<usize>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = read_to_string(path)?;
        let mut cfg = RunConfig::parse(&text).map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn parse(text: &str) -> std::result::Result<RunConfig, toml::de::Error> {
        toml::from_str(text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).unwrap_or_default()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(PipelineError::Config(m));
        if self.scenario.trim().is_empty() {
            return bad("scenario name is empty".into());
        }
        if let Some(w) = &self.window {
            let (start, end) = w.days()?;
            if end <= start {
                return bad(format!("window end {} must be after start {}", w.end, w.start));
            }
        }
        if self.mf.is_empty() {
            return bad("at least one [[mf]] entry is required".into());
        }
        for m in &self.mf {
            if !(m.start >= 1.0 && m.end >= 1.0) {
                return bad(format!("MF must be ≥ 1 (got {} -> {})", m.start, m.end));
            }
        }
        let model = &self.model;
        if !(model.gamma > 0.0 && model.gamma <= 1.0) {
            return bad(format!("gamma must lie in (0, 1], got {}", model.gamma));
        }
        model.tau_grid()?;
        match (&self.data, &self.simulation) {
            (Some(_), Some(_)) => return bad("give either [data] or [simulation], not both".into()),
            (None, None) => return bad("one of [data] or [simulation] is required".into()),
            _ => {}
        }
        if let Some(d) = &self.data {
            let canonical = d.cases.is_some() || d.covariates.is_some();
            match (canonical, &d.sources) {
                (true, Some(_)) => {
                    return bad("[data] takes either cases/covariates files or [data.sources], not both".into())
                }
                (false, None) => return bad("[data] needs cases and covariates files or [data.sources]".into()),
                (true, None) if d.cases.is_none() || d.covariates.is_none() => {
                    return bad("[data] needs both cases and covariates".into())
                }
                _ => {}
            }
            if let Some(s) = &d.sources {
                match s.kind {
                    SourceKind::UsStates if s.cdc.is_none() => return bad("us_states sources need a cdc file".into()),
                    SourceKind::Countries if s.owid.is_none() => {
                        return bad("countries sources need an owid file".into())
                    }
                    _ => {}
                }
            }
        }
        if let Some(s) = &self.simulation {
            if s.n_regions == 0 || s.horizon < 30 {
                return bad("simulation needs n_regions >= 1 and horizon >= 30".into());
            }
        }
        Ok(())
    }

    pub fn apply(&mut self, o: &Overrides) -> Result<()> {
        if let Some(out) = &o.out_dir {
            self.out_dir = Some(out.clone());
        }
        if o.mf_start.is_some() || o.mf_end.is_some() {
            let first = self.mf.first().copied().unwrap_or(MfPair { start: 5.0, end: 2.0 });
            self.mf = vec![MfPair {
                start: o.mf_start.unwrap_or(first.start),
                end: o.mf_end.unwrap_or(first.end),
            }];
        }
        if let Some(w) = &o.window {
            let (start, end) = w
                .split_once(':')
                .ok_or_else(|| PipelineError::Config(format!("--window {w:?}: expected START:END")))?;
            self.window = Some(Window {
                start: start.trim().into(),
                end: end.trim().into(),
            });
        }
        if let Some(p) = o.lag_p {
            self.model.lag_p = p;
        }
        if let Some(g) = &o.tau_grid {
            self.model.tau_grid = g.clone();
        }
        if o.no_mitigation {
            self.model.no_mitigation = true;
        }
        if let Some(l) = o.se_lag {
            self.model.se_lag = Some(l);
        }
        if let Some(seed) = o.seed {
            match &mut self.simulation {
                Some(s) => s.seed = seed,
                None => return Err(PipelineError::Config("--seed needs a [simulation] section".into())),
            }
        }
        self.validate()
    }

    /// Resolves a path from the file against the config directory.
    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    /// Resolves a data file against `data.dir`. For raw source snapshots a
    /// non-empty `R0_DATA_DIR` takes precedence.
    pub fn resolve_data(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            return p.to_path_buf();
        }
        let raw = self.data.as_ref().is_some_and(|d| d.sources.is_some());
        if let Some(env) = std::env::var_os(DATA_DIR_ENV).filter(|v| raw && !v.is_empty()) {
            return PathBuf::from(env).join(p);
        }
        match self.data.as_ref().and_then(|d| d.dir.as_ref()) {
            Some(dir) => self.resolve(dir).join(p),
            None => self.resolve(p),
        }
    }

    pub fn out_dir(&self) -> PathBuf {
        match &self.out_dir {
            Some(p) => self.resolve(p),
            None => self.base_dir.join("out").join(&self.scenario),
        }
    }

    pub fn window_days(&self) -> Result<Option<(Day, Day)>> {
        self.window.as_ref().map(Window::days).transpose()
    }

    pub fn epi_options(&self, mf: MfPair) -> Result<EpiOptions> {
        let mf_horizon = match (self.model.mf_horizon, self.window_days()?) {
            (MfHorizonChoice::Window, Some((first, last))) => MfHorizon::Calendar { first, last },
            (MfHorizonChoice::Window, None) => {
                return Err(PipelineError::Config("mf_horizon = \"window\" needs a [window]".into()))
            }
            (MfHorizonChoice::PerRegion, _) => MfHorizon::PerRegion,
        };
        Ok(EpiOptions {
            gamma: self.model.gamma,
            mf_start: mf.start,
            mf_end: mf.end,
            mf_horizon,
            smoothing: self.model.smoothing.into(),
            threshold_source: match self.model.threshold_source {
                ThresholdChoice::Reported => ThresholdSource::Reported,
                ThresholdChoice::Adjusted => ThresholdSource::Adjusted,
            },
        })
    }

    pub fn panel_spec(&self) -> Result<PanelSpec> {
        let regressors = self.model.regressors();
        let names: Vec<&str> = regressors.iter().map(String::as_str).collect();
        let mut spec = PanelSpec::new(self.model.lag_p, &names);
        spec.interactions = self.model.interactions();
        if let Some((start, end)) = self.window_days()? {
            spec.sample_start = Some(start);
            spec.sample_end = Some(end);
        }
        Ok(spec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SIM: &str = r#"
scenario = "sim"
[simulation]
n_regions = 4
"#;

    #[test]
    fn defaults_fill_in() {
        let cfg = RunConfig::parse(SIM).unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.mf, vec![MfPair { start: 5.0, end: 2.0 }]);
        assert_eq!(cfg.model.lag_p, 10);
        assert_eq!(cfg.simulation.as_ref().unwrap().horizon, 200);
    }

    #[test]
    fn exactly_one_input_kind() {
        let both = format!("{SIM}\n[data]\ncases = \"c.csv\"\ncovariates = \"x.csv\"\n");
        assert!(RunConfig::parse(&both).unwrap().validate().is_err());
        let none = "scenario = \"x\"\n";
        assert!(RunConfig::parse(none).unwrap().validate().is_err());
        let half = "scenario = \"x\"\n[data]\ncases = \"c.csv\"\n";
        assert!(RunConfig::parse(half).unwrap().validate().is_err());
    }

    #[test]
    fn window_must_be_ordered() {
        let cfg = format!("{SIM}\n[window]\nstart = \"2021-01-31\"\nend = \"2020-03-06\"\n");
        let err = RunConfig::parse(&cfg).unwrap().validate().unwrap_err();
        assert!(err.to_string().contains("after start"), "{err}");
        let same = format!("{SIM}\n[window]\nstart = \"2021-01-31\"\nend = \"2021-01-31\"\n");
        assert!(RunConfig::parse(&same).unwrap().validate().is_err());
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(RunConfig::parse("scenario = \"x\"\nbogus = 1\n").is_err());
    }

    #[test]
    fn tau_grid_specs() {
        assert_eq!(TauGrid::parse("default").unwrap(), TauGrid::Default);
        assert_eq!(
            TauGrid::parse("0.7, 0.4,0.4").unwrap(),
            TauGrid::Explicit(vec![0.4, 0.7])
        );
        let TauGrid::Explicit(g) = TauGrid::parse("0.01:1.00:0.01").unwrap() else {
            panic!()
        };
        assert_eq!(g.len(), 100);
        assert_eq!(g[39], 0.40);
        assert_eq!(g[99], 1.0);
        assert!(TauGrid::parse("1:0:0.1").is_err());
        assert!(TauGrid::parse("-0.1").is_err());
        assert!(TauGrid::parse("a,b").is_err());
    }

    #[test]
    fn overrides() {
        let mut cfg = RunConfig::parse(SIM).unwrap();
        cfg.apply(&Overrides {
            mf_end: Some(2.5),
            window: Some("2020-03-06:2021-01-31".into()),
            lag_p: Some(7),
            seed: Some(9),
            no_mitigation: true,
            ..Overrides::default()
        })
        .unwrap();
        assert_eq!(cfg.mf, vec![MfPair { start: 5.0, end: 2.5 }]);
        assert_eq!(cfg.model.lag_p, 7);
        assert!(cfg.model.no_mitigation);
        assert_eq!(cfg.simulation.unwrap().seed, 9);
        let mut cfg = RunConfig::parse(SIM).unwrap();
        let bad = Overrides {
            window: Some("2020-03-06".into()),
            ..Overrides::default()
        };
        assert!(cfg.apply(&bad).is_err());
    }

    #[test]
    fn model_columns() {
        let m = ModelSection {
            vaccination: true,
            delta: true,
            governor_interaction: true,
            ..ModelSection::default()
        };
        assert_eq!(
            m.regressors(),
            vec!["stringency", "economic_support", "vaccinated_share", "delta_share"]
        );
        assert_eq!(m.interactions()[0].name, REP_X_ECONOMIC_SUPPORT);
    }

    #[test]
    fn mf_labels() {
        assert_eq!(MfPair { start: 5.0, end: 2.0 }.label(), "mf_5-2");
        assert_eq!(MfPair { start: 8.0, end: 2.5 }.label(), "mf_8-2.5");
    }
}
