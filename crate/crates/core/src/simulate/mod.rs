//! Synthetic epidemic panels with known parameters.
//!
//! Each region follows the single-group SIR law of motion used by the
//! estimator: on day `t`
//!
//! ```text
//! eta_t    = alpha_j + psi' x_{t-p} + kappa * I(thr_{t-p} > tau) + u_t
//! 1 - c_{t+1} = (1 - c_t) * exp(-gamma * eta_t * i_t)
//! ```
//!
//! with `u_t ~ N(0, noise_sd^2)`, so the per-day survival ratio carries a
//! multiplicative log-normal shock. True new cases are divided by a linear
//! multiplication-factor path to give the reported series. The arithmetic
//! mirrors [`crate::epi`] step for step, so a noiseless run pushed back
//! through the pipeline with the identity options reproduces the truth to
//! rounding error.

mod moment;

pub use moment::{moment_check, MomentCheck, MomentConfig, MomentRow};

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::calendar::Day;
use crate::epi::{infection_step, per_100k, trailing_window_mean, MfSchedule, RegionSeries, GAMMA};
use crate::error::{Error, Result};
use crate::panel::CovariateSet;

/// How one covariate evolves over calendar days.
#[derive(Debug, Clone, PartialEq)]
pub enum CovariateProcess {
    Constant(f64),
    /// Same path for every region, indexed by series day.
    Path(Vec<f64>),
    /// One explicit path per region.
    PerRegion(Vec<Vec<f64>>),
    /// Linear ramp from zero to `level` over `ramp_days`, starting `lag_p`
    /// days before the outbreak, plus an AR(1) deviation, clamped to
    /// `[floor, cap]`. Region `j` scales the level by `1 + spread * s_j`
    /// where `s_j` runs evenly over `[-1, 1]`.
    RampAr1 {
        level: f64,
        spread: f64,
        ramp_days: usize,
        phi: f64,
        innovation_sd: f64,
        floor: f64,
        cap: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct CovariateSpec {
    pub name: String,
    pub process: CovariateProcess,
}

impl CovariateSpec {
    pub fn new(name: &str, process: CovariateProcess) -> Self {
        CovariateSpec {
            name: name.into(),
            process,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub n_regions: usize,
    pub populations: Vec<u64>,
    /// Calendar days after the `lag_p` burn-in; every series has
    /// `lag_p + horizon` days.
    pub horizon: usize,
    pub gamma: f64,
    pub lag_p: usize,
    pub start: Day,
    /// Outbreak day of region `j` is `lag_p + outbreak_offsets[j]`.
    pub outbreak_offsets: Vec<usize>,
    /// True new cases on the outbreak day.
    pub initial_cases: Vec<f64>,
    pub true_alpha: Vec<f64>,
    pub covariates: Vec<CovariateSpec>,
    pub true_psi: Vec<f64>,
    pub true_kappa: f64,
    pub true_tau: f64,
    pub noise_sd: f64,
    pub mf_start: f64,
    pub mf_end: f64,
    /// Whether the threshold variable is the seven-day average of reported
    /// cases (as in the default pipeline) or the raw daily count.
    pub threshold_smoothing: bool,
    pub seed: u64,
}

impl SimConfig {
    /// Staggered design with strong mitigation: `alpha` evenly spread over
    /// `[alpha_lo, alpha_hi]`, stringency and economic support ramps capped
    /// low enough that the transmission rate stays positive.
    pub fn oracle_design(n_regions: usize, horizon: usize, seed: u64) -> SimConfig {
        let alpha = spread(n_regions, 3.0, 6.0);
        SimConfig {
            n_regions,
            populations: (0..n_regions).map(|j| 1_000_000 + 250_000 * j as u64).collect(),
            horizon,
            gamma: GAMMA,
            lag_p: 10,
            start: Day::from_ymd(2020, 3, 6).unwrap_or(Day(0)),
            outbreak_offsets: (0..n_regions).map(|j| (j * 7) % 23).collect(),
            initial_cases: (0..n_regions).map(|j| 1.0 + 0.5 * (j % 3) as f64).collect(),
            true_alpha: alpha,
            covariates: vec![
                CovariateSpec::new(
                    "stringency",
                    CovariateProcess::RampAr1 {
                        level: 0.30,
                        spread: 0.2,
                        ramp_days: 40,
                        phi: 0.9,
                        innovation_sd: 0.02,
                        floor: 0.0,
                        cap: 0.40,
                    },
                ),
                CovariateSpec::new(
                    "economic_support",
                    CovariateProcess::RampAr1 {
                        level: 0.25,
                        spread: 0.3,
                        ramp_days: 70,
                        phi: 0.95,
                        innovation_sd: 0.02,
                        floor: 0.0,
                        cap: 0.35,
                    },
                ),
            ],
            true_psi: vec![-1.3, -0.4],
            true_kappa: -2.3,
            true_tau: 0.40,
            noise_sd: 0.0,
            mf_start: 1.0,
            mf_end: 1.0,
            threshold_smoothing: false,
            seed,
        }
    }

    /// Covariate levels near the observed cross-region averages (stringency
    /// about 0.62, economic support about 0.56), reported cases distorted by
    /// a 5 to 2 multiplication factor and noise sd 0.1.
    pub fn realistic_design(n_regions: usize, horizon: usize, seed: u64) -> SimConfig {
        let mut cfg = SimConfig::oracle_design(n_regions, horizon, seed);
        cfg.true_alpha = spread(n_regions, 4.0, 6.0);
        cfg.covariates = vec![
            CovariateSpec::new(
                "stringency",
                CovariateProcess::RampAr1 {
                    level: 0.66,
                    spread: 0.2,
                    ramp_days: 30,
                    phi: 0.9,
                    innovation_sd: 0.03,
                    floor: 0.0,
                    cap: 0.8,
                },
            ),
            CovariateSpec::new(
                "economic_support",
                CovariateProcess::RampAr1 {
                    level: 0.62,
                    spread: 0.3,
                    ramp_days: 60,
                    phi: 0.95,
                    innovation_sd: 0.03,
                    floor: 0.0,
                    cap: 0.7,
                },
            ),
        ];
        cfg.noise_sd = 0.1;
        cfg.mf_start = 5.0;
        cfg.mf_end = 2.0;
        cfg.threshold_smoothing = true;
        cfg
    }

    pub fn series_len(&self) -> usize {
        self.lag_p + self.horizon
    }

    pub fn region_id(&self, j: usize) -> String {
        format!("R{:02}", j + 1)
    }

    pub fn covariate_names(&self) -> Vec<String> {
        self.covariates.iter().map(|c| c.name.clone()).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidSimConfig(msg));
        let n = self.n_regions;
        if n == 0 {
            return bad("n_regions must be positive".into());
        }
        for (what, len) in [
            ("populations", self.populations.len()),
            ("outbreak_offsets", self.outbreak_offsets.len()),
            ("initial_cases", self.initial_cases.len()),
            ("true_alpha", self.true_alpha.len()),
        ] {
            if len != n {
                return bad(format!("{what} has {len} entries for {n} regions"));
            }
        }
        if self.true_psi.len() != self.covariates.len() {
            return bad(format!(
                "true_psi has {} entries for {} covariates",
                self.true_psi.len(),
                self.covariates.len()
            ));
        }
        if self.horizon < 30 {
            return bad(format!("horizon {} is below 30 days", self.horizon));
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return bad(format!("gamma {} outside (0, 1]", self.gamma));
        }
        if self.populations.contains(&0) {
            return bad("populations must be positive".into());
        }
        if self.true_alpha.iter().any(|a| !(a.is_finite() && *a > 0.0)) {
            return bad("true_alpha entries must be positive".into());
        }
        for (j, (&c0, &pop)) in self.initial_cases.iter().zip(&self.populations).enumerate() {
            if !(c0 > 0.0 && c0 < pop as f64) {
                return bad(format!("initial_cases[{j}] must lie in (0, population)"));
            }
        }
        if self.outbreak_offsets.iter().any(|&o| o + 2 >= self.horizon) {
            return bad("outbreak offset leaves fewer than two days".into());
        }
        if !(self.noise_sd >= 0.0 && self.noise_sd.is_finite()) {
            return bad("noise_sd must be finite and non-negative".into());
        }
        if !(self.true_tau >= 0.0 && self.true_tau.is_finite()) {
            return bad("true_tau must be finite and non-negative".into());
        }
        if !(self.mf_start >= 1.0 && self.mf_end >= 1.0) {
            return Err(Error::MfBelowOne(self.mf_start.min(self.mf_end)));
        }
        if self
            .true_psi
            .iter()
            .chain(core::iter::once(&self.true_kappa))
            .any(|v| !v.is_finite())
        {
            return bad("coefficients must be finite".into());
        }
        let len = self.series_len();
        for cov in &self.covariates {
            match &cov.process {
                CovariateProcess::Path(p) if p.len() < len => {
                    return bad(format!("path for {} is shorter than {len} days", cov.name));
                }
                CovariateProcess::PerRegion(paths) if paths.len() != n || paths.iter().any(|p| p.len() < len) => {
                    return bad(format!("per-region paths for {} do not cover every region", cov.name));
                }
                CovariateProcess::RampAr1 {
                    phi,
                    floor,
                    cap,
                    ramp_days,
                    ..
                } if !(phi.abs() < 1.0 && floor <= cap && *ramp_days > 0) => {
                    return bad(format!("invalid ramp process for {}", cov.name));
                }
                _ => {}
            }
        }
        Ok(())
    }
}

/// `n` values evenly spaced over `[lo, hi]`; the midpoint when `n == 1`.
pub fn spread(n: usize, lo: f64, hi: f64) -> Vec<f64> {
    if n == 1 {
        return vec![(lo + hi) / 2.0];
    }
    (0..n).map(|j| lo + (hi - lo) * j as f64 / (n - 1) as f64).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegionTruth {
    pub region_id: String,
    pub alpha: f64,
    pub population: u64,
    /// Series index of the first case.
    pub outbreak: usize,
    /// Set when the cumulative share approached one and the series was cut.
    pub halted_at: Option<usize>,
    /// Days on which the drawn transmission rate was negative and set to 0.
    pub clamped_days: usize,
    pub final_c: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Truth {
    pub regions: Vec<RegionTruth>,
    pub covariate_names: Vec<String>,
    pub psi: Vec<f64>,
    pub kappa: f64,
    pub tau: f64,
    pub gamma: f64,
    pub lag_p: usize,
    pub noise_sd: f64,
    pub mf_start: f64,
    pub mf_end: f64,
    pub seed: u64,
}

impl Truth {
    pub fn alpha_of(&self, region: &str) -> Option<f64> {
        self.regions.iter().find(|r| r.region_id == region).map(|r| r.alpha)
    }

    pub fn any_halted(&self) -> bool {
        self.regions.iter().any(|r| r.halted_at.is_some())
    }

    pub fn clamped_days(&self) -> usize {
        self.regions.iter().map(|r| r.clamped_days).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimOutput {
    pub series: Vec<RegionSeries>,
    pub covariates: CovariateSet,
    pub truth: Truth,
}

/// Cut a region once its cumulative share gets this close to one.
const HALT_MARGIN: f64 = 1e-9;

fn region_rng(seed: u64, j: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(j as u64 + 1);
    rng
}

fn covariate_path(cfg: &SimConfig, process: &CovariateProcess, j: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let len = cfg.series_len();
    match process {
        CovariateProcess::Constant(v) => vec![*v; len],
        CovariateProcess::Path(p) => p[..len].to_vec(),
        CovariateProcess::PerRegion(paths) => paths[j][..len].to_vec(),
        CovariateProcess::RampAr1 {
            level,
            spread: sp,
            ramp_days,
            phi,
            innovation_sd,
            floor,
            cap,
        } => {
            let s = if cfg.n_regions > 1 {
                2.0 * j as f64 / (cfg.n_regions - 1) as f64 - 1.0
            } else {
                0.0
            };
            let lvl = level * (1.0 + sp * s);
            let ramp_start = cfg.outbreak_offsets[j];
            let mut dev = 0.0;
            (0..len)
                .map(|d| {
                    let z: f64 = StandardNormal.sample(rng);
                    dev = phi * dev + innovation_sd * z;
                    if d < ramp_start {
                        return floor.max(0.0).min(*cap);
                    }
                    let progress = ((d - ramp_start) as f64 / *ramp_days as f64).min(1.0);
                    (lvl * progress + dev).clamp(*floor, *cap)
                })
                .collect()
        }
    }
}

/// Runs the generator. Identical configs give identical output.
pub fn simulate_panel(cfg: &SimConfig) -> Result<SimOutput> {
    cfg.validate()?;
    let len = cfg.series_len();
    let p = cfg.lag_p;
    let mut covariates = CovariateSet::new(cfg.covariate_names());
    let mut series = Vec::with_capacity(cfg.n_regions);
    let mut regions = Vec::with_capacity(cfg.n_regions);

    for j in 0..cfg.n_regions {
        let id = cfg.region_id(j);
        let mut rng = region_rng(cfg.seed, j);
        let paths: Vec<Vec<f64>> = cfg
            .covariates
            .iter()
            .map(|c| covariate_path(cfg, &c.process, j, &mut rng))
            .collect();
        for d in 0..len {
            let row = paths.iter().map(|path| Some(path[d])).collect();
            covariates.insert(&id, cfg.start + d as i32, row);
        }

        let pop = cfg.populations[j];
        let popf = pop as f64;
        let outbreak = p + cfg.outbreak_offsets[j];
        let mf = MfSchedule::linear(cfg.mf_start, cfg.mf_end, len - outbreak)?;
        let mf_at = |t: usize| mf.values()[t - outbreak];

        let mut reported = vec![0.0; len];
        let mut thr = vec![0.0; len];
        let mut total = 0.0;
        let (mut c, mut i) = (0.0, 0.0);
        let mut halted_at = None;
        let mut clamped_days = 0;
        let mut end = len;

        for t in 0..len {
            let new = if t < outbreak {
                0.0
            } else if t == outbreak {
                cfg.initial_cases[j]
            } else {
                let s = t - 1;
                let mut eta = cfg.true_alpha[j];
                for (k, path) in paths.iter().enumerate() {
                    eta += cfg.true_psi[k] * path[s - p];
                }
                if thr[s - p] > cfg.true_tau {
                    eta += cfg.true_kappa;
                }
                if cfg.noise_sd > 0.0 {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    eta += cfg.noise_sd * z;
                }
                if eta < 0.0 {
                    eta = 0.0;
                    clamped_days += 1;
                }
                (1.0 - c) * popf * -libm::expm1(-cfg.gamma * eta * i)
            };
            let next_total = total + new;
            let next_c = next_total / popf;
            if next_c >= 1.0 - HALT_MARGIN {
                halted_at = Some(t);
                end = t;
                break;
            }
            total = next_total;
            i = infection_step(i, cfg.gamma, c, next_c);
            c = next_c;
            if t >= outbreak {
                reported[t] = new / mf_at(t);
            }
            let daily = if cfg.threshold_smoothing {
                trailing_window_mean(&reported[..=t], t)
            } else {
                reported[t]
            };
            thr[t] = per_100k(daily, pop);
        }
        reported.truncate(end);
        if end <= outbreak + 1 {
            return Err(Error::InvalidSimConfig(format!(
                "region {id} saturated within a day of its outbreak"
            )));
        }

        series.push(RegionSeries::new(id.clone(), pop, cfg.start, reported)?);
        regions.push(RegionTruth {
            region_id: id,
            alpha: cfg.true_alpha[j],
            population: pop,
            outbreak,
            halted_at,
            clamped_days,
            final_c: c,
        });
    }

    Ok(SimOutput {
        series,
        covariates,
        truth: Truth {
            regions,
            covariate_names: cfg.covariate_names(),
            psi: cfg.true_psi.clone(),
            kappa: cfg.true_kappa,
            tau: cfg.true_tau,
            gamma: cfg.gamma,
            lag_p: cfg.lag_p,
            noise_sd: cfg.noise_sd,
            mf_start: cfg.mf_start,
            mf_end: cfg.mf_end,
            seed: cfg.seed,
        },
    })
}
