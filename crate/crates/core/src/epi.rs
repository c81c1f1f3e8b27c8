//! From reported daily cases to the regression's dependent variable.
//!
//! Per-capita cumulative cases `c_t` are built from under-reporting adjusted
//! daily counts, active infections follow `i_t = (1 - gamma) i_{t-1} + Δc_t`,
//! and the scaled transmission rate is
//! `y_{t+1} = -ln((1 - c_{t+1}) / (1 - c_t)) / (gamma i_t)`.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::calendar::Day;
use crate::error::{Error, Result};

/// Daily recovery rate (mean infectious period of 14 days).
pub const GAMMA: f64 = 1.0 / 14.0;

/// Length of the trailing moving-average window.
pub const MA_WINDOW: usize = 7;

/// Reported daily new cases for one region on a contiguous daily calendar.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionSeries {
    region_id: String,
    population: u64,
    start: Day,
    reported_new_cases: Vec<f64>,
}

impl RegionSeries {
    pub fn new(
        region_id: impl Into<String>,
        population: u64,
        start: Day,
        reported_new_cases: Vec<f64>,
    ) -> Result<Self> {
        if population == 0 {
            return Err(Error::NonPositivePopulation);
        }
        if reported_new_cases.is_empty() {
            return Err(Error::EmptySeries);
        }
        if let Some((index, &value)) = reported_new_cases
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.is_finite() && **v >= 0.0))
        {
            return Err(Error::InvalidCaseCount { index, value });
        }
        Ok(RegionSeries {
            region_id: region_id.into(),
            population,
            start,
            reported_new_cases,
        })
    }

    /// Like [`RegionSeries::new`], but checks that `dates` step by exactly one day.
    pub fn from_dated(
        region_id: impl Into<String>,
        population: u64,
        dates: &[Day],
        reported_new_cases: Vec<f64>,
    ) -> Result<Self> {
        if dates.len() != reported_new_cases.len() {
            return Err(Error::LengthMismatch {
                what: "dates vs reported_new_cases",
                left: dates.len(),
                right: reported_new_cases.len(),
            });
        }
        let start = *dates.first().ok_or(Error::EmptySeries)?;
        if let Some(index) = dates.windows(2).position(|w| w[1].0 != w[0].0 + 1) {
            return Err(Error::NonContiguousDates { index: index + 1 });
        }
        RegionSeries::new(region_id, population, start, reported_new_cases)
    }

    pub fn region_id(&self) -> &str {
        &self.region_id
    }

    pub fn population(&self) -> u64 {
        self.population
    }

    pub fn start(&self) -> Day {
        self.start
    }

    /// Last day covered by the series.
    pub fn end(&self) -> Day {
        self.start + (self.reported_new_cases.len() as i32 - 1)
    }

    pub fn len(&self) -> usize {
        self.reported_new_cases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reported_new_cases.is_empty()
    }

    pub fn reported_new_cases(&self) -> &[f64] {
        &self.reported_new_cases
    }

    pub fn date(&self, index: usize) -> Day {
        self.start + index as i32
    }
}

/// Time-indexed multiplication factors (true cases / reported cases).
#[derive(Debug, Clone, PartialEq)]
pub struct MfSchedule {
    values: Vec<f64>,
}

impl MfSchedule {
    /// Linear decline (or rise) from `mf_start` on the first day to `mf_end`
    /// on day `horizon - 1`.
    pub fn linear(mf_start: f64, mf_end: f64, horizon: usize) -> Result<Self> {
        check_mf(mf_start)?;
        check_mf(mf_end)?;
        if horizon < 2 {
            return Err(Error::HorizonTooShort(horizon));
        }
        let last = (horizon - 1) as f64;
        let mut values: Vec<f64> = (0..horizon)
            .map(|k| mf_start + (mf_end - mf_start) * k as f64 / last)
            .collect();
        values[horizon - 1] = mf_end;
        Ok(MfSchedule { values })
    }

    pub fn constant(value: f64, horizon: usize) -> Result<Self> {
        check_mf(value)?;
        if horizon == 0 {
            return Err(Error::HorizonTooShort(0));
        }
        Ok(MfSchedule {
            values: vec![value; horizon],
        })
    }

    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::HorizonTooShort(0));
        }
        for &v in &values {
            check_mf(v)?;
        }
        Ok(MfSchedule { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

fn check_mf(v: f64) -> Result<()> {
    if v >= 1.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::MfBelowOne(v))
    }
}

/// Where the moving average sits relative to the MF scaling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Smoothing {
    Off,
    #[default]
    SmoothThenScale,
    ScaleThenSmooth,
}

/// Mean of the trailing window ending at `k`; the window widens from one to
/// seven days at the start of the series.
pub fn trailing_window_mean(series: &[f64], k: usize) -> f64 {
    let lo = (k + 1).saturating_sub(MA_WINDOW);
    let window = &series[lo..=k];
    window.iter().sum::<f64>() / window.len() as f64
}

/// Seven-day trailing moving average with a widening prefix window.
pub fn seven_day_ma(series: &[f64]) -> Result<Vec<f64>> {
    if series.is_empty() {
        return Err(Error::EmptySeries);
    }
    Ok((0..series.len()).map(|k| trailing_window_mean(series, k)).collect())
}

/// Daily cases per 100,000 residents.
pub fn per_100k(cases: f64, population: u64) -> f64 {
    cases / population as f64 * 1e5
}

/// Under-reporting adjusted daily new cases.
pub fn adjusted_new_cases(raw: &[f64], mf: &MfSchedule, smoothing: Smoothing) -> Result<Vec<f64>> {
    if raw.len() != mf.len() {
        return Err(Error::LengthMismatch {
            what: "series vs MF schedule",
            left: raw.len(),
            right: mf.len(),
        });
    }
    let scale = |xs: &[f64]| -> Vec<f64> { xs.iter().zip(mf.values()).map(|(x, m)| x * m).collect() };
    match smoothing {
        Smoothing::Off => Ok(scale(raw)),
        Smoothing::SmoothThenScale => Ok(scale(&seven_day_ma(raw)?)),
        Smoothing::ScaleThenSmooth => seven_day_ma(&scale(raw)),
    }
}

/// Per-capita cumulative adjusted cases. Fails if the total reaches the
/// population.
pub fn adjust_and_accumulate(raw: &RegionSeries, mf: &MfSchedule, smoothing: Smoothing) -> Result<Vec<f64>> {
    let adjusted = adjusted_new_cases(raw.reported_new_cases(), mf, smoothing)?;
    cumulate_per_capita(&adjusted, raw.population())
}

pub(crate) fn cumulate_per_capita(new_cases: &[f64], population: u64) -> Result<Vec<f64>> {
    let pop = population as f64;
    let mut total = 0.0;
    let mut c = Vec::with_capacity(new_cases.len());
    for (index, &n) in new_cases.iter().enumerate() {
        total += n;
        let ct = total / pop;
        if !(ct < 1.0) {
            return Err(Error::CasesExceedPopulation { index, c: ct });
        }
        c.push(ct);
    }
    Ok(c)
}

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma > 0.0 && gamma <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidGamma(gamma))
    }
}

/// One step of the active-infection recursion.
#[inline]
pub fn infection_step(prev_i: f64, gamma: f64, prev_c: f64, c: f64) -> f64 {
    (1.0 - gamma) * prev_i + (c - prev_c)
}

/// Per-capita active infections, with `c = i = 0` before the first entry.
pub fn active_infections(c: &[f64], gamma: f64) -> Result<Vec<f64>> {
    check_gamma(gamma)?;
    let mut out = Vec::with_capacity(c.len());
    let (mut prev_c, mut prev_i) = (0.0, 0.0);
    for (t, &ct) in c.iter().enumerate() {
        if ct < prev_c || ct < 0.0 {
            return Err(Error::CumulativeDecreased(t));
        }
        let it = infection_step(prev_i, gamma, prev_c, ct);
        out.push(it);
        prev_c = ct;
        prev_i = it;
    }
    Ok(out)
}

/// `-ln((1 - c_next) / (1 - c_now))`, evaluated as `-ln(1 - Δc / (1 - c_now))`
/// so that tiny increments near `c = 0` keep full precision.
#[inline]
pub fn log_survival_drop(c_now: f64, c_next: f64) -> f64 {
    -libm::log1p(-(c_next - c_now) / (1.0 - c_now))
}

/// Scaled transmission rate `beta_t / gamma`, indexed by the later day: entry
/// `t + 1` holds the value built from days `t` and `t + 1`. Entry 0 and days
/// with `i_t = 0` are `None`.
pub fn transmission_lhs(c: &[f64], i: &[f64], gamma: f64) -> Result<Vec<Option<f64>>> {
    check_gamma(gamma)?;
    if c.len() != i.len() {
        return Err(Error::LengthMismatch {
            what: "c vs i",
            left: c.len(),
            right: i.len(),
        });
    }
    let mut y = vec![None; c.len()];
    for t in 0..c.len().saturating_sub(1) {
        let (now, next) = (c[t], c[t + 1]);
        if !(now < 1.0) || !(next < 1.0) {
            return Err(Error::CasesExceedPopulation {
                index: t + 1,
                c: if now < 1.0 { next } else { now },
            });
        }
        if next < now {
            return Err(Error::CumulativeDecreased(t + 1));
        }
        if i[t] > 0.0 {
            let v = log_survival_drop(now, next) / (gamma * i[t]);
            if v.is_finite() {
                y[t + 1] = Some(v);
            }
        }
    }
    Ok(y)
}

/// How the multiplication-factor schedule is laid over calendar time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MfHorizon {
    /// From the region's first reported case to the end of its series.
    #[default]
    PerRegion,
    /// One common calendar; days outside it take the nearest endpoint value.
    Calendar { first: Day, last: Day },
}

/// Which daily case series feeds the threshold variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ThresholdSource {
    #[default]
    Reported,
    Adjusted,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpiOptions {
    pub gamma: f64,
    pub mf_start: f64,
    pub mf_end: f64,
    pub mf_horizon: MfHorizon,
    pub smoothing: Smoothing,
    pub threshold_source: ThresholdSource,
}

impl Default for EpiOptions {
    fn default() -> Self {
        EpiOptions {
            gamma: GAMMA,
            mf_start: 5.0,
            mf_end: 2.0,
            mf_horizon: MfHorizon::PerRegion,
            smoothing: Smoothing::SmoothThenScale,
            threshold_source: ThresholdSource::Reported,
        }
    }
}

impl EpiOptions {
    /// No smoothing, no under-reporting correction.
    pub fn identity() -> Self {
        EpiOptions {
            mf_start: 1.0,
            mf_end: 1.0,
            smoothing: Smoothing::Off,
            ..EpiOptions::default()
        }
    }
}

/// Derived per-region series. All vectors share the day index of the source
/// series; `y[t]` is the transmission value for the step from `t - 1` to `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct EpiFrame {
    pub region_id: String,
    pub population: u64,
    pub start: Day,
    /// Index of the first day with a positive (smoothed) case count.
    pub outbreak: usize,
    pub c: Vec<f64>,
    pub i: Vec<f64>,
    pub dc_per_100k: Vec<f64>,
    pub y: Vec<Option<f64>>,
}

impl EpiFrame {
    pub fn build(raw: &RegionSeries, opts: &EpiOptions) -> Result<EpiFrame> {
        check_gamma(opts.gamma)?;
        let cases = raw.reported_new_cases();
        let smoothed = match opts.smoothing {
            Smoothing::Off => cases.to_vec(),
            _ => seven_day_ma(cases)?,
        };
        let outbreak = smoothed
            .iter()
            .position(|&v| v > 0.0)
            .ok_or_else(|| Error::NoOutbreak(raw.region_id().into()))?;
        let mf = mf_for_series(raw, outbreak, opts)?;
        let adjusted = adjusted_new_cases(cases, &mf, opts.smoothing)?;
        let c = cumulate_per_capita(&adjusted, raw.population())?;
        let i = active_infections(&c, opts.gamma)?;
        let y = transmission_lhs(&c, &i, opts.gamma)?;
        let thr_source = match opts.threshold_source {
            ThresholdSource::Reported => &smoothed,
            ThresholdSource::Adjusted => &adjusted,
        };
        let dc_per_100k = thr_source.iter().map(|&v| per_100k(v, raw.population())).collect();
        Ok(EpiFrame {
            region_id: raw.region_id().into(),
            population: raw.population(),
            start: raw.start(),
            outbreak,
            c,
            i,
            dc_per_100k,
            y,
        })
    }

    pub fn len(&self) -> usize {
        self.c.len()
    }

    pub fn is_empty(&self) -> bool {
        self.c.is_empty()
    }

    pub fn date(&self, index: usize) -> Day {
        self.start + index as i32
    }

    /// Index of `day` within the frame, if covered.
    pub fn index_of(&self, day: Day) -> Option<usize> {
        let k = day.days_since(self.start);
        (k >= 0 && (k as usize) < self.len()).then_some(k as usize)
    }
}

/// MF values aligned with the full series. Days before the outbreak carry no
/// cases, so they simply repeat the starting value.
fn mf_for_series(raw: &RegionSeries, outbreak: usize, opts: &EpiOptions) -> Result<MfSchedule> {
    let len = raw.len();
    match opts.mf_horizon {
        MfHorizon::PerRegion => {
            let horizon = len - outbreak;
            let tail = if horizon >= 2 {
                MfSchedule::linear(opts.mf_start, opts.mf_end, horizon)?
            } else {
                MfSchedule::constant(opts.mf_start, horizon)?
            };
            let mut values = vec![opts.mf_start; outbreak];
            values.extend_from_slice(tail.values());
            MfSchedule::from_values(values)
        }
        MfHorizon::Calendar { first, last } => {
            let span = last.days_since(first);
            let cal = MfSchedule::linear(opts.mf_start, opts.mf_end, (span.max(1) + 1) as usize)?;
            let values = (0..len)
                .map(|k| {
                    let off = raw.date(k).days_since(first).clamp(0, span.max(0)) as usize;
                    cal.values()[off.min(cal.len() - 1)]
                })
                .collect();
            MfSchedule::from_values(values)
        }
    }
}
