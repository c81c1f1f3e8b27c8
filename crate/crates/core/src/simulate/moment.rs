//! Finite-population check of the survival-ratio moment condition.
//!
//! A population of `n` people holds `S = (1 - c) n` susceptibles and
//! `I = i n` infectious. Every infectious person meets each susceptible with
//! probability `beta / n`, so a susceptible escapes with probability
//! `(1 - beta / n)^I` and `S'` is binomial. The mean of `S' / S` then differs
//! from `exp(-beta * i)` by a term of order `1 / n`.

use alloc::vec::Vec;

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct MomentConfig {
    pub beta: f64,
    /// Infectious share of the population.
    pub i: f64,
    /// Cumulative (no longer susceptible) share.
    pub c: f64,
    pub n_grid: Vec<u64>,
    /// Replications at population `n` are `reps_per_n * n`, which keeps the
    /// Monte Carlo error a fixed fraction of the `1 / n` bias.
    pub reps_per_n: u64,
    pub seed: u64,
}

impl Default for MomentConfig {
    fn default() -> Self {
        MomentConfig {
            beta: 3.0,
            i: 0.2,
            c: 0.2,
            n_grid: alloc::vec![1_000, 10_000, 100_000],
            reps_per_n: 128,
            seed: 20_200_306,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentRow {
    pub n: u64,
    pub reps: u64,
    pub empirical_mean: f64,
    /// Monte Carlo standard error of `empirical_mean`.
    pub mc_se: f64,
    pub target: f64,
    pub deviation: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MomentCheck {
    pub rows: Vec<MomentRow>,
    /// Least-squares slope of `ln |deviation|` on `ln n`.
    pub log_log_slope: f64,
}

pub fn moment_check(cfg: &MomentConfig) -> Result<MomentCheck> {
    let bad = |m: &str| Err(Error::InvalidSimConfig(m.into()));
    if !(cfg.beta > 0.0 && cfg.i > 0.0 && cfg.c >= 0.0 && cfg.i + cfg.c <= 1.0) {
        return bad("moment check needs beta > 0, i > 0, c >= 0 and i + c <= 1");
    }
    if cfg.n_grid.len() < 2 || cfg.reps_per_n == 0 {
        return bad("moment check needs at least two populations and one replication");
    }
    let target = libm::exp(-cfg.beta * cfg.i);
    let mut rows = Vec::with_capacity(cfg.n_grid.len());
    for (k, &n) in cfg.n_grid.iter().enumerate() {
        let nf = n as f64;
        let s = libm::round((1.0 - cfg.c) * nf) as u64;
        let infectious = libm::round(cfg.i * nf);
        if s == 0 || cfg.beta >= nf {
            return bad("population too small for the moment check");
        }
        let escape = libm::pow(1.0 - cfg.beta / nf, infectious);
        let draw = Binomial::new(s, escape).map_err(|_| Error::InvalidSimConfig("binomial".into()))?;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(k as u64);
        let reps = cfg.reps_per_n.saturating_mul(n);
        let mut sum = 0u128;
        let mut sum_sq = 0u128;
        for _ in 0..reps {
            let v = draw.sample(&mut rng) as u128;
            sum += v;
            sum_sq += v * v;
        }
        let r = reps as f64;
        let sf = s as f64;
        let mean = sum as f64 / r / sf;
        let mean_count = sum as f64 / r;
        let var = (sum_sq as f64 / r - mean_count * mean_count).max(0.0) / (sf * sf);
        rows.push(MomentRow {
            n,
            reps,
            empirical_mean: mean,
            mc_se: libm::sqrt(var / r),
            target,
            deviation: mean - target,
        });
    }
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .map(|r| (libm::log(r.n as f64), libm::log(r.deviation.abs())))
        .collect();
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    Ok(MomentCheck {
        rows,
        log_log_slope: sxy / sxx,
    })
}
