//! Profile least squares over a grid of candidate thresholds.
//!
//! Only the indicator column changes with `tau`, so the residual sum of
//! squares at each grid point follows from the covariates-only fit by the
//! partitioned-regression update
//! `SSR(tau) = SSR_x - (d'e)^2 / (d~' M_x d~)`, where `e` are the
//! covariates-only within residuals and `d~` the demeaned indicator. A single
//! descending sweep over the sorted threshold variable evaluates every grid
//! point; the selected `tau` is then refitted in full.

use alloc::vec;
use alloc::vec::Vec;

use super::fit::{fit_model, solve_design, Design, ModelSpec, ThresholdFit};
use super::Panel;
use crate::error::{Error, Result};

/// Sup-F value below which the threshold is reported as weakly identified
/// (5% critical value of the sup-Wald statistic for one restriction with
/// 15% trimming).
pub const WEAK_IDENTIFICATION_SUP_F: f64 = 8.85;

/// Minimum share of observations in each regime for a grid point to enter
/// the sup-F statistic.
pub const SUP_F_TRIM: f64 = 0.15;

/// Threshold values that are always part of the default grid.
pub const ANCHOR_TAUS: [f64; 3] = [0.01, 0.40, 0.70];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfilePoint {
    pub tau: f64,
    pub ssr: f64,
    /// False when the indicator has no within-region variation at this
    /// `tau` (e.g. outside the observed range) or is collinear with the
    /// covariates; the point is then evaluated without it.
    pub indicator_identified: bool,
    /// Share of observations with `thr_var > tau`.
    pub share_above: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdSearch {
    pub fit: ThresholdFit,
    pub profile: Vec<ProfilePoint>,
    /// SSR of the model without the indicator.
    pub ssr_without_indicator: f64,
    /// `N (SSR_0 - SSR_min) / SSR_min`, minimising over grid points that
    /// leave at least [`SUP_F_TRIM`] of the observations in each regime (all
    /// grid points if none do).
    pub sup_f: f64,
    pub weak_identification: bool,
}

impl ThresholdSearch {
    pub fn tau(&self) -> f64 {
        self.fit.spec.tau.unwrap_or(f64::NAN)
    }
}

/// Evaluates every grid point and returns the refitted minimiser; ties go to
/// the smallest `tau`.
pub fn profile_threshold_search(panel: &Panel, grid: &[f64]) -> Result<ThresholdSearch> {
    if grid.is_empty() {
        return Err(Error::InvalidGrid("empty grid"));
    }
    if grid.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
        return Err(Error::InvalidGrid("values must be finite and non-negative"));
    }
    if grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidGrid("grid must be sorted"));
    }
    if panel.is_empty() {
        return Err(Error::EmptyPanel);
    }
    let base_spec = ModelSpec {
        tau: None,
        covariates: true,
    };
    let base = Design::new(panel, &base_spec);
    if let Some(j) = base.counts.iter().position(|&c| c < 2) {
        return Err(Error::RegionTooShort(panel.regions()[j].clone()));
    }
    let qr = base.within_qr()?;
    let solved = solve_design(&base, qr.as_ref());
    let e = &solved.residuals;
    let ssr0 = solved.ssr;
    let k = base.n_slopes();

    let obs = panel.observations();
    let mut order: Vec<usize> = (0..obs.len()).collect();
    order.sort_by(|&a, &b| obs[b].thr_var.total_cmp(&obs[a].thr_var));

    let mut profile = vec![
        ProfilePoint {
            tau: 0.0,
            ssr: ssr0,
            indicator_identified: false,
            share_above: 0.0,
        };
        grid.len()
    ];
    let mut above = vec![0usize; base.n_regions()];
    let mut xd = vec![0.0; k];
    let mut de = 0.0;
    let mut ptr = 0;
    for (g, &tau) in grid.iter().enumerate().rev() {
        while ptr < order.len() && obs[order[ptr]].thr_var > tau {
            let r = order[ptr];
            above[base.region[r]] += 1;
            for (acc, v) in xd.iter_mut().zip(base.x_within.row(r)) {
                *acc += v;
            }
            de += e[r];
            ptr += 1;
        }
        let varies = above.iter().zip(&base.counts).any(|(&m, &n)| m > 0 && m < n);
        let mut point = ProfilePoint {
            tau,
            ssr: ssr0,
            indicator_identified: false,
            share_above: ptr as f64 / obs.len() as f64,
        };
        if varies {
            let dd: f64 = above
                .iter()
                .zip(&base.counts)
                .map(|(&m, &n)| m as f64 - (m * m) as f64 / n as f64)
                .sum();
            let quad = match &qr {
                Some(qr) => qr.solve_rt(&xd).iter().map(|w| w * w).sum(),
                None => 0.0,
            };
            let denom = dd - quad;
            if denom > 1e-10 * dd {
                point.ssr = (ssr0 - de * de / denom).max(0.0);
                point.indicator_identified = true;
            }
        }
        profile[g] = point;
    }

    let mut best = 0;
    for (g, p) in profile.iter().enumerate() {
        if p.ssr < profile[best].ssr {
            best = g;
        }
    }
    let fit = fit_model(panel, &ModelSpec::full(grid[best]))?;
    let n = panel.len() as f64;
    let trimmed = profile
        .iter()
        .filter(|p| p.share_above >= SUP_F_TRIM && p.share_above <= 1.0 - SUP_F_TRIM)
        .map(|p| p.ssr)
        .min_by(f64::total_cmp);
    let min_ssr = trimmed.unwrap_or(profile[best].ssr);
    let sup_f = if min_ssr > f64::EPSILON * ssr0 {
        n * (ssr0 - min_ssr) / min_ssr
    } else if ssr0 > 0.0 {
        f64::INFINITY
    } else {
        0.0
    };
    let weak_identification = fit.kappa.is_none() || sup_f < WEAK_IDENTIFICATION_SUP_F;
    Ok(ThresholdSearch {
        fit,
        profile,
        ssr_without_indicator: ssr0,
        sup_f,
        weak_identification,
    })
}

/// Grid at step 0.01 spanning the 1st to 99th percentile of the pooled
/// threshold variable, joined with [`ANCHOR_TAUS`].
pub fn default_tau_grid(panel: &Panel) -> Vec<f64> {
    let mut thr: Vec<f64> = panel.observations().iter().map(|o| o.thr_var).collect();
    thr.sort_by(f64::total_cmp);
    let mut grid: Vec<f64> = ANCHOR_TAUS.to_vec();
    if !thr.is_empty() {
        let lo = libm::ceil(quantile(&thr, 0.01) * 100.0).max(0.0) as i64;
        let hi = libm::floor(quantile(&thr, 0.99) * 100.0) as i64;
        grid.extend((lo..=hi).map(|k| k as f64 / 100.0));
    }
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    grid
}

/// Linear-interpolation quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = libm::floor(pos) as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}
