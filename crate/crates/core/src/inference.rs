//! Coefficient covariances for the fixed-effects threshold model.
//!
//! All three flavors are computed on the dummy-augmented design
//! `Z = [region dummies, slope columns]`, so intercepts get standard errors
//! alongside the slopes. The inverse `(Z'Z)^{-1}` comes from the within
//! regression through the partitioned inverse:
//!
//! ```text
//! (Z'Z)^{-1} = [ D^{-1} + M V M'   -M V ]
//!              [ -V M'              V   ]
//! ```
//!
//! with `D = diag(n_j)`, `M` the region means of the slope columns and
//! `V = (X~'X~)^{-1}`.
//!
//! * usual: `s^2 (Z'Z)^{-1}`, `s^2 = SSR / (N - K - n_regions)`
//! * robust1 (Newey-West): Bartlett-weighted autocovariances of `z_t u_t`
//!   within each region, no cross-region terms
//! * robust2 (Driscoll-Kraay): the same kernel applied to the date sums
//!   `h_d = sum_j z_jd u_jd`
//!
//! Lags are calendar-day distances. The robust meats carry no small-sample
//! correction.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::panel::{Design, Panel, ThresholdFit};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SeFlavor {
    Usual,
    Robust1,
    Robust2,
}

impl SeFlavor {
    pub const ALL: [SeFlavor; 3] = [SeFlavor::Usual, SeFlavor::Robust1, SeFlavor::Robust2];

    pub fn label(self) -> &'static str {
        match self {
            SeFlavor::Usual => "usual",
            SeFlavor::Robust1 => "robust1",
            SeFlavor::Robust2 => "robust2",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceReport {
    /// Region ids first, then slope names.
    pub names: Vec<String>,
    pub estimates: Vec<f64>,
    pub n_intercepts: usize,
    pub usual: Matrix,
    pub robust1: Matrix,
    pub robust2: Matrix,
    pub truncation_lag: usize,
}

impl CovarianceReport {
    pub fn matrix(&self, flavor: SeFlavor) -> &Matrix {
        match flavor {
            SeFlavor::Usual => &self.usual,
            SeFlavor::Robust1 => &self.robust1,
            SeFlavor::Robust2 => &self.robust2,
        }
    }

    pub fn se(&self, flavor: SeFlavor) -> Vec<f64> {
        self.matrix(flavor)
            .diagonal()
            .into_iter()
            .map(|v| libm::sqrt(v.max(0.0)))
            .collect()
    }

    pub fn t_ratios(&self, flavor: SeFlavor) -> Vec<f64> {
        self.estimates.iter().zip(self.se(flavor)).map(|(b, s)| b / s).collect()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }
}

/// Integer part of the cube root of the longest span.
pub fn truncation_lag_for_span(t_max: usize) -> usize {
    let mut k = 0usize;
    while (k + 1).pow(3) <= t_max {
        k += 1;
    }
    k
}

pub fn default_truncation_lag(panel: &Panel) -> usize {
    truncation_lag_for_span(panel.span_range().1)
}

/// Bartlett kernel weight.
pub fn bartlett(lag: usize, max_lag: usize) -> f64 {
    if lag > max_lag {
        0.0
    } else {
        1.0 - lag as f64 / (max_lag as f64 + 1.0)
    }
}

struct Prepared {
    design: Design,
    bread: Matrix,
    residuals: Vec<f64>,
}

fn prepare(fit: &ThresholdFit, panel: &Panel) -> Result<Prepared> {
    let design = Design::new(panel, &fit.spec);
    if design.len() != fit.residuals.len() || design.names != fit.coefficient_names {
        return Err(Error::LengthMismatch {
            what: "fit vs panel",
            left: fit.residuals.len(),
            right: design.len(),
        });
    }
    let qr = design.within_qr()?;
    let nr = design.n_regions();
    let k = design.n_slopes();
    let p = nr + k;
    let v = match &qr {
        Some(qr) => qr.gram_inverse(),
        None => Matrix::zeros(0, 0),
    };
    let m = &design.x_means;
    let mv = m.matmul(&v);
    let mut bread = Matrix::zeros(p, p);
    for j in 0..nr {
        for l in 0..nr {
            let mut s: f64 = (0..k).map(|c| mv[(j, c)] * m[(l, c)]).sum();
            if j == l {
                s += 1.0 / design.counts[j] as f64;
            }
            bread[(j, l)] = s;
        }
        for c in 0..k {
            bread[(j, nr + c)] = -mv[(j, c)];
            bread[(nr + c, j)] = -mv[(j, c)];
        }
    }
    for c in 0..k {
        for d in 0..k {
            bread[(nr + c, nr + d)] = v[(c, d)];
        }
    }
    bread.symmetrize();
    Ok(Prepared {
        design,
        bread,
        residuals: fit.residuals.clone(),
    })
}

fn sandwich(bread: &Matrix, meat: &Matrix) -> Matrix {
    let mut out = bread.matmul(meat).matmul(bread);
    out.symmetrize();
    out
}

/// Classical covariance under homoskedastic, uncorrelated errors.
pub fn usual_se(fit: &ThresholdFit, panel: &Panel) -> Result<Matrix> {
    let prep = prepare(fit, panel)?;
    let n = prep.design.len();
    let params = prep.design.n_regions() + prep.design.n_slopes();
    if n <= params {
        return Err(Error::NoDegreesOfFreedom);
    }
    let s2 = fit.ssr / (n - params) as f64;
    let mut cov = prep.bread;
    cov.scale(s2);
    Ok(cov)
}

/// Bartlett-weighted sum `sum_{a,b} w(|d_a - d_b|) h_a h_b'` over a date-sorted
/// sequence of score vectors.
fn kernel_meat(dates: &[i32], scores: &[Vec<f64>], lag: usize, dim: usize) -> Matrix {
    let mut omega = Matrix::zeros(dim, dim);
    for a in 0..dates.len() {
        for b in (0..=a).rev() {
            let gap = (dates[a] - dates[b]) as usize;
            if gap > lag {
                break;
            }
            let w = bartlett(gap, lag);
            omega.add_outer(w, &scores[a], &scores[b]);
            if a != b {
                omega.add_outer(w, &scores[b], &scores[a]);
            }
        }
    }
    omega
}

/// Newey-West covariance with Bartlett weights over within-region lags.
pub fn newey_west_se(fit: &ThresholdFit, panel: &Panel, lag: usize) -> Result<Matrix> {
    let prep = prepare(fit, panel)?;
    let d = &prep.design;
    let nr = d.n_regions();
    let k = d.n_slopes();
    let u = &prep.residuals;
    let mut omega = Matrix::zeros(nr + k, nr + k);
    // Scores of region j live on coordinates {j} and the slopes, so each
    // region is accumulated in that reduced space and scattered.
    let slot = |j: usize, a: usize| if a == 0 { j } else { nr + a - 1 };
    let mut r = 0;
    while r < d.len() {
        let j = d.region[r];
        let end = r + d.counts[j];
        let dates: Vec<i32> = d.dates[r..end].iter().map(|x| x.0).collect();
        let scores: Vec<Vec<f64>> = (r..end)
            .map(|t| {
                let mut g = Vec::with_capacity(k + 1);
                g.push(u[t]);
                g.extend(d.x.row(t).iter().map(|x| x * u[t]));
                g
            })
            .collect();
        let local = kernel_meat(&dates, &scores, lag, k + 1);
        for a in 0..=k {
            for b in 0..=k {
                omega[(slot(j, a), slot(j, b))] += local[(a, b)];
            }
        }
        r = end;
    }
    Ok(sandwich(&prep.bread, &omega))
}

/// Driscoll-Kraay covariance: Bartlett-weighted autocovariances of the
/// cross-sectional sums of scores, indexed by calendar date.
pub fn driscoll_kraay_se(fit: &ThresholdFit, panel: &Panel, lag: usize) -> Result<Matrix> {
    let prep = prepare(fit, panel)?;
    let d = &prep.design;
    let nr = d.n_regions();
    let p = nr + d.n_slopes();
    let u = &prep.residuals;

    let mut dates: Vec<i32> = d.dates.iter().map(|x| x.0).collect();
    dates.sort_unstable();
    dates.dedup();
    let mut sums = vec![vec![0.0; p]; dates.len()];
    for r in 0..d.len() {
        let idx = dates.binary_search(&d.dates[r].0).unwrap_or(0);
        let h = &mut sums[idx];
        h[d.region[r]] += u[r];
        for (c, x) in d.x.row(r).iter().enumerate() {
            h[nr + c] += x * u[r];
        }
    }
    let omega = kernel_meat(&dates, &sums, lag, p);
    Ok(sandwich(&prep.bread, &omega))
}

/// All three covariance flavors. `lag` defaults to
/// [`default_truncation_lag`].
pub fn covariance_report(fit: &ThresholdFit, panel: &Panel, lag: Option<usize>) -> Result<CovarianceReport> {
    let lag = lag.unwrap_or_else(|| default_truncation_lag(panel));
    let mut names = fit.regions.clone();
    names.extend(fit.coefficient_names.iter().cloned());
    let mut estimates = fit.alpha.clone();
    estimates.extend_from_slice(&fit.coefficients);
    Ok(CovarianceReport {
        names,
        estimates,
        n_intercepts: fit.regions.len(),
        usual: usual_se(fit, panel)?,
        robust1: newey_west_se(fit, panel, lag)?,
        robust2: driscoll_kraay_se(fit, panel, lag)?,
        truncation_lag: lag,
    })
}
