use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use super::Panel;
use crate::calendar::Day;
use crate::error::{Error, Result};
use crate::linalg::{Matrix, Qr};

/// Coefficient name of the precautionary threshold indicator.
pub const INDICATOR_NAME: &str = "threshold_indicator";

/// Which right-hand-side terms enter besides the region intercepts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelSpec {
    /// Threshold for `I(thr_var > tau)`; `None` leaves the indicator out.
    pub tau: Option<f64>,
    /// Whether the panel's covariate columns are used.
    pub covariates: bool,
}

impl ModelSpec {
    pub fn full(tau: f64) -> Self {
        ModelSpec {
            tau: Some(tau),
            covariates: true,
        }
    }

    pub fn intercepts_only() -> Self {
        ModelSpec {
            tau: None,
            covariates: false,
        }
    }
}

/// Design matrices for one model: raw and within-region demeaned slope
/// columns plus the bookkeeping needed to recover intercepts.
#[derive(Debug, Clone)]
pub(crate) struct Design {
    pub region: Vec<usize>,
    pub dates: Vec<Day>,
    pub y: Vec<f64>,
    pub x: Matrix,
    pub names: Vec<String>,
    pub counts: Vec<usize>,
    pub x_means: Matrix,
    pub y_means: Vec<f64>,
    pub x_within: Matrix,
    pub y_within: Vec<f64>,
    pub indicator_identified: bool,
}

impl Design {
    pub fn new(panel: &Panel, spec: &ModelSpec) -> Design {
        let obs = panel.observations();
        let n = obs.len();
        let n_regions = panel.region_count();
        let region: Vec<usize> = obs.iter().map(|o| o.region).collect();
        let counts = panel.region_counts();

        let mut names: Vec<String> = Vec::new();
        let n_covariates = if spec.covariates {
            panel.covariate_names().len()
        } else {
            0
        };
        names.extend(panel.covariate_names().iter().take(n_covariates).cloned());

        let mut indicator_identified = false;
        let indicator: Option<Vec<f64>> = spec
            .tau
            .map(|tau| obs.iter().map(|o| if o.thr_var > tau { 1.0 } else { 0.0 }).collect());
        if let Some(d) = &indicator {
            let mut above = vec![0usize; n_regions];
            for (o, &v) in obs.iter().zip(d) {
                above[o.region] += (v > 0.0) as usize;
            }
            indicator_identified = above.iter().zip(&counts).any(|(&m, &c)| m > 0 && m < c);
            if indicator_identified {
                names.push(INDICATOR_NAME.into());
            }
        }
        let k = names.len();
        let mut x = Matrix::zeros(n, k);
        for (r, o) in obs.iter().enumerate() {
            let row = x.row_mut(r);
            row[..n_covariates].copy_from_slice(&o.x[..n_covariates]);
            if indicator_identified {
                row[k - 1] = indicator.as_ref().map_or(0.0, |d| d[r]);
            }
        }
        let y: Vec<f64> = obs.iter().map(|o| o.y).collect();

        let mut x_means = Matrix::zeros(n_regions, k);
        let mut y_means = vec![0.0; n_regions];
        for r in 0..n {
            let j = region[r];
            y_means[j] += y[r];
            for c in 0..k {
                x_means[(j, c)] += x[(r, c)];
            }
        }
        for j in 0..n_regions {
            let nj = counts[j] as f64;
            y_means[j] /= nj;
            for c in 0..k {
                x_means[(j, c)] /= nj;
            }
        }
        let mut x_within = x.clone();
        let mut y_within = y.clone();
        for r in 0..n {
            let j = region[r];
            y_within[r] -= y_means[j];
            for c in 0..k {
                x_within[(r, c)] -= x_means[(j, c)];
            }
        }
        Design {
            region,
            dates: obs.iter().map(|o| o.date).collect(),
            y,
            x,
            names,
            counts,
            x_means,
            y_means,
            x_within,
            y_within,
            indicator_identified,
        }
    }

    pub fn n_regions(&self) -> usize {
        self.counts.len()
    }

    pub fn n_slopes(&self) -> usize {
        self.names.len()
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    /// QR of the demeaned slope block, failing on collinear columns.
    pub fn within_qr(&self) -> Result<Option<Qr>> {
        if self.n_slopes() == 0 {
            return Ok(None);
        }
        let qr = Qr::new(&self.x_within);
        let bad = qr.collinear_columns();
        if !bad.is_empty() {
            return Err(Error::RankDeficient(
                bad.into_iter().map(|c| self.names[c].clone()).collect(),
            ));
        }
        Ok(Some(qr))
    }
}

/// Estimates of the fixed-effects threshold model at one `tau`.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdFit {
    pub spec: ModelSpec,
    pub regions: Vec<String>,
    /// Region intercepts, aligned with `regions`. These are the R0 estimates.
    pub alpha: Vec<f64>,
    /// Names of the slope coefficients: covariates, then the indicator.
    pub coefficient_names: Vec<String>,
    pub coefficients: Vec<f64>,
    /// `None` when the indicator is absent or has no within-region variation.
    pub kappa: Option<f64>,
    pub r_squared: f64,
    pub ssr: f64,
    pub residuals: Vec<f64>,
    pub obs_count: usize,
    pub region_count: usize,
    pub t_min: usize,
    pub t_max: usize,
}

impl ThresholdFit {
    pub fn tau(&self) -> Option<f64> {
        self.spec.tau
    }

    /// Covariate slopes (the indicator coefficient excluded).
    pub fn psi(&self) -> &[f64] {
        let k = self.coefficients.len() - self.kappa.is_some() as usize;
        &self.coefficients[..k]
    }

    pub fn alpha_of(&self, region: &str) -> Option<f64> {
        self.regions.iter().position(|r| r == region).map(|j| self.alpha[j])
    }

    pub fn mean_alpha(&self) -> f64 {
        self.alpha.iter().sum::<f64>() / self.alpha.len() as f64
    }
}

pub(crate) struct Solved {
    pub slopes: Vec<f64>,
    pub alpha: Vec<f64>,
    pub residuals: Vec<f64>,
    pub ssr: f64,
    pub tss_within: f64,
}

pub(crate) fn solve_design(design: &Design, qr: Option<&Qr>) -> Solved {
    let k = design.n_slopes();
    let slopes = match qr {
        Some(qr) => qr.solve(&design.y_within),
        None => Vec::new(),
    };
    let alpha: Vec<f64> = (0..design.n_regions())
        .map(|j| design.y_means[j] - (0..k).map(|c| design.x_means[(j, c)] * slopes[c]).sum::<f64>())
        .collect();
    let residuals: Vec<f64> = (0..design.len())
        .map(|r| {
            let fitted: f64 = design.x.row(r).iter().zip(&slopes).map(|(a, b)| a * b).sum();
            design.y[r] - alpha[design.region[r]] - fitted
        })
        .collect();
    let ssr = residuals.iter().map(|e| e * e).sum();
    let tss_within = design.y_within.iter().map(|v| v * v).sum();
    Solved {
        slopes,
        alpha,
        residuals,
        ssr,
        tss_within,
    }
}

/// Fits the model described by `spec` by within-region demeaning.
pub fn fit_model(panel: &Panel, spec: &ModelSpec) -> Result<ThresholdFit> {
    if panel.is_empty() {
        return Err(Error::EmptyPanel);
    }
    let design = Design::new(panel, spec);
    if let Some(j) = design.counts.iter().position(|&c| c < 2) {
        return Err(Error::RegionTooShort(panel.regions()[j].clone()));
    }
    let qr = design.within_qr()?;
    let solved = solve_design(&design, qr.as_ref());
    let r_squared = if solved.tss_within > 0.0 {
        (1.0 - solved.ssr / solved.tss_within).clamp(0.0, 1.0)
    } else {
        1.0
    };
    let (t_min, t_max) = panel.span_range();
    let kappa = design
        .indicator_identified
        .then(|| solved.slopes[design.n_slopes() - 1]);
    Ok(ThresholdFit {
        spec: *spec,
        regions: panel.regions().to_vec(),
        alpha: solved.alpha,
        coefficient_names: design.names.clone(),
        coefficients: solved.slopes,
        kappa,
        r_squared,
        ssr: solved.ssr,
        residuals: solved.residuals,
        obs_count: panel.len(),
        region_count: panel.region_count(),
        t_min,
        t_max,
    })
}

/// Full model with `tau` held fixed.
pub fn fit_fixed_effects(panel: &Panel, tau: f64) -> Result<ThresholdFit> {
    fit_model(panel, &ModelSpec::full(tau))
}

/// Intercept-only fit: every mitigating factor and the indicator set to zero,
/// so each intercept is the region mean of `y`.
pub fn counterfactual_fit(panel: &Panel) -> Result<ThresholdFit> {
    fit_model(panel, &ModelSpec::intercepts_only())
}
