#![allow(dead_code)]

use r0_core::panel::{build_panel, Panel, PanelObservation};
use r0_core::simulate::{simulate_panel, SimConfig, SimOutput};
use r0_core::{Day, EpiFrame, EpiOptions, PanelSpec};

pub fn panel_from_sim(out: &SimOutput, opts: &EpiOptions) -> Panel {
    let frames: Vec<EpiFrame> = out.series.iter().map(|s| EpiFrame::build(s, opts).unwrap()).collect();
    let names: Vec<&str> = out.truth.covariate_names.iter().map(String::as_str).collect();
    build_panel(&frames, &out.covariates, &PanelSpec::new(out.truth.lag_p, &names))
        .unwrap()
        .panel
}

pub fn simulate(cfg: &SimConfig) -> (SimOutput, Panel) {
    let out = simulate_panel(cfg).unwrap();
    let panel = panel_from_sim(&out, &EpiOptions::identity());
    (out, panel)
}

pub fn percent_grid() -> Vec<f64> {
    (1..=100).map(|k| k as f64 / 100.0).collect()
}

/// Small deterministic generator for hand-built panels.
pub struct Lcg(pub u64);

impl Lcg {
    pub fn next_f64(&mut self) -> f64 {
        self.0 = self
            .0
            .wrapping_mul(6_364_136_223_846_793_005)
            .wrapping_add(1_442_695_040_888_963_407);
        (self.0 >> 11) as f64 / (1u64 << 53) as f64
    }

    /// Approximately standard normal (Irwin-Hall with 12 terms).
    pub fn normal(&mut self) -> f64 {
        (0..12).map(|_| self.next_f64()).sum::<f64>() - 6.0
    }
}

/// Panel with `days[j]` consecutive days for region `j`, starting
/// `starts[j]` days after a common origin.
pub fn random_panel(seed: u64, days: &[usize], starts: &[i32], k: usize) -> Panel {
    let mut rng = Lcg(seed);
    let names: Vec<String> = (0..k).map(|c| format!("x{c}")).collect();
    let regions: Vec<String> = (0..days.len()).map(|j| format!("r{j}")).collect();
    let mut obs = Vec::new();
    for (j, (&n, &s)) in days.iter().zip(starts).enumerate() {
        for t in 0..n {
            obs.push(PanelObservation {
                region: j,
                date: Day(18_000 + s + t as i32),
                y: 2.0 + j as f64 + rng.normal(),
                x: (0..k).map(|_| rng.next_f64()).collect(),
                thr_var: rng.next_f64(),
            });
        }
    }
    Panel::new(names, regions, obs).unwrap()
}
