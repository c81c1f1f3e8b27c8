//! Acceptance suite. Prints one PASS, FAIL or SKIPPED line per criterion
//! and exits non-zero if any criterion fails.
//!
//! Criterion 7 runs only when `R0_DATA_DIR` points at the raw snapshots
//! named in `scenarios/*.toml`.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use r0_core::inference::{driscoll_kraay_se, newey_west_se, truncation_lag_for_span, usual_se};
use r0_core::linalg::Matrix;
use r0_core::panel::{fit_fixed_effects, Panel, PanelObservation, ThresholdFit};
use r0_core::simulate::{moment_check, MomentConfig};
use r0_core::Day;
use r0_pipeline::bundle::{Bundle, BUNDLE_FILES};
use r0_pipeline::commands::{cmd_counterfactual, cmd_estimate};
use r0_pipeline::compare::{compare, KeyedTable, Tolerance};
use r0_pipeline::config::{MfPair, DATA_DIR_ENV};
use r0_pipeline::reference::{self, ReferenceTable};
use r0_pipeline::run::{estimate, load_dataset};
use r0_pipeline::{Overrides, RunConfig};

const RECOVERY_TOL: f64 = 1e-6;
const ORACLE_BUDGET: Duration = Duration::from_secs(10);
const MC_REPS: u64 = 100;
const MC_NOISE_SD: f64 = 0.1;
const MC_ALPHA_TOL: f64 = 0.05;
const MC_COVERAGE: (f64, f64) = (0.90, 0.99);
const MC_BUDGET: Duration = Duration::from_secs(300);
const MOMENT_SLOPE: (f64, f64) = (-1.3, -0.7);
const HAC_REL_TOL: f64 = 1e-12;
const TRUNCATION_CASES: [(usize, usize); 2] = [(331, 6), (634, 8)];
const DATA_ABS_TOL: f64 = 0.3;
const US_MIN_PASS: usize = 40;
const COUNTRY_MIN_PASS: usize = 15;
const US_COUNTERFACTUAL_MEAN: (f64, f64) = (1.3, 1.7);
const US_FULL_MODEL_MEAN: (f64, f64) = (4.4, 5.0);
const OBS_COUNTS: [(&str, usize); 4] = [
    ("us_pre_vaccination", 14_996),
    ("us_full", 29_531),
    ("countries_pre_vaccination", 5_928),
    ("countries_full", 11_661),
];

enum Outcome {
    Pass(String),
    Fail(String),
    Skipped(String),
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Outcome::Pass(detail)
    } else {
        Outcome::Fail(detail)
    }
}

fn manifest_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

fn sim_config(noise_sd: f64, seed: u64) -> RunConfig {
    let text = format!(
        "scenario = \"oracle\"\n[[mf]]\nstart = 1.0\nend = 1.0\n\
         [model]\nlag_p = 10\nsmoothing = \"off\"\ntau_grid = \"0.01:1.00:0.01\"\n\
         [simulation]\ndesign = \"oracle\"\nn_regions = 10\nhorizon = 200\nseed = {seed}\nnoise_sd = {noise_sd:?}\n"
    );
    let cfg = RunConfig::parse(&text).expect("oracle config");
    cfg.validate().expect("valid oracle config");
    cfg
}

fn fit(cfg: &RunConfig) -> Result<(Bundle, r0_pipeline::canonical::TruthFile), String> {
    let truth = load_dataset(cfg)
        .map_err(|e| e.to_string())?
        .truth
        .expect("simulated truth");
    let (_, bundle) = estimate(cfg).map_err(|e| e.to_string())?.remove(0);
    Ok((bundle, truth))
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let (bundle, truth) = match fit(&sim_config(0.0, 0)) {
        Ok(v) => v,
        Err(e) => return Outcome::Fail(e),
    };
    let elapsed = start.elapsed();
    let alpha_left = KeyedTable::r0_from_bundle("fit", &bundle);
    let alpha_right = KeyedTable::r0_from_truth("truth", &truth);
    let coef_left = KeyedTable::coefficients_from_bundle("fit", &bundle);
    let coef_right = KeyedTable::coefficients_from_truth("truth", &truth);
    let tol = Tolerance::absolute(RECOVERY_TOL);
    let (a, c) = match (
        compare(&alpha_left, &alpha_right, tol),
        compare(&coef_left, &coef_right, tol),
    ) {
        (Ok(a), Ok(c)) => (a, c),
        (Err(e), _) | (_, Err(e)) => return Outcome::Fail(e.to_string()),
    };
    let tau_exact = bundle.meta.tau == Some(truth.tau);
    let max_dev = a.max_abs_dev.max(c.max_abs_dev);
    check(
        a.pass && c.pass && tau_exact && elapsed < ORACLE_BUDGET,
        format!(
            "max |dev| {max_dev:.2e} (tol {RECOVERY_TOL:e}), tau {:?} vs {}, {:.2} s (budget {} s)",
            bundle.meta.tau,
            truth.tau,
            elapsed.as_secs_f64(),
            ORACLE_BUDGET.as_secs()
        ),
    )
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let mut alpha_sums: Vec<f64> = Vec::new();
    let mut truth_alpha: Vec<f64> = Vec::new();
    let (mut covered, mut intervals) = (0usize, 0usize);
    for rep in 0..MC_REPS {
        let (bundle, truth) = match fit(&sim_config(MC_NOISE_SD, 1_000 + rep)) {
            Ok(v) => v,
            Err(e) => return Outcome::Fail(format!("replication {rep}: {e}")),
        };
        if alpha_sums.is_empty() {
            alpha_sums = vec![0.0; truth.regions.len()];
            truth_alpha = truth.regions.iter().map(|r| r.alpha).collect();
        }
        for (j, r) in truth.regions.iter().enumerate() {
            let row = bundle
                .r0
                .iter()
                .find(|x| x.region == r.region_id)
                .expect("region in bundle");
            alpha_sums[j] += row.estimate;
        }
        for (name, psi) in truth.covariate_names.iter().zip(&truth.psi) {
            let row = bundle
                .coefficients
                .iter()
                .find(|c| &c.name == name)
                .expect("slope in bundle");
            intervals += 1;
            if (row.estimate - psi).abs() <= 2.0 * row.robust1.0 {
                covered += 1;
            }
        }
    }
    let elapsed = start.elapsed();
    let worst = alpha_sums
        .iter()
        .zip(&truth_alpha)
        .map(|(s, a)| (s / MC_REPS as f64 - a).abs())
        .fold(0.0, f64::max);
    let coverage = covered as f64 / intervals as f64;
    check(
        worst <= MC_ALPHA_TOL && (MC_COVERAGE.0..=MC_COVERAGE.1).contains(&coverage) && elapsed < MC_BUDGET,
        format!(
            "worst |mean alpha - truth| {worst:.4} (tol {MC_ALPHA_TOL}), robust1 coverage {:.1}% of {intervals} \
             (band {:.0}-{:.0}%), {:.1} s (budget {} s)",
            100.0 * coverage,
            100.0 * MC_COVERAGE.0,
            100.0 * MC_COVERAGE.1,
            elapsed.as_secs_f64(),
            MC_BUDGET.as_secs()
        ),
    )
}

fn criterion_3() -> Outcome {
    match moment_check(&MomentConfig::default()) {
        Ok(m) => {
            let ns: Vec<String> = m.rows.iter().map(|r| r.n.to_string()).collect();
            check(
                (MOMENT_SLOPE.0..=MOMENT_SLOPE.1).contains(&m.log_log_slope),
                format!(
                    "log-log slope {:.3} over n = {} (band [{}, {}])",
                    m.log_log_slope,
                    ns.join(", "),
                    MOMENT_SLOPE.0,
                    MOMENT_SLOPE.1
                ),
            )
        }
        Err(e) => Outcome::Fail(e.to_string()),
    }
}

fn intercepts(bundle: &Bundle) -> Vec<(String, f64)> {
    bundle.r0.iter().map(|r| (r.region.clone(), r.estimate)).collect()
}

fn mean(rows: &[(String, f64)]) -> f64 {
    rows.iter().map(|r| r.1).sum::<f64>() / rows.len() as f64
}

fn run_in(cfg: &RunConfig, out: &Path, counterfactual: bool) -> Result<Bundle, String> {
    let mut cfg = cfg.clone();
    cfg.apply(&Overrides {
        out_dir: Some(out.to_path_buf()),
        ..Overrides::default()
    })
    .map_err(|e| e.to_string())?;
    let mut runs = if counterfactual {
        cmd_counterfactual(&cfg)
    } else {
        cmd_estimate(&cfg)
    }
    .map_err(|e| e.to_string())?;
    Ok(runs.remove(0).1)
}

fn criterion_4(tmp: &Path, data: Option<&Path>) -> Outcome {
    let mut lower = 0;
    let mut total = 0;
    let mut notes = Vec::new();
    for (label, cfg) in [("noiseless", sim_config(0.0, 0)), ("noisy", sim_config(MC_NOISE_SD, 7))] {
        let full = run_in(&cfg, &tmp.join(format!("c4_{label}_full")), false);
        let cf = run_in(&cfg, &tmp.join(format!("c4_{label}_cf")), true);
        let (full, cf) = match (full, cf) {
            (Ok(f), Ok(c)) => (intercepts(&f), intercepts(&c)),
            (Err(e), _) | (_, Err(e)) => return Outcome::Fail(e),
        };
        for ((rf, af), (rc, ac)) in full.iter().zip(&cf) {
            assert_eq!(rf, rc);
            total += 1;
            if ac < af {
                lower += 1;
            }
        }
        notes.push(format!("{label} mean {:.2} vs {:.2}", mean(&cf), mean(&full)));
    }
    let mut ok = lower == total;
    let mut detail = format!("synthetic: {lower}/{total} regions lower ({})", notes.join(", "));
    match data {
        None => detail.push_str("; real-data part skipped (no snapshots)"),
        Some(_) => {
            let cfg = match scenario("us_pre_vaccination", MfPair { start: 5.0, end: 2.0 }) {
                Ok(c) => c,
                Err(e) => return Outcome::Fail(e),
            };
            let full = run_in(&cfg, &tmp.join("c4_us_full"), false);
            let cf = run_in(&cfg, &tmp.join("c4_us_cf"), true);
            match (full, cf) {
                (Ok(f), Ok(c)) => {
                    let (mf, mc) = (mean(&intercepts(&f)), mean(&intercepts(&c)));
                    let in_band = (US_FULL_MODEL_MEAN.0..=US_FULL_MODEL_MEAN.1).contains(&mf)
                        && (US_COUNTERFACTUAL_MEAN.0..=US_COUNTERFACTUAL_MEAN.1).contains(&mc);
                    ok &= in_band;
                    detail.push_str(&format!(
                        "; US counterfactual mean {mc:.2} (band {:?}), full model {mf:.2} (band {:?})",
                        US_COUNTERFACTUAL_MEAN, US_FULL_MODEL_MEAN
                    ));
                }
                (Err(e), _) | (_, Err(e)) => return Outcome::Fail(e),
            }
        }
    }
    check(ok, detail)
}

/// Sandwich covariances computed directly from a dense dummy design.
struct BruteForce {
    bread: Vec<Vec<f64>>,
    scores: Vec<Vec<f64>>,
    regions: Vec<usize>,
    dates: Vec<i32>,
    rss: f64,
}

fn invert(a: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mut row = r.clone();
            row.extend((0..n).map(|j| if i == j { 1.0 } else { 0.0 }));
            row
        })
        .collect();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&p, &q| m[p][col].abs().total_cmp(&m[q][col].abs()))
            .unwrap();
        m.swap(col, piv);
        let d = m[col][col];
        m[col].iter_mut().for_each(|v| *v /= d);
        for r in 0..n {
            if r != col {
                let f = m[r][col];
                let pivot = m[col].clone();
                m[r].iter_mut().zip(pivot).for_each(|(v, p)| *v -= f * p);
            }
        }
    }
    m.into_iter().map(|r| r[n..].to_vec()).collect()
}

fn matmul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    (0..a.len())
        .map(|i| {
            (0..b[0].len())
                .map(|j| (0..b.len()).map(|k| a[i][k] * b[k][j]).sum())
                .collect()
        })
        .collect()
}

impl BruteForce {
    fn new(panel: &Panel, fit: &ThresholdFit) -> BruteForce {
        let nr = panel.region_count();
        let tau = fit.tau();
        let mut z = Vec::new();
        let mut y = Vec::new();
        for o in panel.observations() {
            let mut row = vec![0.0; nr];
            row[o.region] = 1.0;
            row.extend_from_slice(&o.x);
            if let Some(t) = tau {
                row.push(if o.thr_var > t { 1.0 } else { 0.0 });
            }
            z.push(row);
            y.push(o.y);
        }
        let p = z[0].len();
        let mut ztz = vec![vec![0.0; p]; p];
        let mut zty = vec![0.0; p];
        for (row, yi) in z.iter().zip(&y) {
            for a in 0..p {
                zty[a] += row[a] * yi;
                for b in 0..p {
                    ztz[a][b] += row[a] * row[b];
                }
            }
        }
        let bread = invert(&ztz);
        let beta: Vec<f64> = (0..p).map(|a| (0..p).map(|b| bread[a][b] * zty[b]).sum()).collect();
        let resid: Vec<f64> = z
            .iter()
            .zip(&y)
            .map(|(row, yi)| yi - row.iter().zip(&beta).map(|(r, b)| r * b).sum::<f64>())
            .collect();
        BruteForce {
            scores: z
                .iter()
                .zip(&resid)
                .map(|(row, u)| row.iter().map(|v| v * u).collect())
                .collect(),
            regions: panel.observations().iter().map(|o| o.region).collect(),
            dates: panel.observations().iter().map(|o| o.date.0).collect(),
            rss: resid.iter().map(|u| u * u).sum(),
            bread,
        }
    }

    fn sandwich(&self, lag: usize, same_region_only: bool) -> Vec<Vec<f64>> {
        let p = self.bread.len();
        let mut meat = vec![vec![0.0; p]; p];
        for s in 0..self.scores.len() {
            for t in 0..self.scores.len() {
                if same_region_only && self.regions[s] != self.regions[t] {
                    continue;
                }
                let gap = (self.dates[s] - self.dates[t]).unsigned_abs() as usize;
                if gap > lag {
                    continue;
                }
                let w = 1.0 - gap as f64 / (lag as f64 + 1.0);
                for a in 0..p {
                    for b in 0..p {
                        meat[a][b] += w * self.scores[s][a] * self.scores[t][b];
                    }
                }
            }
        }
        matmul(&matmul(&self.bread, &meat), &self.bread)
    }

    fn usual(&self) -> Vec<Vec<f64>> {
        let n = self.scores.len();
        let s2 = self.rss / (n - self.bread.len()) as f64;
        self.bread.iter().map(|r| r.iter().map(|v| v * s2).collect()).collect()
    }
}

fn rel_diff(lib: &Matrix, oracle: &[Vec<f64>]) -> f64 {
    let (mut diff, mut scale) = (0.0f64, 0.0f64);
    for (i, row) in oracle.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            diff = diff.max((lib[(i, j)] - v).abs());
            scale = scale.max(v.abs());
        }
    }
    diff / scale
}

fn hand_panel(seed: u64, days: &[usize], starts: &[i32]) -> Panel {
    let mut state = seed;
    let mut next = move || {
        state = state
            .wrapping_mul(6_364_136_223_846_793_005)
            .wrapping_add(1_442_695_040_888_963_407);
        (state >> 11) as f64 / (1u64 << 53) as f64
    };
    let mut obs = Vec::new();
    for (j, (&n, &s)) in days.iter().zip(starts).enumerate() {
        for t in 0..n {
            let noise = (0..12).map(|_| next()).sum::<f64>() - 6.0;
            obs.push(PanelObservation {
                region: j,
                date: Day(18_500 + s + t as i32),
                y: 3.0 + j as f64 + noise,
                x: vec![next(), next()],
                thr_var: next(),
            });
        }
    }
    let regions = (0..days.len()).map(|j| format!("r{j}")).collect();
    Panel::new(vec!["x0".into(), "x1".into()], regions, obs).expect("hand panel")
}

fn criterion_5() -> Outcome {
    let panel = hand_panel(5, &[12, 12, 12], &[0, 3, 6]);
    let fit = match fit_fixed_effects(&panel, 0.5) {
        Ok(f) => f,
        Err(e) => return Outcome::Fail(e.to_string()),
    };
    let oracle = BruteForce::new(&panel, &fit);
    let mut worst = rel_diff(&usual_se(&fit, &panel).unwrap(), &oracle.usual());
    for lag in 0..=5 {
        let nw = newey_west_se(&fit, &panel, lag).unwrap();
        let dk = driscoll_kraay_se(&fit, &panel, lag).unwrap();
        worst = worst.max(rel_diff(&nw, &oracle.sandwich(lag, true)));
        worst = worst.max(rel_diff(&dk, &oracle.sandwich(lag, false)));
    }
    let single = hand_panel(9, &[40], &[0]);
    let single_fit = fit_fixed_effects(&single, 0.5).unwrap();
    let collapses = (0..=6).all(|lag| {
        newey_west_se(&single_fit, &single, lag).unwrap() == driscoll_kraay_se(&single_fit, &single, lag).unwrap()
    });
    check(
        worst <= HAC_REL_TOL && collapses,
        format!(
            "3x12 panel max relative error {worst:.2e} (tol {HAC_REL_TOL:e}); single-region DK == NW exactly: {collapses}"
        ),
    )
}

fn criterion_6() -> Outcome {
    let got: Vec<(usize, usize)> = TRUNCATION_CASES
        .iter()
        .map(|&(t, _)| (t, truncation_lag_for_span(t)))
        .collect();
    let ok = got.iter().zip(TRUNCATION_CASES).all(|(g, e)| g.1 == e.1);
    let shown: Vec<String> = got.iter().map(|(t, l)| format!("T_max {t} -> {l}")).collect();
    check(ok, shown.join(", "))
}

fn scenario(name: &str, mf: MfPair) -> Result<RunConfig, String> {
    let path = manifest_dir().join("scenarios").join(format!("{name}.toml"));
    let mut cfg = RunConfig::load(&path).map_err(|e| e.to_string())?;
    cfg.mf = vec![mf];
    Ok(cfg)
}

fn criterion_7(tmp: &Path, data: Option<&Path>) -> Outcome {
    let Some(dir) = data else {
        return Outcome::Skipped(format!("set {DATA_DIR_ENV} to the raw snapshot directory to run"));
    };
    let mf = MfPair { start: 5.0, end: 2.0 };
    let mut ok = true;
    let mut parts = Vec::new();
    for (name, table, min_pass) in [
        ("us_pre_vaccination", ReferenceTable::UsR0, US_MIN_PASS),
        ("countries_pre_vaccination", ReferenceTable::CountryR0, COUNTRY_MIN_PASS),
    ] {
        let bundle = match scenario(name, mf).and_then(|c| run_in(&c, &tmp.join(format!("c7_{name}")), false)) {
            Ok(b) => b,
            Err(e) => {
                ok = false;
                parts.push(format!("{name}: {e}"));
                continue;
            }
        };
        let left = KeyedTable::r0_from_bundle(name, &bundle);
        let right = reference::r0_keyed(table, "pre_vaccination", "5-2").expect("bundled reference");
        let tol = Tolerance {
            abs: Some(DATA_ABS_TOL),
            rel: None,
            min_pass: Some(min_pass),
        };
        match compare(&left, &right, tol) {
            Ok(r) => {
                ok &= r.pass;
                parts.push(format!(
                    "{name}: {}/{} within {DATA_ABS_TOL} (need {min_pass})",
                    r.passed,
                    r.rows.len()
                ));
            }
            Err(e) => {
                ok = false;
                parts.push(format!("{name}: {e}"));
            }
        }
    }
    for (name, expected) in OBS_COUNTS {
        match scenario(name, mf).and_then(|c| run_in(&c, &tmp.join(format!("c7_obs_{name}")), false)) {
            Ok(b) => {
                ok &= b.meta.obs_count == expected;
                parts.push(format!("{name} obs {} (expected {expected})", b.meta.obs_count));
            }
            Err(e) => {
                ok = false;
                parts.push(format!("{name}: {e}"));
            }
        }
    }
    check(ok, format!("{}: {}", dir.display(), parts.join("; ")))
}

fn criterion_8(tmp: &Path) -> Outcome {
    let cfg = match RunConfig::load(&manifest_dir().join("tests/fixtures/synthetic/config.toml")) {
        Ok(c) => c,
        Err(e) => return Outcome::Fail(e.to_string()),
    };
    let dirs = [tmp.join("c8_a"), tmp.join("c8_b")];
    for d in &dirs {
        if let Err(e) = run_in(&cfg, d, false) {
            return Outcome::Fail(e);
        }
    }
    let differing: Vec<&str> = BUNDLE_FILES
        .iter()
        .copied()
        .filter(|f| fs::read(dirs[0].join(f)).ok() != fs::read(dirs[1].join(f)).ok())
        .collect();
    check(
        differing.is_empty(),
        format!(
            "{} bundle files compared, differing: {:?}",
            BUNDLE_FILES.len(),
            differing
        ),
    )
}

fn main() -> ExitCode {
    let tmp = tempfile::tempdir().expect("temp dir");
    let data = std::env::var_os(DATA_DIR_ENV)
        .filter(|v| !v.is_empty())
        .map(PathBuf::from);
    type Criterion<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);
    let criteria: [Criterion; 8] = [
        ("oracle recovery, noiseless", Box::new(criterion_1)),
        ("oracle recovery, noisy Monte Carlo", Box::new(criterion_2)),
        ("moment condition convergence", Box::new(criterion_3)),
        (
            "counterfactual bias",
            Box::new(|| criterion_4(tmp.path(), data.as_deref())),
        ),
        ("HAC brute-force agreement", Box::new(criterion_5)),
        ("truncation lag", Box::new(criterion_6)),
        (
            "data reproduction",
            Box::new(|| criterion_7(tmp.path(), data.as_deref())),
        ),
        ("determinism", Box::new(|| criterion_8(tmp.path()))),
    ];
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let (tag, detail) = match run() {
            Outcome::Pass(d) => ("PASS", d),
            Outcome::Fail(d) => {
                failed += 1;
                ("FAIL", d)
            }
            Outcome::Skipped(d) => ("SKIPPED", d),
        };
        println!("criterion {} [{name}]: {tag} - {detail}", k + 1);
    }
    if failed > 0 {
        println!("{failed} criterion(s) failed");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
