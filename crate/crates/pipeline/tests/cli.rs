use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use r0_pipeline::bundle::{Bundle, BUNDLE_FILES};
use r0_pipeline::canonical::read_truth;

fn r0est(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_r0est")).args(args).output().unwrap()
}

fn fixture_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/synthetic")
}

fn fixture_config() -> String {
    fixture_dir().join("config.toml").display().to_string()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn estimate_into(out: &Path, extra: &[&str]) -> Output {
    let out = out.display().to_string();
    let mut args = vec!["estimate", "--config", fixture_config().leak(), "--out", out.as_str()];
    args.extend_from_slice(extra);
    r0est(&args)
}

#[test]
fn estimate_writes_a_full_bundle_and_recovers_truth() {
    let tmp = tempfile::tempdir().unwrap();
    let o = estimate_into(tmp.path(), &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    for f in BUNDLE_FILES {
        assert!(tmp.path().join(f).is_file(), "{f} missing");
    }
    let bundle = Bundle::read(tmp.path()).unwrap();
    let truth = read_truth(&fixture_dir().join("truth.json")).unwrap();
    assert_eq!(bundle.meta.tau, Some(truth.tau));
    for row in &bundle.r0 {
        let alpha = truth.alpha_of(&row.region).unwrap();
        assert!(
            (row.estimate - alpha).abs() < 1e-6,
            "{}: {} vs {alpha}",
            row.region,
            row.estimate
        );
    }
}

#[test]
fn missing_config_exits_2_and_names_the_path() {
    let o = r0est(&["estimate", "--config", "/no/such/dir/run.toml"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("/no/such/dir/run.toml"), "{}", stderr(&o));
}

#[test]
fn missing_data_file_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("c.toml");
    fs::write(
        &cfg,
        "scenario = \"x\"\n[data]\ncases = \"absent.csv\"\ncovariates = \"cov.csv\"\n",
    )
    .unwrap();
    let o = r0est(&["estimate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("absent.csv"));
}

#[test]
fn malformed_config_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("c.toml");
    fs::write(
        &cfg,
        "scenario = \"x\"\n[window]\nstart = \"2021-01-01\"\nend = \"2020-01-01\"\n",
    )
    .unwrap();
    let o = r0est(&["estimate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn rank_deficient_design_exits_1() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = fixture_dir();
    fs::copy(dir.join("cases.csv"), tmp.path().join("cases.csv")).unwrap();
    // A regressor that is constant within each region is absorbed by the
    // region intercepts.
    let text = fs::read_to_string(dir.join("covariates.csv")).unwrap();
    let mut lines = text.lines();
    let mut out = format!("{}\n", lines.next().unwrap());
    for line in lines {
        let f: Vec<&str> = line.split(',').collect();
        out.push_str(&format!("{},{},{},0.5\n", f[0], f[1], f[2]));
    }
    fs::write(tmp.path().join("covariates.csv"), out).unwrap();
    fs::copy(dir.join("config.toml"), tmp.path().join("config.toml")).unwrap();
    let o = r0est(&["estimate", "--config", tmp.path().join("config.toml").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
}

#[test]
fn repeated_runs_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert!(estimate_into(a.path(), &[]).status.success());
    assert!(estimate_into(b.path(), &[]).status.success());
    for f in BUNDLE_FILES {
        assert!(
            fs::read(a.path().join(f)).unwrap() == fs::read(b.path().join(f)).unwrap(),
            "{f} differs"
        );
    }
}

#[test]
fn report_on_bundled_reference_table() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().display().to_string();
    let o = r0est(&["report", "--reference", "us_r0", "--out", &out]);
    assert!(o.status.success(), "{}", stderr(&o));
    let summary = fs::read_to_string(tmp.path().join("summary.csv")).unwrap();
    let all = summary.lines().find(|l| l.starts_with("all,")).unwrap();
    let mean: f64 = all.split(',').nth(2).unwrap().parse().unwrap();
    assert!((mean - 4.7).abs() <= 0.05, "{summary}");
    for f in ["histogram.csv", "bars.csv"] {
        assert!(tmp.path().join(f).is_file());
    }
}

#[test]
fn unknown_reference_table_exits_2() {
    let o = r0est(&["report", "--reference", "nonsense"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn compare_against_self_and_truth() {
    let tmp = tempfile::tempdir().unwrap();
    let est = tmp.path().join("est");
    assert!(estimate_into(&est, &[]).status.success());
    let est = est.display().to_string();
    let o = r0est(&[
        "compare",
        "--bundle",
        &est,
        "--against",
        &est,
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(tmp.path().join("compare.json").is_file());
    assert!(tmp.path().join("compare.txt").is_file());

    let truth = fixture_dir().join("truth.json").display().to_string();
    for what in ["r0", "coefficients"] {
        let o = r0est(&[
            "compare",
            "--bundle",
            &est,
            "--truth",
            &truth,
            "--what",
            what,
            "--abs-tol",
            "1e-6",
        ]);
        assert!(o.status.success(), "{what}: {}", String::from_utf8_lossy(&o.stdout));
    }
}

#[test]
fn failed_comparison_exits_1() {
    let tmp = tempfile::tempdir().unwrap();
    assert!(estimate_into(tmp.path(), &[]).status.success());
    let est = tmp.path().display().to_string();
    let o = r0est(&["compare", "--bundle", &est, "--reference", "us_r0", "--abs-tol", "0.3"]);
    // Region keys differ from the reference table.
    assert_eq!(o.status.code(), Some(2));
    let truth = tmp.path().join("shifted.json");
    let mut t: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(fixture_dir().join("truth.json")).unwrap()).unwrap();
    t["regions"][0]["alpha"] = serde_json::json!(10.0);
    fs::write(&truth, t.to_string()).unwrap();
    let o = r0est(&[
        "compare",
        "--bundle",
        &est,
        "--truth",
        truth.to_str().unwrap(),
        "--abs-tol",
        "1e-6",
    ]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn counterfactual_intercepts_sit_below_the_full_model() {
    let tmp = tempfile::tempdir().unwrap();
    let full = tmp.path().join("full");
    let cf = tmp.path().join("cf");
    assert!(estimate_into(&full, &[]).status.success());
    let o = r0est(&[
        "counterfactual",
        "--config",
        &fixture_config(),
        "--out",
        cf.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let full = Bundle::read(&full).unwrap();
    let cf = Bundle::read(&cf).unwrap();
    assert!(cf.coefficients.is_empty());
    assert_eq!(cf.meta.tau, None);
    for (a, b) in cf.r0.iter().zip(&full.r0) {
        assert_eq!(a.region, b.region);
        assert!(a.estimate < b.estimate, "{}", a.region);
    }
}

#[test]
fn several_mf_pairs_get_their_own_directories() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("two.toml");
    let dir = fixture_dir().display().to_string();
    fs::write(
        &cfg,
        format!(
            "scenario = \"two\"\n[window]\nstart = \"2020-03-06\"\nend = \"2020-05-20\"\n[[mf]]\nstart = 5.0\nend = 2.0\n[[mf]]\nstart = 8.0\nend = 2.5\n\
             [data]\ndir = \"{dir}\"\ncases = \"cases.csv\"\ncovariates = \"covariates.csv\"\n"
        ),
    )
    .unwrap();
    let out = tmp.path().join("out");
    let o = r0est(&[
        "estimate",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let mut dirs: Vec<String> = fs::read_dir(&out)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    dirs.sort();
    assert_eq!(dirs, ["mf_5-2", "mf_8-2.5"]);
    let a = Bundle::read(&out.join("mf_5-2")).unwrap();
    let b = Bundle::read(&out.join("mf_8-2.5")).unwrap();
    assert_eq!((a.meta.mf_start, b.meta.mf_start), (5.0, 8.0));
}

#[test]
fn overrides_reach_the_fit() {
    let tmp = tempfile::tempdir().unwrap();
    let o = estimate_into(
        tmp.path(),
        &["--lag", "7", "--tau-grid", "0.2,0.4,0.6", "--se-lag", "3"],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let b = Bundle::read(tmp.path()).unwrap();
    assert_eq!(b.meta.truncation_lag, 3);
    let th = b.meta.threshold.unwrap();
    assert_eq!((th.grid_size, th.grid_min, th.grid_max), (3, 0.2, 0.6));
    assert_eq!(b.meta.config["model"]["lag_p"], 7);
}

#[test]
fn simulate_then_ingest_canonical_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("sim.toml");
    fs::write(
        &cfg,
        "scenario = \"s\"\n[[mf]]\nstart = 1.0\nend = 1.0\n[model]\nsmoothing = \"off\"\n\
         [simulation]\ndesign = \"oracle\"\nn_regions = 4\nhorizon = 90\nseed = 11\n",
    )
    .unwrap();
    let out = tmp.path().join("sim");
    let o = r0est(&[
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    for f in ["cases.csv", "covariates.csv", "truth.json", "warnings.jsonl"] {
        assert!(out.join(f).is_file(), "{f}");
    }
    let o = r0est(&[
        "ingest",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        tmp.path().join("ing").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2), "ingest needs a data section");
}
