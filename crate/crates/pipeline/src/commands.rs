//! Subcommand implementations behind the `r0est` binary.

use std::path::{Path, PathBuf};

use crate::bundle::Bundle;
use crate::canonical::{
    write_cases, write_covariates, write_panel, write_truth, CASES_FILE, COVARIATES_FILE, PANEL_FILE, TRUTH_FILE,
    WARNINGS_FILE,
};
use crate::compare::{compare, DiffReport, KeyedTable, Tolerance};
use crate::config::{MfPair, RunConfig};
use crate::error::{write_file, PipelineError, Result};
use crate::reference::{self, ReferenceTable};
use crate::report::{build_report, load_bundle_table, Labelled, Report};
use crate::run::{build, estimate, load_dataset, simulate};
use crate::warnings::write_jsonl;

/// Where the outputs for one MF pair go: the output directory itself when
/// the config has a single pair, else a subdirectory per pair.
pub fn mf_dir(cfg: &RunConfig, mf: MfPair) -> PathBuf {
    let out = cfg.out_dir();
    if cfg.mf.len() == 1 {
        out
    } else {
        out.join(mf.label())
    }
}

/// Writes canonical cases, covariates, one panel per MF pair and the
/// warnings report. Returns the files written.
pub fn cmd_ingest(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    if cfg.data.is_none() {
        return Err(PipelineError::Config("ingest needs a [data] section".into()));
    }
    let data = load_dataset(cfg)?;
    let out = cfg.out_dir();
    let mut written = vec![out.join(CASES_FILE), out.join(COVARIATES_FILE)];
    write_cases(&written[0], &data.series)?;
    write_covariates(&written[1], &data.covariates)?;
    let mut warnings = data.warnings.clone();
    for &mf in &cfg.mf {
        let run = build(cfg, &data, mf)?;
        let path = mf_dir(cfg, mf).join(PANEL_FILE);
        write_panel(&path, &run.panel)?;
        written.push(path);
        for mut w in run.warnings.into_iter().skip(data.warnings.len()) {
            if cfg.mf.len() > 1 {
                w.detail = format!("{} [{}]", w.detail, mf.label());
            }
            warnings.push(w);
        }
    }
    let wpath = out.join(WARNINGS_FILE);
    write_jsonl(&wpath, &warnings)?;
    written.push(wpath);
    Ok(written)
}

/// Fits every MF pair and writes one results bundle each.
pub fn cmd_estimate(cfg: &RunConfig) -> Result<Vec<(PathBuf, Bundle)>> {
    estimate(cfg)?
        .into_iter()
        .map(|(mf, bundle)| {
            let dir = mf_dir(cfg, mf);
            bundle.write(&dir)?;
            Ok((dir, bundle))
        })
        .collect()
}

/// Same bundle layout from intercept-only fits.
pub fn cmd_counterfactual(cfg: &RunConfig) -> Result<Vec<(PathBuf, Bundle)>> {
    let mut cf = cfg.clone();
    cf.model.no_mitigation = true;
    cmd_estimate(&cf)
}

pub fn cmd_simulate(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    if cfg.simulation.is_none() {
        return Err(PipelineError::Config("simulate needs a [simulation] section".into()));
    }
    let data = simulate(cfg)?;
    let out = cfg.out_dir();
    let files = [CASES_FILE, COVARIATES_FILE, TRUTH_FILE, WARNINGS_FILE].map(|f| out.join(f));
    write_cases(&files[0], &data.series)?;
    write_covariates(&files[1], &data.covariates)?;
    write_truth(&files[2], data.truth.as_ref().expect("simulation has truth"))?;
    write_jsonl(&files[3], &data.warnings)?;
    Ok(files.to_vec())
}

/// Tables for `report`: bundle directories, or every sample and MF of a
/// bundled reference table.
pub fn report_inputs(bundles: &[PathBuf], reference: Option<ReferenceTable>) -> Result<Vec<Labelled>> {
    let mut tables = bundles
        .iter()
        .map(|d| load_bundle_table(d))
        .collect::<Result<Vec<_>>>()?;
    if let Some(r) = reference {
        for sample in reference::SAMPLES {
            for mf in reference::MF_GRID {
                tables.push(Labelled {
                    label: format!("{}/{sample}/mf_{mf}", r.name()),
                    rows: reference::r0_bundle_rows(r, sample, mf)?,
                });
            }
        }
    }
    if tables.is_empty() {
        return Err(PipelineError::Input(
            "report needs at least one bundle or a reference table".into(),
        ));
    }
    Ok(tables)
}

pub fn cmd_report(tables: &[Labelled], out: &Path) -> Result<Report> {
    let report = build_report(tables);
    report.write(out)?;
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CompareWhat {
    R0,
    Coefficients,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CompareTarget {
    Reference {
        table: ReferenceTable,
        sample: String,
        mf: String,
    },
    Truth(PathBuf),
    Bundle(PathBuf),
}

pub fn cmd_compare(
    bundle_dir: &Path,
    target: &CompareTarget,
    what: CompareWhat,
    tol: Tolerance,
    out: Option<&Path>,
) -> Result<DiffReport> {
    let bundle = Bundle::read(bundle_dir)?;
    let label = bundle_dir.display().to_string();
    let left = match what {
        CompareWhat::R0 => KeyedTable::r0_from_bundle(&label, &bundle),
        CompareWhat::Coefficients => KeyedTable::coefficients_from_bundle(&label, &bundle),
    };
    let right = match target {
        CompareTarget::Reference { table, sample, mf } => match what {
            CompareWhat::R0 => reference::r0_keyed(*table, sample, mf)?,
            CompareWhat::Coefficients => {
                let mut t = reference::coefficients_keyed(*table, sample, mf)?;
                let summary = match table {
                    ReferenceTable::UsCoefficients => ReferenceTable::UsFitSummary,
                    _ => ReferenceTable::CountryFitSummary,
                };
                if let Some(s) = reference::fit_summaries(summary)
                    .into_iter()
                    .find(|s| &s.sample == sample && &s.mf == mf)
                {
                    t.values.insert("tau".into(), s.tau);
                }
                t
            }
        },
        CompareTarget::Truth(path) => {
            let truth = crate::canonical::read_truth(path)?;
            let label = path.display().to_string();
            match what {
                CompareWhat::R0 => KeyedTable::r0_from_truth(&label, &truth),
                CompareWhat::Coefficients => KeyedTable::coefficients_from_truth(&label, &truth),
            }
        }
        CompareTarget::Bundle(dir) => {
            let other = Bundle::read(dir)?;
            let label = dir.display().to_string();
            match what {
                CompareWhat::R0 => KeyedTable::r0_from_bundle(&label, &other),
                CompareWhat::Coefficients => KeyedTable::coefficients_from_bundle(&label, &other),
            }
        }
    };
    let report = compare(&left, &right, tol)?;
    if let Some(dir) = out {
        write_file(&dir.join("compare.json"), report.to_json())?;
        write_file(&dir.join("compare.txt"), report.to_text())?;
    }
    Ok(report)
}
