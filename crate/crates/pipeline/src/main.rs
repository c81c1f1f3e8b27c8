use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use r0_pipeline::commands::{
    cmd_compare, cmd_counterfactual, cmd_estimate, cmd_ingest, cmd_report, cmd_simulate, report_inputs, CompareTarget,
    CompareWhat,
};
use r0_pipeline::compare::Tolerance;
use r0_pipeline::error::{EXIT_ESTIMATION, EXIT_INPUT};
use r0_pipeline::reference::ReferenceTable;
use r0_pipeline::{Overrides, PipelineError, Result, RunConfig};

/// Estimate basic reproduction numbers from reported case panels.
#[derive(Parser)]
#[command(name = "r0est", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Turn raw source snapshots into canonical cases, covariates and panel files.
    Ingest(RunArgs),
    /// Fit the threshold model and write a results bundle per MF pair.
    Estimate(RunArgs),
    /// Fit intercept-only models (no mitigating factors).
    Counterfactual(RunArgs),
    /// Write a synthetic data set and its truth record.
    Simulate(RunArgs),
    /// Histogram, sorted bar and summary tables for results bundles.
    Report(ReportArgs),
    /// Compare a bundle with a reference table, a truth record or another bundle.
    Compare(CompareArgs),
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    mf_start: Option<f64>,
    #[arg(long)]
    mf_end: Option<f64>,
    /// Sample window as START:END (ISO dates).
    #[arg(long)]
    window: Option<String>,
    /// Regressor lag p in days.
    #[arg(long)]
    lag: Option<usize>,
    /// `default`, `lo:hi:step` or a comma separated list.
    #[arg(long)]
    tau_grid: Option<String>,
    #[arg(long)]
    no_mitigation: bool,
    #[arg(long)]
    seed: Option<u64>,
    /// Truncation lag for the robust standard errors.
    #[arg(long)]
    se_lag: Option<usize>,
}

impl RunArgs {
    fn load(&self) -> Result<RunConfig> {
        let mut cfg = RunConfig::load(&self.config)?;
        cfg.apply(&Overrides {
            out_dir: self.out.clone(),
            mf_start: self.mf_start,
            mf_end: self.mf_end,
            window: self.window.clone(),
            lag_p: self.lag,
            tau_grid: self.tau_grid.clone(),
            no_mitigation: self.no_mitigation,
            seed: self.seed,
            se_lag: self.se_lag,
        })?;
        Ok(cfg)
    }
}

#[derive(Args)]
struct ReportArgs {
    /// Bundle directories.
    bundles: Vec<PathBuf>,
    #[arg(long, default_value = "report")]
    out: PathBuf,
    /// Also report every sample and MF of a bundled reference table.
    #[arg(long)]
    reference: Option<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum What {
    R0,
    Coefficients,
}

#[derive(Args)]
struct CompareArgs {
    #[arg(long)]
    bundle: PathBuf,
    /// Bundled reference table name, e.g. us_r0.
    #[arg(long, conflicts_with_all = ["truth", "against"])]
    reference: Option<String>,
    #[arg(long, default_value = "pre_vaccination")]
    sample: String,
    #[arg(long, default_value = "5-2")]
    mf: String,
    #[arg(long, conflicts_with = "against")]
    truth: Option<PathBuf>,
    /// Another bundle directory.
    #[arg(long)]
    against: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "r0")]
    what: What,
    #[arg(long)]
    abs_tol: Option<f64>,
    #[arg(long)]
    rel_tol: Option<f64>,
    #[arg(long)]
    min_pass: Option<usize>,
    /// Directory for compare.json and compare.txt.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn reference_table(name: &str) -> Result<ReferenceTable> {
    ReferenceTable::from_name(name).ok_or_else(|| {
        let known: Vec<&str> = ReferenceTable::ALL.iter().map(|t| t.name()).collect();
        PipelineError::Config(format!("unknown reference table {name:?}; known: {}", known.join(", ")))
    })
}

fn print_paths(paths: impl IntoIterator<Item = PathBuf>) {
    for p in paths {
        println!("wrote {}", p.display());
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Ingest(a) => print_paths(cmd_ingest(&a.load()?)?),
        Command::Estimate(a) => {
            for (dir, b) in cmd_estimate(&a.load()?)? {
                let tau = b.meta.tau.map(|t| format!("{t}")).unwrap_or_else(|| "-".into());
                println!(
                    "wrote {} (tau {tau}, R2 {:.4}, {} obs, {} regions)",
                    dir.display(),
                    b.meta.r_squared,
                    b.meta.obs_count,
                    b.meta.region_count
                );
            }
        }
        Command::Counterfactual(a) => {
            for (dir, b) in cmd_counterfactual(&a.load()?)? {
                println!(
                    "wrote {} ({} obs, {} regions)",
                    dir.display(),
                    b.meta.obs_count,
                    b.meta.region_count
                );
            }
        }
        Command::Simulate(a) => print_paths(cmd_simulate(&a.load()?)?),
        Command::Report(a) => {
            let reference = a.reference.as_deref().map(reference_table).transpose()?;
            let tables = report_inputs(&a.bundles, reference)?;
            let report = cmd_report(&tables, &a.out)?;
            println!("{}", report.summary_line());
        }
        Command::Compare(a) => {
            let target = match (&a.reference, &a.truth, &a.against) {
                (Some(r), _, _) => CompareTarget::Reference {
                    table: reference_table(r)?,
                    sample: a.sample.clone(),
                    mf: a.mf.clone(),
                },
                (_, Some(t), _) => CompareTarget::Truth(t.clone()),
                (_, _, Some(b)) => CompareTarget::Bundle(b.clone()),
                _ => {
                    return Err(PipelineError::Config(
                        "compare needs --reference, --truth or --against".into(),
                    ))
                }
            };
            let what = match a.what {
                What::R0 => CompareWhat::R0,
                What::Coefficients => CompareWhat::Coefficients,
            };
            let tol = Tolerance {
                abs: a.abs_tol,
                rel: a.rel_tol,
                min_pass: a.min_pass,
            };
            let report = cmd_compare(&a.bundle, &target, what, tol, a.out.as_deref())?;
            print!("{}", report.to_text());
            if !report.pass {
                return Err(PipelineError::ComparisonFailed(format!(
                    "{}/{} rows within tolerance, {} required",
                    report.passed,
                    report.rows.len(),
                    report.required
                )));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let code = e.exit_code();
            debug_assert!(code == EXIT_ESTIMATION || code == EXIT_INPUT);
            ExitCode::from(code as u8)
        }
    }
}
