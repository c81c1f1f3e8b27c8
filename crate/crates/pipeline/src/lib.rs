//! File formats, source ingestion, estimation runs, reports and
//! comparisons built on `r0-core`. The `r0est` binary is a thin shell over
//! [`commands`].

pub mod bundle;
pub mod canonical;
pub mod commands;
pub mod compare;
pub mod config;
pub mod dates;
pub mod error;
pub mod ingest;
pub mod reference;
pub mod report;
pub mod run;
pub mod warnings;

pub use bundle::Bundle;
pub use config::{Overrides, RunConfig};
pub use error::{PipelineError, Result};
