//! Rejects and warnings, written as JSON lines.

use std::path::Path;

use r0_core::panel::{PanelWarning, WarningKind};
use serde::{Deserialize, Serialize};

use crate::error::{read_to_string, write_file, PipelineError, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WarningRecord {
    pub source: String,
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub region: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub date: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub line: Option<u64>,
    pub detail: String,
}

impl WarningRecord {
    pub fn new(source: &str, kind: &str, detail: impl Into<String>) -> Self {
        WarningRecord {
            source: source.into(),
            kind: kind.into(),
            region: None,
            date: None,
            line: None,
            detail: detail.into(),
        }
    }

    pub fn region(mut self, region: &str) -> Self {
        self.region = Some(region.into());
        self
    }

    pub fn date(mut self, date: impl ToString) -> Self {
        self.date = Some(date.to_string());
        self
    }

    pub fn line(mut self, line: u64) -> Self {
        self.line = Some(line);
        self
    }
}

impl From<&PanelWarning> for WarningRecord {
    fn from(w: &PanelWarning) -> Self {
        let rec = match &w.kind {
            WarningKind::RegionDropped { reason } => WarningRecord::new("panel", "region_dropped", reason.clone()),
            WarningKind::CovariateGap { dates_dropped, first } => WarningRecord::new(
                "panel",
                "covariate_gap",
                format!("{dates_dropped} days dropped for missing covariates"),
            )
            .date(first),
            WarningKind::MissingOutcome { days } => WarningRecord::new(
                "panel",
                "missing_outcome",
                format!("{days} days without a defined outcome"),
            ),
        };
        rec.region(&w.region_id)
    }
}

pub fn to_jsonl(records: &[WarningRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("warning record serializes"));
        out.push('\n');
    }
    out
}

pub fn write_jsonl(path: &Path, records: &[WarningRecord]) -> Result<()> {
    write_file(path, to_jsonl(records))
}

pub fn read_jsonl(path: &Path) -> Result<Vec<WarningRecord>> {
    read_to_string(path)?
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(k, l)| serde_json::from_str(l).map_err(|e| PipelineError::parse(path, k as u64 + 1, e.to_string())))
        .collect()
}
