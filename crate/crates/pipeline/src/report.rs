//! Histogram and bar-chart tables for one or more R0 tables.

use std::path::Path;

use crate::bundle::{read_r0_table, R0Row, FIT_META_FILE, R0_TABLE_FILE};
use crate::canonical::write_rows;
use crate::error::{write_file, Result};

pub const HISTOGRAM_FILE: &str = "histogram.csv";
pub const BARS_FILE: &str = "bars.csv";
pub const SUMMARY_FILE: &str = "summary.csv";

/// Histogram bin width in R0 units.
pub const BIN_WIDTH: f64 = 0.1;

#[derive(Debug, Clone, PartialEq)]
pub struct Labelled {
    pub label: String,
    pub rows: Vec<R0Row>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bin {
    /// Bin `k` covers `[k * 0.1, (k + 1) * 0.1)`.
    pub index: i64,
    pub count: usize,
}

impl Bin {
    pub fn lo(&self) -> f64 {
        self.index as f64 * BIN_WIDTH
    }

    pub fn hi(&self) -> f64 {
        (self.index + 1) as f64 * BIN_WIDTH
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TableSummary {
    pub label: String,
    pub count: usize,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub histograms: Vec<(String, Vec<Bin>)>,
    /// Rows sorted by estimate, largest first.
    pub bars: Vec<(String, Vec<R0Row>)>,
    pub summaries: Vec<TableSummary>,
    /// Mean over every estimate of every table.
    pub pooled_mean: f64,
    pub pooled_count: usize,
}

fn bin_index(v: f64) -> i64 {
    (v / BIN_WIDTH + 1e-9).floor() as i64
}

/// Bins covering the range of `values`, empty ones included.
pub fn histogram(values: &[f64]) -> Vec<Bin> {
    let idx: Vec<i64> = values.iter().map(|&v| bin_index(v)).collect();
    let (Some(&lo), Some(&hi)) = (idx.iter().min(), idx.iter().max()) else {
        return Vec::new();
    };
    (lo..=hi)
        .map(|k| Bin {
            index: k,
            count: idx.iter().filter(|&&i| i == k).count(),
        })
        .collect()
}

pub fn sorted_bars(rows: &[R0Row]) -> Vec<R0Row> {
    let mut r = rows.to_vec();
    r.sort_by(|a, b| b.estimate.total_cmp(&a.estimate).then_with(|| a.region.cmp(&b.region)));
    r
}

pub fn build_report(tables: &[Labelled]) -> Report {
    let mut all = Vec::new();
    let mut report = Report {
        histograms: Vec::new(),
        bars: Vec::new(),
        summaries: Vec::new(),
        pooled_mean: f64::NAN,
        pooled_count: 0,
    };
    for t in tables {
        let values: Vec<f64> = t.rows.iter().map(|r| r.estimate).collect();
        all.extend_from_slice(&values);
        report.histograms.push((t.label.clone(), histogram(&values)));
        report.bars.push((t.label.clone(), sorted_bars(&t.rows)));
        if !values.is_empty() {
            report.summaries.push(TableSummary {
                label: t.label.clone(),
                count: values.len(),
                mean: values.iter().sum::<f64>() / values.len() as f64,
                min: values.iter().copied().fold(f64::INFINITY, f64::min),
                max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            });
        }
    }
    report.pooled_count = all.len();
    if !all.is_empty() {
        report.pooled_mean = all.iter().sum::<f64>() / all.len() as f64;
    }
    report
}

fn two(v: f64) -> String {
    format!("{v:.2}")
}

impl Report {
    pub fn histogram_csv(&self) -> Vec<u8> {
        let header = ["table", "bin_lo", "bin_hi", "count"].map(String::from);
        write_rows(
            &header,
            self.histograms.iter().flat_map(|(label, bins)| {
                bins.iter()
                    .map(move |b| vec![label.clone(), two(b.lo()), two(b.hi()), b.count.to_string()])
            }),
        )
    }

    pub fn bars_csv(&self) -> Vec<u8> {
        let header = ["table", "rank", "region", "estimate", "se_robust2"].map(String::from);
        write_rows(
            &header,
            self.bars.iter().flat_map(|(label, rows)| {
                rows.iter().enumerate().map(move |(k, r)| {
                    vec![
                        label.clone(),
                        (k + 1).to_string(),
                        r.region.clone(),
                        two(r.estimate),
                        r.se_robust2.map(two).unwrap_or_default(),
                    ]
                })
            }),
        )
    }

    pub fn summary_csv(&self) -> Vec<u8> {
        let header = ["table", "regions", "mean", "min", "max"].map(String::from);
        let mut rows: Vec<Vec<String>> = self
            .summaries
            .iter()
            .map(|s| {
                vec![
                    s.label.clone(),
                    s.count.to_string(),
                    two(s.mean),
                    two(s.min),
                    two(s.max),
                ]
            })
            .collect();
        if self.summaries.len() > 1 {
            rows.push(vec![
                "all".into(),
                self.pooled_count.to_string(),
                two(self.pooled_mean),
                String::new(),
                String::new(),
            ]);
        }
        write_rows(&header, rows)
    }

    pub fn summary_line(&self) -> String {
        format!(
            "mean R0 over {} estimates in {} table(s): {:.2}",
            self.pooled_count,
            self.summaries.len(),
            self.pooled_mean
        )
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        write_file(&dir.join(HISTOGRAM_FILE), self.histogram_csv())?;
        write_file(&dir.join(BARS_FILE), self.bars_csv())?;
        write_file(&dir.join(SUMMARY_FILE), self.summary_csv())
    }
}

/// Label for a bundle: scenario and MF from its metadata, else the
/// directory name.
pub fn bundle_label(dir: &Path) -> String {
    let from_meta = std::fs::read_to_string(dir.join(FIT_META_FILE))
        .ok()
        .and_then(|t| serde_json::from_str::<serde_json::Value>(&t).ok())
        .and_then(|v| {
            let scenario = v.get("scenario")?.as_str()?.to_owned();
            let start = v.get("mf_start")?.as_f64()?;
            let end = v.get("mf_end")?.as_f64()?;
            Some(format!("{scenario}/mf_{start}-{end}"))
        });
    from_meta.unwrap_or_else(|| {
        dir.file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| dir.display().to_string())
    })
}

pub fn load_bundle_table(dir: &Path) -> Result<Labelled> {
    Ok(Labelled {
        label: bundle_label(dir),
        rows: read_r0_table(&dir.join(R0_TABLE_FILE))?,
    })
}
