//! Keyed table comparison with absolute and relative tolerances.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::bundle::Bundle;
use crate::canonical::TruthFile;
use crate::error::{PipelineError, Result};

/// Values keyed by region or coefficient name.
#[derive(Debug, Clone, PartialEq)]
pub struct KeyedTable {
    pub label: String,
    pub values: BTreeMap<String, f64>,
}

impl KeyedTable {
    pub fn r0_from_bundle(label: &str, bundle: &Bundle) -> KeyedTable {
        KeyedTable {
            label: label.into(),
            values: bundle.r0.iter().map(|r| (r.region.clone(), r.estimate)).collect(),
        }
    }

    pub fn coefficients_from_bundle(label: &str, bundle: &Bundle) -> KeyedTable {
        let mut values: BTreeMap<String, f64> = bundle
            .coefficients
            .iter()
            .map(|c| (c.name.clone(), c.estimate))
            .collect();
        if let Some(tau) = bundle.meta.tau {
            values.insert("tau".into(), tau);
        }
        KeyedTable {
            label: label.into(),
            values,
        }
    }

    pub fn r0_from_truth(label: &str, truth: &TruthFile) -> KeyedTable {
        KeyedTable {
            label: label.into(),
            values: truth.regions.iter().map(|r| (r.region_id.clone(), r.alpha)).collect(),
        }
    }

    /// Slopes, indicator coefficient and threshold of the generating model.
    pub fn coefficients_from_truth(label: &str, truth: &TruthFile) -> KeyedTable {
        let mut values: BTreeMap<String, f64> = truth
            .covariate_names
            .iter()
            .cloned()
            .zip(truth.psi.iter().copied())
            .collect();
        values.insert(r0_core::panel::INDICATOR_NAME.into(), truth.kappa);
        values.insert("tau".into(), truth.tau);
        KeyedTable {
            label: label.into(),
            values,
        }
    }
}

/// A row passes when every bound that is set holds. With no bound set the
/// values must be identical.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct Tolerance {
    pub abs: Option<f64>,
    pub rel: Option<f64>,
    /// Rows that must pass; all of them when `None`.
    pub min_pass: Option<usize>,
}

impl Tolerance {
    pub fn absolute(abs: f64) -> Tolerance {
        Tolerance {
            abs: Some(abs),
            ..Tolerance::default()
        }
    }

    fn row_passes(&self, abs_dev: f64, rel_dev: Option<f64>) -> bool {
        match (self.abs, self.rel) {
            (None, None) => abs_dev == 0.0,
            (a, r) => a.is_none_or(|a| abs_dev <= a) && r.is_none_or(|r| rel_dev.map_or(abs_dev == 0.0, |d| d <= r)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiffRow {
    pub key: String,
    pub value: f64,
    pub reference: f64,
    pub abs_dev: f64,
    /// `abs_dev / |reference|`; absent when the reference is zero.
    pub rel_dev: Option<f64>,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiffReport {
    pub left: String,
    pub right: String,
    pub tolerance: Tolerance,
    pub rows: Vec<DiffRow>,
    pub passed: usize,
    pub required: usize,
    pub max_abs_dev: f64,
    pub max_rel_dev: Option<f64>,
    pub pass: bool,
}

/// Compares `left` against `right`. Both tables must have the same keys.
pub fn compare(left: &KeyedTable, right: &KeyedTable, tol: Tolerance) -> Result<DiffReport> {
    let only_left: Vec<&str> = left
        .values
        .keys()
        .filter(|k| !right.values.contains_key(*k))
        .map(String::as_str)
        .collect();
    let only_right: Vec<&str> = right
        .values
        .keys()
        .filter(|k| !left.values.contains_key(*k))
        .map(String::as_str)
        .collect();
    if !only_left.is_empty() || !only_right.is_empty() {
        return Err(PipelineError::Input(format!(
            "keys differ: only in {}: [{}]; only in {}: [{}]",
            left.label,
            only_left.join(", "),
            right.label,
            only_right.join(", ")
        )));
    }
    let rows: Vec<DiffRow> = left
        .values
        .iter()
        .map(|(key, &value)| {
            let reference = right.values[key];
            let abs_dev = (value - reference).abs();
            let rel_dev = (reference != 0.0).then(|| abs_dev / reference.abs());
            DiffRow {
                key: key.clone(),
                value,
                reference,
                abs_dev,
                rel_dev,
                pass: tol.row_passes(abs_dev, rel_dev),
            }
        })
        .collect();
    let passed = rows.iter().filter(|r| r.pass).count();
    let required = tol.min_pass.unwrap_or(rows.len()).min(rows.len());
    let max_abs_dev = rows.iter().map(|r| r.abs_dev).fold(0.0, f64::max);
    let max_rel_dev = rows.iter().filter_map(|r| r.rel_dev).reduce(f64::max);
    Ok(DiffReport {
        left: left.label.clone(),
        right: right.label.clone(),
        tolerance: tol,
        pass: passed >= required,
        rows,
        passed,
        required,
        max_abs_dev,
        max_rel_dev,
    })
}

impl DiffReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("diff report serializes");
        s.push('\n');
        s
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "compare {} vs {}", self.left, self.right);
        let _ = writeln!(
            s,
            "{:<28} {:>12} {:>12} {:>10} {:>10}  ok",
            "key", "value", "reference", "abs_dev", "rel_dev"
        );
        for r in &self.rows {
            let rel = r.rel_dev.map(|d| format!("{d:.4}")).unwrap_or_else(|| "-".into());
            let _ = writeln!(
                s,
                "{:<28} {:>12.4} {:>12.4} {:>10.4} {:>10}  {}",
                r.key,
                r.value,
                r.reference,
                r.abs_dev,
                rel,
                if r.pass { "yes" } else { "NO" }
            );
        }
        let tol = match (self.tolerance.abs, self.tolerance.rel) {
            (None, None) => "exact".to_owned(),
            (a, r) => [a.map(|a| format!("abs <= {a}")), r.map(|r| format!("rel <= {r}"))]
                .into_iter()
                .flatten()
                .collect::<Vec<_>>()
                .join(", "),
        };
        let _ = writeln!(
            s,
            "{}: {}/{} rows within tolerance ({tol}), {} required; max abs dev {:.6}",
            if self.pass { "PASS" } else { "FAIL" },
            self.passed,
            self.rows.len(),
            self.required,
            self.max_abs_dev
        );
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(label: &str, kv: &[(&str, f64)]) -> KeyedTable {
        KeyedTable {
            label: label.into(),
            values: kv.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
        }
    }

    #[test]
    fn reflexive_and_symmetric() {
        let a = table("a", &[("x", 4.29), ("y", 5.0)]);
        let b = table("b", &[("x", 4.5), ("y", 4.0)]);
        let same = compare(&a, &a, Tolerance::default()).unwrap();
        assert!(same.pass);
        assert_eq!(same.max_abs_dev, 0.0);
        let ab = compare(&a, &b, Tolerance::absolute(0.3)).unwrap();
        let ba = compare(&b, &a, Tolerance::absolute(0.3)).unwrap();
        for (r, s) in ab.rows.iter().zip(&ba.rows) {
            assert_eq!(r.abs_dev, s.abs_dev);
        }
        assert_eq!(ab.passed, 1);
        assert!(!ab.pass);
    }

    #[test]
    fn zero_tolerance_needs_identity() {
        let a = table("a", &[("x", 1.0)]);
        let b = table("b", &[("x", 1.0 + f64::EPSILON)]);
        assert!(!compare(&a, &b, Tolerance::default()).unwrap().pass);
        assert!(!compare(&a, &b, Tolerance::absolute(0.0)).unwrap().pass);
        assert!(compare(&a, &a, Tolerance::absolute(0.0)).unwrap().pass);
    }

    #[test]
    fn min_pass_and_relative() {
        let a = table("a", &[("x", 1.0), ("y", 2.0), ("z", 0.0)]);
        let b = table("b", &[("x", 1.05), ("y", 3.0), ("z", 0.0)]);
        let tol = Tolerance {
            abs: None,
            rel: Some(0.1),
            min_pass: Some(2),
        };
        let r = compare(&a, &b, tol).unwrap();
        assert_eq!(r.passed, 2);
        assert!(r.pass);
        assert!(r.rows[2].rel_dev.is_none());
        assert!(r.to_text().starts_with("compare a vs b"));
    }

    #[test]
    fn key_mismatch_is_an_error() {
        let a = table("a", &[("x", 1.0)]);
        let b = table("b", &[("y", 1.0)]);
        let err = compare(&a, &b, Tolerance::default()).unwrap_err().to_string();
        assert!(
            err.contains("only in a: [x]") && err.contains("only in b: [y]"),
            "{err}"
        );
    }
}
