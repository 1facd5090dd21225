//! Pass/fail property reports shared by the verification drivers.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;

/// One verified property: a name, a verdict, and the evidence behind it.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct CheckRow {
    /// Stable machine-readable identifier, e.g. `"direction-unit-length"`.
    pub name: String,
    pub passed: bool,
    /// Number of samples (points, windows, paths, …) examined.
    pub samples: usize,
    /// Worst signed violation observed; ≤ 0 (up to the row's tolerance)
    /// when the property holds. Exact meaning is row-specific.
    pub worst_violation: f64,
    /// Fitted constants backing the row (e.g. a Hölder constant).
    /// BTreeMap so serialized output has a stable key order.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub fitted: BTreeMap<String, f64>,
    /// Human-readable context: tolerances, sampling plan, caveats.
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub note: String,
}

impl CheckRow {
    pub fn new(name: impl Into<String>, passed: bool, samples: usize, worst: f64) -> Self {
        CheckRow {
            name: name.into(),
            passed,
            samples,
            worst_violation: worst,
            fitted: BTreeMap::new(),
            note: String::new(),
        }
    }

    pub fn with_fit(mut self, key: impl Into<String>, value: f64) -> Self {
        self.fitted.insert(key.into(), value);
        self
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = note.into();
        self
    }
}

/// A batch of checks about one subject (a domain, a test function, a run).
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct PropertyReport {
    pub subject: String,
    pub rows: Vec<CheckRow>,
}

impl PropertyReport {
    pub fn new(subject: impl Into<String>) -> Self {
        PropertyReport {
            subject: subject.into(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: CheckRow) {
        self.rows.push(row);
    }

    pub fn all_passed(&self) -> bool {
        self.rows.iter().all(|r| r.passed)
    }

    pub fn row(&self, name: &str) -> Option<&CheckRow> {
        self.rows.iter().find(|r| r.name == name)
    }

    pub fn to_json(&self) -> String {
        // Stable output: struct fields serialize in declaration order and
        // fitted maps are ordered, so identical reports give identical bytes.
        serde_json::to_string_pretty(self).expect("report serialization cannot fail")
    }
}

impl fmt::Display for PropertyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "report: {}", self.subject)?;
        for r in &self.rows {
            let verdict = if r.passed { "PASS" } else { "FAIL" };
            write!(
                f,
                "  [{verdict}] {:<32} samples={:<8} worst={:+.3e}",
                r.name, r.samples, r.worst_violation
            )?;
            if !r.fitted.is_empty() {
                let fits: Vec<String> = r
                    .fitted
                    .iter()
                    .map(|(k, v)| format!("{k}={v:.6e}"))
                    .collect();
                write!(f, " [{}]", fits.join(", "))?;
            }
            if !r.note.is_empty() {
                write!(f, " — {}", r.note)?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_passed_reflects_rows() {
        let mut rep = PropertyReport::new("unit");
        rep.push(CheckRow::new("a", true, 10, -1.0));
        assert!(rep.all_passed());
        rep.push(CheckRow::new("b", false, 10, 0.5));
        assert!(!rep.all_passed());
        assert_eq!(rep.row("b").unwrap().worst_violation, 0.5);
    }

    #[test]
    fn json_round_trip_and_stable_key_order() {
        let mut rep = PropertyReport::new("unit");
        rep.push(
            CheckRow::new("fit-row", true, 3, -0.25)
                .with_fit("zeta", 1.0)
                .with_fit("alpha", 2.0)
                .with_note("tolerance 1e-6"),
        );
        let text = rep.to_json();
        // BTreeMap orders keys alphabetically regardless of insertion order.
        let a = text.find("\"alpha\"").unwrap();
        let z = text.find("\"zeta\"").unwrap();
        assert!(a < z);
        let back: PropertyReport = serde_json::from_str(&text).unwrap();
        assert_eq!(back, rep);
        // Serialization is deterministic byte-for-byte.
        assert_eq!(text, rep.to_json());
    }
}
