//! Check entries, empirical constants, and deterministic JSON reports.
//!
//! Reports must be byte-identical across reruns with the same configuration
//! and seeds, so wall-clock timings never enter the serialized form; the
//! pipeline writes them to a separate sidecar file instead. Constants live in
//! a BTreeMap so the key order is stable.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// One verified claim. `estimate` is the measured quantity, `bound` the
/// value it is compared against (absent for record-only entries), `margin`
/// the slack in the passing direction.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckEntry {
    /// stable kebab-case name, unique within a report
    pub id: String,
    /// the claim being checked, in words
    pub anchor: String,
    pub pass: bool,
    pub estimate: f64,
    pub bound: Option<f64>,
    pub margin: Option<f64>,
    pub n: u64,
    pub seed: u64,
    pub note: String,
    #[serde(skip)]
    pub runtime_ms: u64,
}

impl CheckEntry {
    /// estimate must stay at or below bound.
    pub fn upper(id: &str, anchor: &str, estimate: f64, bound: f64, n: u64, seed: u64) -> Self {
        CheckEntry {
            id: id.into(),
            anchor: anchor.into(),
            pass: estimate <= bound,
            estimate,
            bound: Some(bound),
            margin: Some(bound - estimate),
            n,
            seed,
            note: String::new(),
            runtime_ms: 0,
        }
    }

    /// estimate must stay at or above bound.
    pub fn lower(id: &str, anchor: &str, estimate: f64, bound: f64, n: u64, seed: u64) -> Self {
        CheckEntry {
            id: id.into(),
            anchor: anchor.into(),
            pass: estimate >= bound,
            estimate,
            bound: Some(bound),
            margin: Some(estimate - bound),
            n,
            seed,
            note: String::new(),
            runtime_ms: 0,
        }
    }

    /// Record a value without comparing it; passes iff the value is finite.
    pub fn record(id: &str, anchor: &str, estimate: f64, n: u64, seed: u64) -> Self {
        CheckEntry {
            id: id.into(),
            anchor: anchor.into(),
            pass: estimate.is_finite(),
            estimate,
            bound: None,
            margin: None,
            n,
            seed,
            note: String::new(),
            runtime_ms: 0,
        }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = note.into();
        self
    }

    /// Force a vacuous pass (empty stratum, skipped stage) with the reason.
    pub fn vacuous(id: &str, anchor: &str, note: impl Into<String>) -> Self {
        CheckEntry {
            id: id.into(),
            anchor: anchor.into(),
            pass: true,
            estimate: 0.0,
            bound: None,
            margin: None,
            n: 0,
            seed: 0,
            note: note.into(),
            runtime_ms: 0,
        }
    }
}

/// Columnar plot data. Deterministic (derived from the same seeds as the
/// checks), so it may live in the serialized report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Series {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct VerificationReport {
    pub constants: BTreeMap<String, f64>,
    pub entries: Vec<CheckEntry>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub series: BTreeMap<String, Series>,
}

impl VerificationReport {
    pub fn push(&mut self, e: CheckEntry) {
        self.entries.push(e);
    }

    pub fn set_constant(&mut self, key: &str, value: f64) {
        self.constants.insert(key.into(), value);
    }

    pub fn constant(&self, key: &str) -> Option<f64> {
        self.constants.get(key).copied()
    }

    pub fn all_pass(&self) -> bool {
        self.entries.iter().all(|e| e.pass)
    }

    pub fn entry(&self, id: &str) -> Option<&CheckEntry> {
        self.entries.iter().find(|e| e.id == id)
    }

    pub fn set_series(&mut self, key: &str, columns: &[&str], rows: Vec<Vec<f64>>) {
        self.series.insert(
            key.into(),
            Series { columns: columns.iter().map(|c| c.to_string()).collect(), rows },
        );
    }

    /// Absorb another report, prefixing its entry ids with `stage-`.
    pub fn merge(&mut self, stage: &str, other: VerificationReport) {
        for (k, v) in other.constants {
            self.constants.insert(k, v);
        }
        for mut e in other.entries {
            e.id = format!("{stage}-{}", e.id);
            self.entries.push(e);
        }
        for (k, s) in other.series {
            self.series.insert(k, s);
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

/// Rerun context: the configuration as parsed plus every empirical constant
/// consumed downstream.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct RunManifest {
    pub config: BTreeMap<String, String>,
    pub constants: BTreeMap<String, f64>,
}
