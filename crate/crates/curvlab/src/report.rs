//! JSON verification reports.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// One ladder level of an integral task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LadderEntry {
    KazdanWarner {
        nodes: Vec<usize>,
        integral: f64,
        norm: f64,
        ratio: f64,
        degenerate: bool,
    },
    Invariance {
        nodes: Vec<usize>,
        base: f64,
        rescaled: f64,
        relative_difference: f64,
    },
}

/// Outcome of one configured task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskRecord {
    pub name: String,
    pub cite: String,
    pub residual_max: Option<f64>,
    pub residual_mean: Option<f64>,
    pub normalization: Option<f64>,
    pub ladder: Vec<LadderEntry>,
    pub fd_order: Option<f64>,
    pub tol: f64,
    /// True when `tol` comes from a `[tasks]` override.
    pub tol_overridden: bool,
    /// Metric jet order used by pointwise tasks.
    pub jet_order: Option<usize>,
    /// Number of sample points for pointwise tasks.
    pub points: Option<usize>,
    pub pass: bool,
    pub seconds: f64,
    pub message: Option<String>,
}

/// A complete run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub version: String,
    pub config: BTreeMap<String, BTreeMap<String, String>>,
    pub seed: u64,
    pub tasks: Vec<TaskRecord>,
    pub pass: bool,
}

impl Report {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports serialize");
        s.push('\n');
        s
    }

    /// The report with all wall-time fields zeroed, for run-to-run comparison.
    pub fn without_timing(&self) -> Report {
        let mut r = self.clone();
        for t in &mut r.tasks {
            t.seconds = 0.0;
        }
        r
    }

    /// One line per task plus the verdict.
    pub fn summary(&self) -> String {
        let width = self.tasks.iter().map(|t| t.name.len()).max().unwrap_or(0);
        let mut out = String::new();
        for t in &self.tasks {
            let residual = t.residual_max.map_or("-".to_string(), |r| format!("{r:.3e}"));
            let order = t.fd_order.map_or(String::new(), |o| format!(" order {o:.3}"));
            out.push_str(&format!(
                "{} {:width$} residual {residual} tol {:.1e}{order} ({:.2}s)",
                if t.pass { "PASS" } else { "FAIL" },
                t.name,
                t.tol,
                t.seconds,
            ));
            if let Some(m) = &t.message {
                out.push_str(&format!(": {m}"));
            }
            out.push('\n');
        }
        let failed = self.tasks.iter().filter(|t| !t.pass).count();
        out.push_str(&format!(
            "{}: {} of {} tasks passed\n",
            if self.pass { "PASS" } else { "FAIL" },
            self.tasks.len() - failed,
            self.tasks.len()
        ));
        out
    }
}
