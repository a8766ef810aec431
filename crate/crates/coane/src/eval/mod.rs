//! Downstream evaluation of embeddings: link prediction (AUC over Hadamard
//! pair features), one-vs-rest node classification (macro/micro F1), and
//! k-means node clustering (NMI).

pub mod classify;
pub mod cluster;
pub mod linkpred;
pub mod logreg;
pub mod metrics;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

/// Task metrics plus the metadata needed to reproduce the run.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub task: String,
    pub metrics: BTreeMap<String, f64>,
    pub params: BTreeMap<String, String>,
}

impl EvalReport {
    pub fn new(task: &str) -> Self {
        Self {
            task: task.to_string(),
            metrics: BTreeMap::new(),
            params: BTreeMap::new(),
        }
    }

    pub fn metric(&self, name: &str) -> Option<f64> {
        self.metrics.get(name).copied()
    }

    /// Machine-readable key=value lines followed by a small human table.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "task = {}", self.task).unwrap();
        for (k, v) in &self.params {
            writeln!(out, "{} = {}", k, v).unwrap();
        }
        for (k, v) in &self.metrics {
            writeln!(out, "{} = {}", k, v).unwrap();
        }
        writeln!(out).unwrap();
        writeln!(out, "{:<12} {:>10}", "metric", "value").unwrap();
        for (k, v) in &self.metrics {
            writeln!(out, "{:<12} {:>10.4}", k, v).unwrap();
        }
        out
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }
}
