use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    /// Passes when `measured <= tolerance`.
    AtMost,
    /// Passes when `measured > tolerance` (negative controls).
    Exceeds,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub comparison: Comparison,
    pub tolerance: f64,
    pub measured: f64,
    pub passed: bool,
}

impl Check {
    pub fn at_most(name: impl Into<String>, measured: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            comparison: Comparison::AtMost,
            tolerance,
            measured,
            passed: measured <= tolerance,
        }
    }

    pub fn exceeds(name: impl Into<String>, measured: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            comparison: Comparison::Exceeds,
            tolerance: threshold,
            measured,
            passed: measured > threshold,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointSummary {
    pub index: usize,
    pub values: BTreeMap<String, f64>,
    pub dir: String,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub task: String,
    pub config_hash: String,
    pub seed: u64,
    pub passed: bool,
    pub checks: Vec<Check>,
    pub metrics: BTreeMap<String, f64>,
    pub flags: Vec<String>,
    pub files: Vec<String>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub points: Vec<PointSummary>,
    pub timing_seconds: f64,
}

impl Report {
    pub fn new(task: &str, seed: u64) -> Self {
        Self {
            task: task.to_string(),
            seed,
            ..Default::default()
        }
    }

    pub fn check(&mut self, c: Check) {
        if !c.passed {
            log::warn!("check {} failed: {:e} vs {:e}", c.name, c.measured, c.tolerance);
        }
        self.checks.push(c);
    }

    pub fn metric(&mut self, name: impl Into<String>, value: f64) {
        self.metrics.insert(name.into(), value);
    }

    pub fn finalize(&mut self) {
        self.passed = self.checks.iter().all(|c| c.passed) && self.points.iter().all(|p| p.passed);
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
    }
}
