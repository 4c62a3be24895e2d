use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::config::RunConfig;

pub const REPORT_VERSION: &str = concat!("areolar ", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    /// The mathematical statement this check exercises.
    pub anchor: String,
    pub status: Status,
    /// Measured residual; null when the computation itself failed.
    pub residual: Option<f64>,
    pub tolerance: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
    pub runtime_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub version: String,
    pub command: String,
    pub config: RunConfig,
    pub checks: Vec<Check>,
    /// Command-specific values (actions, convergence tables, image summaries).
    pub results: Value,
    pub overall: Status,
}

impl Report {
    pub fn new(command: &str, config: &RunConfig) -> Self {
        Self {
            version: REPORT_VERSION.into(),
            command: command.into(),
            config: config.clone(),
            checks: Vec::new(),
            results: Value::Object(Default::default()),
            overall: Status::Pass,
        }
    }

    pub fn passed(&self) -> bool {
        self.overall == Status::Pass
    }

    pub fn push(&mut self, check: Check) {
        if check.status == Status::Fail {
            self.overall = Status::Fail;
        }
        self.checks.push(check);
    }

    pub fn set_result(&mut self, key: &str, value: Value) {
        if let Value::Object(map) = &mut self.results {
            map.insert(key.into(), value);
        }
    }

    /// Runs `measure` and records pass iff it returns a residual ≤ `tolerance`.
    pub fn run<F>(&mut self, name: &str, anchor: &str, tolerance: f64, measure: F)
    where
        F: FnOnce() -> Result<f64, String>,
    {
        self.run_with_detail(name, anchor, tolerance, || measure().map(|r| (r, None)));
    }

    pub fn run_with_detail<F>(&mut self, name: &str, anchor: &str, tolerance: f64, measure: F)
    where
        F: FnOnce() -> Result<(f64, Option<String>), String>,
    {
        let start = Instant::now();
        let outcome = measure();
        let runtime_ms = start.elapsed().as_millis() as u64;
        let (residual, detail) = match outcome {
            Ok((r, d)) => (Some(r), d),
            Err(e) => (None, Some(e)),
        };
        let pass = residual.is_some_and(|r| r <= tolerance);
        self.push(Check {
            name: name.into(),
            anchor: anchor.into(),
            status: if pass { Status::Pass } else { Status::Fail },
            residual,
            tolerance,
            detail,
            runtime_ms,
        });
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("report serializes");
        text.push('\n');
        text
    }
}
