use std::collections::BTreeMap;

use ratchet::experiment::{Check, Metric, Outcome};
use serde::Serialize;

use crate::config::Config;

pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");

/// What every command prints on stdout. A metric with a null `stderr` is
/// analytic.
#[derive(Debug, Serialize)]
pub struct Report {
    pub command: String,
    pub params_echo: Config,
    pub metrics: BTreeMap<String, Metric>,
    pub tests: BTreeMap<String, Check>,
    pub runtime_seconds: f64,
    pub seed: u64,
    pub artifact_version: String,
}

impl Report {
    pub fn new(command: &str, params_echo: Config, outcome: Outcome, runtime_seconds: f64) -> Self {
        Self {
            command: command.to_string(),
            seed: params_echo.seed.unwrap_or_default(),
            params_echo,
            metrics: outcome.metrics,
            tests: outcome.tests,
            runtime_seconds,
            artifact_version: ARTIFACT_VERSION.to_string(),
        }
    }

    pub fn passed(&self) -> bool {
        self.tests.values().all(|c| c.pass)
    }
}
