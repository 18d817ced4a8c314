//! A-m scenario sweeps: one experiment per attacker fraction.

use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use super::config::ExperimentConfig;
use super::federation::{run_experiment, ExperimentOutcome};
use crate::error::Result;
use crate::metrics::EarliestDetection;
use crate::seed;

/// One line of the sweep table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub m: f64,
    pub policy: String,
    pub final_accuracy: Option<f64>,
    pub final_f1: Option<f64>,
    pub final_asr: Option<f64>,
    pub ed: Option<EarliestDetection>,
    pub error: Option<String>,
}

#[derive(Debug)]
pub struct Scenario {
    pub m: f64,
    pub config: ExperimentConfig,
    pub outcome: Result<ExperimentOutcome>,
}

impl Scenario {
    pub fn row(&self) -> SweepRow {
        let policy = self.config.policy.to_string();
        match &self.outcome {
            Ok(o) => SweepRow {
                m: self.m,
                policy,
                final_accuracy: Some(o.summary.final_accuracy),
                final_f1: Some(o.summary.final_macro_f1),
                final_asr: Some(o.summary.final_asr),
                ed: o.summary.ed,
                error: None,
            },
            Err(e) => SweepRow {
                m: self.m,
                policy,
                final_accuracy: None,
                final_f1: None,
                final_asr: None,
                ed: None,
                error: Some(e.to_string()),
            },
        }
    }
}

/// `A-10` for m = 0.10.
pub fn scenario_label(m: f64) -> String {
    format!("A-{}", (m * 100.0).round() as i64)
}

/// Config of the `index`-th scenario: attacker fraction `m`, a seed derived
/// from the base seed and the index, and its own output subdirectory.
pub fn scenario_config(base: &ExperimentConfig, index: usize, m: f64) -> ExperimentConfig {
    ExperimentConfig {
        attacker_fraction: m,
        seed: seed::derive_seed(base.seed, &[seed::SWEEP, index as u64]),
        output_dir: base.output_dir.join(scenario_label(m)),
        ..base.clone()
    }
}

/// Runs one experiment per entry of `m_values`. A failing scenario is
/// reported in its row and does not stop the others.
pub fn run_sweep(base: &ExperimentConfig, m_values: &[f64]) -> Vec<Scenario> {
    m_values
        .par_iter()
        .enumerate()
        .map(|(index, &m)| {
            let config = scenario_config(base, index, m);
            let outcome = run_experiment(&config);
            Scenario { m, config, outcome }
        })
        .collect()
}

pub fn sweep_rows(scenarios: &[Scenario]) -> Vec<SweepRow> {
    scenarios.iter().map(Scenario::row).collect()
}

/// Writes every successful scenario's artifacts plus the sweep table under `dir`.
pub fn write_sweep(scenarios: &[Scenario], dir: &Path) -> Result<()> {
    for s in scenarios {
        if let Ok(outcome) = &s.outcome {
            super::output::write_run_artifacts(outcome, &s.config.output_dir)?;
        }
    }
    super::output::write_sweep_table(&sweep_rows(scenarios), dir)
}

/// Parses `0.1,0.2,0.35`.
pub fn parse_fractions(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<f64>()
                .map_err(|_| crate::Error::Config(format!("bad attack fraction {s:?}")))
        })
        .collect()
}
