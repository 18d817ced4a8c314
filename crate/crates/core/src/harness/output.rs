//! On-disk run artifacts: `rounds.csv`, `detections.json`, `summary.json`,
//! and the sweep tables.

use std::fs;
use std::path::Path;

use serde::Serialize;

use super::federation::ExperimentOutcome;
use super::sweep::SweepRow;
use crate::error::{Error, Result};

#[derive(Serialize)]
struct RoundRow {
    round: usize,
    train_loss: f64,
    test_accuracy: f64,
    macro_f1: f64,
    asr: f64,
    detection_exact: bool,
    n_excluded: usize,
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::Writer::from_writer(file))
}

pub fn rounds_csv(outcome: &ExperimentOutcome, path: &Path) -> Result<()> {
    let mut w = csv_writer(path)?;
    for r in &outcome.rounds {
        w.serialize(RoundRow {
            round: r.round,
            train_loss: r.train_loss,
            test_accuracy: r.test_accuracy,
            macro_f1: r.macro_f1,
            asr: r.asr,
            detection_exact: r.detection_exact,
            n_excluded: r.n_excluded,
        })?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Writes the three per-run artifacts into `dir`, creating it if needed.
pub fn write_run_artifacts(outcome: &ExperimentOutcome, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    rounds_csv(outcome, &dir.join("rounds.csv"))?;
    write_json(&dir.join("detections.json"), &outcome.detections)?;
    write_json(&dir.join("summary.json"), &outcome.summary)
}

/// Writes `sweep.csv` and `sweep.json` into `dir`.
pub fn write_sweep_table(rows: &[SweepRow], dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let path = dir.join("sweep.csv");
    let mut w = csv_writer(&path)?;
    w.write_record(["m", "policy", "final_accuracy", "final_f1", "final_asr", "ed", "error"])?;
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for row in rows {
        w.write_record([
            row.m.to_string(),
            row.policy.clone(),
            opt(row.final_accuracy),
            opt(row.final_f1),
            opt(row.final_asr),
            row.ed.map(|e| e.to_string()).unwrap_or_default(),
            row.error.clone().unwrap_or_default(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(&path, e))?;
    write_json(&dir.join("sweep.json"), &rows)
}
