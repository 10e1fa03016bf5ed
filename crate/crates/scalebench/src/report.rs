//! Report emission: per-run JSON/CSV files in the shape of the figures the
//! experiments are judged by (requests, latency, and replicas over time),
//! plus the model-comparison table.
//!
//! A simulate-mode run writes byte-identical files given the same config and
//! seed; wall-clock timing stays out of the serialized report for exactly
//! that reason.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use scalebench_core::autoscaler::TickRecord;
use scalebench_core::engine::IntervalRow;
use scalebench_core::loadgen::BatchResult;
use scalebench_core::scoring::{PenaltyBreakdown, PenaltyParams, ReplicaTimeline};
use scalebench_core::sim::SimEvent;

use crate::config::{ExperimentConfig, Mode};
use crate::live::RawRequestRecord;

/// Everything one run produced. The JSON report carries the rows, score,
/// timeline, and a full config echo; batch/tick/event logs go to sidecar
/// JSON-lines files.
#[derive(Debug, Clone, Serialize)]
pub struct ExperimentReport {
    pub model: String,
    pub mode: Mode,
    pub seed: u64,
    pub penalty: PenaltyBreakdown,
    pub penalty_params: PenaltyParams,
    pub timeline: ReplicaTimeline,
    pub rows: Vec<IntervalRow>,
    pub config: ExperimentConfig,
    #[serde(skip)]
    pub batches: Vec<BatchResult>,
    #[serde(skip)]
    pub ticks: Vec<TickRecord>,
    #[serde(skip)]
    pub sim_events: Vec<SimEvent>,
    /// Live mode only, behind `live.dump_raw_latencies`.
    #[serde(skip)]
    pub raw_requests: Vec<RawRequestRecord>,
    /// Wall-clock cost of producing the run; logged, never serialized.
    #[serde(skip)]
    pub wall_seconds: f64,
}

/// Files a call to [`write_report`] produced.
#[derive(Debug, Clone)]
pub struct ReportPaths {
    pub dir: PathBuf,
    pub json: PathBuf,
    pub csv: PathBuf,
    pub batches: PathBuf,
    pub autoscaler_log: PathBuf,
    pub timeline: PathBuf,
    pub sim_events: Option<PathBuf>,
}

/// Writes report.json, report.csv, batches.jsonl, autoscaler.jsonl, and
/// timeline.json under `dir` (plus sim_events.jsonl when configured).
pub fn write_report(report: &ExperimentReport, dir: &Path) -> Result<ReportPaths> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;

    let json = dir.join("report.json");
    let body = serde_json::to_vec_pretty(report).context("serializing report")?;
    fs::write(&json, body).with_context(|| format!("writing {}", json.display()))?;

    let csv = dir.join("report.csv");
    write_rows_csv(&report.rows, &csv)?;

    let batches = dir.join("batches.jsonl");
    write_jsonl(&report.batches, &batches)?;

    let autoscaler_log = dir.join("autoscaler.jsonl");
    write_jsonl(&report.ticks, &autoscaler_log)?;

    let timeline = dir.join("timeline.json");
    let body = serde_json::to_vec_pretty(&report.timeline).context("serializing timeline")?;
    fs::write(&timeline, body).with_context(|| format!("writing {}", timeline.display()))?;

    let sim_events = if report.config.output.dump_sim_events {
        let path = dir.join("sim_events.jsonl");
        write_jsonl(&report.sim_events, &path)?;
        Some(path)
    } else {
        None
    };

    if !report.raw_requests.is_empty() {
        write_jsonl(&report.raw_requests, &dir.join("raw_requests.jsonl"))?;
    }

    Ok(ReportPaths {
        dir: dir.to_path_buf(),
        json,
        csv,
        batches,
        autoscaler_log,
        timeline,
        sim_events,
    })
}

const ROW_HEADER: [&str; 7] = [
    "time_s",
    "requests",
    "succeeded",
    "failed",
    "mean_latency_s",
    "ready_replicas",
    "desired_replicas",
];

/// One row per batch interval under the fixed header; an empty report is a
/// header-only file.
pub fn write_rows_csv(rows: &[IntervalRow], path: &Path) -> Result<()> {
    let mut writer = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path)
        .with_context(|| format!("creating {}", path.display()))?;
    writer
        .write_record(ROW_HEADER)
        .with_context(|| format!("writing {}", path.display()))?;
    for row in rows {
        writer
            .serialize(row)
            .with_context(|| format!("writing {}", path.display()))?;
    }
    writer
        .flush()
        .with_context(|| format!("flushing {}", path.display()))?;
    Ok(())
}

/// Re-parses a report CSV; inverse of [`write_rows_csv`].
pub fn read_rows_csv(path: &Path) -> Result<Vec<IntervalRow>> {
    let mut reader = csv::Reader::from_path(path)
        .with_context(|| format!("reading {}", path.display()))?;
    let mut rows = Vec::new();
    for record in reader.deserialize() {
        rows.push(record.with_context(|| format!("parsing {}", path.display()))?);
    }
    Ok(rows)
}

fn write_jsonl<T: Serialize>(items: &[T], path: &Path) -> Result<()> {
    let file = fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut out = std::io::BufWriter::new(file);
    for item in items {
        serde_json::to_writer(&mut out, item)?;
        out.write_all(b"\n")?;
    }
    out.flush().with_context(|| format!("flushing {}", path.display()))?;
    Ok(())
}

/// Reads a JSON-lines batch log back, as written next to each report.
pub fn read_batches_jsonl(path: &Path) -> Result<Vec<BatchResult>> {
    let text =
        fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut batches = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let batch: BatchResult = serde_json::from_str(line)
            .with_context(|| format!("{}:{}", path.display(), idx + 1))?;
        batches.push(batch);
    }
    Ok(batches)
}

/// One run of the comparison matrix.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub model: String,
    pub repetition: u32,
    pub seed: u64,
    pub penalty_total: f64,
    pub failed: u64,
    /// Success-weighted mean latency over the whole run, seconds.
    pub mean_latency: Option<f64>,
    pub report_dir: String,
}

/// Per-model aggregate over repetitions.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelAggregate {
    pub model: String,
    pub runs: u32,
    pub mean_penalty: f64,
    pub mean_failed: f64,
}

/// The model × repetition comparison, one row per run plus per-model means.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComparisonTable {
    pub rows: Vec<ComparisonRow>,
    pub aggregates: Vec<ModelAggregate>,
}

impl ComparisonTable {
    pub fn from_rows(rows: Vec<ComparisonRow>) -> Self {
        let mut aggregates: Vec<ModelAggregate> = Vec::new();
        for row in &rows {
            match aggregates.iter_mut().find(|a| a.model == row.model) {
                Some(agg) => {
                    agg.runs += 1;
                    agg.mean_penalty += row.penalty_total;
                    agg.mean_failed += row.failed as f64;
                }
                None => aggregates.push(ModelAggregate {
                    model: row.model.clone(),
                    runs: 1,
                    mean_penalty: row.penalty_total,
                    mean_failed: row.failed as f64,
                }),
            }
        }
        for agg in &mut aggregates {
            agg.mean_penalty /= agg.runs as f64;
            agg.mean_failed /= agg.runs as f64;
        }
        Self { rows, aggregates }
    }

    /// Writes comparison.json and comparison.csv under `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let json = dir.join("comparison.json");
        fs::write(&json, serde_json::to_vec_pretty(self)?)
            .with_context(|| format!("writing {}", json.display()))?;

        let csv_path = dir.join("comparison.csv");
        let mut writer = csv::Writer::from_path(&csv_path)
            .with_context(|| format!("creating {}", csv_path.display()))?;
        for row in &self.rows {
            writer.serialize(row)?;
        }
        writer.flush()?;
        Ok(())
    }

    /// Plain-text table for the terminal.
    pub fn render(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "{:<8} {:>3} {:>12} {:>16} {:>8} {:>12}\n",
            "model", "rep", "seed", "penalty", "failed", "mean_latency"
        ));
        for row in &self.rows {
            out.push_str(&format!(
                "{:<8} {:>3} {:>12} {:>16.4} {:>8} {:>12}\n",
                row.model,
                row.repetition,
                row.seed,
                row.penalty_total,
                row.failed,
                row.mean_latency
                    .map_or_else(|| "-".to_string(), |v| format!("{v:.4}")),
            ));
        }
        out.push('\n');
        out.push_str(&format!(
            "{:<8} {:>4} {:>16} {:>12}\n",
            "model", "runs", "mean_penalty", "mean_failed"
        ));
        for agg in &self.aggregates {
            out.push_str(&format!(
                "{:<8} {:>4} {:>16.4} {:>12.1}\n",
                agg.model, agg.runs, agg.mean_penalty, agg.mean_failed
            ));
        }
        out
    }
}

/// Success-weighted mean latency across a run's batches.
pub fn run_mean_latency(batches: &[BatchResult]) -> Option<f64> {
    let mut weighted = 0.0;
    let mut successes = 0u64;
    for batch in batches {
        if let (succ, Some(mean)) = (batch.succeeded, batch.mean_response_time) {
            weighted += succ as f64 * mean;
            successes += succ;
        }
    }
    (successes > 0).then(|| weighted / successes as f64)
}
