//! Experiment orchestration: trace loading, the simulate/live pipelines,
//! and the model-comparison matrix.
//!
//! Startup concerns (config, trace, target reachability) are separate
//! functions so the CLI can fail fast before any load is sent; anything
//! after that point is a runtime concern and leaves partial artifacts on
//! disk.

use std::path::PathBuf;
use std::time::{Duration, Instant};

use anyhow::{Context, Result};

use scalebench_core::autoscaler::ForecastModel;
use scalebench_core::engine::{run_simulation, run_simulation_paced, IntervalRow};
use scalebench_core::scoring::{penalty, ReplicaTimeline};
use scalebench_core::trace::{parse_binary_trace, parse_text_trace, slice_window, TraceEvent};

use crate::config::{ExperimentConfig, Mode, TraceFormat};
use crate::live;
use crate::report::{
    run_mean_latency, write_report, ComparisonRow, ComparisonTable, ExperimentReport, ReportPaths,
};

/// Reads and parses the configured trace, then slices the experiment window
/// (rebased to start at 0).
pub fn load_trace_events(cfg: &ExperimentConfig) -> Result<Vec<TraceEvent>> {
    let path = &cfg.trace.path;
    let events = match cfg.trace.format {
        TraceFormat::Text => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading trace {}", path.display()))?;
            parse_text_trace(&text).with_context(|| format!("parsing trace {}", path.display()))?
        }
        TraceFormat::Binary => {
            let bytes = std::fs::read(path)
                .with_context(|| format!("reading trace {}", path.display()))?;
            let layout = cfg
                .trace
                .binary_layout
                .as_ref()
                .context("binary trace without [trace.binary_layout]")?;
            parse_binary_trace(&bytes, layout, cfg.trace.rebase)
                .with_context(|| format!("parsing trace {}", path.display()))?
        }
    };
    let (start, duration) = cfg.trace_window();
    Ok(slice_window(&events, start, duration))
}

/// Checks the live target accepts TCP connections. Run this before any load.
pub fn preflight_live(cfg: &ExperimentConfig) -> Result<()> {
    match (&cfg.mode, &cfg.live) {
        (Mode::Live, Some(live_cfg)) => live::preflight(&live_cfg.url),
        _ => Ok(()),
    }
}

/// Runs one experiment over already-loaded events. `repetition` offsets the
/// seed; plain single runs pass 0.
pub fn run_with_events(
    cfg: &ExperimentConfig,
    events: &[TraceEvent],
    repetition: u32,
) -> Result<ExperimentReport> {
    match cfg.mode {
        Mode::Simulate => run_simulated(cfg, events, repetition),
        Mode::Live => run_live_mode(cfg, events, repetition),
    }
}

/// Convenience wrapper: load the trace, then run repetition 0.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let events = load_trace_events(cfg)?;
    run_with_events(cfg, &events, 0)
}

fn run_simulated(
    cfg: &ExperimentConfig,
    events: &[TraceEvent],
    repetition: u32,
) -> Result<ExperimentReport> {
    let engine_cfg = cfg.engine_config(repetition);
    let started = Instant::now();
    let output = if cfg.time_compression.is_finite() {
        let compression = cfg.time_compression;
        let wall_start = Instant::now();
        let mut pacer = move |virtual_now: f64| {
            let target = Duration::from_secs_f64(virtual_now / compression);
            if let Some(remaining) = target.checked_sub(wall_start.elapsed()) {
                std::thread::sleep(remaining);
            }
        };
        run_simulation_paced(events, &engine_cfg, &mut pacer)
    } else {
        run_simulation(events, &engine_cfg)
    };

    Ok(ExperimentReport {
        model: cfg.autoscaler.model.to_string(),
        mode: cfg.mode,
        seed: engine_cfg.service.rng_seed,
        penalty: output.penalty,
        penalty_params: cfg.penalty,
        timeline: output.timeline,
        rows: output.rows,
        config: cfg.clone(),
        batches: output.batches,
        ticks: output.ticks,
        sim_events: output.events,
        raw_requests: Vec::new(),
        wall_seconds: started.elapsed().as_secs_f64(),
    })
}

fn run_live_mode(
    cfg: &ExperimentConfig,
    events: &[TraceEvent],
    repetition: u32,
) -> Result<ExperimentReport> {
    let live_cfg = cfg.live.as_ref().context("live mode without [live] section")?;
    let started = Instant::now();
    let runtime = tokio::runtime::Runtime::new().context("starting async runtime")?;
    let (batches, raw) = runtime.block_on(live::run_live(
        events,
        cfg.batch_interval,
        live_cfg,
        live_cfg.dump_raw_latencies,
    ))?;

    // Live mode does not observe the target's replica count; the timeline is
    // flat at min_replicas, and `scalebench score` can re-score the batch log
    // against an externally recorded timeline.
    let replicas = cfg.autoscaler.min_replicas;
    let last_end = batches
        .iter()
        .map(|b| b.dispatch_time + b.wall_duration)
        .fold(0.0f64, f64::max);
    let timeline = ReplicaTimeline {
        steps: vec![(0.0, replicas)],
        end: cfg.duration.max(last_end),
    };

    let windows = (cfg.duration / cfg.batch_interval).ceil() as usize;
    let rows: Vec<IntervalRow> = (0..windows.max(batches.len()))
        .map(|index| {
            let time = index as f64 * cfg.batch_interval;
            match batches.get(index) {
                Some(batch) => IntervalRow {
                    time,
                    requests: batch.succeeded + batch.failed,
                    succeeded: batch.succeeded,
                    failed: batch.failed,
                    mean_latency: batch.mean_response_time,
                    ready_replicas: replicas,
                    desired_replicas: replicas,
                },
                None => IntervalRow {
                    time,
                    requests: 0,
                    succeeded: 0,
                    failed: 0,
                    mean_latency: None,
                    ready_replicas: replicas,
                    desired_replicas: replicas,
                },
            }
        })
        .collect();

    let score = penalty(&batches, &timeline, &cfg.penalty);
    Ok(ExperimentReport {
        model: cfg.autoscaler.model.to_string(),
        mode: cfg.mode,
        seed: cfg.seed + u64::from(repetition),
        penalty: score,
        penalty_params: cfg.penalty,
        timeline,
        rows,
        config: cfg.clone(),
        batches,
        ticks: Vec::new(),
        sim_events: Vec::new(),
        raw_requests: raw,
        wall_seconds: started.elapsed().as_secs_f64(),
    })
}

/// Runs every model × repetition with identical trace windows, seeds varying
/// only by repetition index. Each run's artifacts are written as soon as it
/// finishes, so a failure mid-matrix leaves the completed runs on disk.
pub fn compare_with_events(
    cfg: &ExperimentConfig,
    events: &[TraceEvent],
    models: &[ForecastModel],
    repetitions: u32,
) -> Result<(ComparisonTable, Vec<ReportPaths>)> {
    let mut rows = Vec::new();
    let mut paths = Vec::new();
    for &model in models {
        for repetition in 0..repetitions {
            let mut run_cfg = cfg.clone();
            run_cfg.autoscaler.model = model;
            let report = run_with_events(&run_cfg, events, repetition)
                .with_context(|| format!("running {model} repetition {repetition}"))?;
            let dir: PathBuf = cfg.output.dir.join(format!("{model}-r{repetition}"));
            let written = write_report(&report, &dir)
                .with_context(|| format!("writing report for {model} repetition {repetition}"))?;
            rows.push(ComparisonRow {
                model: model.to_string(),
                repetition,
                seed: report.seed,
                penalty_total: report.penalty.total,
                failed: report.penalty.total_failed,
                mean_latency: run_mean_latency(&report.batches),
                report_dir: dir.display().to_string(),
            });
            paths.push(written);
        }
    }
    let table = ComparisonTable::from_rows(rows);
    table.write(&cfg.output.dir)?;
    Ok((table, paths))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::path::Path;

    fn write_config(dir: &Path, extra: &str) -> ExperimentConfig {
        let trace = dir.join("trace.txt");
        let events = scalebench_core::engine::constant_rate_trace(4.0, 60.0);
        std::fs::write(&trace, scalebench_core::trace::serialize_text_trace(&events)).unwrap();
        let body = format!(
            "duration = 60.0\n[trace]\npath = \"trace.txt\"\n[output]\ndir = \"out\"\n{extra}"
        );
        let path = dir.join("exp.toml");
        std::fs::write(&path, body).unwrap();
        ExperimentConfig::load(&path).unwrap()
    }

    #[test]
    fn simulate_run_produces_a_complete_report() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = write_config(dir.path(), "");
        let report = run_experiment(&cfg).unwrap();
        assert_eq!(report.model, "hold");
        assert_eq!(report.rows.len(), 12);
        let dispatched: u64 = report.rows.iter().map(|r| r.requests).sum();
        assert_eq!(dispatched, 240);
        assert!(report.penalty.total > 0.0);
        assert!(report.wall_seconds >= 0.0);
    }

    #[test]
    fn simulate_runs_are_reproducible_files() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = write_config(dir.path(), "");
        let a = run_experiment(&cfg).unwrap();
        let b = run_experiment(&cfg).unwrap();
        let pa = write_report(&a, &dir.path().join("a")).unwrap();
        let pb = write_report(&b, &dir.path().join("b")).unwrap();
        for (x, y) in [
            (&pa.json, &pb.json),
            (&pa.csv, &pb.csv),
            (&pa.batches, &pb.batches),
            (&pa.autoscaler_log, &pb.autoscaler_log),
            (&pa.timeline, &pb.timeline),
        ] {
            assert_eq!(std::fs::read(x).unwrap(), std::fs::read(y).unwrap());
        }
    }

    #[test]
    fn compare_single_run_matches_run_experiment() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = write_config(dir.path(), "");
        let events = load_trace_events(&cfg).unwrap();
        let (table, paths) =
            compare_with_events(&cfg, &events, &[ForecastModel::Hold], 1).unwrap();
        let single = run_with_events(&cfg, &events, 0).unwrap();
        assert_eq!(table.rows.len(), 1);
        assert_eq!(table.rows[0].penalty_total, single.penalty.total);
        assert_eq!(table.aggregates[0].mean_penalty, single.penalty.total);
        assert!(paths[0].json.exists());
        assert!(cfg.output.dir.join("comparison.csv").exists());
    }

    #[test]
    fn time_compression_changes_wall_but_not_virtual_quantities() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = write_config(dir.path(), "");
        cfg.duration = 20.0;
        let fast = run_experiment(&cfg).unwrap();
        cfg.time_compression = 100.0; // 20 virtual seconds -> ~0.2 s wall
        let paced = run_experiment(&cfg).unwrap();
        assert!(paced.wall_seconds >= 0.15, "wall {}", paced.wall_seconds);
        assert_eq!(fast.rows, paced.rows);
        assert_eq!(fast.penalty, paced.penalty);
        assert_eq!(fast.timeline, paced.timeline);
    }
}
