//! `scalebench` — trace-driven autoscaling experiments: replay a request
//! trace against a simulated replicated service (or a live HTTP target),
//! scale it with reactive or forecast-driven recommenders, and score the run.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use scalebench::config::ExperimentConfig;
use scalebench::experiment;
use scalebench::report::{self, write_report};
use scalebench::stub::{serve_stub_target, StubOptions};

use scalebench_core::autoscaler::ForecastModel;
use scalebench_core::scoring::{penalty, PenaltyParams, ReplicaTimeline};
use scalebench_core::trace::{
    parse_binary_trace, parse_text_trace, serialize_text_trace, to_rate_series,
    BinaryRecordLayout, TraceEvent,
};

#[derive(Parser)]
#[command(
    name = "scalebench",
    version,
    about = "Trace-driven autoscaling experiments: simulate or load-test a replicated service and score each run"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment in simulate mode and write its reports.
    Simulate {
        config: PathBuf,
        /// Override the config's output directory.
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
    /// Run one experiment against the configured live HTTP target.
    Loadtest {
        config: PathBuf,
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
    /// Recompute the penalty from a batch log and a replica timeline.
    Score {
        /// batches.jsonl from a previous run (or compatible).
        batch_log: PathBuf,
        /// timeline.json with replica step changes and the run end.
        timeline: PathBuf,
        #[arg(long, default_value_t = 900.0)]
        failure_penalty: f64,
        #[arg(long, default_value_t = 1.0)]
        scarcity: f64,
        /// Headline the normalized total (failure term averaged per request).
        #[arg(long)]
        normalized: bool,
    },
    /// Inspect or convert trace files.
    Trace {
        #[command(subcommand)]
        command: TraceCommand,
    },
    /// Run several models over the same trace and tabulate their scores.
    Compare {
        config: PathBuf,
        /// Comma-separated models: hold, linear, knn, oracle.
        #[arg(long, value_delimiter = ',', default_value = "hold,linear,knn")]
        models: Vec<String>,
        /// Repetitions per model; seeds derive as seed + repetition.
        #[arg(long, default_value_t = 2)]
        reps: u32,
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
    /// Serve a stub HTTP target for live-mode testing.
    StubTarget {
        /// Response delay in seconds.
        #[arg(long, default_value_t = 0.05)]
        latency: f64,
        /// Fraction of requests answered with 500.
        #[arg(long, default_value_t = 0.0)]
        failure_rate: f64,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Subcommand)]
enum TraceCommand {
    /// Print event count, span, and rate statistics for a trace.
    Inspect {
        file: PathBuf,
        /// "text" or "binary".
        #[arg(long, default_value = "text")]
        format: String,
        /// TOML file describing the binary record layout.
        #[arg(long)]
        layout: Option<PathBuf>,
        /// Rebase binary timestamps so the first record is t=0.
        #[arg(long)]
        rebase: bool,
        /// Bucket width for the rate summary, seconds.
        #[arg(long, default_value_t = 60.0)]
        bucket: f64,
    },
    /// Convert a trace to the canonical text format.
    Convert {
        input: PathBuf,
        output: PathBuf,
        #[arg(long, default_value = "binary")]
        format: String,
        #[arg(long)]
        layout: Option<PathBuf>,
        #[arg(long)]
        rebase: bool,
    },
}

/// Errors before any load is sent exit 1; failures mid-run exit 2 with
/// partial artifacts preserved on disk.
enum CliError {
    Startup(anyhow::Error),
    Runtime(anyhow::Error),
}

fn startup<T>(result: Result<T>) -> Result<T, CliError> {
    result.map_err(CliError::Startup)
}

fn runtime<T>(result: Result<T>) -> Result<T, CliError> {
    result.map_err(CliError::Runtime)
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = err.print();
            std::process::exit(code);
        }
    };
    match run(cli) {
        Ok(()) => {}
        Err(CliError::Startup(err)) => {
            eprintln!("error: {err:#}");
            std::process::exit(1);
        }
        Err(CliError::Runtime(err)) => {
            eprintln!("error: {err:#}");
            std::process::exit(2);
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate { config, output_dir } => {
            let mut cfg = startup(ExperimentConfig::load(&config))?;
            if let Some(dir) = output_dir {
                cfg.output.dir = dir;
            }
            startup(ensure_simulate(&cfg))?;
            let events = startup(experiment::load_trace_events(&cfg))?;
            let report = runtime(experiment::run_with_events(&cfg, &events, 0))?;
            let paths = runtime(write_report(&report, &cfg.output.dir))?;
            print_run_summary(&report, &paths.dir);
            Ok(())
        }
        Command::Loadtest { config, output_dir } => {
            let mut cfg = startup(ExperimentConfig::load(&config))?;
            if let Some(dir) = output_dir {
                cfg.output.dir = dir;
            }
            startup(ensure_live(&cfg))?;
            let events = startup(experiment::load_trace_events(&cfg))?;
            startup(experiment::preflight_live(&cfg))?;
            let report = runtime(experiment::run_with_events(&cfg, &events, 0))?;
            let paths = runtime(write_report(&report, &cfg.output.dir))?;
            print_run_summary(&report, &paths.dir);
            Ok(())
        }
        Command::Score {
            batch_log,
            timeline,
            failure_penalty,
            scarcity,
            normalized,
        } => {
            let batches = startup(report::read_batches_jsonl(&batch_log))?;
            let timeline: ReplicaTimeline = startup(read_json(&timeline))?;
            startup(timeline.validate().map_err(anyhow::Error::from))?;
            let params = PenaltyParams {
                failed_request_penalty: failure_penalty,
                scarcity_factor: scarcity,
            };
            let breakdown = penalty(&batches, &timeline, &params);
            let out = serde_json::json!({ "params": params, "breakdown": breakdown });
            println!("{}", serde_json::to_string_pretty(&out).expect("serializable"));
            let headline = if normalized {
                breakdown.normalized_total
            } else {
                breakdown.total
            };
            eprintln!(
                "penalty{}: {headline:.6} (latency {:.6} + failures {:.6} + replicas {:.6})",
                if normalized { " (normalized)" } else { "" },
                breakdown.latency_term,
                if normalized {
                    breakdown.normalized_failure_term
                } else {
                    breakdown.failure_term
                },
                breakdown.resource_term,
            );
            Ok(())
        }
        Command::Trace { command } => match command {
            TraceCommand::Inspect {
                file,
                format,
                layout,
                rebase,
                bucket,
            } => {
                let events = startup(load_trace_file(&file, &format, layout.as_deref(), rebase))?;
                print_trace_stats(&events, bucket);
                Ok(())
            }
            TraceCommand::Convert {
                input,
                output,
                format,
                layout,
                rebase,
            } => {
                let events = startup(load_trace_file(&input, &format, layout.as_deref(), rebase))?;
                runtime(
                    std::fs::write(&output, serialize_text_trace(&events))
                        .with_context(|| format!("writing {}", output.display())),
                )?;
                eprintln!("wrote {} events to {}", events.len(), output.display());
                Ok(())
            }
        },
        Command::Compare {
            config,
            models,
            reps,
            output_dir,
        } => {
            let mut cfg = startup(ExperimentConfig::load(&config))?;
            if let Some(dir) = output_dir {
                cfg.output.dir = dir;
            }
            if reps == 0 {
                return Err(CliError::Startup(anyhow::anyhow!("--reps must be at least 1")));
            }
            let models: Vec<ForecastModel> = startup(
                models
                    .iter()
                    .map(|name| {
                        name.trim()
                            .parse()
                            .map_err(|_| anyhow::anyhow!("unknown model {name:?}"))
                    })
                    .collect::<Result<_>>(),
            )?;
            let events = startup(experiment::load_trace_events(&cfg))?;
            if cfg.live.is_some() {
                startup(experiment::preflight_live(&cfg))?;
            }
            let (table, _) = runtime(experiment::compare_with_events(&cfg, &events, &models, reps))?;
            print!("{}", table.render());
            eprintln!("comparison written to {}", cfg.output.dir.display());
            Ok(())
        }
        Command::StubTarget {
            latency,
            failure_rate,
            port,
            seed,
        } => {
            let rt = startup(tokio::runtime::Runtime::new().context("starting async runtime"))?;
            rt.block_on(async {
                let handle = startup(
                    serve_stub_target(StubOptions {
                        latency,
                        failure_rate,
                        port,
                        seed,
                    })
                    .await,
                )?;
                eprintln!(
                    "stub target listening on {} (latency {latency}s, failure rate {failure_rate})",
                    handle.addr()
                );
                runtime(
                    tokio::signal::ctrl_c()
                        .await
                        .context("waiting for interrupt"),
                )?;
                handle.shutdown().await;
                Ok(())
            })
        }
    }
}

fn ensure_simulate(cfg: &ExperimentConfig) -> Result<()> {
    match cfg.mode {
        scalebench::config::Mode::Simulate => Ok(()),
        _ => anyhow::bail!("config mode is \"live\"; use `scalebench loadtest`"),
    }
}

fn ensure_live(cfg: &ExperimentConfig) -> Result<()> {
    match cfg.mode {
        scalebench::config::Mode::Live => Ok(()),
        _ => anyhow::bail!("config mode is \"simulate\"; use `scalebench simulate`"),
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn load_trace_file(
    path: &Path,
    format: &str,
    layout: Option<&Path>,
    rebase: bool,
) -> Result<Vec<TraceEvent>> {
    match format {
        "text" => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            parse_text_trace(&text).with_context(|| format!("parsing {}", path.display()))
        }
        "binary" => {
            let layout_path =
                layout.context("binary traces need --layout <layout.toml>")?;
            let layout_text = std::fs::read_to_string(layout_path)
                .with_context(|| format!("reading {}", layout_path.display()))?;
            let layout: BinaryRecordLayout = toml::from_str(&layout_text)
                .with_context(|| format!("parsing {}", layout_path.display()))?;
            let bytes =
                std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
            parse_binary_trace(&bytes, &layout, rebase)
                .with_context(|| format!("parsing {}", path.display()))
        }
        other => anyhow::bail!("unknown trace format {other:?} (expected text or binary)"),
    }
}

fn print_trace_stats(events: &[TraceEvent], bucket: f64) {
    println!("events: {}", events.len());
    let (Some(first), Some(last)) = (events.first(), events.last()) else {
        return;
    };
    let span = last.timestamp - first.timestamp;
    println!("first: {:.3} s", first.timestamp);
    println!("last: {:.3} s", last.timestamp);
    println!("span: {span:.3} s");
    if span > 0.0 {
        println!("mean rate: {:.3} req/s", events.len() as f64 / span);
    }
    let series = to_rate_series(events, bucket);
    println!(
        "rate buckets ({bucket} s wide): {} buckets, peak {} req/bucket",
        series.counts.len(),
        series.peak()
    );
}

fn print_run_summary(report: &report::ExperimentReport, dir: &Path) {
    let p = &report.penalty;
    println!(
        "model={} seed={} penalty={:.4} (latency {:.4} + failures {:.4} + replicas {:.4})",
        report.model, report.seed, p.total, p.latency_term, p.failure_term, p.resource_term
    );
    println!(
        "requests: {} succeeded, {} failed; normalized penalty {:.4}",
        p.total_succeeded, p.total_failed, p.normalized_total
    );
    eprintln!(
        "reports written to {} ({:.2}s wall)",
        dir.display(),
        report.wall_seconds
    );
}
