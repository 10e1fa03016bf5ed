//! Experiment configuration: one TOML file fully describes a run and is
//! echoed into every report, so experiments stay self-describing and
//! comparable. Relative paths inside the file resolve against the file's
//! own directory.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use scalebench_core::autoscaler::AutoscalerConfig;
use scalebench_core::engine::EngineConfig;
use scalebench_core::scoring::PenaltyParams;
use scalebench_core::sim::{ClusterConfig, ServiceModel};
use scalebench_core::trace::BinaryRecordLayout;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[default]
    Simulate,
    Live,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum TraceFormat {
    #[default]
    Text,
    Binary,
}

/// Where the trace comes from and which slice of it to replay.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraceConfig {
    pub path: PathBuf,
    #[serde(default)]
    pub format: TraceFormat,
    /// Required for binary traces; see `trace::BinaryRecordLayout`.
    #[serde(default)]
    pub binary_layout: Option<BinaryRecordLayout>,
    /// Shift binary timestamps so the first record is t=0.
    #[serde(default = "default_true")]
    pub rebase: bool,
    /// Start of the experiment window within the trace, seconds.
    #[serde(default)]
    pub window_start: f64,
    /// Window length; defaults to the run duration.
    #[serde(default)]
    pub window_duration: Option<f64>,
}

/// Live-mode target. Success is any 2xx answer within the timeout; connect
/// errors, non-2xx statuses, and timeouts all count as failures, each
/// recorded with its kind.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LiveConfig {
    pub url: String,
    /// POST payload sent with every request.
    #[serde(default = "default_body")]
    pub body: String,
    #[serde(default)]
    pub headers: BTreeMap<String, String>,
    /// Per-request timeout, seconds.
    #[serde(default = "default_timeout")]
    pub timeout: f64,
    /// Also dump one JSON line per request (latency or failure kind).
    #[serde(default)]
    pub dump_raw_latencies: bool,
}

/// The `[cluster]` section. Replica bounds live in `[autoscaler]`; the
/// simulated cluster inherits them.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default)]
pub struct ClusterSection {
    pub startup_delay: f64,
    pub request_timeout: f64,
    pub utilization_window: f64,
    /// Pods ready at t=0; defaults to `autoscaler.min_replicas`.
    pub initial_replicas: Option<u32>,
}

impl Default for ClusterSection {
    fn default() -> Self {
        let d = ClusterConfig::default();
        Self {
            startup_delay: d.startup_delay,
            request_timeout: d.request_timeout,
            utilization_window: d.utilization_window,
            initial_replicas: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct OutputConfig {
    /// Directory for reports and logs.
    pub dir: PathBuf,
    /// Also dump the simulation event log (one JSON line per event).
    pub dump_sim_events: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
            dump_sim_events: false,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub mode: Mode,
    #[serde(default)]
    pub seed: u64,
    /// Run length, seconds.
    #[serde(default = "default_duration")]
    pub duration: f64,
    /// Dispatch window length, seconds.
    #[serde(default = "default_batch_interval")]
    pub batch_interval: f64,
    /// Simulate mode: virtual seconds per wall second. `inf` (the default)
    /// runs unpaced; `1.0` replays in real time.
    #[serde(default = "default_compression")]
    pub time_compression: f64,
    pub trace: TraceConfig,
    #[serde(default)]
    pub live: Option<LiveConfig>,
    #[serde(default)]
    pub service: ServiceModel,
    #[serde(default)]
    pub cluster: ClusterSection,
    #[serde(default)]
    pub autoscaler: AutoscalerConfig,
    #[serde(default)]
    pub penalty: PenaltyParams,
    #[serde(default)]
    pub output: OutputConfig,
}

fn default_true() -> bool {
    true
}

fn default_body() -> String {
    "print(\"hello there\")".to_string()
}

fn default_timeout() -> f64 {
    30.0
}

fn default_duration() -> f64 {
    1800.0
}

fn default_batch_interval() -> f64 {
    5.0
}

fn default_compression() -> f64 {
    f64::INFINITY
}

impl ExperimentConfig {
    /// Loads and validates a config file, resolving relative paths against
    /// the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let mut config: ExperimentConfig = toml::from_str(&text)
            .with_context(|| format!("parsing config {}", path.display()))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        config.trace.path = resolve(base, &config.trace.path);
        config.output.dir = resolve(base, &config.output.dir);
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.duration <= 0.0 {
            bail!("duration must be positive");
        }
        if self.batch_interval <= 0.0 {
            bail!("batch_interval must be positive");
        }
        if self.time_compression < 1.0 || self.time_compression.is_nan() {
            bail!("time_compression must be at least 1 (use inf for unpaced)");
        }
        match self.mode {
            Mode::Live if self.live.is_none() => {
                bail!("mode = \"live\" requires a [live] section with the target url")
            }
            Mode::Simulate if self.live.is_some() => {
                bail!("mode = \"simulate\" must not configure a [live] target; exactly one target applies")
            }
            _ => {}
        }
        if let Some(live) = &self.live {
            if live.timeout <= 0.0 {
                bail!("live.timeout must be positive");
            }
        }
        if self.trace.format == TraceFormat::Binary && self.trace.binary_layout.is_none() {
            bail!("binary traces need [trace.binary_layout]");
        }
        if let Some(layout) = &self.trace.binary_layout {
            layout.validate().context("trace.binary_layout")?;
        }
        if self.trace.window_start < 0.0 {
            bail!("trace.window_start must be non-negative");
        }
        if matches!(self.trace.window_duration, Some(d) if d <= 0.0) {
            bail!("trace.window_duration must be positive");
        }

        if self.service.base_service_time <= 0.0 {
            bail!("service.base_service_time must be positive");
        }
        if !(0.0..1.0).contains(&self.service.jitter_fraction) {
            bail!("service.jitter_fraction must be in [0, 1)");
        }
        if self.service.per_pod_concurrency < 1 {
            bail!("service.per_pod_concurrency must be at least 1");
        }

        if self.cluster.startup_delay < 0.0 {
            bail!("cluster.startup_delay must be non-negative");
        }
        if self.cluster.request_timeout <= 0.0 {
            bail!("cluster.request_timeout must be positive");
        }
        if self.cluster.utilization_window <= 0.0 {
            bail!("cluster.utilization_window must be positive");
        }

        let scaler = &self.autoscaler;
        if !(scaler.cpu_target > 0.0 && scaler.cpu_target <= 1.0) {
            bail!("autoscaler.cpu_target must be in (0, 1]");
        }
        if scaler.tolerance < 0.0 {
            bail!("autoscaler.tolerance must be non-negative");
        }
        if scaler.min_replicas < 1 || scaler.min_replicas > scaler.max_replicas {
            bail!("autoscaler replica bounds need 1 <= min_replicas <= max_replicas");
        }
        if scaler.reactive_interval <= 0.0
            || scaler.forecast_interval <= 0.0
            || scaler.forecast_horizon <= 0.0
        {
            bail!("autoscaler intervals must be positive");
        }
        if scaler.knn_k < 1 {
            bail!("autoscaler.knn_k must be at least 1");
        }
        if let Some(initial) = self.cluster.initial_replicas {
            if initial < scaler.min_replicas || initial > scaler.max_replicas {
                bail!("cluster.initial_replicas must lie within the autoscaler replica bounds");
            }
        }

        if self.penalty.failed_request_penalty < 0.0 || self.penalty.scarcity_factor < 0.0 {
            bail!("penalty parameters must be non-negative");
        }
        Ok(())
    }

    /// The window of the trace this run replays: `(start, duration)`.
    pub fn trace_window(&self) -> (f64, f64) {
        (
            self.trace.window_start,
            self.trace.window_duration.unwrap_or(self.duration),
        )
    }

    /// The core engine configuration for one repetition. Repetition seeds
    /// derive as `seed + repetition`, reproducible yet varied.
    pub fn engine_config(&self, repetition: u32) -> EngineConfig {
        let scaler = self.autoscaler;
        EngineConfig {
            batch_interval: self.batch_interval,
            duration: self.duration,
            service: ServiceModel {
                rng_seed: self.seed + u64::from(repetition),
                ..self.service
            },
            cluster: ClusterConfig {
                startup_delay: self.cluster.startup_delay,
                request_timeout: self.cluster.request_timeout,
                utilization_window: self.cluster.utilization_window,
                min_replicas: scaler.min_replicas,
                max_replicas: scaler.max_replicas,
                initial_replicas: self
                    .cluster
                    .initial_replicas
                    .unwrap_or(scaler.min_replicas),
            },
            autoscaler: scaler,
            penalty: self.penalty,
        }
    }
}

fn resolve(base: &Path, path: &Path) -> PathBuf {
    if path.is_absolute() {
        path.to_path_buf()
    } else {
        base.join(path)
    }
}
