//! The virtual-time experiment loop: replay a windowed trace in batches
//! against the simulated cluster while the autoscaler ticks on its own
//! cadences, then score the run.
//!
//! Everything advances on one deterministic clock. Autoscaler ticks due at
//! or before a batch dispatch are processed first, so capacity changes land
//! before the requests of that instant. Batch `i+1` dispatches at
//! `max(scheduled_start, completion of batch i)` — an overrunning batch
//! delays the next one rather than overlapping it.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::autoscaler::{Autoscaler, AutoscalerConfig, ForecastModel, Recommendation, TickRecord};
use crate::loadgen::{aggregate_outcomes, plan_batches, Batch, BatchResult, Outcome};
use crate::scoring::{penalty, PenaltyBreakdown, PenaltyParams, ReplicaTimeline};
use crate::sim::{Cluster, ClusterConfig, ServiceModel, SimEvent};
use crate::trace::TraceEvent;

/// Everything a simulated run needs. The caller windows the trace first;
/// events are expected to lie in `[0, duration)`.
#[derive(Debug, Clone, PartialEq)]
pub struct EngineConfig {
    /// Dispatch window length, seconds.
    pub batch_interval: f64,
    /// Virtual run length, seconds.
    pub duration: f64,
    pub service: ServiceModel,
    pub cluster: ClusterConfig,
    pub autoscaler: AutoscalerConfig,
    pub penalty: PenaltyParams,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            batch_interval: 5.0,
            duration: 1800.0,
            service: ServiceModel::default(),
            cluster: ClusterConfig::default(),
            autoscaler: AutoscalerConfig::default(),
            penalty: PenaltyParams::default(),
        }
    }
}

/// One report row per batch interval, keyed by the scheduled window start.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntervalRow {
    #[serde(rename = "time_s")]
    pub time: f64,
    pub requests: u64,
    pub succeeded: u64,
    pub failed: u64,
    #[serde(rename = "mean_latency_s")]
    pub mean_latency: Option<f64>,
    /// Ready replicas at the batch's actual dispatch instant.
    pub ready_replicas: u32,
    pub desired_replicas: u32,
}

/// Everything a run produced, in deterministic order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunOutput {
    pub rows: Vec<IntervalRow>,
    pub batches: Vec<BatchResult>,
    pub ticks: Vec<TickRecord>,
    pub events: Vec<SimEvent>,
    pub timeline: ReplicaTimeline,
    pub penalty: PenaltyBreakdown,
    /// Virtual end of the run: the configured duration, or later if the last
    /// batches overran it.
    pub end_time: f64,
}

impl RunOutput {
    /// The reactive recommendations this run produced, usable as an oracle
    /// lookahead plan for a paired run.
    pub fn reactive_plan(&self) -> Vec<Recommendation> {
        self.ticks
            .iter()
            .filter_map(|tick| {
                tick.reactive.map(|replicas| Recommendation {
                    time: tick.time,
                    replicas,
                })
            })
            .collect()
    }
}

/// Runs the experiment as fast as possible.
pub fn run_simulation(events: &[TraceEvent], cfg: &EngineConfig) -> RunOutput {
    run_simulation_paced(events, cfg, &mut |_| {})
}

/// Runs the experiment, reporting each virtual-time step to `pacer` so a
/// caller can throttle wall-clock speed. The pacer never affects any
/// virtual-time quantity.
///
/// The oracle model needs to know the future: it first replays the identical
/// run under the hold model (unpaced) to record the reactive recommendation
/// timeline, then applies those recommendations a horizon early.
pub fn run_simulation_paced(
    events: &[TraceEvent],
    cfg: &EngineConfig,
    pacer: &mut dyn FnMut(f64),
) -> RunOutput {
    if cfg.autoscaler.model == ForecastModel::Oracle {
        let mut lookahead_cfg = cfg.clone();
        lookahead_cfg.autoscaler.model = ForecastModel::Hold;
        let lookahead = run_pass(events, &lookahead_cfg, None, &mut |_| {});
        run_pass(events, cfg, Some(lookahead.reactive_plan()), pacer)
    } else {
        run_pass(events, cfg, None, pacer)
    }
}

fn run_pass(
    events: &[TraceEvent],
    cfg: &EngineConfig,
    oracle_plan: Option<Vec<Recommendation>>,
    pacer: &mut dyn FnMut(f64),
) -> RunOutput {
    let planned = plan_batches(events, cfg.batch_interval);
    let windows_for_duration = crate::num::ceil(cfg.duration / cfg.batch_interval) as usize;
    let total_windows = windows_for_duration.max(planned.len());

    let mut cluster = Cluster::new(cfg.service, cfg.cluster);
    let mut scaler = match oracle_plan {
        Some(plan) => Autoscaler::with_oracle_plan(cfg.autoscaler, plan),
        None => Autoscaler::new(cfg.autoscaler),
    };

    let mut rows = Vec::with_capacity(total_windows);
    let mut batches = Vec::with_capacity(total_windows);
    let mut ticks = Vec::new();
    let mut sim_events = Vec::new();
    let mut previous_end = 0.0f64;

    let run_ticks_until =
        |limit: f64, cluster: &mut Cluster, scaler: &mut Autoscaler, sim_events: &mut Vec<SimEvent>, ticks: &mut Vec<TickRecord>, pacer: &mut dyn FnMut(f64)| {
            while scaler.next_tick() <= limit {
                let t = scaler.next_tick();
                sim_events.extend(cluster.advance(t));
                pacer(t);
                let utilization = cluster.cpu_utilization();
                let record = scaler.tick(t, cluster.desired_replicas(), utilization);
                if let Some(applied) = record.applied {
                    cluster.set_desired_replicas(applied);
                }
                ticks.push(record);
            }
        };

    for index in 0..total_windows {
        let fallback = Batch::empty(index, cfg.batch_interval);
        let batch = planned.get(index).unwrap_or(&fallback);
        let scheduled = index as f64 * cfg.batch_interval;
        let dispatch = scheduled.max(previous_end);

        run_ticks_until(dispatch, &mut cluster, &mut scaler, &mut sim_events, &mut ticks, pacer);
        sim_events.extend(cluster.advance(dispatch));
        pacer(dispatch);

        let ready_replicas = cluster.ready_replicas();
        let desired_replicas = cluster.desired_replicas();
        let outcomes: Vec<Outcome> = batch.events.iter().map(|_| cluster.submit(dispatch)).collect();
        let result = aggregate_outcomes(index, dispatch, &outcomes);
        previous_end = dispatch + result.wall_duration;

        rows.push(IntervalRow {
            time: scheduled,
            requests: batch.len() as u64,
            succeeded: result.succeeded,
            failed: result.failed,
            mean_latency: result.mean_response_time,
            ready_replicas,
            desired_replicas,
        });
        batches.push(result);
    }

    let end_time = cfg.duration.max(previous_end);
    run_ticks_until(end_time, &mut cluster, &mut scaler, &mut sim_events, &mut ticks, pacer);
    sim_events.extend(cluster.advance(end_time));
    pacer(end_time);

    let timeline = ReplicaTimeline {
        steps: cluster.ready_timeline().to_vec(),
        end: end_time,
    };
    let score = penalty(&batches, &timeline, &cfg.penalty);

    RunOutput {
        rows,
        batches,
        ticks,
        events: sim_events,
        timeline,
        penalty: score,
        end_time,
    }
}

/// Evenly spaced arrivals at `rate` per second over `duration` — handy for
/// synthetic workloads and tests.
pub fn constant_rate_trace(rate: f64, duration: f64) -> Vec<TraceEvent> {
    debug_assert!(rate > 0.0 && duration > 0.0);
    let step = 1.0 / rate;
    let count = crate::num::floor(duration * rate) as usize;
    (0..count)
        .map(|i| TraceEvent::new(i as f64 * step))
        .filter(|e| e.timestamp < duration)
        .collect()
}
