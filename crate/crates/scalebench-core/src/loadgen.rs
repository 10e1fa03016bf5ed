//! Batched load generation: arrivals are grouped into fixed dispatch windows
//! (default five seconds), each window's requests fire concurrently at the
//! window's actual start instant, and per-batch outcomes are aggregated.
//!
//! Batches are sequential with respect to each other: when a batch takes
//! longer than the interval to resolve, the next batch is delayed until it
//! finishes. That drift is recorded, not corrected.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::trace::TraceEvent;

/// One dispatch window of trace arrivals.
///
/// Event timestamps are rebased to the window start, so they lie in
/// `[0, interval)`; relative to the trace start the originals lie in
/// `[index * interval, (index + 1) * interval)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    pub index: usize,
    pub scheduled_start: f64,
    pub events: Vec<TraceEvent>,
}

impl Batch {
    /// An empty window at the given index, used to pad gaps in a run.
    pub fn empty(index: usize, interval: f64) -> Self {
        Self {
            index,
            scheduled_start: index as f64 * interval,
            events: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }
}

/// Why a request failed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureKind {
    /// No response within the request timeout.
    Timeout,
    /// The target could not be reached at all.
    Connect,
    /// The target answered with a non-success status.
    HttpStatus,
}

/// The resolved fate of one dispatched request.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Outcome {
    Success { latency: f64 },
    /// `after` is how long past dispatch the failure became known (a timeout
    /// holds the slot for the full timeout; a refused connection is nearly
    /// instant).
    Failure { kind: FailureKind, after: f64 },
}

impl Outcome {
    /// Seconds after dispatch until this request no longer blocks the batch.
    pub fn resolve_after(&self) -> f64 {
        match *self {
            Outcome::Success { latency } => latency,
            Outcome::Failure { after, .. } => after,
        }
    }
}

/// Aggregated result of one dispatched batch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchResult {
    pub index: usize,
    /// Actual dispatch instant (drifts past the scheduled start when the
    /// previous batch overran).
    pub dispatch_time: f64,
    pub succeeded: u64,
    pub failed: u64,
    /// Mean response time over succeeded requests; absent when none succeeded.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub mean_response_time: Option<f64>,
    /// Seconds from dispatch until every request in the batch resolved.
    pub wall_duration: f64,
}

/// A request sink: accepts a batch of concurrent requests at a time instant
/// and yields each request's outcome.
///
/// The simulated cluster and the live HTTP client both implement this, which
/// keeps the batching loop identical across modes. A target never yields both
/// success and failure for one request.
pub trait Target {
    fn dispatch(&mut self, at: f64, count: usize) -> Vec<Outcome>;
}

/// A target answering every request with a fixed latency; useful for drift
/// and aggregation checks.
#[derive(Debug, Clone, Copy)]
pub struct FixedLatencyTarget {
    pub latency: f64,
}

impl Target for FixedLatencyTarget {
    fn dispatch(&mut self, _at: f64, count: usize) -> Vec<Outcome> {
        (0..count)
            .map(|_| Outcome::Success {
                latency: self.latency,
            })
            .collect()
    }
}

/// A target that fails every request immediately, as an unreachable service
/// would.
#[derive(Debug, Clone, Copy)]
pub struct UnreachableTarget;

impl Target for UnreachableTarget {
    fn dispatch(&mut self, _at: f64, count: usize) -> Vec<Outcome> {
        (0..count)
            .map(|_| Outcome::Failure {
                kind: FailureKind::Connect,
                after: 0.0,
            })
            .collect()
    }
}

/// Partitions sorted events into consecutive half-open windows of `interval`
/// seconds. Empty windows between non-empty ones are kept; trailing empty
/// windows are omitted.
pub fn plan_batches(events: &[TraceEvent], interval: f64) -> Vec<Batch> {
    debug_assert!(interval > 0.0);
    let mut batches: Vec<Batch> = Vec::new();
    for event in events {
        let index = (event.timestamp / interval) as usize;
        while batches.len() <= index {
            batches.push(Batch::empty(batches.len(), interval));
        }
        batches[index]
            .events
            .push(TraceEvent::new(event.timestamp - index as f64 * interval));
    }
    batches
}

/// Dispatches every request of `batch` concurrently at `dispatch_time` and
/// aggregates the outcomes. Failures are data, never an error.
pub fn execute_batch<T: Target + ?Sized>(
    batch: &Batch,
    dispatch_time: f64,
    target: &mut T,
) -> BatchResult {
    let outcomes = if batch.is_empty() {
        Vec::new()
    } else {
        target.dispatch(dispatch_time, batch.len())
    };
    aggregate_outcomes(batch.index, dispatch_time, &outcomes)
}

/// Builds a [`BatchResult`] from raw per-request outcomes.
pub fn aggregate_outcomes(index: usize, dispatch_time: f64, outcomes: &[Outcome]) -> BatchResult {
    let mut succeeded = 0u64;
    let mut failed = 0u64;
    let mut mean = 0.0f64;
    let mut wall = 0.0f64;
    for outcome in outcomes {
        wall = wall.max(outcome.resolve_after());
        match *outcome {
            Outcome::Success { latency } => {
                succeeded += 1;
                // Incremental mean: stable, and exact for identical latencies.
                mean += (latency - mean) / succeeded as f64;
            }
            Outcome::Failure { .. } => failed += 1,
        }
    }
    BatchResult {
        index,
        dispatch_time,
        succeeded,
        failed,
        mean_response_time: (succeeded > 0).then_some(mean),
        wall_duration: wall,
    }
}

/// Runs a whole trace: plans batches and dispatches them sequentially, with
/// batch `i+1` starting at `max(scheduled_start(i+1), completion of batch i)`.
pub fn run_load<T: Target + ?Sized>(
    events: &[TraceEvent],
    interval: f64,
    target: &mut T,
) -> Vec<BatchResult> {
    let batches = plan_batches(events, interval);
    let mut results = Vec::with_capacity(batches.len());
    let mut previous_end = 0.0f64;
    for batch in &batches {
        let dispatch_time = batch.scheduled_start.max(previous_end);
        let result = execute_batch(batch, dispatch_time, target);
        previous_end = dispatch_time + result.wall_duration;
        results.push(result);
    }
    results
}
