//! The penalty equation: success-weighted mean squared batch latency, a
//! per-failure penalty, and a resource term over the time-weighted average
//! replica count. Lower is better.
//!
//! All three terms are reported separately so any downstream normalization
//! stays transparent; a failure term normalized by dispatched request count
//! is computed alongside the literal equation, never in place of it.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::loadgen::BatchResult;

/// Scoring knobs. The failure penalty defaults to pricing each failed
/// request as a half-minute latency (30² = 900); the scarcity factor scales
/// the replica-cost term (raise it to 2–4 when cloud resources are scarce).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PenaltyParams {
    pub failed_request_penalty: f64,
    pub scarcity_factor: f64,
}

impl Default for PenaltyParams {
    fn default() -> Self {
        Self {
            failed_request_penalty: 900.0,
            scarcity_factor: 1.0,
        }
    }
}

/// Step changes of the ready-replica count over a run, plus the run end.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicaTimeline {
    /// `(time, ready_replicas)` step changes, times strictly increasing.
    pub steps: Vec<(f64, u32)>,
    /// Run end time; the last step extends to here.
    pub end: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum TimelineError {
    #[error("timeline has no steps")]
    Empty,
    #[error("timeline step times must be strictly increasing")]
    NonIncreasingTimes,
    #[error("timeline end must not precede the first step")]
    EndBeforeStart,
}

impl ReplicaTimeline {
    pub fn new(steps: Vec<(f64, u32)>, end: f64) -> Result<Self, TimelineError> {
        let timeline = Self { steps, end };
        timeline.validate()?;
        Ok(timeline)
    }

    pub fn validate(&self) -> Result<(), TimelineError> {
        let first = self.steps.first().ok_or(TimelineError::Empty)?;
        for pair in self.steps.windows(2) {
            if pair[1].0 <= pair[0].0 {
                return Err(TimelineError::NonIncreasingTimes);
            }
        }
        if self.end < first.0 {
            return Err(TimelineError::EndBeforeStart);
        }
        Ok(())
    }
}

/// The penalty score with each term reported separately.
/// `total = latency_term + failure_term + resource_term`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PenaltyBreakdown {
    /// Success-weighted mean of squared batch response times.
    pub latency_term: f64,
    /// `total_failed * failed_request_penalty`.
    pub failure_term: f64,
    /// `average_replicas * scarcity_factor`.
    pub resource_term: f64,
    pub total: f64,
    pub total_succeeded: u64,
    pub total_failed: u64,
    /// The failure term divided by total dispatched requests (0 when none
    /// were dispatched) — a documented variant, never substituted for the
    /// literal term.
    pub normalized_failure_term: f64,
    /// `latency_term + normalized_failure_term + resource_term`.
    pub normalized_total: f64,
}

/// `Σ succ_i * mean_rt_i² / Σ succ_i` over batches with successes; defined
/// as 0 when nothing succeeded so a total always exists.
pub fn latency_term(batches: &[BatchResult]) -> f64 {
    let mut weighted = 0.0;
    let mut successes = 0u64;
    for batch in batches {
        if batch.succeeded == 0 {
            continue;
        }
        let mean = batch.mean_response_time.unwrap_or(0.0);
        weighted += batch.succeeded as f64 * mean * mean;
        successes += batch.succeeded;
    }
    if successes == 0 {
        0.0
    } else {
        weighted / successes as f64
    }
}

/// Time-weighted mean of the replica step function over `[first step, end]`.
pub fn average_replicas(timeline: &ReplicaTimeline) -> f64 {
    let Some(&(first_time, first_count)) = timeline.steps.first() else {
        return 0.0;
    };
    let duration = timeline.end - first_time;
    if duration <= 0.0 {
        return first_count as f64;
    }
    let mut weighted = 0.0;
    for (i, &(time, count)) in timeline.steps.iter().enumerate() {
        let next = timeline
            .steps
            .get(i + 1)
            .map_or(timeline.end, |&(t, _)| t)
            .min(timeline.end);
        if next > time {
            weighted += count as f64 * (next - time);
        }
    }
    weighted / duration
}

/// The full penalty over a run's batches and replica timeline.
pub fn penalty(
    batches: &[BatchResult],
    timeline: &ReplicaTimeline,
    params: &PenaltyParams,
) -> PenaltyBreakdown {
    let total_succeeded: u64 = batches.iter().map(|b| b.succeeded).sum();
    let total_failed: u64 = batches.iter().map(|b| b.failed).sum();

    let latency_term = latency_term(batches);
    let failure_term = total_failed as f64 * params.failed_request_penalty;
    let resource_term = average_replicas(timeline) * params.scarcity_factor;

    let dispatched = total_succeeded + total_failed;
    let normalized_failure_term = if dispatched == 0 {
        0.0
    } else {
        failure_term / dispatched as f64
    };

    PenaltyBreakdown {
        latency_term,
        failure_term,
        resource_term,
        total: latency_term + failure_term + resource_term,
        total_succeeded,
        total_failed,
        normalized_failure_term,
        normalized_total: latency_term + normalized_failure_term + resource_term,
    }
}
