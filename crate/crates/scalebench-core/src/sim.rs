//! Discrete-event simulation of a horizontally scaled service: pods with
//! finite concurrency and a spin-up delay, deterministic FIFO dispatch,
//! a trailing-window CPU-utilization metric, and graceful scale-down.
//!
//! Requests are assigned to a pod slot at submit time, so a request's fate
//! (completion instant or timeout failure) is fixed the moment it arrives.
//! Capacity added later helps later arrivals only — live requests are never
//! re-routed to new pods, matching how a load-balanced service behaves while
//! replicas spin up.

use alloc::collections::BinaryHeap;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::{Ordering, Reverse};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::loadgen::{FailureKind, Outcome, Target};

/// How each pod serves requests.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ServiceModel {
    /// Nominal service time per request, seconds.
    pub base_service_time: f64,
    /// Uniform jitter applied to the service time, as a fraction of the base
    /// (`0.1` means service times in `[0.9, 1.1] * base`).
    pub jitter_fraction: f64,
    /// Requests one pod serves simultaneously.
    pub per_pod_concurrency: u32,
    /// Seed for the service-time generator; identical seeds give
    /// bit-identical runs.
    pub rng_seed: u64,
}

impl Default for ServiceModel {
    fn default() -> Self {
        Self {
            base_service_time: 0.2,
            jitter_fraction: 0.1,
            per_pod_concurrency: 4,
            rng_seed: 0,
        }
    }
}

/// Cluster-level knobs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClusterConfig {
    /// Seconds between requesting a pod and it serving traffic.
    pub startup_delay: f64,
    /// A request whose latency would exceed this fails at `arrival + timeout`.
    pub request_timeout: f64,
    /// Trailing window for the CPU-utilization metric, seconds.
    pub utilization_window: f64,
    pub min_replicas: u32,
    pub max_replicas: u32,
    /// Pods ready at t=0. Zero is allowed for degenerate test setups.
    pub initial_replicas: u32,
}

impl Default for ClusterConfig {
    fn default() -> Self {
        Self {
            startup_delay: 10.0,
            request_timeout: 30.0,
            utilization_window: 15.0,
            min_replicas: 1,
            max_replicas: 10,
            initial_replicas: 1,
        }
    }
}

/// One replica. Slot values are the instants each concurrent serving slot
/// frees up; a pod serves nothing before `ready_at`.
#[derive(Debug, Clone)]
struct Pod {
    id: u32,
    ready_at: f64,
    slots: Vec<f64>,
    /// Set on scale-down: finish in-flight work, accept nothing new.
    draining: bool,
}

impl Pod {
    fn in_flight(&self, now: f64) -> usize {
        self.slots.iter().filter(|&&free| free > now).count()
    }

    fn earliest_slot(&self) -> (usize, f64) {
        let mut best = (0, self.slots[0]);
        for (i, &free) in self.slots.iter().enumerate().skip(1) {
            if free < best.1 {
                best = (i, free);
            }
        }
        best
    }
}

/// What happened inside the simulation, in event-time order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimEvent {
    pub time: f64,
    #[serde(flatten)]
    pub kind: SimEventKind,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SimEventKind {
    PodReady { pod: u32 },
    Completion { pod: u32, latency: f64, submitted_at: f64 },
    Failure { submitted_at: f64 },
}

/// Result of a scaling request.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScaleOutcome {
    /// Replica count actually applied after clamping to `[min, max]`.
    pub applied: u32,
    /// Whether the requested count was out of range and got clamped.
    pub clamped: bool,
}

#[derive(Debug, Clone)]
struct Scheduled {
    time: f64,
    seq: u64,
    kind: SimEventKind,
}

impl PartialEq for Scheduled {
    fn eq(&self, other: &Self) -> bool {
        self.time == other.time && self.seq == other.seq
    }
}

impl Eq for Scheduled {}

impl PartialOrd for Scheduled {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Scheduled {
    fn cmp(&self, other: &Self) -> Ordering {
        // Timestamp order, ties broken by insertion order.
        self.time
            .total_cmp(&other.time)
            .then_with(|| self.seq.cmp(&other.seq))
    }
}

/// The simulated cluster. Single-threaded: one caller drives the clock via
/// [`Cluster::advance`] and submits requests in non-decreasing time order.
#[derive(Debug, Clone)]
pub struct Cluster {
    service: ServiceModel,
    cfg: ClusterConfig,
    now: f64,
    pods: Vec<Pod>,
    next_pod_id: u32,
    queue: BinaryHeap<Reverse<Scheduled>>,
    next_seq: u64,
    rng: ChaCha8Rng,
    /// Assigned busy intervals (start, end) for the utilization metric.
    busy: Vec<(f64, f64)>,
    submitted: u64,
    completed: u64,
    failed: u64,
    /// Step changes of the ready-replica count, for scoring.
    timeline: Vec<(f64, u32)>,
}

impl Cluster {
    pub fn new(service: ServiceModel, cfg: ClusterConfig) -> Self {
        let pods = (0..cfg.initial_replicas)
            .map(|id| Pod {
                id,
                ready_at: 0.0,
                slots: vec![0.0; service.per_pod_concurrency as usize],
                draining: false,
            })
            .collect();
        let rng = ChaCha8Rng::seed_from_u64(service.rng_seed);
        Self {
            next_pod_id: cfg.initial_replicas,
            pods,
            rng,
            now: 0.0,
            queue: BinaryHeap::new(),
            next_seq: 0,
            busy: Vec::new(),
            submitted: 0,
            completed: 0,
            failed: 0,
            timeline: vec![(0.0, cfg.initial_replicas)],
            service,
            cfg,
        }
    }

    pub fn now(&self) -> f64 {
        self.now
    }

    pub fn ready_replicas(&self) -> u32 {
        self.pods
            .iter()
            .filter(|p| !p.draining && p.ready_at <= self.now)
            .count() as u32
    }

    pub fn pending_replicas(&self) -> u32 {
        self.pods
            .iter()
            .filter(|p| !p.draining && p.ready_at > self.now)
            .count() as u32
    }

    /// Ready plus pending; draining pods no longer count.
    pub fn desired_replicas(&self) -> u32 {
        self.pods.iter().filter(|p| !p.draining).count() as u32
    }

    pub fn submitted(&self) -> u64 {
        self.submitted
    }

    pub fn completed(&self) -> u64 {
        self.completed
    }

    pub fn failed(&self) -> u64 {
        self.failed
    }

    /// Requests whose outcome event has not been processed yet.
    pub fn in_flight(&self) -> u64 {
        self.submitted - self.completed - self.failed
    }

    /// Step changes of the ready-replica count since t=0.
    pub fn ready_timeline(&self) -> &[(f64, u32)] {
        &self.timeline
    }

    fn schedule(&mut self, time: f64, kind: SimEventKind) {
        let seq = self.next_seq;
        self.next_seq += 1;
        self.queue.push(Reverse(Scheduled { time, seq, kind }));
    }

    fn sample_service_time(&mut self) -> f64 {
        let base = self.service.base_service_time;
        let jitter = self.service.jitter_fraction;
        if jitter <= 0.0 {
            return base;
        }
        let u: f64 = self.rng.gen_range(0.0..1.0);
        base * (1.0 - jitter) + u * (2.0 * jitter * base)
    }

    /// Submits one request arriving at `arrival` (which must not precede the
    /// cluster clock). The request is assigned to the non-draining pod whose
    /// slot frees earliest (ties to the lowest pod id); if even that slot
    /// would push its latency past the timeout, it fails at
    /// `arrival + timeout` instead and occupies nothing.
    pub fn submit(&mut self, arrival: f64) -> Outcome {
        debug_assert!(arrival >= self.now);
        self.submitted += 1;
        // One draw per submit regardless of outcome keeps the stream aligned
        // across runs that differ only in capacity.
        let service_time = self.sample_service_time();

        let mut best: Option<(f64, usize)> = None;
        for (idx, pod) in self.pods.iter().enumerate() {
            if pod.draining {
                continue;
            }
            let (_, free) = pod.earliest_slot();
            let start = arrival.max(free);
            let better = match best {
                None => true,
                Some((bs, bi)) => {
                    start < bs || (start == bs && pod.id < self.pods[bi].id)
                }
            };
            if better {
                best = Some((start, idx));
            }
        }

        let timeout = self.cfg.request_timeout;
        match best {
            Some((start, idx)) if start + service_time - arrival <= timeout => {
                let completion = start + service_time;
                let latency = completion - arrival;
                let (slot, _) = self.pods[idx].earliest_slot();
                self.pods[idx].slots[slot] = completion;
                let pod_id = self.pods[idx].id;
                self.busy.push((start, completion));
                self.schedule(
                    completion,
                    SimEventKind::Completion {
                        pod: pod_id,
                        latency,
                        submitted_at: arrival,
                    },
                );
                Outcome::Success { latency }
            }
            _ => {
                self.schedule(
                    arrival + timeout,
                    SimEventKind::Failure { submitted_at: arrival },
                );
                Outcome::Failure {
                    kind: FailureKind::Timeout,
                    after: timeout,
                }
            }
        }
    }

    /// Scales to `n` replicas (clamped to `[min, max]`).
    ///
    /// Scale-up creates pending pods ready after the startup delay.
    /// Scale-down cancels pending pods first (newest first), then removes
    /// idle ready pods, and finally marks the least busy pods as draining:
    /// they finish in-flight work but accept nothing new, and stop counting
    /// toward capacity immediately.
    pub fn set_desired_replicas(&mut self, n: u32) -> ScaleOutcome {
        let applied = n.clamp(self.cfg.min_replicas, self.cfg.max_replicas);
        let outcome = ScaleOutcome {
            applied,
            clamped: applied != n,
        };
        let current = self.desired_replicas();
        let now = self.now;

        if applied > current {
            for _ in 0..applied - current {
                let id = self.next_pod_id;
                self.next_pod_id += 1;
                let ready_at = now + self.cfg.startup_delay;
                self.pods.push(Pod {
                    id,
                    ready_at,
                    slots: vec![ready_at; self.service.per_pod_concurrency as usize],
                    draining: false,
                });
                self.schedule(ready_at, SimEventKind::PodReady { pod: id });
            }
        } else if applied < current {
            let mut remaining = (current - applied) as usize;

            let mut pending: Vec<u32> = self
                .pods
                .iter()
                .filter(|p| !p.draining && p.ready_at > now)
                .map(|p| p.id)
                .collect();
            pending.sort_unstable_by(|a, b| b.cmp(a));
            pending.truncate(remaining);
            remaining -= pending.len();
            self.pods.retain(|p| !pending.contains(&p.id));

            if remaining > 0 {
                let mut ready: Vec<(usize, u32)> = self
                    .pods
                    .iter()
                    .filter(|p| !p.draining && p.ready_at <= now)
                    .map(|p| (p.in_flight(now), p.id))
                    .collect();
                ready.sort_unstable_by(|a, b| a.0.cmp(&b.0).then(b.1.cmp(&a.1)));
                let victims: Vec<(usize, u32)> = ready.into_iter().take(remaining).collect();
                for (in_flight, id) in victims {
                    if in_flight == 0 {
                        self.pods.retain(|p| p.id != id);
                    } else if let Some(pod) = self.pods.iter_mut().find(|p| p.id == id) {
                        pod.draining = true;
                    }
                }
                self.record_ready_count();
            }
        }
        outcome
    }

    /// Busy pod-seconds over the trailing window divided by
    /// `ready * concurrency * window`, clipped to `[0, 1]`. With zero ready
    /// pods the service is saturated by definition.
    pub fn cpu_utilization(&self) -> f64 {
        let ready = self.ready_replicas();
        if ready == 0 {
            return 1.0;
        }
        let window = self.cfg.utilization_window;
        let lo = self.now - window;
        let mut busy = 0.0;
        for &(start, end) in &self.busy {
            let overlap = end.min(self.now) - start.max(lo);
            if overlap > 0.0 {
                busy += overlap;
            }
        }
        let capacity = ready as f64 * self.service.per_pod_concurrency as f64 * window;
        (busy / capacity).clamp(0.0, 1.0)
    }

    /// Processes every scheduled event with timestamp ≤ `until` in timestamp
    /// order (ties by insertion order), then sets the clock to `until`.
    pub fn advance(&mut self, until: f64) -> Vec<SimEvent> {
        debug_assert!(until >= self.now);
        let mut emitted = Vec::new();
        while let Some(Reverse(next)) = self.queue.peek() {
            if next.time > until {
                break;
            }
            let Scheduled { time, kind, .. } = self.queue.pop().unwrap().0;
            if time > self.now {
                self.now = time;
            }
            match kind {
                SimEventKind::PodReady { pod } => {
                    // Cancelled pods leave a stale readiness event behind.
                    if !self.pods.iter().any(|p| p.id == pod && !p.draining) {
                        continue;
                    }
                    self.record_ready_count();
                    emitted.push(SimEvent { time, kind });
                }
                SimEventKind::Completion { .. } => {
                    self.completed += 1;
                    emitted.push(SimEvent { time, kind });
                }
                SimEventKind::Failure { .. } => {
                    self.failed += 1;
                    emitted.push(SimEvent { time, kind });
                }
            }
        }
        if until > self.now {
            self.now = until;
        }
        self.prune();
        emitted
    }

    fn prune(&mut self) {
        let lo = self.now - self.cfg.utilization_window;
        self.busy.retain(|&(_, end)| end >= lo);
        let now = self.now;
        self.pods
            .retain(|p| !p.draining || p.slots.iter().any(|&free| free > now));
    }

    fn record_ready_count(&mut self) {
        let count = self.ready_replicas();
        if let Some(last) = self.timeline.last_mut() {
            if last.1 == count {
                return;
            }
            if last.0 == self.now {
                last.1 = count;
                return;
            }
        }
        self.timeline.push((self.now, count));
    }
}

impl Target for Cluster {
    fn dispatch(&mut self, at: f64, count: usize) -> Vec<Outcome> {
        let _ = self.advance(at);
        (0..count).map(|_| self.submit(at)).collect()
    }
}
