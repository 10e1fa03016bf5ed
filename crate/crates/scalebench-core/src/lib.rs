#![cfg_attr(not(feature = "std"), no_std)]
//! Deterministic building blocks for trace-driven autoscaling experiments.
//!
//! The crate replays recorded request arrivals against a simulated
//! horizontally-scaled service, drives replica counts with a reactive
//! recommender wrapped by pluggable single-step forecasters, and scores each
//! run with a latency/failure/resource penalty.
//!
//! Everything here is pure with respect to wall-clock time and I/O: the
//! simulation runs in virtual time from a seeded generator, so two runs with
//! the same inputs produce identical outputs. The companion `scalebench`
//! crate adds configuration files, report emission, a CLI, and a live HTTP
//! load mode on top of these pieces.
//!
//! Module map:
//! - [`trace`] — trace parsing (text and fixed-width binary), windowing,
//!   rate bucketing
//! - [`loadgen`] — batching arrivals into dispatch windows and aggregating
//!   per-batch outcomes against an abstract [`loadgen::Target`]
//! - [`sim`] — discrete-event simulation of a replicated service with pod
//!   spin-up delay, per-pod concurrency, and a windowed CPU metric
//! - [`autoscaler`] — the reactive replica rule, bounded recommendation
//!   history, and hold/linear/knn/oracle forecasters
//! - [`scoring`] — the penalty equation over batch results and a replica
//!   timeline
//! - [`engine`] — the virtual-time experiment loop wiring all of the above

extern crate alloc;

pub mod autoscaler;
pub mod engine;
pub mod loadgen;
pub mod scoring;
pub mod sim;
pub mod trace;

/// Float helpers that resolve identically with and without std.
pub(crate) mod num {
    use num_traits::Float;

    pub(crate) fn floor(x: f64) -> f64 {
        Float::floor(x)
    }

    pub(crate) fn ceil(x: f64) -> f64 {
        Float::ceil(x)
    }

    pub(crate) fn abs(x: f64) -> f64 {
        Float::abs(x)
    }
}
