//! Deterministic synthetic workloads: Poisson arrivals at a piecewise-
//! constant rate, quantized to millisecond precision. The bundled bursty
//! trace comes from [`default_bursty_trace`] so it can always be regenerated
//! bit-for-bit.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use scalebench_core::trace::TraceEvent;

/// One load burst layered on top of the base rate.
#[derive(Debug, Clone, Copy)]
pub struct Burst {
    pub start: f64,
    pub duration: f64,
    /// Extra arrivals per second while the burst lasts.
    pub extra_rate: f64,
}

/// Poisson arrivals over `[0, duration)` at `base_rate` plus any overlapping
/// bursts, from a seeded generator. Timestamps are rounded to milliseconds.
pub fn bursty_trace(seed: u64, duration: f64, base_rate: f64, bursts: &[Burst]) -> Vec<TraceEvent> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut boundaries: Vec<f64> = vec![0.0, duration];
    for burst in bursts {
        boundaries.push(burst.start.clamp(0.0, duration));
        boundaries.push((burst.start + burst.duration).clamp(0.0, duration));
    }
    boundaries.sort_by(f64::total_cmp);
    boundaries.dedup();

    let mut events = Vec::new();
    for window in boundaries.windows(2) {
        let (lo, hi) = (window[0], window[1]);
        let mid = (lo + hi) / 2.0;
        let rate = base_rate
            + bursts
                .iter()
                .filter(|b| mid >= b.start && mid < b.start + b.duration)
                .map(|b| b.extra_rate)
                .sum::<f64>();
        if rate <= 0.0 {
            continue;
        }
        let mut t = lo;
        loop {
            let u: f64 = rng.gen_range(0.0..1.0);
            t += -(1.0 - u).ln() / rate;
            if t >= hi {
                break;
            }
            events.push(TraceEvent::new((t * 1000.0).round() / 1000.0));
        }
    }
    events
}

/// The bundled 30-minute bursty workload: a light base load with four sharp
/// bursts that outrun a single replica, so provisioning lag is visible.
pub fn default_bursty_trace(seed: u64) -> Vec<TraceEvent> {
    bursty_trace(
        seed,
        1800.0,
        2.0,
        &[
            Burst { start: 300.0, duration: 60.0, extra_rate: 44.0 },
            Burst { start: 750.0, duration: 45.0, extra_rate: 38.0 },
            Burst { start: 1120.0, duration: 75.0, extra_rate: 42.0 },
            Burst { start: 1500.0, duration: 50.0, extra_rate: 63.0 },
        ],
    )
}
