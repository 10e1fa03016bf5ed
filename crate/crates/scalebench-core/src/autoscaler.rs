//! Replica recommendation: a reactive threshold/ratio rule polled on a fixed
//! cadence, a bounded history of its recommendations, and single-step
//! forecasters (hold/linear/knn, plus a non-causal oracle baseline) that
//! predict the replica count a short horizon ahead so capacity exists before
//! demand arrives.

use alloc::collections::VecDeque;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::num;

/// Which single-step forecaster drives scaling decisions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ForecastModel {
    /// Control: repeat the latest reactive recommendation.
    Hold,
    /// Ordinary least-squares line over the history, extrapolated.
    Linear,
    /// Mean of the k history entries nearest the target time.
    Knn,
    /// Non-causal upper bound: apply the reactive recommendation that will
    /// hold at the target time, taken from a lookahead pass.
    Oracle,
}

impl fmt::Display for ForecastModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            ForecastModel::Hold => "hold",
            ForecastModel::Linear => "linear",
            ForecastModel::Knn => "knn",
            ForecastModel::Oracle => "oracle",
        };
        f.write_str(name)
    }
}

impl core::str::FromStr for ForecastModel {
    type Err = UnknownModel;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "hold" => Ok(ForecastModel::Hold),
            "linear" => Ok(ForecastModel::Linear),
            "knn" => Ok(ForecastModel::Knn),
            "oracle" => Ok(ForecastModel::Oracle),
            _ => Err(UnknownModel),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("unknown forecast model (expected hold, linear, knn, or oracle)")]
pub struct UnknownModel;

/// How a model forecast combines with the live reactive recommendation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CombinePolicy {
    /// Apply the model forecast directly (clamped).
    ModelOnly,
    /// Never scale below the latest reactive recommendation.
    MaxWithReactive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AutoscalerConfig {
    /// CPU utilization fraction the reactive rule holds, e.g. 0.75.
    pub cpu_target: f64,
    /// Dead-band around the target within which no scaling happens.
    pub tolerance: f64,
    pub min_replicas: u32,
    pub max_replicas: u32,
    /// Cadence of reactive recommendations, seconds.
    pub reactive_interval: f64,
    /// Cadence at which the forecast is computed and applied, seconds.
    pub forecast_interval: f64,
    /// How far ahead the forecast targets, seconds (sized to cover pod
    /// spin-up).
    pub forecast_horizon: f64,
    pub model: ForecastModel,
    /// Neighbor count for the knn model.
    pub knn_k: usize,
    pub combine: CombinePolicy,
}

impl Default for AutoscalerConfig {
    fn default() -> Self {
        Self {
            cpu_target: 0.75,
            tolerance: 0.10,
            min_replicas: 1,
            max_replicas: 10,
            reactive_interval: 15.0,
            forecast_interval: 10.0,
            forecast_horizon: 10.0,
            model: ForecastModel::Hold,
            knn_k: 3,
            combine: CombinePolicy::ModelOnly,
        }
    }
}

/// One reactive recommendation: the replica count the ratio rule produced at
/// one polling instant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Recommendation {
    pub time: f64,
    pub replicas: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum HistoryError {
    #[error("recommendation time precedes the newest history entry")]
    NonMonotonicTime,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum ForecastError {
    #[error("not enough history to forecast")]
    InsufficientData,
}

/// Bounded window of recent reactive recommendations: at most `capacity`
/// entries, none older than `window_span` seconds relative to the newest.
#[derive(Debug, Clone)]
pub struct RecommendationHistory {
    capacity: usize,
    window_span: f64,
    entries: VecDeque<Recommendation>,
}

impl Default for RecommendationHistory {
    /// The last twelve recommendations within the last two minutes.
    fn default() -> Self {
        Self::new(12, 120.0)
    }
}

impl RecommendationHistory {
    pub fn new(capacity: usize, window_span: f64) -> Self {
        Self {
            capacity,
            window_span,
            entries: VecDeque::with_capacity(capacity + 1),
        }
    }

    /// Appends a recommendation; entry times must be non-decreasing.
    pub fn push(&mut self, rec: Recommendation) -> Result<(), HistoryError> {
        if let Some(newest) = self.entries.back() {
            if rec.time < newest.time {
                return Err(HistoryError::NonMonotonicTime);
            }
        }
        self.entries.push_back(rec);
        while self.entries.len() > self.capacity {
            self.entries.pop_front();
        }
        let cutoff = rec.time - self.window_span;
        while matches!(self.entries.front(), Some(front) if front.time < cutoff) {
            self.entries.pop_front();
        }
        Ok(())
    }

    pub fn newest(&self) -> Option<&Recommendation> {
        self.entries.back()
    }

    pub fn oldest(&self) -> Option<&Recommendation> {
        self.entries.front()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Recommendation> {
        self.entries.iter()
    }
}

fn clamp_replicas(value: f64, cfg: &AutoscalerConfig) -> u32 {
    let clamped = value
        .max(cfg.min_replicas as f64)
        .min(cfg.max_replicas as f64);
    clamped as u32
}

/// Replicas are integral; fractional forecasts round half-up, biasing
/// slightly toward capacity.
fn round_half_up(value: f64) -> f64 {
    num::floor(value + 0.5)
}

/// The reactive ratio rule: keep `current` inside the tolerance dead-band,
/// otherwise recommend `ceil(current * utilization / cpu_target)` clamped to
/// `[min, max]`.
pub fn reactive_recommend(current: u32, utilization: f64, cfg: &AutoscalerConfig) -> u32 {
    let ratio = utilization / cfg.cpu_target;
    if num::abs(ratio - 1.0) <= cfg.tolerance {
        return current.clamp(cfg.min_replicas, cfg.max_replicas);
    }
    let raw = num::ceil(current as f64 * utilization / cfg.cpu_target);
    clamp_replicas(raw, cfg)
}

/// Control forecast: the newest recommendation, unchanged.
pub fn forecast_hold(history: &RecommendationHistory) -> Result<u32, ForecastError> {
    history
        .newest()
        .map(|rec| rec.replicas)
        .ok_or(ForecastError::InsufficientData)
}

/// Least-squares prediction at `target_time`, before rounding and clamping.
pub fn forecast_linear_raw(
    history: &RecommendationHistory,
    target_time: f64,
) -> Result<f64, ForecastError> {
    if history.len() < 2 {
        return Err(ForecastError::InsufficientData);
    }
    let n = history.len() as f64;
    let mean_t = history.iter().map(|r| r.time).sum::<f64>() / n;
    let mean_y = history.iter().map(|r| r.replicas as f64).sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for rec in history.iter() {
        let dt = rec.time - mean_t;
        sxx += dt * dt;
        sxy += dt * (rec.replicas as f64 - mean_y);
    }
    if sxx == 0.0 {
        // All entries share one timestamp; no line is determined.
        return Err(ForecastError::InsufficientData);
    }
    let slope = sxy / sxx;
    Ok(mean_y + slope * (target_time - mean_t))
}

/// Ordinary least-squares fit over the history, evaluated at `target_time`,
/// rounded half-up and clamped.
pub fn forecast_linear(
    history: &RecommendationHistory,
    target_time: f64,
    cfg: &AutoscalerConfig,
) -> Result<u32, ForecastError> {
    let raw = forecast_linear_raw(history, target_time)?;
    Ok(clamp_replicas(round_half_up(raw), cfg))
}

/// Mean of the `min(k, len)` entries whose times are nearest `target_time`
/// (ties toward more recent), rounded half-up and clamped.
pub fn forecast_knn(
    history: &RecommendationHistory,
    target_time: f64,
    cfg: &AutoscalerConfig,
) -> Result<u32, ForecastError> {
    if history.is_empty() {
        return Err(ForecastError::InsufficientData);
    }
    let entries: Vec<&Recommendation> = history.iter().collect();
    let mut order: Vec<usize> = (0..entries.len()).collect();
    order.sort_by(|&a, &b| {
        let da = num::abs(entries[a].time - target_time);
        let db = num::abs(entries[b].time - target_time);
        da.total_cmp(&db).then(b.cmp(&a))
    });
    let k = cfg.knn_k.max(1).min(entries.len());
    let sum: f64 = order[..k].iter().map(|&i| entries[i].replicas as f64).sum();
    Ok(clamp_replicas(round_half_up(sum / k as f64), cfg))
}

/// Non-causal baseline: the recommendation from a lookahead pass that holds
/// at `target_time` (latest entry at or before it, step-function semantics).
/// `plan` must be sorted by time.
pub fn forecast_oracle(plan: &[Recommendation], target_time: f64) -> Result<u32, ForecastError> {
    plan.iter()
        .take_while(|rec| rec.time <= target_time)
        .last()
        .map(|rec| rec.replicas)
        .ok_or(ForecastError::InsufficientData)
}

/// One autoscaler tick, as written to the event log.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TickRecord {
    pub time: f64,
    pub utilization: f64,
    /// Reactive recommendation pushed this tick, if the reactive cadence fired.
    pub reactive: Option<u32>,
    /// The model's own forecast, if the forecast cadence fired and the model
    /// had enough data.
    pub forecast: Option<u32>,
    /// Replica count applied this tick, if the forecast cadence fired.
    pub applied: Option<u32>,
    /// Whether the model fell back to hold-current for lack of data.
    pub fallback: bool,
}

/// Drives the two cadences: reactive recommendations feed the history every
/// `reactive_interval`, and every `forecast_interval` the configured model's
/// forecast for `now + forecast_horizon` is applied. One logical actor; ticks
/// are totally ordered by time.
#[derive(Debug, Clone)]
pub struct Autoscaler {
    cfg: AutoscalerConfig,
    history: RecommendationHistory,
    next_reactive: f64,
    next_forecast: f64,
    oracle_plan: Option<Vec<Recommendation>>,
}

impl Autoscaler {
    pub fn new(cfg: AutoscalerConfig) -> Self {
        Self {
            cfg,
            history: RecommendationHistory::default(),
            next_reactive: 0.0,
            next_forecast: 0.0,
            oracle_plan: None,
        }
    }

    /// An autoscaler whose oracle model reads from the given lookahead pass.
    pub fn with_oracle_plan(cfg: AutoscalerConfig, plan: Vec<Recommendation>) -> Self {
        let mut scaler = Self::new(cfg);
        scaler.oracle_plan = Some(plan);
        scaler
    }

    pub fn config(&self) -> &AutoscalerConfig {
        &self.cfg
    }

    pub fn history(&self) -> &RecommendationHistory {
        &self.history
    }

    /// The next instant either cadence fires.
    pub fn next_tick(&self) -> f64 {
        self.next_reactive.min(self.next_forecast)
    }

    /// Runs whichever cadences are due at `now`. When both fire on the same
    /// instant the reactive recommendation is pushed first, so the forecast
    /// sees it. Returns what happened; the caller actuates `applied`.
    pub fn tick(&mut self, now: f64, current: u32, utilization: f64) -> TickRecord {
        let mut record = TickRecord {
            time: now,
            utilization,
            reactive: None,
            forecast: None,
            applied: None,
            fallback: false,
        };

        if now >= self.next_reactive {
            let replicas = reactive_recommend(current, utilization, &self.cfg);
            // Tick times are monotone, so the push cannot fail.
            let _ = self.history.push(Recommendation { time: now, replicas });
            record.reactive = Some(replicas);
            self.next_reactive += self.cfg.reactive_interval;
        }

        if now >= self.next_forecast {
            let target_time = now + self.cfg.forecast_horizon;
            let forecast = match self.cfg.model {
                ForecastModel::Hold => forecast_hold(&self.history),
                ForecastModel::Linear => forecast_linear(&self.history, target_time, &self.cfg),
                ForecastModel::Knn => forecast_knn(&self.history, target_time, &self.cfg),
                ForecastModel::Oracle => self
                    .oracle_plan
                    .as_deref()
                    .ok_or(ForecastError::InsufficientData)
                    .and_then(|plan| forecast_oracle(plan, target_time)),
            };
            record.forecast = forecast.ok();
            let (value, fallback) = match forecast {
                Ok(value) => (value, false),
                // Fall back to hold-current, never scale-to-min.
                Err(_) => (forecast_hold(&self.history).unwrap_or(current), true),
            };
            let combined = match self.cfg.combine {
                CombinePolicy::ModelOnly => value,
                CombinePolicy::MaxWithReactive => {
                    value.max(self.history.newest().map_or(value, |rec| rec.replicas))
                }
            };
            record.applied = Some(combined.clamp(self.cfg.min_replicas, self.cfg.max_replicas));
            record.fallback = fallback;
            self.next_forecast += self.cfg.forecast_interval;
        }

        record
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> AutoscalerConfig {
        AutoscalerConfig::default()
    }

    fn history_of(entries: &[(f64, u32)]) -> RecommendationHistory {
        let mut history = RecommendationHistory::default();
        for &(time, replicas) in entries {
            history.push(Recommendation { time, replicas }).unwrap();
        }
        history
    }

    #[test]
    fn reactive_at_target_holds() {
        assert_eq!(reactive_recommend(4, 0.75, &cfg()), 4);
    }

    #[test]
    fn reactive_scales_up_by_ratio() {
        // ceil(4 * 0.90 / 0.75) = ceil(4.8) = 5
        assert_eq!(reactive_recommend(4, 0.90, &cfg()), 5);
    }

    #[test]
    fn reactive_clamps_to_max() {
        // ceil(8 * 1.00 / 0.75) = ceil(10.67) = 11, clamped to 10
        assert_eq!(reactive_recommend(8, 1.00, &cfg()), 10);
    }

    #[test]
    fn reactive_scales_down_to_min() {
        // ceil(4 * 0.0 / 0.75) = 0, clamped to 1
        assert_eq!(reactive_recommend(4, 0.0, &cfg()), 1);
    }

    #[test]
    fn reactive_dead_band_is_a_fixed_point() {
        // 0.78 / 0.75 = 1.04, within the 10% band.
        for _ in 0..5 {
            assert_eq!(reactive_recommend(6, 0.78, &cfg()), 6);
        }
    }

    #[test]
    fn reactive_monotone_in_utilization() {
        for current in 1..=10u32 {
            let mut last = 0;
            for step in 0..=100 {
                let util = step as f64 / 100.0;
                let rec = reactive_recommend(current, util, &cfg());
                assert!(rec >= last, "current={current} util={util}");
                last = rec;
            }
        }
    }

    #[test]
    fn history_evicts_beyond_capacity() {
        let mut history = RecommendationHistory::default();
        for i in 0..13 {
            history
                .push(Recommendation { time: i as f64, replicas: 1 })
                .unwrap();
        }
        assert_eq!(history.len(), 12);
        assert_eq!(history.oldest().unwrap().time, 1.0);
    }

    #[test]
    fn history_single_push() {
        let mut history = RecommendationHistory::default();
        history.push(Recommendation { time: 0.0, replicas: 1 }).unwrap();
        assert_eq!(history.len(), 1);
    }

    #[test]
    fn history_evicts_beyond_window_span() {
        // Entries at t = 0, 10, ..., 110; pushing t=130 drops t=0
        // (130 - 0 > 120) but keeps t=10 (130 - 10 = 120).
        let mut history = history_of(
            &(0..12).map(|i| (i as f64 * 10.0, 2u32)).collect::<Vec<_>>(),
        );
        history.push(Recommendation { time: 130.0, replicas: 2 }).unwrap();
        assert_eq!(history.oldest().unwrap().time, 10.0);
        assert_eq!(history.len(), 12);
    }

    #[test]
    fn history_rejects_time_going_backwards() {
        let mut history = history_of(&[(10.0, 2)]);
        assert_eq!(
            history.push(Recommendation { time: 5.0, replicas: 2 }),
            Err(HistoryError::NonMonotonicTime)
        );
    }

    #[test]
    fn hold_returns_newest() {
        assert_eq!(forecast_hold(&history_of(&[(100.0, 7)])).unwrap(), 7);
        assert_eq!(forecast_hold(&history_of(&[(0.0, 1)])).unwrap(), 1);
        // Last value in time order, not the largest.
        let history = history_of(&[(0.0, 3), (10.0, 9), (20.0, 2)]);
        assert_eq!(forecast_hold(&history).unwrap(), 2);
        assert_eq!(
            forecast_hold(&RecommendationHistory::default()),
            Err(ForecastError::InsufficientData)
        );
    }

    #[test]
    fn linear_constant_history_has_zero_slope() {
        let history = history_of(&[(0.0, 3), (10.0, 3), (20.0, 3)]);
        assert_eq!(forecast_linear(&history, 60.0, &cfg()).unwrap(), 3);
    }

    #[test]
    fn linear_two_point_extrapolation() {
        // Line through (0,2) and (10,4) has value 6 at t=20.
        let history = history_of(&[(0.0, 2), (10.0, 4)]);
        assert_eq!(forecast_linear(&history, 20.0, &cfg()).unwrap(), 6);
    }

    #[test]
    fn linear_clamps_to_max() {
        // Values 2..=13 on an exact line over t = 0..110: raw forecast at
        // t=120 is 14, clamped to 10. (Capacity-wise the history itself
        // exceeds max, which only matters for the raw fit.)
        let entries: Vec<(f64, u32)> = (0..12).map(|i| (i as f64 * 10.0, 2 + i as u32)).collect();
        let history = history_of(&entries);
        let raw = forecast_linear_raw(&history, 120.0).unwrap();
        assert!((raw - 14.0).abs() < 1e-9);
        assert_eq!(forecast_linear(&history, 120.0, &cfg()).unwrap(), 10);
    }

    #[test]
    fn linear_needs_two_distinct_times() {
        assert_eq!(
            forecast_linear(&history_of(&[(5.0, 4)]), 10.0, &cfg()),
            Err(ForecastError::InsufficientData)
        );
        let same_instant = history_of(&[(5.0, 4), (5.0, 6)]);
        assert_eq!(
            forecast_linear(&same_instant, 10.0, &cfg()),
            Err(ForecastError::InsufficientData)
        );
    }

    #[test]
    fn knn_nearest_is_newest_for_future_targets() {
        let history = history_of(&[(0.0, 3), (10.0, 9), (20.0, 2)]);
        let mut one = cfg();
        one.knn_k = 1;
        assert_eq!(forecast_knn(&history, 30.0, &one).unwrap(), 2);
    }

    #[test]
    fn knn_means_nearest_three() {
        let history = history_of(&[(0.0, 9), (10.0, 4), (20.0, 5), (30.0, 6)]);
        assert_eq!(forecast_knn(&history, 40.0, &cfg()).unwrap(), 5);
    }

    #[test]
    fn knn_truncates_k_to_history_size() {
        let history = history_of(&[(0.0, 2), (10.0, 4)]);
        let mut five = cfg();
        five.knn_k = 5;
        assert_eq!(forecast_knn(&history, 20.0, &five).unwrap(), 3);
    }

    #[test]
    fn knn_empty_history_errors() {
        assert_eq!(
            forecast_knn(&RecommendationHistory::default(), 10.0, &cfg()),
            Err(ForecastError::InsufficientData)
        );
    }

    #[test]
    fn oracle_step_function_lookup() {
        let plan = [
            Recommendation { time: 10.0, replicas: 4 },
            Recommendation { time: 20.0, replicas: 6 },
        ];
        assert_eq!(forecast_oracle(&plan, 10.0).unwrap(), 4);
        assert_eq!(forecast_oracle(&plan, 15.0).unwrap(), 4);
        assert_eq!(forecast_oracle(&plan, 25.0).unwrap(), 6);
        assert_eq!(forecast_oracle(&[], 10.0), Err(ForecastError::InsufficientData));
        // Target before the first entry: nothing holds yet.
        assert_eq!(forecast_oracle(&plan, 5.0), Err(ForecastError::InsufficientData));
    }

    #[test]
    fn tick_hold_applies_newest_recommendation() {
        let mut scaler = Autoscaler::new(cfg());
        // At t=0 both cadences fire; utilization at target keeps current.
        let record = scaler.tick(0.0, 4, 0.75);
        assert_eq!(record.reactive, Some(4));
        assert_eq!(record.applied, Some(4));
        assert!(!record.fallback);
    }

    #[test]
    fn tick_linear_applies_extrapolation() {
        let mut al = cfg();
        al.model = ForecastModel::Linear;
        let mut scaler = Autoscaler::new(al);
        scaler.history.push(Recommendation { time: 0.0, replicas: 2 }).unwrap();
        scaler.history.push(Recommendation { time: 10.0, replicas: 4 }).unwrap();
        scaler.next_reactive = 15.0; // reactive not due at this tick
        scaler.next_forecast = 10.0;
        let record = scaler.tick(10.0, 4, 0.9);
        // Same line as the two-point example: value 6 at t = 10 + 10.
        assert_eq!(record.forecast, Some(6));
        assert_eq!(record.applied, Some(6));
    }

    #[test]
    fn tick_falls_back_to_current_on_empty_history() {
        let mut al = cfg();
        al.model = ForecastModel::Oracle; // no plan configured → always insufficient
        let mut scaler = Autoscaler::new(al);
        scaler.next_reactive = 15.0;
        let record = scaler.tick(0.0, 3, 0.5);
        assert_eq!(record.forecast, None);
        assert_eq!(record.applied, Some(3));
        assert!(record.fallback);
    }

    #[test]
    fn tick_cadences_interleave() {
        let mut scaler = Autoscaler::new(cfg());
        // Defaults: reactive every 15 s, forecast every 10 s.
        let fired: Vec<(f64, bool, bool)> = (0..=6)
            .map(|i| {
                let t = scaler.next_tick();
                assert_eq!(t, [0.0, 10.0, 15.0, 20.0, 30.0, 40.0, 45.0][i]);
                let record = scaler.tick(t, 1, 0.75);
                (t, record.reactive.is_some(), record.forecast.is_some())
            })
            .collect();
        assert_eq!(
            fired,
            alloc::vec![
                (0.0, true, true),
                (10.0, false, true),
                (15.0, true, false),
                (20.0, false, true),
                (30.0, true, true),
                (40.0, false, true),
                (45.0, true, false),
            ]
        );
    }

    #[test]
    fn max_with_reactive_never_scales_below_reactive() {
        let mut al = cfg();
        al.model = ForecastModel::Linear;
        al.combine = CombinePolicy::MaxWithReactive;
        let mut scaler = Autoscaler::new(al);
        // Declining history: the line forecasts below the newest reactive value.
        scaler.history.push(Recommendation { time: 0.0, replicas: 8 }).unwrap();
        scaler.history.push(Recommendation { time: 10.0, replicas: 6 }).unwrap();
        scaler.next_reactive = 15.0;
        scaler.next_forecast = 10.0;
        let record = scaler.tick(10.0, 6, 0.5);
        assert_eq!(record.forecast, Some(4)); // line through (0,8),(10,6) at t=20
        assert_eq!(record.applied, Some(6)); // held up by the reactive value
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        /// Histories shaped like real tick feeds: a random start, then
        /// entries at least a second apart.
        fn arbitrary_history() -> impl Strategy<Value = RecommendationHistory> {
            (
                0.0f64..100.0,
                proptest::collection::vec((1.0f64..20.0, 1u32..=10), 1..12),
            )
                .prop_map(|(start, raw)| {
                    let mut history = RecommendationHistory::new(16, f64::INFINITY);
                    let mut time = start;
                    for (gap, replicas) in raw {
                        history.push(Recommendation { time, replicas }).unwrap();
                        time += gap;
                    }
                    history
                })
        }

        proptest! {
            #[test]
            fn linear_matches_raw_sum_formulation(history in arbitrary_history(), target in 0.0f64..2000.0) {
                // Independent route: unscaled normal equations.
                let n = history.len() as f64;
                let st: f64 = history.iter().map(|r| r.time).sum();
                let sy: f64 = history.iter().map(|r| r.replicas as f64).sum();
                let sty: f64 = history.iter().map(|r| r.time * r.replicas as f64).sum();
                let stt: f64 = history.iter().map(|r| r.time * r.time).sum();
                let det = n * stt - st * st;

                let ours = forecast_linear_raw(&history, target);
                if history.len() < 2 || det.abs() < 1e-9 {
                    // Degenerate: either route refuses.
                    prop_assert!(ours.is_err() || det.abs() < 1e-6);
                } else {
                    let slope = (n * sty - st * sy) / det;
                    let intercept = (sy * stt - st * sty) / det;
                    let expected = intercept + slope * target;
                    prop_assert!((ours.unwrap() - expected).abs() < 1e-6);
                }
            }

            #[test]
            fn knn_with_k_covering_all_is_the_rounded_mean(history in arbitrary_history()) {
                let mut wide = cfg();
                wide.knn_k = 64;
                let mean: f64 = history.iter().map(|r| r.replicas as f64).sum::<f64>()
                    / history.len() as f64;
                let expected = (mean + 0.5).floor().clamp(1.0, 10.0) as u32;
                prop_assert_eq!(forecast_knn(&history, 5000.0, &wide).unwrap(), expected);
            }

            #[test]
            fn constant_histories_are_fixed_points(value in 1u32..=10, len in 1usize..12) {
                let entries: Vec<(f64, u32)> = (0..len).map(|i| (i as f64 * 10.0, value)).collect();
                let history = history_of(&entries);
                let target = len as f64 * 10.0 + 10.0;
                prop_assert_eq!(forecast_hold(&history).unwrap(), value);
                prop_assert_eq!(forecast_knn(&history, target, &cfg()).unwrap(), value);
                if len >= 2 {
                    prop_assert_eq!(forecast_linear(&history, target, &cfg()).unwrap(), value);
                }
            }

            #[test]
            fn forecasters_are_pure(history in arbitrary_history(), target in 0.0f64..2000.0) {
                prop_assert_eq!(forecast_hold(&history), forecast_hold(&history));
                prop_assert_eq!(
                    forecast_knn(&history, target, &cfg()),
                    forecast_knn(&history, target, &cfg())
                );
                prop_assert_eq!(
                    forecast_linear(&history, target, &cfg()),
                    forecast_linear(&history, target, &cfg())
                );
            }
        }
    }
}
