//! Request-trace ingestion: the canonical text format, a layout-driven
//! fixed-width binary adapter, window slicing, and rate bucketing.
//!
//! The canonical interchange format is one decimal timestamp per line
//! (seconds since the trace epoch), with `#`-prefixed comments and blank
//! lines ignored. Binary access logs are decoded through a
//! [`BinaryRecordLayout`] supplied as configuration, since fixed-width log
//! formats differ per dataset.

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

/// Largest integer a f64 holds exactly; timestamps beyond this lose precision.
const MAX_EXACT_TIMESTAMP: u64 = 1 << 53;

/// A single request arrival, in seconds since the trace epoch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceEvent {
    pub timestamp: f64,
}

impl TraceEvent {
    pub fn new(timestamp: f64) -> Self {
        Self { timestamp }
    }
}

/// Arrivals bucketed into consecutive half-open windows `[i*w, (i+1)*w)`
/// starting at `origin`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateSeries {
    pub bucket_width: f64,
    pub origin: f64,
    pub counts: Vec<u64>,
}

impl RateSeries {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn peak(&self) -> u64 {
        self.counts.iter().copied().max().unwrap_or(0)
    }
}

/// Byte order of the timestamp field within a binary record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Endianness {
    Big,
    Little,
}

/// Unit of the integer timestamp field within a binary record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TimestampUnit {
    Seconds,
    Milliseconds,
}

/// Describes where the arrival timestamp sits inside a fixed-width record.
///
/// Fixed-width access-log formats differ per dataset, so the layout is
/// explicit configuration rather than a hard-coded structure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinaryRecordLayout {
    /// Total record size in bytes.
    pub record_size: usize,
    /// Offset of the timestamp field within the record.
    pub timestamp_offset: usize,
    /// Width of the timestamp field in bytes (1..=8).
    pub timestamp_width: usize,
    pub endianness: Endianness,
    pub timestamp_unit: TimestampUnit,
}

impl BinaryRecordLayout {
    pub fn validate(&self) -> Result<(), TraceError> {
        if self.record_size == 0 {
            return Err(TraceError::InvalidLayout {
                reason: "record_size must be at least 1 byte",
            });
        }
        if self.timestamp_width == 0 || self.timestamp_width > 8 {
            return Err(TraceError::InvalidLayout {
                reason: "timestamp_width must be between 1 and 8 bytes",
            });
        }
        if self.timestamp_offset + self.timestamp_width > self.record_size {
            return Err(TraceError::InvalidLayout {
                reason: "timestamp field extends past the end of the record",
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TraceError {
    #[error("line {line}: not a timestamp")]
    MalformedLine { line: usize },
    #[error("line {line}: negative timestamp")]
    NegativeTimestamp { line: usize },
    #[error("invalid binary layout: {reason}")]
    InvalidLayout { reason: &'static str },
    #[error("trailing partial record: {remainder} bytes left over (record size {record_size})")]
    TruncatedRecord { remainder: usize, record_size: usize },
    #[error("record {record}: raw timestamp {raw} exceeds the exactly representable range")]
    TimestampOverflow { record: usize, raw: u64 },
    #[error("record {record}: timestamp precedes the rebase origin")]
    NonChronologicalRebase { record: usize },
}

/// Parses the canonical text trace format.
///
/// One decimal timestamp (seconds) per line; blank lines and lines starting
/// with `#` are skipped. Out-of-order input is sorted rather than rejected,
/// since real access logs are nearly but not exactly ordered.
pub fn parse_text_trace(input: &str) -> Result<Vec<TraceEvent>, TraceError> {
    let mut events = Vec::new();
    for (idx, raw) in input.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let value: f64 = trimmed
            .parse()
            .map_err(|_| TraceError::MalformedLine { line })?;
        if !value.is_finite() {
            return Err(TraceError::MalformedLine { line });
        }
        if value < 0.0 {
            return Err(TraceError::NegativeTimestamp { line });
        }
        events.push(TraceEvent::new(value));
    }
    events.sort_by(|a, b| a.timestamp.total_cmp(&b.timestamp));
    Ok(events)
}

/// Renders events back to the canonical text format (one timestamp per line).
pub fn serialize_text_trace(events: &[TraceEvent]) -> String {
    use core::fmt::Write;
    let mut out = String::new();
    for event in events {
        // `{}` prints the shortest representation that round-trips exactly.
        let _ = writeln!(out, "{}", event.timestamp);
    }
    out
}

/// Decodes fixed-width binary records into events, one per record.
///
/// Record order is preserved as-is (no sorting), so parsing a concatenation
/// equals concatenating the parses. With `rebase` set, all timestamps are
/// shifted so the first record lands at t=0; a later record preceding the
/// first is then an error.
pub fn parse_binary_trace(
    input: &[u8],
    layout: &BinaryRecordLayout,
    rebase: bool,
) -> Result<Vec<TraceEvent>, TraceError> {
    layout.validate()?;
    let remainder = input.len() % layout.record_size;
    if remainder != 0 {
        return Err(TraceError::TruncatedRecord {
            remainder,
            record_size: layout.record_size,
        });
    }

    let mut events = Vec::with_capacity(input.len() / layout.record_size);
    let mut origin = None;
    for (record, chunk) in input.chunks_exact(layout.record_size).enumerate() {
        let field = &chunk[layout.timestamp_offset..layout.timestamp_offset + layout.timestamp_width];
        let raw = read_unsigned(field, layout.endianness);
        if raw > MAX_EXACT_TIMESTAMP {
            return Err(TraceError::TimestampOverflow { record, raw });
        }
        let seconds = match layout.timestamp_unit {
            TimestampUnit::Seconds => raw as f64,
            TimestampUnit::Milliseconds => raw as f64 / 1000.0,
        };
        let timestamp = if rebase {
            let base = *origin.get_or_insert(seconds);
            if seconds < base {
                return Err(TraceError::NonChronologicalRebase { record });
            }
            seconds - base
        } else {
            seconds
        };
        events.push(TraceEvent::new(timestamp));
    }
    Ok(events)
}

fn read_unsigned(bytes: &[u8], endianness: Endianness) -> u64 {
    let mut buf = [0u8; 8];
    match endianness {
        Endianness::Big => buf[8 - bytes.len()..].copy_from_slice(bytes),
        Endianness::Little => buf[..bytes.len()].copy_from_slice(bytes),
    }
    match endianness {
        Endianness::Big => u64::from_be_bytes(buf),
        Endianness::Little => u64::from_le_bytes(buf),
    }
}

/// Selects events with `start <= t < start + duration` and rebases them to
/// the window start. Input must be sorted; output is sorted.
pub fn slice_window(events: &[TraceEvent], start: f64, duration: f64) -> Vec<TraceEvent> {
    debug_assert!(duration > 0.0);
    events
        .iter()
        .filter(|e| e.timestamp >= start && e.timestamp < start + duration)
        .map(|e| TraceEvent::new(e.timestamp - start))
        .collect()
}

/// Buckets events into a [`RateSeries`] with half-open buckets
/// `[i*w, (i+1)*w)`; the series covers through the last event.
pub fn to_rate_series(events: &[TraceEvent], bucket_width: f64) -> RateSeries {
    debug_assert!(bucket_width > 0.0);
    let mut counts: Vec<u64> = Vec::new();
    for event in events {
        let idx = crate::num::floor(event.timestamp / bucket_width) as usize;
        if idx >= counts.len() {
            counts.resize(idx + 1, 0);
        }
        counts[idx] += 1;
    }
    RateSeries {
        bucket_width,
        origin: 0.0,
        counts,
    }
}
