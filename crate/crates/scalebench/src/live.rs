//! Live load mode: each batch's requests fire as concurrent HTTP POSTs, and
//! the next batch waits for its scheduled start or for the previous batch to
//! finish, whichever is later — the same drift rule as the simulated loop,
//! only on the wall clock.
//!
//! A failure is any of: connection error, non-2xx status, or timeout; the
//! kind is recorded per request when raw dumps are enabled.

use std::net::TcpStream;
use std::time::{Duration, Instant};

use anyhow::{bail, Context, Result};
use reqwest::header::{HeaderMap, HeaderName, HeaderValue};
use serde::Serialize;

use scalebench_core::loadgen::{
    aggregate_outcomes, plan_batches, BatchResult, FailureKind, Outcome,
};
use scalebench_core::trace::TraceEvent;

use crate::config::LiveConfig;

/// One request's fate, for the optional raw dump.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct RawRequestRecord {
    pub batch: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub latency_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failure: Option<FailureKind>,
}

/// Checks the target accepts TCP connections, without sending any request.
pub fn preflight(url: &str) -> Result<()> {
    let parsed: reqwest::Url = url.parse().with_context(|| format!("invalid url {url}"))?;
    let host = parsed
        .host_str()
        .with_context(|| format!("url {url} has no host"))?;
    let port = parsed
        .port_or_known_default()
        .with_context(|| format!("url {url} has no port"))?;
    let addrs = std::net::ToSocketAddrs::to_socket_addrs(&(host, port))
        .with_context(|| format!("resolving {host}:{port}"))?
        .collect::<Vec<_>>();
    if addrs.is_empty() {
        bail!("{host}:{port} resolved to no addresses");
    }
    let mut last_err = None;
    for addr in addrs {
        match TcpStream::connect_timeout(&addr, Duration::from_secs(5)) {
            Ok(_) => return Ok(()),
            Err(err) => last_err = Some(err),
        }
    }
    Err(last_err.unwrap()).with_context(|| format!("target {url} is unreachable"))
}

fn header_map(live: &LiveConfig) -> Result<HeaderMap> {
    let mut map = HeaderMap::new();
    for (name, value) in &live.headers {
        let name: HeaderName = name.parse().with_context(|| format!("header name {name}"))?;
        let value: HeaderValue = value.parse().with_context(|| format!("header value for {name:?}"))?;
        map.insert(name, value);
    }
    Ok(map)
}

async fn send_one(client: reqwest::Client, url: String, body: String, headers: HeaderMap) -> Outcome {
    let started = Instant::now();
    match client.post(&url).headers(headers).body(body).send().await {
        Ok(response) => {
            let status = response.status();
            // Drain the body; the latency covers the whole exchange.
            let _ = response.bytes().await;
            let elapsed = started.elapsed().as_secs_f64();
            if status.is_success() {
                Outcome::Success { latency: elapsed }
            } else {
                Outcome::Failure {
                    kind: FailureKind::HttpStatus,
                    after: elapsed,
                }
            }
        }
        Err(err) => {
            let kind = if err.is_timeout() {
                FailureKind::Timeout
            } else {
                FailureKind::Connect
            };
            Outcome::Failure {
                kind,
                after: started.elapsed().as_secs_f64(),
            }
        }
    }
}

/// Replays the trace against the live target. Returns the per-batch results
/// and, when `collect_raw` is set, one record per request.
pub async fn run_live(
    events: &[TraceEvent],
    interval: f64,
    live: &LiveConfig,
    collect_raw: bool,
) -> Result<(Vec<BatchResult>, Vec<RawRequestRecord>)> {
    let client = reqwest::Client::builder()
        .timeout(Duration::from_secs_f64(live.timeout))
        .build()
        .context("building http client")?;
    let headers = header_map(live)?;

    let batches = plan_batches(events, interval);
    let mut results = Vec::with_capacity(batches.len());
    let mut raw = Vec::new();
    let start = Instant::now();

    for batch in &batches {
        let scheduled = Duration::from_secs_f64(batch.scheduled_start);
        if let Some(wait) = scheduled.checked_sub(start.elapsed()) {
            tokio::time::sleep(wait).await;
        }
        let dispatch_time = start.elapsed().as_secs_f64();

        let in_flight = (0..batch.len()).map(|_| {
            send_one(
                client.clone(),
                live.url.clone(),
                live.body.clone(),
                headers.clone(),
            )
        });
        let outcomes: Vec<Outcome> = futures::future::join_all(in_flight).await;

        if collect_raw {
            raw.extend(outcomes.iter().map(|outcome| match *outcome {
                Outcome::Success { latency } => RawRequestRecord {
                    batch: batch.index,
                    latency_s: Some(latency),
                    failure: None,
                },
                Outcome::Failure { kind, .. } => RawRequestRecord {
                    batch: batch.index,
                    latency_s: None,
                    failure: Some(kind),
                },
            }));
        }
        results.push(aggregate_outcomes(batch.index, dispatch_time, &outcomes));
    }

    Ok((results, raw))
}
