//! A stub HTTP target for live-mode testing: answers every POST with 200
//! after a configured delay, injecting failures at a configured rate from a
//! seeded generator so failure positions replay deterministically.

use std::net::SocketAddr;
use std::sync::{Arc, Mutex};
use std::time::Duration;

use anyhow::{Context, Result};
use axum::extract::State;
use axum::http::{Method, StatusCode};
use axum::Router;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tokio::sync::oneshot;
use tokio::task::JoinHandle;

#[derive(Debug, Clone, Copy)]
pub struct StubOptions {
    /// Response delay, seconds.
    pub latency: f64,
    /// Fraction of requests answered with 500, in [0, 1].
    pub failure_rate: f64,
    /// 0 picks an ephemeral port.
    pub port: u16,
    pub seed: u64,
}

impl Default for StubOptions {
    fn default() -> Self {
        Self {
            latency: 0.05,
            failure_rate: 0.0,
            port: 0,
            seed: 0,
        }
    }
}

struct StubState {
    latency: Duration,
    failure_rate: f64,
    rng: Mutex<ChaCha8Rng>,
}

/// A running stub server; dropping the handle aborts it, [`StubHandle::shutdown`]
/// stops it gracefully.
pub struct StubHandle {
    addr: SocketAddr,
    shutdown: Option<oneshot::Sender<()>>,
    task: JoinHandle<()>,
}

impl StubHandle {
    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn url(&self) -> String {
        format!("http://{}/execute", self.addr)
    }

    pub async fn shutdown(mut self) {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        let _ = (&mut self.task).await;
    }
}

impl Drop for StubHandle {
    fn drop(&mut self) {
        self.task.abort();
    }
}

async fn handle(State(state): State<Arc<StubState>>, method: Method) -> (StatusCode, &'static str) {
    if method != Method::POST {
        return (StatusCode::METHOD_NOT_ALLOWED, "POST only");
    }
    // Draw in arrival order, before sleeping, so positions are reproducible.
    let fail = {
        let mut rng = state.rng.lock().unwrap();
        rng.gen_range(0.0..1.0) < state.failure_rate
    };
    tokio::time::sleep(state.latency).await;
    if fail {
        (StatusCode::INTERNAL_SERVER_ERROR, "injected failure")
    } else {
        (StatusCode::OK, "ok")
    }
}

/// Binds and serves the stub target. A busy port fails here, before any
/// traffic.
pub async fn serve_stub_target(opts: StubOptions) -> Result<StubHandle> {
    let listener = tokio::net::TcpListener::bind(("127.0.0.1", opts.port))
        .await
        .with_context(|| format!("binding stub target port {}", opts.port))?;
    let addr = listener.local_addr().context("reading stub address")?;

    let state = Arc::new(StubState {
        latency: Duration::from_secs_f64(opts.latency),
        failure_rate: opts.failure_rate,
        rng: Mutex::new(ChaCha8Rng::seed_from_u64(opts.seed)),
    });
    let app = Router::new().fallback(handle).with_state(state);

    let (tx, rx) = oneshot::channel::<()>();
    let task = tokio::spawn(async move {
        let _ = axum::serve(listener, app)
            .with_graceful_shutdown(async {
                let _ = rx.await;
            })
            .await;
    });

    Ok(StubHandle {
        addr,
        shutdown: Some(tx),
        task,
    })
}
