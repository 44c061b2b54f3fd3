//! Control service and command-line tools for the simulated chiller plant.

pub mod api;
pub mod cli;
pub mod config;
pub mod service;

use std::sync::{Arc, Mutex};
use std::time::Duration;

use crate::api::Shared;
use crate::config::ServiceConfig;
use crate::service::ServiceState;

/// Wall-clock pause between simulated minutes; `None` runs flat out.
pub fn tick_interval(speedup: Option<f64>) -> Option<Duration> {
    speedup.map(|s| Duration::from_secs_f64(60.0 / s))
}

/// Runs the simulator clock on its own thread until the scenario ends or the
/// plant fails. Each step holds the state lock, so API mutations land
/// between minutes.
pub fn spawn_clock(state: Shared, interval: Option<Duration>) -> std::thread::JoinHandle<()> {
    std::thread::spawn(move || loop {
        {
            let Ok(mut st) = state.lock() else { return };
            if st.finished() {
                tracing::info!("scenario horizon reached; clock stopped");
                return;
            }
            if let Err(e) = st.step() {
                tracing::error!("simulation stopped: {e:#}");
                return;
            }
        }
        match interval {
            Some(d) => std::thread::sleep(d),
            None => std::thread::yield_now(),
        }
    })
}

pub async fn serve(cfg: ServiceConfig) -> anyhow::Result<()> {
    let state: Shared = Arc::new(Mutex::new(ServiceState::start(&cfg)?));
    let listener = tokio::net::TcpListener::bind(&cfg.listen).await?;
    tracing::info!("listening on {}", listener.local_addr()?);
    spawn_clock(Arc::clone(&state), tick_interval(cfg.speedup));
    axum::serve(listener, api::router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}
