//! A web service for running confluence tools on rewrite-system problems.
//!
//! Tools come from a config directory tree (see [`cocoweb_core::registry`]).
//! Submitted jobs are queued and run by a single worker, one tool process at
//! a time; clients poll for results.

pub mod api;
pub mod config;
pub mod cops;
pub mod job;
pub mod store;
pub mod worker;

pub use api::{router, AppState};
pub use config::ServiceConfig;

/// Binds `config.listen_addr` and serves until the process ends.
pub async fn serve(config: ServiceConfig) -> std::io::Result<()> {
    let addr = config.listen_addr;
    let state = AppState::new(config).map_err(std::io::Error::other)?;
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(state)).await
}
