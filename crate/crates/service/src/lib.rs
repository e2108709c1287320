//! HTTP service for compose-time guidance.
//!
//! Moderators upload rulesets per community; the composer asks for live
//! guidance while a user drafts and gates the final submission. Treated
//! users see guidance, control users never do. Every state change is
//! appended to a JSON-Lines event log before the request is acknowledged,
//! and the same log feeds the effect reports.
//!
//! | route | purpose |
//! |---|---|
//! | `PUT /communities/{id}/ruleset` | replace a community's ruleset |
//! | `GET /communities/{id}/ruleset` | the current document |
//! | `POST /communities/{id}/evaluate` | live guidance for a draft |
//! | `POST /communities/{id}/submit` | gated submission |
//! | `GET /assignment/{user_id}` | a user's arm |
//! | `POST /events` | downstream outcome events (removals, reports, engagement, activity) |
//! | `GET /report?outcome=&covariate=&format=` | effect report over the log |
//! | `GET /healthz` | liveness and counts |

pub mod api;
pub mod config;
mod error;
pub mod journal;
pub mod state;

use std::sync::Arc;

pub use api::router;
pub use config::ServiceConfig;
pub use error::ServiceError;
pub use state::{system_clock, AppState, Clock};

/// Opens the state, binds the listener and serves until Ctrl-C. Prints
/// `listening on <addr>` to stdout once the socket is bound.
pub async fn serve(config: ServiceConfig) -> Result<(), ServiceError> {
    let listen = config.listen.clone();
    let (state, info) = AppState::open(config, system_clock())?;
    if info.truncated_bytes > 0 {
        tracing::warn!("dropped {} bytes of an unacknowledged partial event", info.truncated_bytes);
    }
    tracing::info!("replayed {} events", info.events);
    let listener = tokio::net::TcpListener::bind(&listen).await?;
    let addr = listener.local_addr()?;
    {
        use std::io::Write;
        let mut out = std::io::stdout().lock();
        writeln!(out, "listening on {addr}")?;
        out.flush()?;
    }
    axum::serve(listener, router(Arc::new(state)))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}
