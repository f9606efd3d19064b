//! WebSocket front end: `/session` runs one [`Session`] per connection and
//! `/health` reports service status.

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::Duration;

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::State;
use axum::response::IntoResponse;
use axum::routing::get;
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use tokio::net::TcpListener;

use crate::error::{LabError, Result};
use crate::protocol::{parse_client, ServerFrame, ServerMessage, PROTOCOL_VERSION};
use crate::session::{log_path, Session, SessionConfig, SessionEvent};

pub const DEFAULT_BIND: &str = "127.0.0.1:8787";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServeConfig {
    #[serde(default = "default_bind")]
    pub bind: String,
    #[serde(default)]
    pub session: SessionConfig,
    /// Session logs are written here when a connection closes.
    #[serde(default)]
    pub log_dir: Option<PathBuf>,
}

fn default_bind() -> String {
    DEFAULT_BIND.to_string()
}

impl Default for ServeConfig {
    fn default() -> Self {
        ServeConfig {
            bind: default_bind(),
            session: SessionConfig::default(),
            log_dir: None,
        }
    }
}

struct AppState {
    config: ServeConfig,
    next_id: AtomicU64,
    live: AtomicUsize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Health {
    pub status: String,
    pub v: u32,
    pub sessions: usize,
}

pub fn router(config: ServeConfig) -> Result<Router> {
    config.session.validate()?;
    let state = Arc::new(AppState {
        config,
        next_id: AtomicU64::new(1),
        live: AtomicUsize::new(0),
    });
    Ok(Router::new()
        .route("/health", get(health))
        .route("/session", get(upgrade))
        .with_state(state))
}

async fn health(State(state): State<Arc<AppState>>) -> Json<Health> {
    Json(Health {
        status: "ok".into(),
        v: PROTOCOL_VERSION,
        sessions: state.live.load(Ordering::Relaxed),
    })
}

async fn upgrade(ws: WebSocketUpgrade, State(state): State<Arc<AppState>>) -> impl IntoResponse {
    ws.on_upgrade(move |socket| run_socket(socket, state))
}

async fn send(socket: &mut WebSocket, msg: ServerMessage) -> bool {
    let text = serde_json::to_string(&ServerFrame::from(msg)).expect("frames serialize");
    socket.send(Message::Text(text.into())).await.is_ok()
}

async fn run_socket(mut socket: WebSocket, state: Arc<AppState>) {
    let id = state.next_id.fetch_add(1, Ordering::Relaxed);
    let mut session = match Session::new(id, state.config.session.clone()) {
        Ok(s) => s,
        Err(e) => {
            tracing::error!("session {id}: {e}");
            return;
        }
    };
    state.live.fetch_add(1, Ordering::Relaxed);
    tracing::info!(session = id, "session opened");
    let mut tick_ms = session.tick_ms();
    let mut ticker = tokio::time::interval(Duration::from_millis(tick_ms));
    ticker.set_missed_tick_behavior(tokio::time::MissedTickBehavior::Delay);
    let mut open = send(&mut socket, session.hello()).await && send(&mut socket, session.state_update()).await;
    while open {
        let replies = tokio::select! {
            _ = ticker.tick() => session.handle(SessionEvent::Tick),
            incoming = socket.recv() => match incoming {
                Some(Ok(Message::Text(text))) => match parse_client(&text) {
                    Ok(message) => session.handle(SessionEvent::Client { message }),
                    Err(reply) => vec![reply],
                },
                Some(Ok(Message::Close(_))) | None | Some(Err(_)) => break,
                Some(Ok(_)) => Vec::new(),
            },
        };
        for reply in replies {
            if !send(&mut socket, reply).await {
                open = false;
                break;
            }
        }
        if session.tick_ms() != tick_ms {
            tick_ms = session.tick_ms();
            ticker = tokio::time::interval(Duration::from_millis(tick_ms));
            ticker.set_missed_tick_behavior(tokio::time::MissedTickBehavior::Delay);
        }
    }
    tracing::info!(session = id, events = session.events().len(), "session closed");
    if let Some(dir) = &state.config.log_dir {
        if let Err(e) = write_log(dir, &session) {
            tracing::error!("session {id}: {e}");
        }
    }
    state.live.fetch_sub(1, Ordering::Relaxed);
}

fn write_log(dir: &std::path::Path, session: &Session) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| LabError::io(dir, e))?;
    let path = log_path(dir, session.id());
    let file = std::fs::File::create(&path).map_err(|e| LabError::io(&path, e))?;
    let mut w = std::io::BufWriter::new(file);
    session.export_log(&mut w).map_err(|e| LabError::io(&path, e))?;
    std::io::Write::flush(&mut w).map_err(|e| LabError::io(&path, e))
}

/// Binds `config.bind` and serves until the process is stopped.
pub async fn serve(config: ServeConfig) -> Result<()> {
    let addr: SocketAddr = config
        .bind
        .parse()
        .map_err(|e| LabError::field("bind", format!("{e}")))?;
    let app = router(config)?;
    let listener = TcpListener::bind(addr).await.map_err(|e| LabError::io(addr.to_string(), e))?;
    tracing::info!("listening on {addr}");
    axum::serve(listener, app)
        .await
        .map_err(|e| LabError::Runtime(e.to_string()))
}
