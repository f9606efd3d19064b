//! JSON wire protocol of the session service. Every frame is an object with
//! a `v` field (the protocol version) and a `type` tag.

use rlif_core::intervention::Controller;
use rlif_core::mdp::Cell;
use serde::{Deserialize, Serialize};

pub const PROTOCOL_VERSION: u32 = 1;

/// Messages a client may send.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ClientMessage {
    /// Take control; the transition just executed is labeled. An optional
    /// `action` is executed at once.
    InterveneStart {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        action: Option<usize>,
    },
    /// One human-controlled step.
    ExpertAction { action: usize },
    /// Return control to the agent.
    Release,
    SetTick { tick_ms: u64 },
    /// Abandon the current episode and start a fresh one.
    Reset,
    /// Begin the next round of episodes.
    StartRound,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClientFrame {
    pub v: u32,
    #[serde(flatten)]
    pub msg: ClientMessage,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Between rounds; ticks do nothing.
    Paused,
    /// The agent steps once per tick.
    Stepping,
    /// The human controls; steps happen on `expert_action`.
    AwaitingHuman,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorCode {
    Malformed,
    UnsupportedVersion,
    NotInControl,
    AlreadyInControl,
    NoRoundActive,
    RoundActive,
    EpisodeOver,
    InvalidAction,
    InvalidTick,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransitionView {
    pub s: usize,
    pub a: usize,
    pub s_next: usize,
    pub controller: Controller,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridShape {
    pub width: usize,
    pub height: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundMetrics {
    pub dataset_size: usize,
    pub episodes_done: usize,
    /// Pooled over the episodes finished this round.
    pub intervention_rate: f64,
    /// True return of the policy after the latest refit.
    #[serde(default)]
    pub last_true_return: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateUpdate {
    pub round: usize,
    pub episode: usize,
    pub step: usize,
    pub grid: GridShape,
    pub state: usize,
    pub agent_cell: Cell,
    pub controller: Controller,
    pub mode: Mode,
    /// The step limit or an absorbing state was reached; the next tick
    /// closes the episode.
    pub episode_over: bool,
    #[serde(default)]
    pub last_transition: Option<TransitionView>,
    /// Learner state values, row `r` holding `y = r + 1`.
    pub heatmap: Vec<Vec<f64>>,
    pub metrics: RoundMetrics,
}

/// Messages the server sends.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ServerMessage {
    SessionHello {
        session_id: u64,
        grid: GridShape,
        start: Cell,
        goal: Cell,
        route: Vec<Cell>,
        n_actions: usize,
        tick_ms: u64,
        horizon: usize,
        episodes_per_round: usize,
    },
    StateUpdate(Box<StateUpdate>),
    EpisodeEnd {
        round: usize,
        episode: usize,
        steps: usize,
        intervention_count: usize,
        steps_under_expert_control: usize,
        intervention_rate: f64,
    },
    RoundEnd {
        round: usize,
        true_return: f64,
        intervention_rate: f64,
        dataset_size: usize,
    },
    Error { code: ErrorCode, message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ServerFrame {
    pub v: u32,
    #[serde(flatten)]
    pub msg: ServerMessage,
}

impl From<ServerMessage> for ServerFrame {
    fn from(msg: ServerMessage) -> Self {
        ServerFrame {
            v: PROTOCOL_VERSION,
            msg,
        }
    }
}

impl ServerMessage {
    pub fn error(code: ErrorCode, message: impl Into<String>) -> Self {
        ServerMessage::Error {
            code,
            message: message.into(),
        }
    }
}

/// Parses a client frame, answering with the error frame to send back.
pub fn parse_client(text: &str) -> Result<ClientMessage, ServerMessage> {
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| ServerMessage::error(ErrorCode::Malformed, e.to_string()))?;
    match value.get("v").and_then(serde_json::Value::as_u64) {
        Some(v) if v == u64::from(PROTOCOL_VERSION) => {}
        Some(v) => {
            return Err(ServerMessage::error(
                ErrorCode::UnsupportedVersion,
                format!("protocol version {v} is not supported, expected {PROTOCOL_VERSION}"),
            ))
        }
        None => return Err(ServerMessage::error(ErrorCode::Malformed, "missing numeric `v` field")),
    }
    serde_json::from_value::<ClientFrame>(value)
        .map(|f| f.msg)
        .map_err(|e| ServerMessage::error(ErrorCode::Malformed, e.to_string()))
}
