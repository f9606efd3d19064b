//! One live training session: a gridworld, the learner's dataset, and the
//! episode in progress. The machine is driven by ticks and client messages
//! and is fully deterministic in its configuration and event sequence, so
//! an exported event log replays to the same dataset and round records.

use std::io::{BufRead, Write};
use std::path::PathBuf;

use rlif_core::intervention::{Controller, EpisodeRecorder, InterventionEpisode, RewardConvention};
use rlif_core::learners::Dataset;
use rlif_core::loops::{fit, true_return, Exploring, Fit, LearnerSpec, RoundRecord, DEFAULT_EXPLORATION};
use rlif_core::mdp::{
    build_gridworld, is_absorbing, sample_index, sample_transition, GridworldSpec, Policy, TabularMdp,
};
use rlif_core::rng::{derive, LabRng};
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::io::{heatmap_matrix, DatasetLine};
use crate::protocol::{
    ClientMessage, ErrorCode, GridShape, Mode, RoundMetrics, ServerMessage, StateUpdate,
    TransitionView, PROTOCOL_VERSION,
};

pub const DEFAULT_TICK_MS: u64 = 300;
pub const MIN_TICK_MS: u64 = 10;
pub const MAX_TICK_MS: u64 = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SessionConfig {
    /// Grid layout; the standard grid for `grid_seed` when absent.
    #[serde(default)]
    pub layout: Option<GridworldSpec>,
    #[serde(default)]
    pub grid_seed: u64,
    #[serde(default = "default_horizon")]
    pub horizon: usize,
    #[serde(default = "default_episodes")]
    pub episodes_per_round: usize,
    #[serde(default)]
    pub learner: LearnerSpec,
    #[serde(default = "default_exploration")]
    pub exploration: f64,
    #[serde(default)]
    pub reward_convention: RewardConvention,
    #[serde(default = "yes")]
    pub stop_at_absorbing: bool,
    #[serde(default = "default_tick")]
    pub tick_ms: u64,
    /// Seeds episode `e` with stream `derive(seed, e)`.
    #[serde(default)]
    pub seed: u64,
}

fn default_horizon() -> usize {
    40
}
fn default_episodes() -> usize {
    5
}
fn default_exploration() -> f64 {
    DEFAULT_EXPLORATION
}
fn yes() -> bool {
    true
}
fn default_tick() -> u64 {
    DEFAULT_TICK_MS
}

impl Default for SessionConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("every field has a default")
    }
}

impl SessionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(LabError::field("session.horizon", "must be at least 1"));
        }
        if self.episodes_per_round == 0 {
            return Err(LabError::field("session.episodes_per_round", "must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.exploration) {
            return Err(LabError::field("session.exploration", "must lie in [0, 1]"));
        }
        if !(MIN_TICK_MS..=MAX_TICK_MS).contains(&self.tick_ms) {
            return Err(LabError::field(
                "session.tick_ms",
                format!("must lie in {MIN_TICK_MS}..={MAX_TICK_MS}"),
            ));
        }
        if matches!(self.learner, LearnerSpec::Supervised { .. }) {
            return Err(LabError::field("session.learner", "sessions need an RL learner"));
        }
        Ok(())
    }

    pub fn grid(&self) -> GridworldSpec {
        match &self.layout {
            Some(l) => l.clone(),
            None => GridworldSpec::standard(self.grid_seed),
        }
    }
}

/// An input that changed (or could change) the session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum SessionEvent {
    Tick,
    Client { message: ClientMessage },
}

pub struct Session {
    id: u64,
    config: SessionConfig,
    spec: GridworldSpec,
    mdp: TabularMdp,
    fit: Fit,
    dataset: Dataset,
    history: Vec<RoundRecord>,
    round: usize,
    mode: Mode,
    tick_ms: u64,
    /// Episodes started so far, across rounds; names the next RNG stream.
    episodes_started: usize,
    episode: usize,
    env_rng: LabRng,
    recorder: EpisodeRecorder,
    state: usize,
    controller: Controller,
    last_transition: Option<TransitionView>,
    round_episodes: Vec<InterventionEpisode>,
    events: Vec<SessionEvent>,
}

impl Session {
    pub fn new(id: u64, config: SessionConfig) -> Result<Self> {
        config.validate()?;
        let spec = config.grid();
        let mdp = build_gridworld(&spec)?;
        let fit = fit(&mdp, &Dataset::new(), config.learner, config.seed)?;
        let start = spec.state_of(spec.start);
        Ok(Session {
            id,
            tick_ms: config.tick_ms,
            recorder: EpisodeRecorder::new(config.reward_convention),
            config,
            spec,
            mdp,
            fit,
            dataset: Dataset::new(),
            history: Vec::new(),
            round: 0,
            mode: Mode::Paused,
            episodes_started: 0,
            episode: 0,
            env_rng: derive(0, 0),
            state: start,
            controller: Controller::Agent,
            last_transition: None,
            round_episodes: Vec::new(),
            events: Vec::new(),
        })
    }

    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn config(&self) -> &SessionConfig {
        &self.config
    }

    pub fn mdp(&self) -> &TabularMdp {
        &self.mdp
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn tick_ms(&self) -> u64 {
        self.tick_ms
    }

    pub fn dataset(&self) -> &Dataset {
        &self.dataset
    }

    pub fn history(&self) -> &[RoundRecord] {
        &self.history
    }

    pub fn events(&self) -> &[SessionEvent] {
        &self.events
    }

    pub fn hello(&self) -> ServerMessage {
        ServerMessage::SessionHello {
            session_id: self.id,
            grid: self.shape(),
            start: self.spec.start,
            goal: self.spec.goal,
            route: self.spec.route.clone(),
            n_actions: self.mdp.n_actions(),
            tick_ms: self.tick_ms,
            horizon: self.config.horizon,
            episodes_per_round: self.config.episodes_per_round,
        }
    }

    fn shape(&self) -> GridShape {
        GridShape {
            width: self.spec.width,
            height: self.spec.height,
        }
    }

    fn episode_over(&self) -> bool {
        self.recorder.steps() >= self.config.horizon
            || (self.config.stop_at_absorbing && is_absorbing(&self.mdp, self.state))
    }

    fn round_rate(&self) -> f64 {
        let total: usize = self.round_episodes.iter().map(|e| e.total_steps).sum();
        let expert: usize = self.round_episodes.iter().map(|e| e.steps_under_expert_control).sum();
        if total == 0 {
            0.0
        } else {
            expert as f64 / total as f64
        }
    }

    pub fn state_update(&self) -> ServerMessage {
        let values = self
            .fit
            .values
            .clone()
            .unwrap_or_else(|| vec![0.0; self.mdp.n_states()]);
        ServerMessage::StateUpdate(Box::new(StateUpdate {
            round: self.round,
            episode: self.episode,
            step: self.recorder.steps(),
            grid: self.shape(),
            state: self.state,
            agent_cell: self.spec.cell_of(self.state),
            controller: self.controller,
            mode: self.mode,
            episode_over: self.mode != Mode::Paused && self.episode_over(),
            last_transition: self.last_transition,
            heatmap: heatmap_matrix(&values, Some(&self.spec)),
            metrics: RoundMetrics {
                dataset_size: self.dataset.len(),
                episodes_done: self.round_episodes.len(),
                intervention_rate: self.round_rate(),
                last_true_return: self.history.last().map(|r| r.true_return),
            },
        }))
    }

    /// Applies one event. Rejected client messages leave the session
    /// untouched and are answered with a single error frame.
    pub fn handle(&mut self, event: SessionEvent) -> Vec<ServerMessage> {
        let result = match &event {
            SessionEvent::Tick => Ok(self.tick()),
            SessionEvent::Client { message } => self.client(message),
        };
        match result {
            Ok(out) => {
                // idle ticks change nothing and are left out of the log
                if !(event == SessionEvent::Tick && out.is_empty()) {
                    self.events.push(event);
                }
                out
            }
            Err(err) => vec![err],
        }
    }

    fn tick(&mut self) -> Vec<ServerMessage> {
        match self.mode {
            Mode::Paused => Vec::new(),
            _ if self.episode_over() => self.end_episode(),
            Mode::AwaitingHuman => Vec::new(),
            Mode::Stepping => {
                let agent = Exploring {
                    policy: &self.fit.policy,
                    epsilon: self.config.exploration,
                };
                let a = agent.sample(self.state, &mut self.env_rng);
                self.step(a, Controller::Agent);
                vec![self.state_update()]
            }
        }
    }

    fn client(&mut self, message: &ClientMessage) -> std::result::Result<Vec<ServerMessage>, ServerMessage> {
        let reject = |code, message: &str| Err(ServerMessage::error(code, message));
        match *message {
            ClientMessage::StartRound => {
                if self.mode != Mode::Paused {
                    return reject(ErrorCode::RoundActive, "a round is already running");
                }
                self.round += 1;
                self.round_episodes.clear();
                let mut out = self.begin_episode();
                out.push(self.state_update());
                Ok(out)
            }
            ClientMessage::InterveneStart { action } => {
                match self.mode {
                    Mode::Paused => return reject(ErrorCode::NoRoundActive, "start a round first"),
                    Mode::AwaitingHuman => return reject(ErrorCode::AlreadyInControl, "already in control"),
                    Mode::Stepping => {}
                }
                if action.is_some_and(|a| a >= self.mdp.n_actions()) {
                    return reject(ErrorCode::InvalidAction, "action out of range");
                }
                self.recorder.intervene();
                self.controller = Controller::Expert;
                self.mode = Mode::AwaitingHuman;
                if let Some(a) = action {
                    if !self.episode_over() {
                        self.step(a, Controller::Expert);
                    }
                }
                Ok(vec![self.state_update()])
            }
            ClientMessage::ExpertAction { action } => {
                if self.mode != Mode::AwaitingHuman {
                    return reject(ErrorCode::NotInControl, "expert_action needs an active takeover");
                }
                if action >= self.mdp.n_actions() {
                    return reject(ErrorCode::InvalidAction, "action out of range");
                }
                if self.episode_over() {
                    return reject(ErrorCode::EpisodeOver, "the episode closes on the next tick");
                }
                self.step(action, Controller::Expert);
                Ok(vec![self.state_update()])
            }
            ClientMessage::Release => {
                if self.mode != Mode::AwaitingHuman {
                    return reject(ErrorCode::NotInControl, "the agent already has control");
                }
                self.controller = Controller::Agent;
                self.mode = Mode::Stepping;
                Ok(vec![self.state_update()])
            }
            ClientMessage::SetTick { tick_ms } => {
                if !(MIN_TICK_MS..=MAX_TICK_MS).contains(&tick_ms) {
                    return reject(ErrorCode::InvalidTick, "tick_ms out of range");
                }
                self.tick_ms = tick_ms;
                Ok(vec![self.state_update()])
            }
            ClientMessage::Reset => {
                if self.mode == Mode::Paused {
                    return reject(ErrorCode::NoRoundActive, "no episode to reset");
                }
                let mut out = self.begin_episode();
                out.push(self.state_update());
                Ok(out)
            }
        }
    }

    fn step(&mut self, a: usize, controller: Controller) {
        let s = self.state;
        let next = sample_transition(&self.mdp, s, a, &mut self.env_rng);
        self.recorder.record(s, a, next, controller);
        self.last_transition = Some(TransitionView {
            s,
            a,
            s_next: next,
            controller,
        });
        self.state = next;
    }

    /// Starts a fresh episode (discarding any unfinished one). Empty episodes
    /// from an absorbing `s0` close at once.
    fn begin_episode(&mut self) -> Vec<ServerMessage> {
        self.episode = self.episodes_started;
        self.episodes_started += 1;
        self.env_rng = derive(self.config.seed, self.episode as u64);
        self.recorder = EpisodeRecorder::new(self.config.reward_convention);
        self.state = sample_index(self.mdp.initial_dist(), &mut self.env_rng);
        self.controller = Controller::Agent;
        self.mode = Mode::Stepping;
        self.last_transition = None;
        if self.config.stop_at_absorbing && is_absorbing(&self.mdp, self.state) {
            return self.end_episode();
        }
        Vec::new()
    }

    fn end_episode(&mut self) -> Vec<ServerMessage> {
        let mut recorder = std::mem::replace(&mut self.recorder, EpisodeRecorder::new(self.config.reward_convention));
        if self.config.stop_at_absorbing && is_absorbing(&self.mdp, self.state) {
            recorder.mark_terminal();
        }
        let episode = recorder.finish();
        self.dataset.extend(episode.transitions.iter().cloned(), self.round);
        let mut out = vec![ServerMessage::EpisodeEnd {
            round: self.round,
            episode: self.episode,
            steps: episode.total_steps,
            intervention_count: episode.intervention_count,
            steps_under_expert_control: episode.steps_under_expert_control,
            intervention_rate: rlif_core::intervention::intervention_rate(&episode),
        }];
        self.round_episodes.push(episode);
        if self.round_episodes.len() < self.config.episodes_per_round {
            out.extend(self.begin_episode());
            out.push(self.state_update());
            return out;
        }
        out.push(self.end_round());
        self.controller = Controller::Agent;
        self.mode = Mode::Paused;
        self.last_transition = None;
        out.push(self.state_update());
        out
    }

    fn end_round(&mut self) -> ServerMessage {
        let refit = fit(&self.mdp, &self.dataset, self.config.learner, self.config.seed ^ self.round as u64);
        // the learner only fails on malformed data, which the recorder cannot produce
        self.fit = refit.expect("refit on recorded transitions");
        let record = RoundRecord {
            round: self.round,
            policy: self.fit.policy.clone(),
            true_return: true_return(&self.mdp, &self.fit.policy).expect("policy matches the MDP"),
            intervention_rate: self.round_rate(),
            dataset_size: self.dataset.len(),
            value_snapshot: self.fit.values.clone(),
        };
        let msg = ServerMessage::RoundEnd {
            round: record.round,
            true_return: record.true_return,
            intervention_rate: record.intervention_rate,
            dataset_size: record.dataset_size,
        };
        self.history.push(record);
        msg
    }

    /// JSON Lines log: a header, then every applied event, every dataset
    /// transition and every round record.
    pub fn export_log<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let mut line = |entry: &LogEntry| -> std::io::Result<()> {
            serde_json::to_writer(&mut out, entry)?;
            out.write_all(b"\n")
        };
        line(&LogEntry::Header {
            v: PROTOCOL_VERSION,
            session_id: self.id,
            config: self.config.clone(),
        })?;
        for (seq, event) in self.events.iter().enumerate() {
            line(&LogEntry::Event {
                seq,
                event: event.clone(),
            })?;
        }
        for (t, round) in self.dataset.iter() {
            line(&LogEntry::Transition(DatasetLine {
                round,
                transition: *t,
            }))?;
        }
        for record in &self.history {
            line(&LogEntry::Round(record.clone()))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LogEntry {
    Header {
        v: u32,
        session_id: u64,
        config: SessionConfig,
    },
    Event {
        seq: usize,
        #[serde(flatten)]
        event: SessionEvent,
    },
    Transition(DatasetLine),
    Round(RoundRecord),
}

/// A parsed session log.
#[derive(Debug, Clone, PartialEq)]
pub struct SessionLog {
    pub session_id: u64,
    pub config: SessionConfig,
    pub events: Vec<SessionEvent>,
    pub dataset: Dataset,
    pub history: Vec<RoundRecord>,
}

pub fn read_log<R: BufRead>(input: R) -> Result<SessionLog> {
    let mut header = None;
    let mut events = Vec::new();
    let mut dataset = Dataset::new();
    let mut history = Vec::new();
    for line in input.lines() {
        let line = line.map_err(|e| LabError::io("<session log>", e))?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<LogEntry>(&line)? {
            LogEntry::Header { session_id, config, .. } => header = Some((session_id, config)),
            LogEntry::Event { event, .. } => events.push(event),
            LogEntry::Transition(d) => dataset.push(d.transition, d.round),
            LogEntry::Round(r) => history.push(r),
        }
    }
    let (session_id, config) = header.ok_or_else(|| LabError::Runtime("session log has no header".into()))?;
    Ok(SessionLog {
        session_id,
        config,
        events,
        dataset,
        history,
    })
}

/// Re-runs a logged session from its configuration and events.
pub fn replay(log: &SessionLog) -> Result<Session> {
    let mut session = Session::new(log.session_id, log.config.clone())?;
    for event in &log.events {
        session.handle(event.clone());
    }
    Ok(session)
}

/// Where a server writes `session-<id>.jsonl` when a connection closes.
pub fn log_path(dir: &std::path::Path, id: u64) -> PathBuf {
    dir.join(format!("session-{id}.jsonl"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rlif_core::intervention::{
        decide_value_based, run_intervened_episode_with, Expert, ThresholdMode, ValueBasedExpert,
    };
    use rlif_core::learners::Dataset;
    use rlif_core::solvers::value_iteration;

    fn session(config: SessionConfig) -> Session {
        Session::new(7, config).unwrap()
    }

    /// Applies an event and checks that no update shows the agent in
    /// control during a takeover.
    fn apply(s: &mut Session, event: SessionEvent) -> Vec<ServerMessage> {
        let out = s.handle(event);
        for msg in &out {
            if let ServerMessage::StateUpdate(u) = msg {
                assert_eq!(u.mode == Mode::AwaitingHuman, u.controller == Controller::Expert, "{u:?}");
            }
        }
        out
    }

    fn client(s: &mut Session, message: ClientMessage) -> Vec<ServerMessage> {
        apply(s, SessionEvent::Client { message })
    }

    fn tick(s: &mut Session) -> Vec<ServerMessage> {
        apply(s, SessionEvent::Tick)
    }

    fn is_error(out: &[ServerMessage]) -> bool {
        matches!(out, [ServerMessage::Error { .. }])
    }

    /// A long horizon with no absorbing stop, so step counts are exact.
    fn open_config() -> SessionConfig {
        SessionConfig {
            stop_at_absorbing: false,
            horizon: 20,
            episodes_per_round: 2,
            ..SessionConfig::default()
        }
    }

    #[test]
    fn intervention_labels_the_previous_transition() {
        let mut s = session(open_config());
        client(&mut s, ClientMessage::StartRound);
        for _ in 0..7 {
            assert_eq!(tick(&mut s).len(), 1);
        }
        client(&mut s, ClientMessage::InterveneStart { action: None });
        let ts = s.recorder.transitions();
        assert_eq!(ts.len(), 7);
        assert!(ts[6].intervened_next);
        assert_eq!(ts[6].reward, -1.0);
        assert!(ts[..6].iter().all(|t| t.reward == 0.0 && !t.intervened_next));
    }

    #[test]
    fn unattended_episodes_carry_no_penalty() {
        let mut s = session(open_config());
        client(&mut s, ClientMessage::StartRound);
        while s.mode() != Mode::Paused {
            tick(&mut s);
        }
        assert_eq!(s.dataset().len(), 40);
        assert!(s.dataset().transitions().iter().all(|t| t.reward == 0.0));
        assert_eq!(s.history().len(), 1);
        assert_eq!(s.history()[0].intervention_rate, 0.0);
    }

    #[test]
    fn one_penalty_per_intervention() {
        let mut s = session(open_config());
        client(&mut s, ClientMessage::StartRound);
        for _ in 0..3 {
            tick(&mut s);
            tick(&mut s);
            client(&mut s, ClientMessage::InterveneStart { action: Some(0) });
            client(&mut s, ClientMessage::ExpertAction { action: 1 });
            client(&mut s, ClientMessage::Release);
        }
        while s.mode() != Mode::Paused {
            tick(&mut s);
        }
        let penalties = s.dataset().transitions().iter().filter(|t| t.reward == -1.0).count();
        assert_eq!(penalties, 3);
        let expert_steps = s
            .dataset()
            .transitions()
            .iter()
            .filter(|t| t.controller == Controller::Expert)
            .count();
        assert_eq!(expert_steps, 6);
        assert!(s
            .dataset()
            .transitions()
            .iter()
            .filter(|t| t.intervened_next)
            .all(|t| t.controller == Controller::Agent));
    }

    #[test]
    fn control_is_exclusive() {
        let mut s = session(open_config());
        assert!(is_error(&client(&mut s, ClientMessage::InterveneStart { action: None })));
        assert!(is_error(&client(&mut s, ClientMessage::Reset)));
        client(&mut s, ClientMessage::StartRound);
        assert!(is_error(&client(&mut s, ClientMessage::StartRound)));
        assert!(is_error(&client(&mut s, ClientMessage::ExpertAction { action: 0 })));
        assert!(is_error(&client(&mut s, ClientMessage::Release)));
        client(&mut s, ClientMessage::InterveneStart { action: None });
        assert_eq!(s.mode(), Mode::AwaitingHuman);
        assert!(is_error(&client(&mut s, ClientMessage::InterveneStart { action: None })));
        // the agent does not move while the human holds control
        let before = s.recorder.steps();
        assert!(tick(&mut s).is_empty());
        assert_eq!(s.recorder.steps(), before);
        client(&mut s, ClientMessage::Release);
        assert_eq!(s.mode(), Mode::Stepping);
    }

    #[test]
    fn rejected_messages_leave_no_trace() {
        let mut s = session(open_config());
        client(&mut s, ClientMessage::StartRound);
        tick(&mut s);
        let events = s.events().len();
        let update = s.state_update();
        for bad in [
            ClientMessage::ExpertAction { action: 0 },
            ClientMessage::InterveneStart { action: Some(99) },
            ClientMessage::SetTick { tick_ms: 1 },
            ClientMessage::StartRound,
        ] {
            let out = client(&mut s, bad);
            assert!(is_error(&out), "{out:?}");
        }
        assert_eq!(s.events().len(), events);
        assert_eq!(s.state_update(), update);
    }

    #[test]
    fn empty_session_logs_only_a_header() {
        let mut s = session(SessionConfig::default());
        tick(&mut s);
        let mut buf = Vec::new();
        s.export_log(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 1);
        let log = read_log(text.as_bytes()).unwrap();
        assert_eq!(log.config, SessionConfig::default());
        assert!(log.events.is_empty() && log.dataset.is_empty() && log.history.is_empty());
    }

    #[test]
    fn replay_reproduces_the_log() {
        let mut s = session(SessionConfig {
            episodes_per_round: 2,
            horizon: 15,
            ..SessionConfig::default()
        });
        for round in 0..2 {
            client(&mut s, ClientMessage::StartRound);
            let mut t = 0;
            while s.mode() != Mode::Paused {
                t += 1;
                if t % 5 == 0 && s.mode() == Mode::Stepping {
                    client(&mut s, ClientMessage::InterveneStart { action: Some(round % 4) });
                } else if s.mode() == Mode::AwaitingHuman {
                    if client(&mut s, ClientMessage::ExpertAction { action: 1 }).len() == 1 && t % 2 == 0 {
                        client(&mut s, ClientMessage::Release);
                    }
                    if t % 3 == 0 {
                        client(&mut s, ClientMessage::Release);
                    }
                    tick(&mut s);
                } else {
                    tick(&mut s);
                }
            }
        }
        assert_eq!(s.history().len(), 2);
        let mut original = Vec::new();
        s.export_log(&mut original).unwrap();
        let log = read_log(original.as_slice()).unwrap();
        assert_eq!(&log.dataset, s.dataset());
        assert_eq!(log.history, s.history());
        let again = replay(&log).unwrap();
        let mut replayed = Vec::new();
        again.export_log(&mut replayed).unwrap();
        assert_eq!(String::from_utf8(original).unwrap(), String::from_utf8(replayed).unwrap());
        let jsonl = |d: &Dataset| {
            let mut buf = Vec::new();
            crate::io::write_dataset_jsonl(&mut buf, d).unwrap();
            buf
        };
        assert_eq!(jsonl(s.dataset()), jsonl(again.dataset()));
    }

    /// A client that follows the simulated value-based expert, decision for
    /// decision, builds the same dataset as the simulator.
    #[test]
    fn scripted_expert_matches_the_simulator() {
        let config = SessionConfig {
            horizon: 30,
            episodes_per_round: 3,
            seed: 11,
            ..SessionConfig::default()
        };
        let mut s = session(config.clone());
        let mdp = s.mdp().clone();
        let (vf, pi_star) = value_iteration(&mdp, 1e-12, 100_000).unwrap();
        let vb = ValueBasedExpert::new(pi_star, vf.q, 0.9, ThresholdMode::Absolute { delta: 0.01 }, 3).unwrap();
        let expert = Expert::ValueBased(vb.clone());
        let decision = |ep: usize| derive(500, ep as u64);

        let mut expected = Dataset::new();
        let mut policy = fit(&mdp, &Dataset::new(), config.learner, config.seed).unwrap().policy;
        let mut episode = 0;
        for round in 1..=2 {
            for _ in 0..config.episodes_per_round {
                let agent = Exploring {
                    policy: &policy,
                    epsilon: config.exploration,
                };
                let ep = run_intervened_episode_with(
                    &mdp,
                    &agent,
                    &expert,
                    config.horizon,
                    config.reward_convention,
                    config.stop_at_absorbing,
                    &mut derive(config.seed, episode as u64),
                    &mut decision(episode),
                );
                expected.extend(ep.transitions, round);
                episode += 1;
            }

            client(&mut s, ClientMessage::StartRound);
            let mut rng = decision(s.episode);
            while s.mode() != Mode::Paused {
                let ep_before = s.episode;
                let out = tick(&mut s);
                if s.episode != ep_before {
                    rng = decision(s.episode);
                    continue;
                }
                let [ServerMessage::StateUpdate(update)] = out.as_slice() else {
                    continue;
                };
                let t = update.last_transition.expect("agent stepped");
                if !decide_value_based(&vb, t.s, t.a, &mut rng) {
                    continue;
                }
                client(&mut s, ClientMessage::InterveneStart { action: None });
                for _ in 0..vb.takeover_steps {
                    let a = vb.pi_exp.act(s.state);
                    if is_error(&client(&mut s, ClientMessage::ExpertAction { action: a })) {
                        break;
                    }
                }
                client(&mut s, ClientMessage::Release);
            }
            policy = s.history().last().unwrap().policy.clone();
        }
        assert!(expected.transitions().iter().any(|t| t.intervened_next));
        assert_eq!(s.dataset(), &expected);
    }
}
