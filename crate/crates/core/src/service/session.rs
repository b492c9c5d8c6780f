use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

use crate::agent::{select_action, QNetwork};
use crate::dialogue::{
    ActionModel, DialogueAct, DialogueContext, SeedDialogue, SeedTurn, Utterance, Vocabulary,
};
use crate::game::{Board, Cell, Location, Outcome, Player};
use crate::perception::{CellImage, CellLabel, DebounceState, GameMoveEvent, PerceptionModel};
use crate::simulator::SimulatorConfig;

/// Most agent acts in a row before the user is given the floor.
pub const MAX_AGENT_RUN: usize = 8;

/// Anything that can label a cell raster.
pub trait CellClassifier: Send + Sync {
    fn classify(&self, image: &CellImage) -> CellLabel;
}

impl CellClassifier for PerceptionModel {
    fn classify(&self, image: &CellImage) -> CellLabel {
        PerceptionModel::classify(self, image).0
    }
}

/// Read-only models shared by every session.
pub struct Models {
    pub perception: Arc<dyn CellClassifier>,
    pub agent: QNetwork,
    pub vocab: Vocabulary,
    pub actions: ActionModel,
    /// Source of default utterance confidences.
    pub noise: SimulatorConfig,
}

impl Models {
    pub fn new(
        perception: Arc<dyn CellClassifier>,
        agent: QNetwork,
        vocab: Vocabulary,
        actions: ActionModel,
    ) -> Self {
        Self {
            perception,
            agent,
            vocab,
            actions,
            noise: SimulatorConfig::default(),
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum SessionError {
    #[error("it is not the user's turn to draw")]
    TurnViolation,
    #[error("cell index {0} is out of range")]
    BadCell(usize),
    #[error("{} is already taken", .0.spoken())]
    Occupied(Location),
    #[error("the session has ended")]
    Closed,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    AgentUtterance,
    AgentMove,
    UserUtterance,
    UserMove,
    Outcome,
    Rejection,
    Turn,
    Notice,
}

impl EventKind {
    pub fn name(self) -> &'static str {
        match self {
            EventKind::AgentUtterance => "agent_utterance",
            EventKind::AgentMove => "agent_move",
            EventKind::UserUtterance => "user_utterance",
            EventKind::UserMove => "user_move",
            EventKind::Outcome => "outcome",
            EventKind::Rejection => "rejection",
            EventKind::Turn => "turn",
            EventKind::Notice => "notice",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub seq: u64,
    pub kind: EventKind,
    pub payload: serde_json::Value,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TurnOwner {
    Agent,
    User,
    /// The dialogue is over.
    Closed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub session_id: String,
    pub board: String,
    pub turn: TurnOwner,
    pub transcript_len: usize,
    pub outcome: Outcome,
    pub last_seq: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RasterAck {
    pub committed: bool,
    pub events: Vec<Event>,
}

/// One game against one human. Commands run to completion: the agent's
/// reply is computed before a command returns, so between commands the
/// turn is the user's or the dialogue is closed.
pub struct Session {
    id: String,
    models: Arc<Models>,
    ctx: DialogueContext,
    debounce: DebounceState,
    turn: TurnOwner,
    transcript: SeedDialogue,
    events: Vec<Event>,
    rng: ChaCha8Rng,
}

impl Session {
    /// Opens a session; the agent greets and plays until it yields.
    pub fn new(id: String, models: Arc<Models>, seed: u64) -> Self {
        let board = Board::default();
        let mut s = Self {
            id,
            models,
            ctx: DialogueContext::new(board),
            debounce: DebounceState::new(board.symbol_of(Player::User)),
            turn: TurnOwner::Agent,
            transcript: SeedDialogue::default(),
            events: Vec::new(),
            rng: ChaCha8Rng::seed_from_u64(seed),
        };
        s.run_agent();
        s
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn board(&self) -> &Board {
        &self.ctx.board
    }

    pub fn turn(&self) -> TurnOwner {
        self.turn
    }

    pub fn transcript(&self) -> &SeedDialogue {
        &self.transcript
    }

    pub fn debounce(&self) -> &DebounceState {
        &self.debounce
    }

    pub fn last_seq(&self) -> u64 {
        self.events.last().map_or(0, |e| e.seq)
    }

    pub fn snapshot(&self) -> Snapshot {
        Snapshot {
            session_id: self.id.clone(),
            board: self.ctx.board.to_string(),
            turn: self.turn,
            transcript_len: self.transcript.turns.len(),
            outcome: self.ctx.board.outcome(),
            last_seq: self.last_seq(),
        }
    }

    /// Events with sequence numbers greater than `after`.
    pub fn events_after(&self, after: u64) -> &[Event] {
        let start = self.events.partition_point(|e| e.seq <= after);
        &self.events[start..]
    }

    fn emit(&mut self, kind: EventKind, payload: serde_json::Value) {
        let seq = self.last_seq() + 1;
        self.events.push(Event { seq, kind, payload });
    }

    fn emit_turn(&mut self) {
        let turn = self.turn;
        self.emit(EventKind::Turn, json!({ "turn": turn }));
    }

    fn emit_outcome_if_finished(&mut self) {
        let o = self.ctx.board.outcome();
        if o.is_finished() {
            self.emit(
                EventKind::Outcome,
                json!({ "outcome": o, "board": self.ctx.board.to_string() }),
            );
        }
    }

    /// Greedy agent acts until it hands over the floor.
    fn run_agent(&mut self) {
        self.turn = TurnOwner::Agent;
        for _ in 0..MAX_AGENT_RUN {
            let (state, _) = self.ctx.features(&self.models.vocab);
            let allowed = self.models.actions.filter_actions(&state, &self.ctx.board);
            let act = select_action(&self.models.agent, &state, &allowed, 0.0, &mut self.rng)
                .expect("the filter never returns an empty set");
            let (text, _) = act.verbalize(self.ctx.board.agent_symbol());
            let event = self.ctx.apply_agent(act).expect("filtered acts are legal");
            self.transcript.turns.push(SeedTurn::Agent(act));
            if let Some(ev) = event {
                self.emit(
                    EventKind::AgentMove,
                    json!({ "cell": ev.location.index(), "where": ev.location.name(), "symbol": ev.symbol, "notation": ev.to_string() }),
                );
            }
            self.emit(
                EventKind::AgentUtterance,
                json!({ "act": act.to_string(), "text": text }),
            );
            if event.is_some() {
                self.emit_outcome_if_finished();
            }
            let finished = self.ctx.board.outcome().is_finished();
            if act == DialogueAct::SalutationClosing && finished {
                self.turn = TurnOwner::Closed;
                self.emit_turn();
                return;
            }
            if matches!(
                act,
                DialogueAct::RequestPlayGame | DialogueAct::RequestUserGameMove
            ) {
                break;
            }
        }
        self.turn = TurnOwner::User;
        self.emit_turn();
    }

    fn ensure_open(&self) -> Result<(), SessionError> {
        if self.turn == TurnOwner::Closed {
            return Err(SessionError::Closed);
        }
        Ok(())
    }

    /// One polling tick for one cell. Only accepted while the user is to
    /// draw; a commit passes the turn to the agent.
    pub fn submit_raster(&mut self, cell: usize, image: &CellImage) -> Result<RasterAck, SessionError> {
        self.ensure_open()?;
        let loc = Location::from_index(cell).ok_or(SessionError::BadCell(cell))?;
        if self.turn != TurnOwner::User || self.ctx.board.to_move() != Player::User {
            return Err(SessionError::TurnViolation);
        }
        let before = self.last_seq();
        let label = self.models.perception.classify(image);
        let Some(ev) = self.debounce.observe_label(cell, label) else {
            return Ok(RasterAck {
                committed: false,
                events: Vec::new(),
            });
        };
        if self.ctx.board.cell(loc) != Cell::Empty {
            self.emit(
                EventKind::Rejection,
                json!({ "cell": cell, "reason": format!("{} is already taken", loc.spoken()) }),
            );
            return Ok(RasterAck {
                committed: false,
                events: self.events_after(before).to_vec(),
            });
        }
        self.commit_user_move(ev);
        Ok(RasterAck {
            committed: true,
            events: self.events_after(before).to_vec(),
        })
    }

    /// A move given by name rather than drawn (text play). Occupied cells
    /// are refused outright.
    pub fn submit_move(&mut self, loc: Location) -> Result<Vec<Event>, SessionError> {
        self.ensure_open()?;
        if self.turn != TurnOwner::User || self.ctx.board.to_move() != Player::User {
            return Err(SessionError::TurnViolation);
        }
        if self.ctx.board.cell(loc) != Cell::Empty {
            return Err(SessionError::Occupied(loc));
        }
        let before = self.last_seq();
        let symbol = self.ctx.board.symbol_of(Player::User);
        self.commit_user_move(GameMoveEvent::new(Player::User, loc, symbol));
        Ok(self.events_after(before).to_vec())
    }

    fn commit_user_move(&mut self, ev: GameMoveEvent) {
        self.ctx
            .apply_user(None, Some(&ev))
            .expect("empty cell on the user's turn");
        self.transcript.turns.push(SeedTurn::User {
            text: String::new(),
            event: Some(ev),
        });
        self.emit(
            EventKind::UserMove,
            json!({ "cell": ev.location.index(), "where": ev.location.name(), "symbol": ev.symbol, "notation": ev.to_string() }),
        );
        self.emit_outcome_if_finished();
        self.run_agent();
    }

    /// A typed user turn. Without a confidence, one is drawn per token from
    /// the session's noise model.
    pub fn submit_utterance(
        &mut self,
        text: &str,
        confidence: Option<f64>,
    ) -> Result<Vec<Event>, SessionError> {
        self.ensure_open()?;
        let before = self.last_seq();
        let utt = match confidence {
            Some(c) => Utterance::user(text, c),
            None => {
                let (lo, hi) = self.models.noise.confidence;
                let rng = &mut self.rng;
                Utterance::user_with(text, || if hi > lo { rng.gen_range(lo..=hi) } else { lo })
            }
        };
        if utt.is_empty() {
            self.emit(EventKind::Notice, json!({ "message": "empty utterance ignored" }));
            return Ok(self.events_after(before).to_vec());
        }
        let (_, oov) = self.models.vocab.featurize(None, Some(&utt), &Board::default());
        self.emit(
            EventKind::UserUtterance,
            json!({ "text": utt.text, "words": utt.words, "confidences": utt.confidences, "oov": oov }),
        );
        self.transcript.turns.push(SeedTurn::User {
            text: utt.text.clone(),
            event: None,
        });
        self.ctx.apply_user(Some(utt), None).expect("no move attached");
        self.run_agent();
        Ok(self.events_after(before).to_vec())
    }
}
