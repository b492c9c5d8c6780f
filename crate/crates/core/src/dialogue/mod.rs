//! Dialogue acts and their templates, the seed corpus, the 57-feature state
//! and the Naive Bayes action model.

mod act;
mod corpus;
mod naive_bayes;
mod state;
mod utterance;

pub use act::{DialogueAct, Feedback, NUM_ACTS};
pub use corpus::{
    build_seed_corpus, corpus_to_text, parse_corpus, token_counts, AgentDecision, SeedDialogue, SeedTurn,
    CORPUS_SEED,
};
pub use naive_bayes::{
    agent_moves, filter_by_posterior, fit_action_model, legal_acts, verbal_allowed, ActionModel, BINARIZE_AT,
    FILTER_THRESHOLD, SMOOTHING,
};
pub use state::{
    DialogueContext, StateVector, Vocabulary, BOARD_SLOTS, CELL_AGENT, CELL_EMPTY, CELL_USER, STATE_LEN,
    WORD_SLOTS,
};
pub use utterance::{tokenize, Speaker, Utterance};

use thiserror::Error;

use crate::game::GameError;
use crate::perception::PerceptionError;

#[derive(Debug, Error)]
pub enum DialogueError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("vocabulary error: {0}")]
    Vocabulary(String),
    #[error("out of turn: {0}")]
    Turn(String),
    #[error("corpus error: {0}")]
    Corpus(String),
    #[error(transparent)]
    Game(#[from] GameError),
    #[error(transparent)]
    Perception(#[from] PerceptionError),
}
