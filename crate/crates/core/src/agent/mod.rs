//! Deep Q-learning dialogue manager: the Q-network, experience replay, the
//! composite reward, training and greedy evaluation.

mod learn;
mod qnet;
mod replay;
mod reward;
mod trace;

pub use learn::{
    batch_loss, epsilon_at, evaluate, q_update, select_action, select_by_posterior, train, EvalReport,
    Exploration, TrainOutcome, TrainingConfig,
};
pub use qnet::{q_architecture, AgentMetadata, QNetwork, HIDDEN};
pub use replay::{Experience, ReplayMemory};
pub use reward::{reward, RewardConfig, LOSS_BONUS, STEP_PENALTY, TERMINAL_BONUS, WEIGHT};
pub use trace::{smooth, GameResult, TraceRow, TrainingTrace};

use thiserror::Error;

use crate::dialogue::DialogueError;
use crate::numerics::NumericsError;

#[derive(Debug, Error)]
pub enum AgentError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("act {0} is not in the allowed set")]
    IllegalAct(String),
    #[error("episode already finished")]
    Finished,
    #[error("non-finite value: {0}")]
    NonFinite(String),
    #[error("model error: {0}")]
    Model(String),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Dialogue(#[from] DialogueError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
