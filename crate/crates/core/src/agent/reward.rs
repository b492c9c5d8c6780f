use serde::{Deserialize, Serialize};

use crate::dialogue::DialogueAct;
use crate::game::{bonus_reward, Board, BonusMode, Outcome};

/// Weight of the game bonus against the data-like term.
pub const WEIGHT: f64 = 0.5;
/// Per-step penalty encouraging short dialogues.
pub const STEP_PENALTY: f64 = 0.1;
/// Added when a dialogue ends without the user having won.
pub const TERMINAL_BONUS: f64 = 5.0;
/// Added when a dialogue ends with the user having won.
pub const LOSS_BONUS: f64 = 0.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RewardConfig {
    pub weight: f64,
    pub step_penalty: f64,
    pub bonus_mode: BonusMode,
}

impl Default for RewardConfig {
    fn default() -> Self {
        Self {
            weight: WEIGHT,
            step_penalty: STEP_PENALTY,
            bonus_mode: BonusMode::DecisiveMove,
        }
    }
}

/// `BR*w + DR*(1-w) - DL`, plus the terminal bonus when `terminal` carries
/// the outcome of a dialogue that just ended.
pub fn reward(
    next_board: &Board,
    act: DialogueAct,
    dr: f64,
    terminal: Option<Outcome>,
    cfg: &RewardConfig,
) -> f64 {
    let br = if act.is_physical() {
        bonus_reward(next_board, cfg.bonus_mode)
    } else {
        0.0
    };
    let mut r = br * cfg.weight + dr * (1.0 - cfg.weight) - cfg.step_penalty;
    if let Some(o) = terminal {
        r += if o == Outcome::UserWin {
            LOSS_BONUS
        } else {
            TERMINAL_BONUS
        };
    }
    r
}
