use std::cell::RefCell;
use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{Board, Outcome, Player};

thread_local! {
    static MINIMAX: RefCell<HashMap<Board, i8>> = RefCell::new(HashMap::new());
    static REACHABLE: RefCell<HashMap<Board, u8>> = RefCell::new(HashMap::new());
}

fn agent_value(board: &Board) -> i8 {
    if let Some(v) = MINIMAX.with(|m| m.borrow().get(board).copied()) {
        return v;
    }
    let v = match board.outcome() {
        Outcome::AgentWin => 1,
        Outcome::UserWin => -1,
        Outcome::Draw => 0,
        Outcome::InProgress => {
            let children = board
                .legal_moves()
                .into_iter()
                .map(|l| agent_value(&board.apply_move(l).expect("legal move")));
            match board.to_move() {
                Player::Agent => children.max().unwrap_or(0),
                Player::User => children.min().unwrap_or(0),
            }
        }
    };
    MINIMAX.with(|m| m.borrow_mut().insert(*board, v));
    v
}

/// Game-theoretic value under perfect play, from `perspective`'s side:
/// +1 forced win, 0 draw, -1 forced loss.
pub fn minimax_value(board: &Board, perspective: Player) -> i8 {
    let v = agent_value(board);
    match perspective {
        Player::Agent => v,
        Player::User => -v,
    }
}

fn outcome_bit(o: Outcome) -> u8 {
    match o {
        Outcome::InProgress => 0,
        Outcome::AgentWin => 1,
        Outcome::UserWin => 2,
        Outcome::Draw => 4,
    }
}

fn reachable_mask(board: &Board) -> u8 {
    if let Some(v) = REACHABLE.with(|m| m.borrow().get(board).copied()) {
        return v;
    }
    let mask = match board.outcome() {
        Outcome::InProgress => board
            .legal_moves()
            .into_iter()
            .map(|l| reachable_mask(&board.apply_move(l).expect("legal move")))
            .fold(0, |a, b| a | b),
        o => outcome_bit(o),
    };
    REACHABLE.with(|m| m.borrow_mut().insert(*board, mask));
    mask
}

/// Every final outcome some continuation of `board` can reach.
pub fn reachable_outcomes(board: &Board) -> Vec<Outcome> {
    let mask = reachable_mask(board);
    [Outcome::AgentWin, Outcome::UserWin, Outcome::Draw]
        .into_iter()
        .filter(|o| mask & outcome_bit(*o) != 0)
        .collect()
}

/// How "about to win / about to draw" is judged.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BonusMode {
    /// The agent's move itself wins or fills the board.
    #[default]
    DecisiveMove,
    /// Also credits a forced win (minimax) or an inevitable draw.
    Lookahead,
}

/// Bonus for the board right after an agent move: 5 (win), 1 (draw) or 0.
pub fn bonus_reward(board_after_agent_move: &Board, mode: BonusMode) -> f64 {
    match board_after_agent_move.outcome() {
        Outcome::AgentWin => 5.0,
        Outcome::Draw => 1.0,
        Outcome::UserWin => 0.0,
        Outcome::InProgress => match mode {
            BonusMode::DecisiveMove => 0.0,
            BonusMode::Lookahead => {
                if minimax_value(board_after_agent_move, Player::Agent) == 1 {
                    5.0
                } else if reachable_outcomes(board_after_agent_move) == [Outcome::Draw] {
                    1.0
                } else {
                    0.0
                }
            }
        },
    }
}
