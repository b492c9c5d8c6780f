//! Noughts-and-crosses rules, outcome detection, a memoized minimax oracle
//! and the bonus-reward assessor used by the agent.

mod board;
mod oracle;

pub use board::{Board, Cell, GameError, Location, Outcome, Player, Symbol, LINES};
pub use oracle::{bonus_reward, minimax_value, reachable_outcomes, BonusMode};

#[cfg(test)]
mod tests;
