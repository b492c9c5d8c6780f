use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::game::{Board, Outcome};

/// How a dialogue's game ended, from the agent's side.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GameResult {
    Win,
    Draw,
    Loss,
    /// The dialogue stopped before the game finished.
    Unfinished,
}

impl GameResult {
    pub fn of(board: &Board) -> Self {
        match board.outcome() {
            Outcome::AgentWin => GameResult::Win,
            Outcome::Draw => GameResult::Draw,
            Outcome::UserWin => GameResult::Loss,
            Outcome::InProgress => GameResult::Unfinished,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            GameResult::Win => "win",
            GameResult::Draw => "draw",
            GameResult::Loss => "loss",
            GameResult::Unfinished => "unfinished",
        }
    }

    pub fn is_win_or_draw(self) -> bool {
        matches!(self, GameResult::Win | GameResult::Draw)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub step: usize,
    pub episode: usize,
    pub epsilon: f64,
    pub loss: Option<f64>,
    pub reward: f64,
    pub act: usize,
    /// Set on the step that ended an episode.
    pub result: Option<GameResult>,
}

/// Per-step training log plus the steps at which the target was synced.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingTrace {
    pub rows: Vec<TraceRow>,
    pub syncs: Vec<usize>,
    pub grad_steps: usize,
}

impl TrainingTrace {
    pub fn results(&self) -> Vec<GameResult> {
        self.rows.iter().filter_map(|r| r.result).collect()
    }

    /// Win-or-draw fraction over the last `n` finished dialogues.
    pub fn win_draw_rate_last(&self, n: usize) -> f64 {
        let results = self.results();
        let tail = &results[results.len().saturating_sub(n)..];
        if tail.is_empty() {
            return 0.0;
        }
        tail.iter().filter(|r| r.is_win_or_draw()).count() as f64 / tail.len() as f64
    }

    /// Mean per-step reward in consecutive windows of `window` steps.
    pub fn reward_curve(&self, window: usize) -> Vec<f64> {
        self.rows
            .chunks(window.max(1))
            .map(|c| c.iter().map(|r| r.reward).sum::<f64>() / c.len() as f64)
            .collect()
    }

    /// Win-or-draw fraction in consecutive windows of `window` dialogues.
    pub fn win_draw_curve(&self, window: usize) -> Vec<f64> {
        self.results()
            .chunks(window.max(1))
            .map(|c| c.iter().filter(|r| r.is_win_or_draw()).count() as f64 / c.len() as f64)
            .collect()
    }

    /// `step,episode,epsilon,loss,reward,outcome`; empty loss before warm-up
    /// and empty outcome mid-dialogue.
    pub fn write_csv<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(w, "step,episode,epsilon,loss,reward,outcome")?;
        for r in &self.rows {
            let loss = r.loss.map(|l| l.to_string()).unwrap_or_default();
            let outcome = r.result.map(GameResult::name).unwrap_or("");
            writeln!(
                w,
                "{},{},{},{},{},{}",
                r.step, r.episode, r.epsilon, loss, r.reward, outcome
            )?;
        }
        Ok(())
    }
}

/// Trailing moving average over `k` points (shorter at the start).
pub fn smooth(values: &[f64], k: usize) -> Vec<f64> {
    let k = k.max(1);
    (0..values.len())
        .map(|i| {
            let lo = (i + 1).saturating_sub(k);
            values[lo..=i].iter().sum::<f64>() / (i + 1 - lo) as f64
        })
        .collect()
}
