use serde::{Deserialize, Serialize};

use crate::game::{Location, Player, Symbol};

use super::event::GameMoveEvent;
use super::image::{split_grid, CellLabel, GridFrame};
use super::model::PerceptionModel;

/// Identical consecutive classifications needed before a drawing counts.
pub const DEBOUNCE_WINDOW: usize = 3;

fn label_of(s: Symbol) -> CellLabel {
    match s {
        Symbol::Nought => CellLabel::Circle,
        Symbol::Cross => CellLabel::Cross,
    }
}

/// Per-cell history of recent classifications and committed drawings for one
/// game. A committed cell never changes again.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DebounceState {
    recent: [Vec<CellLabel>; 9],
    committed: [CellLabel; 9],
    user_symbol: Symbol,
}

impl Default for DebounceState {
    fn default() -> Self {
        Self::new(Symbol::Cross)
    }
}

impl DebounceState {
    /// `user_symbol` is what the human is assumed to draw (crosses when the
    /// robot opens with noughts).
    pub fn new(user_symbol: Symbol) -> Self {
        Self {
            recent: Default::default(),
            committed: [CellLabel::Nothing; 9],
            user_symbol,
        }
    }

    pub fn committed(&self) -> &[CellLabel; 9] {
        &self.committed
    }

    pub fn recent(&self, cell: usize) -> &[CellLabel] {
        &self.recent[cell]
    }

    /// Feeds one classification for `cell`; returns an event the first time
    /// the last three labels agree on a symbol.
    pub fn observe_label(&mut self, cell: usize, label: CellLabel) -> Option<GameMoveEvent> {
        let ring = &mut self.recent[cell];
        ring.push(label);
        if ring.len() > DEBOUNCE_WINDOW {
            ring.remove(0);
        }
        let stable = ring.len() == DEBOUNCE_WINDOW && ring.iter().all(|&l| l == label);
        if !stable || !label.is_symbol() || self.committed[cell] != CellLabel::Nothing {
            return None;
        }
        let inferred = label_of(self.user_symbol);
        if label != inferred {
            log::warn!(
                "cell {cell}: classifier saw {} but the user draws {}; using {}",
                label.name(),
                inferred.name(),
                inferred.name()
            );
        }
        self.committed[cell] = inferred;
        let location = Location::from_index(cell).expect("cell index < 9");
        Some(GameMoveEvent::new(Player::User, location, self.user_symbol))
    }

    /// One polling tick over a whole frame.
    pub fn observe(&mut self, frame: &GridFrame, model: &PerceptionModel) -> Vec<GameMoveEvent> {
        split_grid(frame)
            .iter()
            .enumerate()
            .filter_map(|(i, cell)| {
                let (label, _) = model.classify(cell);
                self.observe_label(i, label)
            })
            .collect()
    }
}
