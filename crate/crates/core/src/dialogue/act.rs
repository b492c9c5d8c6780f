use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::game::{Location, Player, Symbol};
use crate::perception::GameMoveEvent;

use super::DialogueError;

pub const NUM_ACTS: usize = 18;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Feedback {
    Draw,
    /// The agent lost (spelled as in the act inventory).
    Loose,
    Win,
}

/// The agent's action inventory: nine physical moves and nine verbal acts.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum DialogueAct {
    GameMove(Location),
    ProvideFeedback(Feedback),
    ProvideName,
    ReplyPlayGameYes,
    RequestPlayGame,
    RequestUserGameMove,
    SalutationClosing,
    SalutationGreeting,
}

impl DialogueAct {
    /// All acts in canonical (network output) order.
    pub fn all() -> [DialogueAct; NUM_ACTS] {
        std::array::from_fn(|i| Self::from_index(i).expect("index < 18"))
    }

    pub fn index(self) -> usize {
        match self {
            DialogueAct::GameMove(l) => l.index(),
            DialogueAct::ProvideFeedback(Feedback::Draw) => 9,
            DialogueAct::ProvideFeedback(Feedback::Loose) => 10,
            DialogueAct::ProvideFeedback(Feedback::Win) => 11,
            DialogueAct::ProvideName => 12,
            DialogueAct::ReplyPlayGameYes => 13,
            DialogueAct::RequestPlayGame => 14,
            DialogueAct::RequestUserGameMove => 15,
            DialogueAct::SalutationClosing => 16,
            DialogueAct::SalutationGreeting => 17,
        }
    }

    pub fn from_index(i: usize) -> Option<DialogueAct> {
        Some(match i {
            0..=8 => DialogueAct::GameMove(Location::from_index(i)?),
            9 => DialogueAct::ProvideFeedback(Feedback::Draw),
            10 => DialogueAct::ProvideFeedback(Feedback::Loose),
            11 => DialogueAct::ProvideFeedback(Feedback::Win),
            12 => DialogueAct::ProvideName,
            13 => DialogueAct::ReplyPlayGameYes,
            14 => DialogueAct::RequestPlayGame,
            15 => DialogueAct::RequestUserGameMove,
            16 => DialogueAct::SalutationClosing,
            17 => DialogueAct::SalutationGreeting,
            _ => return None,
        })
    }

    pub fn is_physical(self) -> bool {
        matches!(self, DialogueAct::GameMove(_))
    }

    pub fn location(self) -> Option<Location> {
        match self {
            DialogueAct::GameMove(l) => Some(l),
            _ => None,
        }
    }

    /// Template text for the act, plus the drawing it implies for moves.
    pub fn verbalize(self, agent_symbol: Symbol) -> (&'static str, Option<GameMoveEvent>) {
        let text = match self {
            DialogueAct::GameMove(_) => "I take this one",
            DialogueAct::ProvideFeedback(Feedback::Draw) => "It is a draw.",
            DialogueAct::ProvideFeedback(Feedback::Loose) => "Well done, you won.",
            DialogueAct::ProvideFeedback(Feedback::Win) => "Yes, I won.",
            DialogueAct::ProvideName => "I am Baxter.",
            DialogueAct::ReplyPlayGameYes => "Nice. Let me start.",
            DialogueAct::RequestPlayGame => "Would you like to play a game with me?",
            DialogueAct::RequestUserGameMove => "Your turn.",
            DialogueAct::SalutationClosing => "Good bye!",
            DialogueAct::SalutationGreeting => "Hello!",
        };
        let event = self
            .location()
            .map(|l| GameMoveEvent::new(Player::Agent, l, agent_symbol));
        (text, event)
    }
}

impl fmt::Display for DialogueAct {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DialogueAct::GameMove(l) => write!(f, "GameMove(gridloc={})", l.name()),
            DialogueAct::ProvideFeedback(Feedback::Draw) => f.write_str("Provide(feedback=draw)"),
            DialogueAct::ProvideFeedback(Feedback::Loose) => f.write_str("Provide(feedback=loose)"),
            DialogueAct::ProvideFeedback(Feedback::Win) => f.write_str("Provide(feedback=win)"),
            DialogueAct::ProvideName => f.write_str("Provide(name)"),
            DialogueAct::ReplyPlayGameYes => f.write_str("Reply(playGame=yes)"),
            DialogueAct::RequestPlayGame => f.write_str("Request(playGame)"),
            DialogueAct::RequestUserGameMove => f.write_str("Request(userGameMove)"),
            DialogueAct::SalutationClosing => f.write_str("Salutation(closing)"),
            DialogueAct::SalutationGreeting => f.write_str("Salutation(greeting)"),
        }
    }
}

impl FromStr for DialogueAct {
    type Err = DialogueError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if let Some(loc) = s
            .strip_prefix("GameMove(gridloc=")
            .and_then(|r| r.strip_suffix(')'))
        {
            let l = loc
                .parse::<Location>()
                .map_err(|_| DialogueError::Parse(format!("unknown act {s:?}")))?;
            return Ok(DialogueAct::GameMove(l));
        }
        DialogueAct::all()
            .into_iter()
            .find(|a| !a.is_physical() && a.to_string() == s)
            .ok_or_else(|| DialogueError::Parse(format!("unknown act {s:?}")))
    }
}
