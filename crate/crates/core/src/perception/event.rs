use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::game::{Location, Player, Symbol};

use super::PerceptionError;

/// A drawing event, `[who=usr ∧ what=draw ∧ where=middle]`.
///
/// Only drawing is modelled, so `what` is implicit. The symbol is carried
/// alongside but is not part of the bracketed notation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GameMoveEvent {
    pub who: Player,
    #[serde(rename = "where")]
    pub location: Location,
    pub symbol: Symbol,
}

impl GameMoveEvent {
    pub fn new(who: Player, location: Location, symbol: Symbol) -> Self {
        Self {
            who,
            location,
            symbol,
        }
    }
}

pub(crate) fn who_name(p: Player) -> &'static str {
    match p {
        Player::Agent => "rob",
        Player::User => "usr",
    }
}

impl fmt::Display for GameMoveEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[who={} ∧ what=draw ∧ where={}]",
            who_name(self.who),
            self.location.name()
        )
    }
}

/// Parses the bracketed notation. The symbol follows the default convention
/// that the robot draws noughts and the user crosses.
impl FromStr for GameMoveEvent {
    type Err = PerceptionError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || PerceptionError::Input(format!("malformed game move event {s:?}"));
        let inner = s
            .trim()
            .strip_prefix('[')
            .and_then(|r| r.strip_suffix(']'))
            .ok_or_else(bad)?;
        let mut who = None;
        let mut location = None;
        let mut what = None;
        for part in inner.split('∧') {
            let (k, v) = part.trim().split_once('=').ok_or_else(bad)?;
            match k.trim() {
                "who" => {
                    who = Some(match v.trim() {
                        "rob" => Player::Agent,
                        "usr" => Player::User,
                        _ => return Err(bad()),
                    })
                }
                "what" => what = Some(v.trim().to_string()),
                "where" => location = Some(v.trim().parse::<Location>().map_err(|_| bad())?),
                _ => return Err(bad()),
            }
        }
        if what.as_deref() != Some("draw") {
            return Err(bad());
        }
        let who = who.ok_or_else(bad)?;
        let symbol = match who {
            Player::Agent => Symbol::Nought,
            Player::User => Symbol::Cross,
        };
        Ok(GameMoveEvent::new(who, location.ok_or_else(bad)?, symbol))
    }
}
