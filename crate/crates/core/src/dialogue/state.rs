use std::collections::HashMap;
use std::ops::Index;

use serde::{Deserialize, Serialize};

use crate::game::{Board, Cell, Player};

use super::act::DialogueAct;
use super::utterance::Utterance;
use super::DialogueError;
use crate::perception::GameMoveEvent;

pub const WORD_SLOTS: usize = 48;
pub const BOARD_SLOTS: usize = 9;
pub const STATE_LEN: usize = WORD_SLOTS + BOARD_SLOTS;

/// Board slot values.
pub const CELL_EMPTY: f64 = 0.0;
pub const CELL_USER: f64 = 0.5;
pub const CELL_AGENT: f64 = 1.0;

/// Ordered word list backing the 48 word slots.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Vocabulary {
    words: Vec<String>,
    #[serde(skip)]
    index: HashMap<String, usize>,
}

impl Vocabulary {
    pub fn new(words: Vec<String>) -> Result<Self, DialogueError> {
        if words.len() > WORD_SLOTS {
            return Err(DialogueError::Vocabulary(format!(
                "{} words exceed the {WORD_SLOTS} slots",
                words.len()
            )));
        }
        let mut index = HashMap::new();
        for (i, w) in words.iter().enumerate() {
            if index.insert(w.clone(), i).is_some() {
                return Err(DialogueError::Vocabulary(format!("duplicate word {w:?}")));
            }
        }
        Ok(Self { words, index })
    }

    /// The most frequent tokens, ties broken lexicographically.
    pub fn from_token_counts(counts: &HashMap<String, usize>) -> Self {
        let mut ranked: Vec<(&String, &usize)> = counts.iter().collect();
        ranked.sort_by(|a, b| b.1.cmp(a.1).then_with(|| a.0.cmp(b.0)));
        let words = ranked
            .into_iter()
            .take(WORD_SLOTS)
            .map(|(w, _)| w.clone())
            .collect();
        Self::new(words).expect("distinct and bounded")
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn slot(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    /// One token per line.
    pub fn to_text(&self) -> String {
        let mut s = self.words.join("\n");
        s.push('\n');
        s
    }

    pub fn from_text(text: &str) -> Result<Self, DialogueError> {
        Self::new(
            text.lines()
                .map(str::trim)
                .filter(|l| !l.is_empty())
                .map(String::from)
                .collect(),
        )
    }

    /// Builds the state vector for the last system turn, the last user turn
    /// and the board. User confidences override system presence for words in
    /// both turns. Returns the vector and the number of out-of-vocabulary
    /// tokens ignored.
    pub fn featurize(
        &self,
        last_system: Option<&Utterance>,
        last_user: Option<&Utterance>,
        board: &Board,
    ) -> (StateVector, usize) {
        let mut v = [0.0; STATE_LEN];
        let mut oov = 0;
        if let Some(sys) = last_system {
            for w in &sys.words {
                match self.slot(w) {
                    Some(i) => v[i] = 1.0,
                    None => oov += 1,
                }
            }
        }
        if let Some(usr) = last_user {
            for (w, &c) in usr.words.iter().zip(&usr.confidences) {
                match self.slot(w) {
                    Some(i) => v[i] = c,
                    None => oov += 1,
                }
            }
        }
        for (i, cell) in board.cells().iter().enumerate() {
            v[WORD_SLOTS + i] = match board.owner(*cell) {
                None => CELL_EMPTY,
                Some(Player::Agent) => CELL_AGENT,
                Some(Player::User) => CELL_USER,
            };
        }
        (StateVector(v), oov)
    }
}

impl<'de> Deserialize<'de> for Vocabulary {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            words: Vec<String>,
        }
        let raw = Raw::deserialize(d)?;
        Vocabulary::new(raw.words).map_err(serde::de::Error::custom)
    }
}

/// 48 word features in [0, 1] followed by 9 board features in {0, 0.5, 1}.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateVector(#[serde(with = "state_serde")] pub [f64; STATE_LEN]);

mod state_serde {
    use super::STATE_LEN;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &[f64; STATE_LEN], s: S) -> Result<S::Ok, S::Error> {
        v.as_slice().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<[f64; STATE_LEN], D::Error> {
        let v = Vec::<f64>::deserialize(d)?;
        v.try_into()
            .map_err(|_| serde::de::Error::custom("state vector must have 57 entries"))
    }
}

impl StateVector {
    pub fn zeros() -> Self {
        StateVector([0.0; STATE_LEN])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn words(&self) -> &[f64] {
        &self.0[..WORD_SLOTS]
    }

    pub fn board(&self) -> &[f64] {
        &self.0[WORD_SLOTS..]
    }
}

impl Index<usize> for StateVector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// What the agent can currently see: the last system turn, the user's reply
/// to it (if any) and the board with its full move history.
#[derive(Clone, Debug, PartialEq)]
pub struct DialogueContext {
    pub last_system: Option<Utterance>,
    pub last_user: Option<Utterance>,
    pub board: Board,
}

impl Default for DialogueContext {
    fn default() -> Self {
        Self::new(Board::default())
    }
}

impl DialogueContext {
    pub fn new(board: Board) -> Self {
        Self {
            last_system: None,
            last_user: None,
            board,
        }
    }

    pub fn features(&self, vocab: &Vocabulary) -> (StateVector, usize) {
        vocab.featurize(self.last_system.as_ref(), self.last_user.as_ref(), &self.board)
    }

    /// Records an agent act: its verbalization becomes the last system turn,
    /// any user words are cleared, and a move is applied to the board.
    pub fn apply_agent(&mut self, act: DialogueAct) -> Result<Option<GameMoveEvent>, DialogueError> {
        let (text, event) = act.verbalize(self.board.agent_symbol());
        if let Some(ev) = event {
            if self.board.to_move() != Player::Agent {
                return Err(DialogueError::Turn(format!("{act} while the user is to move")));
            }
            self.board = self.board.apply_move(ev.location)?;
        }
        self.last_system = Some(Utterance::system(text));
        self.last_user = None;
        Ok(event)
    }

    /// Records the user's reply (possibly silence) and any drawing.
    pub fn apply_user(
        &mut self,
        utterance: Option<Utterance>,
        event: Option<&GameMoveEvent>,
    ) -> Result<(), DialogueError> {
        if let Some(ev) = event {
            if self.board.to_move() != Player::User {
                return Err(DialogueError::Turn(format!(
                    "user drew at {} out of turn",
                    ev.location
                )));
            }
            if self.board.cell(ev.location) != Cell::Empty {
                return Err(DialogueError::Game(crate::game::GameError::Occupied(ev.location)));
            }
            self.board = self.board.apply_move(ev.location)?;
        }
        self.last_user = utterance.filter(|u| !u.is_empty());
        Ok(())
    }
}
