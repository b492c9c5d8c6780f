use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const LINES: [[usize; 3]; 8] = [
    [0, 1, 2],
    [3, 4, 5],
    [6, 7, 8],
    [0, 3, 6],
    [1, 4, 7],
    [2, 5, 8],
    [0, 4, 8],
    [2, 4, 6],
];

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GameError {
    #[error("illegal move: {0} is occupied")]
    Occupied(Location),
    #[error("illegal move: the game is over ({0:?})")]
    Finished(Outcome),
    #[error("invalid board string {0:?}")]
    BadBoard(String),
    #[error("unknown grid location {0:?}")]
    BadLocation(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Symbol {
    Nought,
    Cross,
}

impl Symbol {
    pub fn other(self) -> Symbol {
        match self {
            Symbol::Nought => Symbol::Cross,
            Symbol::Cross => Symbol::Nought,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Cell {
    Empty,
    Nought,
    Cross,
}

impl From<Symbol> for Cell {
    fn from(s: Symbol) -> Cell {
        match s {
            Symbol::Nought => Cell::Nought,
            Symbol::Cross => Cell::Cross,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Player {
    Agent,
    User,
}

impl Player {
    pub fn opponent(self) -> Player {
        match self {
            Player::Agent => Player::User,
            Player::User => Player::Agent,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Outcome {
    InProgress,
    AgentWin,
    UserWin,
    Draw,
}

impl Outcome {
    pub fn is_finished(self) -> bool {
        self != Outcome::InProgress
    }
}

/// One of the nine grid cells, row-major.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Location {
    UpperLeft,
    UpperMiddle,
    UpperRight,
    MiddleLeft,
    Middle,
    MiddleRight,
    LowerLeft,
    LowerMiddle,
    LowerRight,
}

impl Location {
    pub const ALL: [Location; 9] = [
        Location::UpperLeft,
        Location::UpperMiddle,
        Location::UpperRight,
        Location::MiddleLeft,
        Location::Middle,
        Location::MiddleRight,
        Location::LowerLeft,
        Location::LowerMiddle,
        Location::LowerRight,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Location> {
        Self::ALL.get(i).copied()
    }

    /// Compact event name, e.g. `lowerleft`.
    pub fn name(self) -> &'static str {
        match self {
            Location::UpperLeft => "upperleft",
            Location::UpperMiddle => "uppermiddle",
            Location::UpperRight => "upperright",
            Location::MiddleLeft => "middleleft",
            Location::Middle => "middle",
            Location::MiddleRight => "middleright",
            Location::LowerLeft => "lowerleft",
            Location::LowerMiddle => "lowermiddle",
            Location::LowerRight => "lowerright",
        }
    }

    /// How a speaker would say it, e.g. `lower left`.
    pub fn spoken(self) -> &'static str {
        match self {
            Location::UpperLeft => "upper left",
            Location::UpperMiddle => "upper middle",
            Location::UpperRight => "upper right",
            Location::MiddleLeft => "middle left",
            Location::Middle => "middle",
            Location::MiddleRight => "middle right",
            Location::LowerLeft => "lower left",
            Location::LowerMiddle => "lower middle",
            Location::LowerRight => "lower right",
        }
    }
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Location {
    type Err = GameError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm: String = s
            .chars()
            .filter(|c| !c.is_whitespace() && *c != '-' && *c != '_')
            .flat_map(char::to_lowercase)
            .collect();
        if let Ok(i) = norm.parse::<usize>() {
            return Location::from_index(i).ok_or_else(|| GameError::BadLocation(s.into()));
        }
        let norm = match norm.as_str() {
            "center" | "centre" => "middle".to_string(),
            other => other
                .replace("top", "upper")
                .replace("bottom", "lower")
                .replace("center", "middle"),
        };
        Location::ALL
            .into_iter()
            .find(|l| l.name() == norm)
            .ok_or_else(|| GameError::BadLocation(s.into()))
    }
}

/// Immutable 3x3 game state.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Board {
    cells: [Cell; 9],
    to_move: Player,
    agent_symbol: Symbol,
}

impl Default for Board {
    /// Agent plays noughts and opens.
    fn default() -> Self {
        Board::new(Symbol::Nought, Player::Agent)
    }
}

impl Board {
    pub fn new(agent_symbol: Symbol, first: Player) -> Self {
        Board {
            cells: [Cell::Empty; 9],
            to_move: first,
            agent_symbol,
        }
    }

    pub fn cells(&self) -> &[Cell; 9] {
        &self.cells
    }

    pub fn cell(&self, loc: Location) -> Cell {
        self.cells[loc.index()]
    }

    pub fn to_move(&self) -> Player {
        self.to_move
    }

    pub fn agent_symbol(&self) -> Symbol {
        self.agent_symbol
    }

    pub fn symbol_of(&self, player: Player) -> Symbol {
        match player {
            Player::Agent => self.agent_symbol,
            Player::User => self.agent_symbol.other(),
        }
    }

    pub fn owner(&self, cell: Cell) -> Option<Player> {
        match cell {
            Cell::Empty => None,
            c if c == Cell::from(self.agent_symbol) => Some(Player::Agent),
            _ => Some(Player::User),
        }
    }

    pub fn occupied(&self) -> usize {
        self.cells.iter().filter(|&&c| c != Cell::Empty).count()
    }

    /// Places the mover's symbol and passes the turn.
    pub fn apply_move(&self, loc: Location) -> Result<Board, GameError> {
        let outcome = self.outcome();
        if outcome.is_finished() {
            return Err(GameError::Finished(outcome));
        }
        if self.cells[loc.index()] != Cell::Empty {
            return Err(GameError::Occupied(loc));
        }
        let mut next = *self;
        next.cells[loc.index()] = self.symbol_of(self.to_move).into();
        next.to_move = self.to_move.opponent();
        Ok(next)
    }

    fn has_line(&self, sym: Symbol) -> bool {
        let c = Cell::from(sym);
        LINES.iter().any(|l| l.iter().all(|&i| self.cells[i] == c))
    }

    pub fn outcome(&self) -> Outcome {
        if self.has_line(self.agent_symbol) {
            Outcome::AgentWin
        } else if self.has_line(self.agent_symbol.other()) {
            Outcome::UserWin
        } else if self.occupied() == 9 {
            Outcome::Draw
        } else {
            Outcome::InProgress
        }
    }

    /// Empty cells while the game is in progress; nothing once it is over.
    pub fn legal_moves(&self) -> Vec<Location> {
        if self.outcome().is_finished() {
            return Vec::new();
        }
        Location::ALL
            .into_iter()
            .filter(|l| self.cells[l.index()] == Cell::Empty)
            .collect()
    }

    /// Board with the same cells, but with the given side to move.
    pub fn with_to_move(mut self, player: Player) -> Board {
        self.to_move = player;
        self
    }

    /// Builds a board from raw cells without validation.
    pub fn from_cells(cells: [Cell; 9], to_move: Player, agent_symbol: Symbol) -> Board {
        Board {
            cells,
            to_move,
            agent_symbol,
        }
    }

    /// Structural validity: symbol counts within one and at most one winner.
    pub fn is_valid(&self) -> bool {
        let n = self.cells.iter().filter(|&&c| c == Cell::Nought).count() as i32;
        let x = self.cells.iter().filter(|&&c| c == Cell::Cross).count() as i32;
        (n - x).abs() <= 1 && !(self.has_line(Symbol::Nought) && self.has_line(Symbol::Cross))
    }
}

/// Ten characters: nine cells as `.`/`o`/`x`, then the side to move as
/// `a` (agent) or `u` (user). The side character is uppercase when the agent
/// plays crosses.
impl fmt::Display for Board {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in self.cells {
            f.write_str(match c {
                Cell::Empty => ".",
                Cell::Nought => "o",
                Cell::Cross => "x",
            })?;
        }
        let side = match self.to_move {
            Player::Agent => 'a',
            Player::User => 'u',
        };
        let side = if self.agent_symbol == Symbol::Cross {
            side.to_ascii_uppercase()
        } else {
            side
        };
        write!(f, "{side}")
    }
}

impl FromStr for Board {
    type Err = GameError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let chars: Vec<char> = s.chars().collect();
        if chars.len() != 10 {
            return Err(GameError::BadBoard(s.into()));
        }
        let mut cells = [Cell::Empty; 9];
        for (cell, ch) in cells.iter_mut().zip(&chars) {
            *cell = match ch {
                '.' => Cell::Empty,
                'o' => Cell::Nought,
                'x' => Cell::Cross,
                _ => return Err(GameError::BadBoard(s.into())),
            };
        }
        let (to_move, agent_symbol) = match chars[9] {
            'a' => (Player::Agent, Symbol::Nought),
            'u' => (Player::User, Symbol::Nought),
            'A' => (Player::Agent, Symbol::Cross),
            'U' => (Player::User, Symbol::Cross),
            _ => return Err(GameError::BadBoard(s.into())),
        };
        let board = Board::from_cells(cells, to_move, agent_symbol);
        if !board.is_valid() {
            return Err(GameError::BadBoard(s.into()));
        }
        Ok(board)
    }
}
