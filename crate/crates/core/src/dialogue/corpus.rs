use std::collections::HashMap;
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::game::{Board, Location, Outcome, Player};
use crate::perception::GameMoveEvent;

use super::act::{DialogueAct, Feedback};
use super::state::{DialogueContext, StateVector, Vocabulary};
use super::utterance::{tokenize, Utterance};
use super::DialogueError;

/// Seed for the scripted variations of dialogues 2 to 10.
pub const CORPUS_SEED: u64 = 2017;

#[derive(Clone, Debug, PartialEq)]
pub enum SeedTurn {
    Agent(DialogueAct),
    User {
        text: String,
        event: Option<GameMoveEvent>,
    },
}

/// One example interaction. User turns missing between two agent turns are
/// silences.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct SeedDialogue {
    pub turns: Vec<SeedTurn>,
}

/// A state the agent acted in, with the act the dialogue took there.
#[derive(Clone, Debug, PartialEq)]
pub struct AgentDecision {
    pub state: StateVector,
    pub board: Board,
    pub act: DialogueAct,
}

impl SeedDialogue {
    fn agent(&mut self, act: DialogueAct) {
        self.turns.push(SeedTurn::Agent(act));
    }

    fn user(&mut self, text: &str, event: Option<GameMoveEvent>) {
        self.turns.push(SeedTurn::User {
            text: text.to_string(),
            event,
        });
    }

    /// Replays every turn, returning the agent decisions and the final board.
    /// Fails if a move is illegal or the game is left unfinished.
    pub fn replay(&self, vocab: &Vocabulary) -> Result<(Vec<AgentDecision>, Board), DialogueError> {
        let mut ctx = DialogueContext::default();
        let mut decisions = Vec::new();
        for turn in &self.turns {
            match turn {
                SeedTurn::Agent(act) => {
                    decisions.push(AgentDecision {
                        state: ctx.features(vocab).0,
                        board: ctx.board,
                        act: *act,
                    });
                    ctx.apply_agent(*act)?;
                }
                SeedTurn::User { text, event } => {
                    if let Some(ev) = event {
                        if ev.who != Player::User {
                            return Err(DialogueError::Corpus(format!("user line carries {ev}")));
                        }
                    }
                    ctx.apply_user(Some(Utterance::user(text, 1.0)), event.as_ref())?;
                }
            }
        }
        if !ctx.board.outcome().is_finished() {
            return Err(DialogueError::Corpus("dialogue ends mid-game".into()));
        }
        Ok((decisions, ctx.board))
    }

    /// Pairs each agent act with the user turn that directly followed it.
    pub fn exchanges(&self) -> Vec<(DialogueAct, Option<(&str, Option<GameMoveEvent>)>)> {
        let mut out = Vec::new();
        for (i, turn) in self.turns.iter().enumerate() {
            if let SeedTurn::Agent(act) = turn {
                let reply = match self.turns.get(i + 1) {
                    Some(SeedTurn::User { text, event }) => Some((text.as_str(), *event)),
                    _ => None,
                };
                out.push((*act, reply));
            }
        }
        out
    }

    /// Every token spoken in the dialogue, system templates included.
    pub fn tokens(&self) -> Vec<String> {
        self.turns
            .iter()
            .flat_map(|t| match t {
                SeedTurn::Agent(a) => tokenize(a.verbalize(Board::default().agent_symbol()).0),
                SeedTurn::User { text, .. } => tokenize(text),
            })
            .collect()
    }

    /// `speaker | act-or-utterance | optional-event`, one turn per line.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let sym = Board::default().agent_symbol();
        for turn in &self.turns {
            match turn {
                SeedTurn::Agent(act) => {
                    let (_, ev) = act.verbalize(sym);
                    let _ = write!(s, "rob | {act} |");
                    if let Some(ev) = ev {
                        let _ = write!(s, " {ev}");
                    }
                }
                SeedTurn::User { text, event } => {
                    let _ = write!(s, "usr | {text} |");
                    if let Some(ev) = event {
                        let _ = write!(s, " {ev}");
                    }
                }
            }
            s.push('\n');
        }
        s
    }
}

/// Serializes a corpus with `# dialogue N` separators.
pub fn corpus_to_text(corpus: &[SeedDialogue]) -> String {
    let mut s = String::new();
    for (i, d) in corpus.iter().enumerate() {
        if i > 0 {
            s.push('\n');
        }
        let _ = writeln!(s, "# dialogue {}", i + 1);
        s.push_str(&d.to_text());
    }
    s
}

/// Parses the line format. Blank lines and `#` comments separate dialogues.
pub fn parse_corpus(text: &str) -> Result<Vec<SeedDialogue>, DialogueError> {
    let mut out = Vec::new();
    let mut current = SeedDialogue::default();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            if !current.turns.is_empty() {
                out.push(std::mem::take(&mut current));
            }
            continue;
        }
        let bad = |m: &str| DialogueError::Parse(format!("line {}: {m}", n + 1));
        let mut parts = line.splitn(3, '|').map(str::trim);
        let speaker = parts.next().unwrap_or_default();
        let body = parts.next().ok_or_else(|| bad("missing utterance field"))?;
        let event = match parts.next() {
            Some("") | None => None,
            Some(e) => Some(e.parse::<GameMoveEvent>().map_err(|err| bad(&err.to_string()))?),
        };
        match speaker {
            "rob" => {
                let act: DialogueAct = body.parse()?;
                let (_, implied) = act.verbalize(Board::default().agent_symbol());
                if implied != event {
                    return Err(bad("event does not match the act"));
                }
                current.agent(act);
            }
            "usr" => current.user(body, event),
            other => return Err(bad(&format!("unknown speaker {other:?}"))),
        }
    }
    if !current.turns.is_empty() {
        out.push(current);
    }
    Ok(out)
}

/// Token frequencies over the whole corpus.
pub fn token_counts(corpus: &[SeedDialogue]) -> HashMap<String, usize> {
    let mut counts = HashMap::new();
    for d in corpus {
        for t in d.tokens() {
            *counts.entry(t).or_insert(0) += 1;
        }
    }
    counts
}

impl Vocabulary {
    /// The 48 most frequent corpus tokens.
    pub fn from_corpus(corpus: &[SeedDialogue]) -> Self {
        Vocabulary::from_token_counts(&token_counts(corpus))
    }
}

fn figure_one() -> SeedDialogue {
    let mut d = SeedDialogue::default();
    let usr = |l| {
        Some(GameMoveEvent::new(
            Player::User,
            l,
            Board::default().symbol_of(Player::User),
        ))
    };
    d.agent(DialogueAct::SalutationGreeting);
    d.agent(DialogueAct::ProvideName);
    d.agent(DialogueAct::RequestPlayGame);
    d.user("Yes, let's go for it.", None);
    d.agent(DialogueAct::ReplyPlayGameYes);
    d.agent(DialogueAct::GameMove(Location::LowerMiddle));
    d.agent(DialogueAct::RequestUserGameMove);
    d.user("I pick this", usr(Location::MiddleLeft));
    d.agent(DialogueAct::GameMove(Location::LowerRight));
    d.agent(DialogueAct::RequestUserGameMove);
    d.user("I do this", usr(Location::Middle));
    d.agent(DialogueAct::GameMove(Location::LowerLeft));
    d.agent(DialogueAct::ProvideFeedback(Feedback::Win));
    d.agent(DialogueAct::SalutationClosing);
    d
}

const GREETING_REPLIES: &[&str] = &["Hi there.", "Hello robot!", "Hi!"];
const NAME_REPLIES: &[&str] = &["Nice to meet you.", "Hi Baxter, I am happy to meet you."];
const AFFIRMATIVES: &[&str] = &[
    "Yes, let's go for it.",
    "Sure, why not.",
    "Okay, let's play.",
    "Yes please.",
    "Of course, I would love to.",
];
const MOVE_PHRASES: &[&str] = &[
    "I pick this",
    "I do this",
    "I choose the {loc}",
    "My move is the {loc}",
    "Here is mine",
    "I take the {loc} one",
    "This one",
];
const AGENT_WON_REPLIES: &[&str] = &["Oh no, you beat me.", "Well played."];
const DRAW_REPLIES: &[&str] = &["Nobody won this time.", "That was close."];
const AGENT_LOST_REPLIES: &[&str] = &["Yes, I beat you!", "Ha, that was easy."];
const CLOSING_REPLIES: &[&str] = &["Bye!", "See you later.", "Thanks for the game."];

/// A random game, agent opening, that ends in `want`.
fn sample_game(want: Outcome, rng: &mut ChaCha8Rng) -> Vec<Location> {
    loop {
        let mut board = Board::default();
        let mut moves = Vec::new();
        while !board.outcome().is_finished() {
            let l = *board.legal_moves().choose(rng).expect("in progress");
            board = board.apply_move(l).expect("legal");
            moves.push(l);
        }
        if board.outcome() == want {
            return moves;
        }
    }
}

fn maybe_reply(d: &mut SeedDialogue, pool: &[&str], rng: &mut ChaCha8Rng, p: f64) {
    if rng.gen_bool(p) {
        d.user(pool.choose(rng).expect("non-empty"), None);
    }
}

fn variation(want: Outcome, rng: &mut ChaCha8Rng) -> SeedDialogue {
    let mut d = SeedDialogue::default();
    d.agent(DialogueAct::SalutationGreeting);
    maybe_reply(&mut d, GREETING_REPLIES, rng, 0.5);
    d.agent(DialogueAct::ProvideName);
    maybe_reply(&mut d, NAME_REPLIES, rng, 0.5);
    d.agent(DialogueAct::RequestPlayGame);
    maybe_reply(&mut d, AFFIRMATIVES, rng, 1.0);
    d.agent(DialogueAct::ReplyPlayGameYes);

    let moves = sample_game(want, rng);
    let mut board = Board::default();
    for l in moves {
        match board.to_move() {
            Player::Agent => {
                d.agent(DialogueAct::GameMove(l));
                board = board.apply_move(l).expect("legal");
                if !board.outcome().is_finished() {
                    d.agent(DialogueAct::RequestUserGameMove);
                }
            }
            Player::User => {
                let phrase = MOVE_PHRASES.choose(rng).expect("non-empty");
                let text = phrase.replace("{loc}", l.spoken());
                let ev = GameMoveEvent::new(Player::User, l, board.symbol_of(Player::User));
                d.user(&text, Some(ev));
                board = board.apply_move(l).expect("legal");
            }
        }
    }

    let (feedback, replies) = match want {
        Outcome::AgentWin => (Feedback::Win, AGENT_WON_REPLIES),
        Outcome::Draw => (Feedback::Draw, DRAW_REPLIES),
        _ => (Feedback::Loose, AGENT_LOST_REPLIES),
    };
    d.agent(DialogueAct::ProvideFeedback(feedback));
    maybe_reply(&mut d, replies, rng, 0.6);
    d.agent(DialogueAct::SalutationClosing);
    maybe_reply(&mut d, CLOSING_REPLIES, rng, 0.6);
    d
}

/// Ten example dialogues: the canonical win transcript followed by nine
/// seeded variations ending in wins, draws and losses.
pub fn build_seed_corpus() -> Vec<SeedDialogue> {
    const OUTCOMES: [Outcome; 9] = [
        Outcome::AgentWin,
        Outcome::Draw,
        Outcome::UserWin,
        Outcome::AgentWin,
        Outcome::Draw,
        Outcome::UserWin,
        Outcome::Draw,
        Outcome::AgentWin,
        Outcome::UserWin,
    ];
    let mut corpus = vec![figure_one()];
    for (i, want) in OUTCOMES.into_iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(CORPUS_SEED + i as u64);
        corpus.push(variation(want, &mut rng));
    }
    corpus
}
