use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dialogue::{tokenize, DialogueAct, SeedDialogue, Speaker, Utterance};
use crate::game::{minimax_value, Board, Location, Player};
use crate::perception::GameMoveEvent;

/// Out-of-vocabulary tokens injected at the configured noise rate.
pub const NOISE_WORDS: &[&str] = &["um", "uh", "hmm", "er", "mhm"];

const KEYS: usize = 10;
const LOC: &str = "{loc}";

/// How the simulated user picks its cell.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OpponentMode {
    #[default]
    Uniform,
    Minimax,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimulatorConfig {
    /// Per-token confidences are drawn uniformly from this range.
    pub confidence: (f64, f64),
    /// Probability that a token is replaced by a noise word.
    pub oov_rate: f64,
    pub opponent: OpponentMode,
}

impl Default for SimulatorConfig {
    fn default() -> Self {
        Self {
            confidence: (0.6, 1.0),
            oov_rate: 0.0,
            opponent: OpponentMode::Uniform,
        }
    }
}

impl SimulatorConfig {
    /// Every token recognised with confidence 1.
    pub fn clean() -> Self {
        Self {
            confidence: (1.0, 1.0),
            ..Self::default()
        }
    }
}

/// A user reply observed in the corpus. Move templates may contain `{loc}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Response {
    Say(String),
    Move(String),
}

/// User replies observed after each system act; all moves share one key.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct Repertoire {
    by_key: Vec<Vec<Option<Response>>>,
}

fn key(act: DialogueAct) -> usize {
    if act.is_physical() {
        0
    } else {
        act.index() - 8
    }
}

impl Repertoire {
    pub fn from_corpus(corpus: &[SeedDialogue]) -> Self {
        let mut by_key = vec![Vec::new(); KEYS];
        for d in corpus {
            for (act, reply) in d.exchanges() {
                let r = reply.map(|(text, event)| match event {
                    Some(ev) => Response::Move(text.replace(ev.location.spoken(), LOC)),
                    None => Response::Say(text.to_string()),
                });
                by_key[key(act)].push(r);
            }
        }
        Self { by_key }
    }

    /// Observed replies (silence as `None`) following `act`.
    pub fn replies(&self, act: DialogueAct) -> &[Option<Response>] {
        self.by_key.get(key(act)).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Every token the simulator can say, before noise.
    pub fn tokens(&self) -> HashSet<String> {
        let mut out = HashSet::new();
        for r in self.by_key.iter().flatten().flatten() {
            let t = match r {
                Response::Say(t) | Response::Move(t) => t,
            };
            for loc in Location::ALL {
                out.extend(tokenize(&t.replace(LOC, loc.spoken())));
            }
        }
        out
    }
}

/// Samples replies from the repertoire; never reuses a spoken reply within
/// one dialogue and only ever draws in empty cells.
#[derive(Clone, Debug)]
pub struct SimulatedUser<'r> {
    repertoire: &'r Repertoire,
    config: SimulatorConfig,
    rng: ChaCha8Rng,
    used: HashSet<Response>,
}

impl<'r> SimulatedUser<'r> {
    pub fn new(repertoire: &'r Repertoire, config: SimulatorConfig, rng: ChaCha8Rng) -> Self {
        Self {
            repertoire,
            config,
            rng,
            used: HashSet::new(),
        }
    }

    pub fn config(&self) -> &SimulatorConfig {
        &self.config
    }

    fn pick_cell(&mut self, board: &Board) -> Option<Location> {
        let legal = board.legal_moves();
        match self.config.opponent {
            OpponentMode::Uniform => legal.choose(&mut self.rng).copied(),
            OpponentMode::Minimax => {
                let scored: Vec<(Location, i8)> = legal
                    .iter()
                    .map(|&l| {
                        let next = board.apply_move(l).expect("legal");
                        (l, minimax_value(&next, Player::User))
                    })
                    .collect();
                let best = scored.iter().map(|s| s.1).max()?;
                let top: Vec<Location> = scored.iter().filter(|s| s.1 == best).map(|s| s.0).collect();
                top.choose(&mut self.rng).copied()
            }
        }
    }

    fn utter(&mut self, text: &str) -> Utterance {
        let (lo, hi) = self.config.confidence;
        let mut words = tokenize(text);
        let mut noisy = false;
        for w in &mut words {
            if self.config.oov_rate > 0.0 && self.rng.gen_bool(self.config.oov_rate.min(1.0)) {
                *w = NOISE_WORDS.choose(&mut self.rng).expect("non-empty").to_string();
                noisy = true;
            }
        }
        let confidences = words
            .iter()
            .map(|_| if hi > lo { self.rng.gen_range(lo..=hi) } else { lo })
            .collect();
        Utterance {
            speaker: Speaker::User,
            text: if noisy { words.join(" ") } else { text.to_string() },
            words,
            confidences,
        }
    }

    /// Reply to the system act just taken. A move is made only when asked
    /// for one on the user's turn; otherwise an unused spoken reply or
    /// silence.
    pub fn respond(&mut self, act: DialogueAct, board: &Board) -> (Option<Utterance>, Option<GameMoveEvent>) {
        let options = self.repertoire.replies(act);
        let user_turn = board.to_move() == Player::User && !board.outcome().is_finished();
        if act == DialogueAct::RequestUserGameMove && user_turn {
            let templates: Vec<&String> = options
                .iter()
                .flatten()
                .filter_map(|r| match r {
                    Response::Move(t) => Some(t),
                    Response::Say(_) => None,
                })
                .collect();
            let template = templates
                .choose(&mut self.rng)
                .map(|t| t.to_string())
                .unwrap_or_else(|| "I pick this".to_string());
            let Some(loc) = self.pick_cell(board) else {
                return (None, None);
            };
            let utt = self.utter(&template.replace(LOC, loc.spoken()));
            let ev = GameMoveEvent::new(Player::User, loc, board.symbol_of(Player::User));
            return (Some(utt), Some(ev));
        }
        let open: Vec<&Option<Response>> = options
            .iter()
            .filter(|r| match r {
                None => true,
                Some(said @ Response::Say(_)) => !self.used.contains(said),
                Some(Response::Move(_)) => false,
            })
            .collect();
        match open.choose(&mut self.rng) {
            Some(Some(Response::Say(text))) => {
                let text = text.clone();
                self.used.insert(Response::Say(text.clone()));
                (Some(self.utter(&text)), None)
            }
            _ => (None, None),
        }
    }
}
