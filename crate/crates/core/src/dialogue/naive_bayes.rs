use serde::{Deserialize, Serialize};

use crate::game::{Board, Location, Player};

use super::act::{DialogueAct, NUM_ACTS};
use super::corpus::SeedDialogue;
use super::state::{StateVector, Vocabulary, STATE_LEN};
use super::DialogueError;

/// Laplace smoothing constant.
pub const SMOOTHING: f64 = 1.0;
/// Acts at or below this posterior are filtered out.
pub const FILTER_THRESHOLD: f64 = 0.001;
/// Features at or above this value count as present.
pub const BINARIZE_AT: f64 = 0.5;

/// Bernoulli Naive Bayes over binarized state features.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ActionModel {
    /// Instances observed per act.
    pub act_counts: Vec<usize>,
    /// `feature_counts[a][f]`: instances of act `a` with feature `f` present.
    pub feature_counts: Vec<Vec<usize>>,
    pub alpha: f64,
}

/// Cells the agent may draw in: the empty cells, and only on its own turn.
pub fn agent_moves(board: &Board) -> Vec<Location> {
    if board.to_move() == Player::Agent {
        board.legal_moves()
    } else {
        Vec::new()
    }
}

impl ActionModel {
    /// Fits from explicit `(state, act)` instances.
    pub fn from_instances<'a>(
        instances: impl IntoIterator<Item = (&'a StateVector, DialogueAct)>,
    ) -> Result<Self, DialogueError> {
        let mut act_counts = vec![0; NUM_ACTS];
        let mut feature_counts = vec![vec![0; STATE_LEN]; NUM_ACTS];
        for (s, a) in instances {
            let i = a.index();
            act_counts[i] += 1;
            for (f, &x) in s.as_slice().iter().enumerate() {
                if x >= BINARIZE_AT {
                    feature_counts[i][f] += 1;
                }
            }
        }
        if act_counts.iter().all(|&c| c == 0) {
            return Err(DialogueError::Corpus("no agent decisions to fit".into()));
        }
        Ok(Self {
            act_counts,
            feature_counts,
            alpha: SMOOTHING,
        })
    }

    pub fn total(&self) -> usize {
        self.act_counts.iter().sum()
    }

    fn log_joint(&self, state: &StateVector, act: usize) -> f64 {
        let n = self.total() as f64;
        let na = self.act_counts[act] as f64;
        let mut lp = ((na + self.alpha) / (n + self.alpha * NUM_ACTS as f64)).ln();
        for (f, &x) in state.as_slice().iter().enumerate() {
            let p = (self.feature_counts[act][f] as f64 + self.alpha) / (na + 2.0 * self.alpha);
            lp += if x >= BINARIZE_AT { p.ln() } else { (1.0 - p).ln() };
        }
        lp
    }

    /// `Pr(a | s)` for all 18 acts in canonical order.
    pub fn posterior(&self, state: &StateVector) -> [f64; NUM_ACTS] {
        let logs: [f64; NUM_ACTS] = std::array::from_fn(|a| self.log_joint(state, a));
        let max = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut p = logs.map(|l| (l - max).exp());
        let z: f64 = p.iter().sum();
        for v in &mut p {
            *v /= z;
        }
        p
    }

    /// The data-like reward term: the raw posterior of `act`.
    pub fn data_likeness(&self, state: &StateVector, act: DialogueAct) -> f64 {
        self.posterior(state)[act.index()]
    }

    /// Legal acts above the threshold, with moves widened to every cell the
    /// agent may draw in. Falls back to all legal acts.
    pub fn filter_actions(&self, state: &StateVector, board: &Board) -> Vec<DialogueAct> {
        filter_by_posterior(&self.posterior(state), board)
    }
}

/// Whether a verbal act makes sense on this board. Asking for a move only
/// makes sense while the user is to move in an unfinished game.
pub fn verbal_allowed(act: DialogueAct, board: &Board) -> bool {
    match act {
        DialogueAct::GameMove(_) => false,
        DialogueAct::RequestUserGameMove => board.to_move() == Player::User && !board.outcome().is_finished(),
        _ => true,
    }
}

/// Every act the agent may take on this board.
pub fn legal_acts(board: &Board) -> Vec<DialogueAct> {
    DialogueAct::all()
        .into_iter()
        .filter(|&a| match a {
            DialogueAct::GameMove(l) => agent_moves(board).contains(&l),
            _ => verbal_allowed(a, board),
        })
        .collect()
}

/// The filter rule applied to a given posterior vector.
pub fn filter_by_posterior(posterior: &[f64; NUM_ACTS], board: &Board) -> Vec<DialogueAct> {
    let moves = agent_moves(board);
    let mut any_move = false;
    let mut acts = Vec::new();
    for act in DialogueAct::all() {
        if posterior[act.index()] > FILTER_THRESHOLD && (act.is_physical() || verbal_allowed(act, board)) {
            if act.is_physical() {
                any_move = true;
            } else {
                acts.push(act);
            }
        }
    }
    if any_move {
        acts.extend(moves.iter().map(|&l| DialogueAct::GameMove(l)));
    }
    if acts.is_empty() {
        acts = legal_acts(board);
    }
    acts.sort_by_key(|a| a.index());
    acts
}

/// One instance per agent decision in the corpus.
pub fn fit_action_model(corpus: &[SeedDialogue], vocab: &Vocabulary) -> Result<ActionModel, DialogueError> {
    if corpus.is_empty() {
        return Err(DialogueError::Corpus("empty corpus".into()));
    }
    let mut decisions = Vec::new();
    for d in corpus {
        decisions.extend(d.replay(vocab)?.0);
    }
    ActionModel::from_instances(decisions.iter().map(|d| (&d.state, d.act)))
}
