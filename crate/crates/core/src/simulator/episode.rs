use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::agent::{reward, AgentError, Experience, RewardConfig};
use crate::dialogue::{
    fit_action_model, ActionModel, DialogueAct, DialogueContext, SeedDialogue, SeedTurn, StateVector,
    Vocabulary,
};
use crate::game::{Board, Outcome};

use super::user::{Repertoire, SimulatedUser, SimulatorConfig};

/// Agent turns after which an episode is cut off.
pub const MAX_AGENT_TURNS: usize = 50;

/// The fixed pieces every episode shares: vocabulary, action model, user
/// repertoire and reward settings.
#[derive(Clone, Debug)]
pub struct Environment {
    pub vocab: Vocabulary,
    pub actions: ActionModel,
    pub repertoire: Repertoire,
    pub reward: RewardConfig,
    pub simulator: SimulatorConfig,
    pub max_turns: usize,
}

impl Environment {
    pub fn from_corpus(corpus: &[SeedDialogue]) -> Result<Self, AgentError> {
        let vocab = Vocabulary::from_corpus(corpus);
        let actions = fit_action_model(corpus, &vocab)?;
        Ok(Self {
            vocab,
            actions,
            repertoire: Repertoire::from_corpus(corpus),
            reward: RewardConfig::default(),
            simulator: SimulatorConfig::default(),
            max_turns: MAX_AGENT_TURNS,
        })
    }

    pub fn with_simulator(mut self, cfg: SimulatorConfig) -> Self {
        self.simulator = cfg;
        self
    }

    pub fn episode(&self, seed: u64) -> Episode<'_> {
        Episode::new(self, ChaCha8Rng::seed_from_u64(seed))
    }
}

/// A complete dialogue: transcript, experiences and result.
#[derive(Clone, Debug, PartialEq)]
pub struct EpisodeRecord {
    pub transcript: SeedDialogue,
    pub experiences: Vec<Experience>,
    pub board: Board,
    pub outcome: Outcome,
    /// Cut off at the turn limit rather than closed by the agent.
    pub aborted: bool,
    pub total_reward: f64,
}

/// One dialogue stepped by the caller: read [`Episode::state`] and
/// [`Episode::allowed`], then [`Episode::step`] with a chosen act.
#[derive(Clone, Debug)]
pub struct Episode<'e> {
    env: &'e Environment,
    user: SimulatedUser<'e>,
    ctx: DialogueContext,
    state: StateVector,
    allowed: Vec<DialogueAct>,
    oov: usize,
    turns: usize,
    done: bool,
    aborted: bool,
    transcript: SeedDialogue,
    total_reward: f64,
}

impl<'e> Episode<'e> {
    pub fn new(env: &'e Environment, rng: ChaCha8Rng) -> Self {
        let ctx = DialogueContext::default();
        let mut ep = Self {
            env,
            user: SimulatedUser::new(&env.repertoire, env.simulator, rng),
            ctx,
            state: StateVector::zeros(),
            allowed: Vec::new(),
            oov: 0,
            turns: 0,
            done: false,
            aborted: false,
            transcript: SeedDialogue::default(),
            total_reward: 0.0,
        };
        ep.refresh();
        ep
    }

    fn refresh(&mut self) {
        let (s, oov) = self.ctx.features(&self.env.vocab);
        self.state = s;
        self.oov += oov;
        self.allowed = if self.done {
            Vec::new()
        } else {
            self.env.actions.filter_actions(&s, &self.ctx.board)
        };
    }

    pub fn state(&self) -> &StateVector {
        &self.state
    }

    /// The filtered act set; empty once the episode is over.
    pub fn allowed(&self) -> &[DialogueAct] {
        &self.allowed
    }

    pub fn board(&self) -> &Board {
        &self.ctx.board
    }

    pub fn context(&self) -> &DialogueContext {
        &self.ctx
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    pub fn is_aborted(&self) -> bool {
        self.aborted
    }

    pub fn turns(&self) -> usize {
        self.turns
    }

    /// Out-of-vocabulary tokens seen so far.
    pub fn oov_count(&self) -> usize {
        self.oov
    }

    pub fn total_reward(&self) -> f64 {
        self.total_reward
    }

    pub fn transcript(&self) -> &SeedDialogue {
        &self.transcript
    }

    /// Takes `act`, lets the simulated user answer and returns the
    /// resulting experience.
    pub fn step(&mut self, act: DialogueAct) -> Result<Experience, AgentError> {
        if self.done {
            return Err(AgentError::Finished);
        }
        if !self.allowed.contains(&act) {
            return Err(AgentError::IllegalAct(act.to_string()));
        }
        let s = self.state;
        let dr = self.env.actions.data_likeness(&s, act);
        self.ctx.apply_agent(act)?;
        let after = self.ctx.board;
        self.transcript.turns.push(SeedTurn::Agent(act));
        self.turns += 1;

        let mut terminal = None;
        if act == DialogueAct::SalutationClosing && after.outcome().is_finished() {
            self.done = true;
            terminal = Some(after.outcome());
        } else if self.turns >= self.env.max_turns {
            self.done = true;
            self.aborted = true;
            log::debug!("episode cut off after {} agent turns", self.turns);
        } else {
            let (utt, event) = self.user.respond(act, &after);
            if utt.is_some() || event.is_some() {
                self.transcript.turns.push(SeedTurn::User {
                    text: utt.as_ref().map(|u| u.text.clone()).unwrap_or_default(),
                    event,
                });
            }
            self.ctx.apply_user(utt, event.as_ref())?;
        }

        let r = reward(&after, act, dr, terminal, &self.env.reward);
        self.total_reward += r;
        self.refresh();
        Ok(Experience {
            state: s,
            action: act.index(),
            reward: r,
            next_state: self.state,
            terminal: self.done,
            legal_next: Experience::mask(&self.allowed),
        })
    }

    pub fn into_record(self, experiences: Vec<Experience>) -> EpisodeRecord {
        EpisodeRecord {
            transcript: self.transcript,
            experiences,
            board: self.ctx.board,
            outcome: self.ctx.board.outcome(),
            aborted: self.aborted,
            total_reward: self.total_reward,
        }
    }
}

/// Runs a whole dialogue with `policy` choosing from the allowed acts.
pub fn run_episode(
    env: &Environment,
    seed: u64,
    mut policy: impl FnMut(&StateVector, &[DialogueAct]) -> DialogueAct,
) -> Result<EpisodeRecord, AgentError> {
    let mut ep = env.episode(seed);
    let mut experiences = Vec::new();
    while !ep.is_done() {
        let act = policy(ep.state(), ep.allowed());
        experiences.push(ep.step(act)?);
    }
    Ok(ep.into_record(experiences))
}
