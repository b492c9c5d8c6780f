use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dialogue::{DialogueAct, StateVector, NUM_ACTS};
use crate::numerics::{Gradients, Tensor};
use crate::simulator::{Environment, Episode};

use super::qnet::{state_tensor, QNetwork};
use super::replay::{Experience, ReplayMemory};
use super::trace::{GameResult, TraceRow, TrainingTrace};
use super::AgentError;

/// How training explores.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Exploration {
    /// Uniform over the allowed acts with probability epsilon.
    #[default]
    Epsilon,
    /// With probability epsilon, sample the allowed acts by their Naive
    /// Bayes posterior.
    NbPosterior,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainingConfig {
    pub gamma: f64,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epsilon_start: f64,
    pub epsilon_min: f64,
    /// Fraction of `total_steps` over which epsilon decays linearly.
    pub epsilon_decay_fraction: f64,
    /// Gradient steps between target-network copies.
    pub target_sync: usize,
    pub total_steps: usize,
    pub replay_capacity: usize,
    /// Experiences required before the first gradient step.
    pub warmup: usize,
    pub exploration: Exploration,
    pub seed: u64,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self {
            gamma: 0.7,
            learning_rate: 0.001,
            batch_size: 32,
            epsilon_start: 1.0,
            epsilon_min: 0.01,
            epsilon_decay_fraction: 0.5,
            target_sync: 500,
            total_steps: 300_000,
            replay_capacity: 100_000,
            warmup: 1_000,
            exploration: Exploration::Epsilon,
            seed: 0,
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<(), AgentError> {
        let bad = |m: &str| Err(AgentError::Config(m.to_string()));
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return bad("gamma must lie in (0, 1)");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning rate must be positive");
        }
        if self.batch_size == 0 || self.target_sync == 0 || self.replay_capacity == 0 {
            return bad("batch size, target sync period and replay capacity must be positive");
        }
        if self.batch_size > self.replay_capacity || self.batch_size > self.warmup.max(self.batch_size) {
            return bad("batch size cannot exceed the replay capacity");
        }
        if !(0.0..=1.0).contains(&self.epsilon_min)
            || !(0.0..=1.0).contains(&self.epsilon_start)
            || self.epsilon_min > self.epsilon_start
        {
            return bad("epsilon bounds must satisfy 0 <= min <= start <= 1");
        }
        if !(0.0..=1.0).contains(&self.epsilon_decay_fraction) {
            return bad("epsilon decay fraction must lie in [0, 1]");
        }
        Ok(())
    }
}

/// Linear decay from `epsilon_start` to `epsilon_min`, then flat.
pub fn epsilon_at(cfg: &TrainingConfig, step: usize) -> f64 {
    let horizon = cfg.epsilon_decay_fraction * cfg.total_steps as f64;
    if horizon <= 0.0 || step as f64 >= horizon {
        return cfg.epsilon_min;
    }
    let t = step as f64 / horizon;
    cfg.epsilon_start + (cfg.epsilon_min - cfg.epsilon_start) * t
}

fn greedy(q: &[f64; NUM_ACTS], allowed: &[DialogueAct]) -> DialogueAct {
    let mut best = allowed[0];
    for &a in &allowed[1..] {
        let (qa, qb) = (q[a.index()], q[best.index()]);
        if qa > qb || (qa == qb && a.index() < best.index()) {
            best = a;
        }
    }
    best
}

fn check_allowed(allowed: &[DialogueAct]) -> Result<(), AgentError> {
    if allowed.is_empty() {
        return Err(AgentError::Config("no allowed acts to choose from".into()));
    }
    Ok(())
}

/// Epsilon-greedy over `allowed`; greedy ties go to the lowest act index.
/// With `epsilon == 0` the rng is not consulted.
pub fn select_action<R: Rng + ?Sized>(
    net: &QNetwork,
    state: &StateVector,
    allowed: &[DialogueAct],
    epsilon: f64,
    rng: &mut R,
) -> Result<DialogueAct, AgentError> {
    check_allowed(allowed)?;
    if epsilon > 0.0 && rng.gen::<f64>() < epsilon {
        return Ok(allowed[rng.gen_range(0..allowed.len())]);
    }
    Ok(greedy(&net.q_values(state), allowed))
}

/// Like [`select_action`], but exploratory picks follow `posterior`
/// renormalized over `allowed`.
pub fn select_by_posterior<R: Rng + ?Sized>(
    net: &QNetwork,
    state: &StateVector,
    allowed: &[DialogueAct],
    posterior: &[f64; NUM_ACTS],
    epsilon: f64,
    rng: &mut R,
) -> Result<DialogueAct, AgentError> {
    check_allowed(allowed)?;
    if epsilon > 0.0 && rng.gen::<f64>() < epsilon {
        let total: f64 = allowed.iter().map(|a| posterior[a.index()]).sum();
        if total > 0.0 {
            let mut u = rng.gen::<f64>() * total;
            for &a in allowed {
                u -= posterior[a.index()];
                if u < 0.0 {
                    return Ok(a);
                }
            }
        }
        return Ok(allowed[rng.gen_range(0..allowed.len())]);
    }
    Ok(greedy(&net.q_values(state), allowed))
}

/// Mean squared TD error of `batch` and its gradient with respect to the
/// online network. Terminal targets are the reward alone; otherwise the
/// frozen target network bootstraps over the acts legal in `s'`.
pub fn batch_loss(
    net: &QNetwork,
    target: &QNetwork,
    batch: &[&Experience],
    gamma: f64,
) -> Result<(f64, Gradients), AgentError> {
    let mut grads = Gradients::zeros_for(&net.net);
    let n = batch.len() as f64;
    let mut loss = 0.0;
    for e in batch {
        let mut y = e.reward;
        if !e.terminal {
            let q_next = target.q_values(&e.next_state);
            let best = e
                .legal_next_indices()
                .map(|i| q_next[i])
                .fold(f64::NEG_INFINITY, f64::max);
            if best.is_finite() {
                y += gamma * best;
            }
        }
        let acts = net.net.forward(&state_tensor(&e.state))?;
        let diff = acts.output().values()[e.action] - y;
        if !diff.is_finite() {
            return Err(AgentError::NonFinite(format!("TD error for act {}", e.action)));
        }
        loss += diff * diff;
        let mut g = Tensor::zeros(vec![NUM_ACTS]);
        g.values_mut()[e.action] = 2.0 * diff / n;
        let (pg, _) = net.net.backward(&acts, &g)?;
        grads.accumulate(&pg, 1.0)?;
    }
    Ok((loss / n, grads))
}

/// One SGD step on the batch loss; returns the loss before the step.
pub fn q_update(
    net: &mut QNetwork,
    target: &QNetwork,
    batch: &[&Experience],
    gamma: f64,
    learning_rate: f64,
) -> Result<f64, AgentError> {
    let (loss, grads) = batch_loss(net, target, batch, gamma)?;
    if !loss.is_finite() || !grads.is_finite() {
        return Err(AgentError::NonFinite(format!("TD loss {loss}")));
    }
    net.net.sgd_step(&grads, learning_rate)?;
    Ok(loss)
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub net: QNetwork,
    pub trace: TrainingTrace,
    pub replay_len: usize,
}

/// Deep Q-learning with experience replay against the simulated user.
pub fn train(cfg: &TrainingConfig, env: &Environment) -> Result<TrainOutcome, AgentError> {
    cfg.validate()?;
    let mut master = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut net = QNetwork::new(master.gen());
    let mut target = net.clone();
    let mut policy_rng = ChaCha8Rng::seed_from_u64(master.gen());
    let mut replay_rng = ChaCha8Rng::seed_from_u64(master.gen());
    let mut replay = ReplayMemory::new(cfg.replay_capacity);
    let mut trace = TrainingTrace::default();

    let mut episode_index = 0usize;
    let mut episode: Episode<'_> = env.episode(master.gen());
    let mut grad_steps = 0usize;

    for step in 0..cfg.total_steps {
        if episode.is_done() {
            episode_index += 1;
            episode = env.episode(master.gen());
        }
        let eps = epsilon_at(cfg, step);
        let state = *episode.state();
        let act = match cfg.exploration {
            Exploration::Epsilon => select_action(&net, &state, episode.allowed(), eps, &mut policy_rng)?,
            Exploration::NbPosterior => {
                let post = env.actions.posterior(&state);
                select_by_posterior(&net, &state, episode.allowed(), &post, eps, &mut policy_rng)?
            }
        };
        let exp = episode.step(act)?;
        let r = exp.reward;
        replay.push(exp);

        let mut loss = None;
        if replay.len() >= cfg.warmup.max(cfg.batch_size) {
            let batch = replay.sample(cfg.batch_size, &mut replay_rng);
            loss = Some(q_update(&mut net, &target, &batch, cfg.gamma, cfg.learning_rate)?);
            grad_steps += 1;
            if grad_steps % cfg.target_sync == 0 {
                target = net.clone();
                trace.syncs.push(step);
            }
        }

        let result = episode.is_done().then(|| GameResult::of(episode.board()));
        trace.rows.push(TraceRow {
            step,
            episode: episode_index,
            epsilon: eps,
            loss,
            reward: r,
            act: act.index(),
            result,
        });
    }
    trace.grad_steps = grad_steps;
    Ok(TrainOutcome {
        net,
        trace,
        replay_len: replay.len(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub games: usize,
    pub win_rate: f64,
    pub draw_rate: f64,
    /// Lost games plus games left unfinished.
    pub loss_rate: f64,
    pub avg_reward: f64,
    pub avg_turns: f64,
    /// Dialogues cut off at the turn limit.
    pub aborted: usize,
    /// Games never finished (counted as losses).
    pub unfinished: usize,
}

impl EvalReport {
    pub fn win_or_draw(&self) -> f64 {
        self.win_rate + self.draw_rate
    }
}

/// Greedy play over `n_games` fresh dialogues; game `i` uses a simulator
/// seeded from `(seed, i)`.
pub fn evaluate(
    net: &QNetwork,
    env: &Environment,
    n_games: usize,
    seed: u64,
) -> Result<EvalReport, AgentError> {
    let mut seeds = ChaCha8Rng::seed_from_u64(seed);
    let (mut wins, mut draws, mut losses, mut aborted, mut unfinished) = (0, 0, 0, 0, 0);
    let (mut reward, mut turns) = (0.0, 0usize);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for _ in 0..n_games {
        let mut ep = env.episode(seeds.gen());
        while !ep.is_done() {
            let act = select_action(net, ep.state(), ep.allowed(), 0.0, &mut rng)?;
            ep.step(act)?;
        }
        match GameResult::of(ep.board()) {
            GameResult::Win => wins += 1,
            GameResult::Draw => draws += 1,
            GameResult::Loss => losses += 1,
            GameResult::Unfinished => unfinished += 1,
        }
        aborted += ep.is_aborted() as usize;
        reward += ep.total_reward();
        turns += ep.turns();
    }
    let n = n_games.max(1) as f64;
    Ok(EvalReport {
        games: n_games,
        win_rate: wins as f64 / n,
        draw_rate: draws as f64 / n,
        loss_rate: (losses + unfinished) as f64 / n,
        avg_reward: reward / n,
        avg_turns: turns as f64 / n,
        aborted,
        unfinished,
    })
}
