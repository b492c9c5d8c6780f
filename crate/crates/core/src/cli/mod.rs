mod play;
mod report;

use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use thiserror::Error;

use noughts::agent::{evaluate, smooth, train, AgentError, Exploration, QNetwork, TrainingConfig};
use noughts::dialogue::{build_seed_corpus, corpus_to_text, parse_corpus, DialogueError, SeedDialogue};
use noughts::numerics::NumericsError;
use noughts::perception::{
    augmented_dataset, export_corpus, synthesize_seed_set, train_at_size, ClassifierConfig, PerceptionError,
    PerceptionMetadata, PerceptionModel, SizeRun, DEFAULT_SIZES, SEEDS_PER_CLASS,
};
use noughts::service::{AppState, Models};
use noughts::simulator::{Environment, OpponentMode, SimulatorConfig};

use report::{config_hash, svg_line_chart, write_csv};

pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;
pub const EXIT_IO: i32 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Numeric(_) => EXIT_NUMERIC,
            CliError::Io(_) => EXIT_IO,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<NumericsError> for CliError {
    fn from(e: NumericsError) -> Self {
        match e {
            NumericsError::Io(e) => CliError::Io(e.to_string()),
            NumericsError::Format(m) => CliError::Io(format!("model format error: {m}")),
            other => CliError::Numeric(other.to_string()),
        }
    }
}

impl From<PerceptionError> for CliError {
    fn from(e: PerceptionError) -> Self {
        match e {
            PerceptionError::Input(m) => CliError::Usage(m),
            PerceptionError::Numerics(n) => n.into(),
            PerceptionError::Diverged { .. } => CliError::Numeric(e.to_string()),
            PerceptionError::Model(_) | PerceptionError::Io(_) | PerceptionError::Json(_) => {
                CliError::Io(e.to_string())
            }
        }
    }
}

impl From<DialogueError> for CliError {
    fn from(e: DialogueError) -> Self {
        match e {
            DialogueError::Perception(p) => p.into(),
            other => CliError::Usage(other.to_string()),
        }
    }
}

impl From<AgentError> for CliError {
    fn from(e: AgentError) -> Self {
        match e {
            AgentError::Config(m) => CliError::Usage(m),
            AgentError::NonFinite(_) => CliError::Numeric(e.to_string()),
            AgentError::Numerics(n) => n.into(),
            AgentError::Dialogue(d) => d.into(),
            AgentError::Io(_) | AgentError::Json(_) | AgentError::Model(_) => CliError::Io(e.to_string()),
            AgentError::IllegalAct(_) | AgentError::Finished => CliError::Numeric(e.to_string()),
        }
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "noughts",
    version,
    about = "Train and play the noughts-and-crosses perception and dialogue agents"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Train the cell classifier over a range of training-set sizes.
    TrainPerception(PerceptionArgs),
    /// Train the dialogue agent against the simulated user.
    TrainAgent(AgentArgs),
    /// Greedy evaluation of a saved agent.
    Evaluate(EvaluateArgs),
    /// Play a saved agent in the terminal.
    PlayText(PlayArgs),
    /// Serve live sessions over HTTP.
    Serve(ServeArgs),
    /// Write the seed dialogue corpus.
    ExportCorpus(ExportCorpusArgs),
    /// Write seed or augmented cell images as PGM files.
    ExportImages(ExportImagesArgs),
}

#[derive(Args, Debug, Serialize)]
pub struct PerceptionArgs {
    #[arg(long, default_value = "out")]
    #[serde(skip)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Training-set sizes, comma separated.
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_SIZES)]
    pub sizes: Vec<usize>,
    /// Seeds averaged per size (seed, seed + 1, ...).
    #[arg(long, default_value_t = 1)]
    pub runs: u64,
    #[arg(long, default_value_t = ClassifierConfig::default().epochs)]
    pub epochs: usize,
    #[arg(long, default_value_t = ClassifierConfig::default().learning_rate)]
    pub lr: f64,
    #[arg(long, default_value_t = ClassifierConfig::default().batch_size)]
    pub batch: usize,
    #[arg(long)]
    #[serde(skip)]
    pub plot: bool,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
pub enum ExplorationArg {
    Epsilon,
    NbPosterior,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
pub enum OpponentArg {
    Uniform,
    Minimax,
}

impl From<OpponentArg> for OpponentMode {
    fn from(o: OpponentArg) -> Self {
        match o {
            OpponentArg::Uniform => OpponentMode::Uniform,
            OpponentArg::Minimax => OpponentMode::Minimax,
        }
    }
}

#[derive(Args, Debug, Serialize)]
pub struct AgentArgs {
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Seed corpus file; the built-in corpus when omitted.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub batch: Option<usize>,
    #[arg(long)]
    pub epsilon_start: Option<f64>,
    #[arg(long)]
    pub epsilon_min: Option<f64>,
    #[arg(long)]
    pub epsilon_decay_fraction: Option<f64>,
    #[arg(long)]
    pub target_sync: Option<usize>,
    #[arg(long)]
    pub replay_cap: Option<usize>,
    #[arg(long)]
    pub warmup: Option<usize>,
    #[arg(long, value_enum)]
    pub exploration: Option<ExplorationArg>,
    /// Greedy games played after training (0 skips evaluation).
    #[arg(long, default_value_t = 1000)]
    pub eval_games: usize,
    #[arg(long)]
    #[serde(skip)]
    pub plot: bool,
}

impl AgentArgs {
    pub fn training_config(&self) -> TrainingConfig {
        let d = TrainingConfig::default();
        TrainingConfig {
            gamma: self.gamma.unwrap_or(d.gamma),
            learning_rate: self.lr.unwrap_or(d.learning_rate),
            batch_size: self.batch.unwrap_or(d.batch_size),
            epsilon_start: self.epsilon_start.unwrap_or(d.epsilon_start),
            epsilon_min: self.epsilon_min.unwrap_or(d.epsilon_min),
            epsilon_decay_fraction: self.epsilon_decay_fraction.unwrap_or(d.epsilon_decay_fraction),
            target_sync: self.target_sync.unwrap_or(d.target_sync),
            total_steps: self.steps.unwrap_or(d.total_steps),
            replay_capacity: self.replay_cap.unwrap_or(d.replay_capacity),
            warmup: self.warmup.unwrap_or(d.warmup),
            exploration: match self.exploration {
                None => d.exploration,
                Some(ExplorationArg::Epsilon) => Exploration::Epsilon,
                Some(ExplorationArg::NbPosterior) => Exploration::NbPosterior,
            },
            seed: self.seed.unwrap_or(d.seed),
        }
    }
}

#[derive(Args, Debug)]
pub struct EvaluateArgs {
    /// Saved agent model.
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[arg(long, default_value_t = 1000)]
    pub games: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = OpponentArg::Uniform)]
    pub opponent: OpponentArg,
}

#[derive(Args, Debug)]
pub struct PlayArgs {
    /// Saved agent model.
    #[arg(long)]
    pub model: PathBuf,
    /// Seed for sampled utterance confidences.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Fixed confidence for typed words instead of sampled ones.
    #[arg(long)]
    pub confidence: Option<f64>,
}

#[derive(Args, Debug)]
pub struct ServeArgs {
    #[arg(long, env = "NOUGHTS_AGENT")]
    pub agent: PathBuf,
    #[arg(long, env = "NOUGHTS_PERCEPTION")]
    pub perception: PathBuf,
    #[arg(long, env = "NOUGHTS_BIND", default_value = "127.0.0.1:8080")]
    pub bind: String,
    /// Idle minutes before a session is dropped.
    #[arg(long, env = "NOUGHTS_SESSION_TTL_MINS", default_value_t = 30)]
    pub session_ttl_mins: u64,
}

#[derive(Args, Debug)]
pub struct ExportCorpusArgs {
    /// Output file; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ExportImagesArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = SEEDS_PER_CLASS)]
    pub per_class: usize,
    /// Shifted copies to write instead of the seed drawings themselves.
    #[arg(long, default_value_t = 0)]
    pub augmented: usize,
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::TrainPerception(a) => train_perception(&a),
        Command::TrainAgent(a) => train_agent(&a),
        Command::Evaluate(a) => evaluate_cmd(&a),
        Command::PlayText(a) => play::play_text(&a),
        Command::Serve(a) => serve(&a),
        Command::ExportCorpus(a) => export_corpus_cmd(&a),
        Command::ExportImages(a) => export_images(&a),
    }
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("cannot create {}: {e}", dir.display())))
}

fn load_corpus(path: Option<&Path>) -> Result<Vec<SeedDialogue>, CliError> {
    match path {
        None => Ok(build_seed_corpus()),
        Some(p) => {
            let text =
                std::fs::read_to_string(p).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
            Ok(parse_corpus(&text)?)
        }
    }
}

fn write_plot(path: &Path, title: &str, x: &str, y: &str, points: &[(f64, f64)]) -> Result<(), CliError> {
    std::fs::write(path, svg_line_chart(title, x, y, points))?;
    Ok(())
}

fn train_perception(a: &PerceptionArgs) -> Result<(), CliError> {
    if a.sizes.is_empty() || a.sizes.contains(&0) || a.runs == 0 || a.epochs == 0 || a.batch == 0 {
        return Err(CliError::Usage(
            "sizes, runs, epochs and batch must be positive".into(),
        ));
    }
    if !(a.lr > 0.0 && a.lr.is_finite()) {
        return Err(CliError::Usage("learning rate must be positive".into()));
    }
    create_dir(&a.out)?;
    let hash = config_hash(a);
    let mut rows = Vec::new();
    let mut timing = Vec::new();
    let mut best: Option<(PerceptionModel, SizeRun)> = None;
    let mut points = Vec::new();
    for &size in &a.sizes {
        let mut runs = Vec::new();
        for k in 0..a.runs {
            let config = ClassifierConfig {
                epochs: a.epochs,
                learning_rate: a.lr,
                batch_size: a.batch,
                seed: a.seed + k,
                ..Default::default()
            };
            let (model, run) = train_at_size(size, &config)?;
            eprintln!(
                "size {size} seed {}: held-out accuracy {:.4} in {:.1}s",
                run.seed, run.test_accuracy, run.seconds
            );
            timing.push(format!("{size},{},{:.3}", run.seed, run.seconds));
            if k == 0 && best.as_ref().is_none_or(|(_, b)| size >= b.size) {
                best = Some((model, run.clone()));
            }
            runs.push(run);
        }
        let accs: Vec<f64> = runs.iter().map(|r| r.test_accuracy).collect();
        let mean = accs.iter().sum::<f64>() / accs.len() as f64;
        let lo = accs.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = accs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        rows.push(format!("{size},{},{mean:.6},{lo:.6},{hi:.6}", accs.len()));
        points.push((size as f64, mean));
    }
    write_csv(
        &a.out.join("accuracy_curve.csv"),
        &hash,
        "size,runs,mean_accuracy,min_accuracy,max_accuracy",
        &rows,
    )?;
    write_csv(
        &a.out.join("perception_timing.csv"),
        &hash,
        "size,seed,seconds",
        &timing,
    )?;
    let (model, run) = best.expect("at least one size");
    let meta = PerceptionMetadata {
        seed: run.seed,
        dataset_size: run.size,
        final_accuracy: run.test_accuracy,
        config: Some(serde_json::to_value(a)?),
    };
    model.save(&a.out.join("perception.bin"), &meta)?;
    if a.plot {
        write_plot(
            &a.out.join("accuracy_curve.svg"),
            "Held-out classification accuracy",
            "training images",
            "accuracy",
            &points,
        )?;
    }
    println!("{}", serde_json::to_string_pretty(&meta)?);
    Ok(())
}

/// Steps per reward-curve point and dialogues per win/draw point.
const REWARD_BLOCK: usize = 1000;
const GAMES_BLOCK: usize = 100;
const SMOOTHING: usize = 5;

fn train_agent(a: &AgentArgs) -> Result<(), CliError> {
    let cfg = a.training_config();
    cfg.validate()?;
    let corpus = load_corpus(a.corpus.as_deref())?;
    let env = Environment::from_corpus(&corpus)?;
    create_dir(&a.out)?;
    let hash = config_hash(&cfg);
    let start = std::time::Instant::now();
    let out = train(&cfg, &env)?;
    eprintln!(
        "trained {} steps ({} dialogues) in {:.1}s",
        cfg.total_steps,
        out.trace.results().len(),
        start.elapsed().as_secs_f64()
    );

    let rewards = out.trace.reward_curve(REWARD_BLOCK);
    let smoothed = smooth(&rewards, SMOOTHING);
    let rows: Vec<String> = rewards
        .iter()
        .zip(&smoothed)
        .enumerate()
        .map(|(i, (r, s))| format!("{},{r:.6},{s:.6}", ((i + 1) * REWARD_BLOCK).min(cfg.total_steps)))
        .collect();
    write_csv(
        &a.out.join("reward_curve.csv"),
        &hash,
        "step,avg_reward,smoothed_reward",
        &rows,
    )?;

    let results = out.trace.results();
    let wd = out.trace.win_draw_curve(GAMES_BLOCK);
    let rows: Vec<String> = wd
        .iter()
        .enumerate()
        .map(|(i, r)| format!("{},{r:.6}", ((i + 1) * GAMES_BLOCK).min(results.len())))
        .collect();
    write_csv(
        &a.out.join("windraw_curve.csv"),
        &hash,
        "games,win_draw_rate",
        &rows,
    )?;

    let mut trace = Vec::new();
    out.trace.write_csv(&mut trace)?;
    let trace = String::from_utf8(trace).expect("csv is utf-8");
    let mut lines = trace.lines();
    let header = lines.next().unwrap_or_default().to_string();
    let body: Vec<String> = lines.map(str::to_string).collect();
    write_csv(&a.out.join("trace.csv"), &hash, &header, &body)?;

    out.net.save(
        &a.out.join("agent.bin"),
        &env.vocab,
        &env.actions,
        Some(serde_json::to_value(&cfg)?),
    )?;

    if a.plot {
        let pts: Vec<(f64, f64)> = smoothed
            .iter()
            .enumerate()
            .map(|(i, &s)| (((i + 1) * REWARD_BLOCK) as f64, s))
            .collect();
        write_plot(
            &a.out.join("reward_curve.svg"),
            "Average reward",
            "step",
            "reward",
            &pts,
        )?;
        let pts: Vec<(f64, f64)> = wd
            .iter()
            .enumerate()
            .map(|(i, &r)| (((i + 1) * GAMES_BLOCK) as f64, r))
            .collect();
        write_plot(
            &a.out.join("windraw_curve.svg"),
            "Win or draw rate",
            "dialogues",
            "rate",
            &pts,
        )?;
    }

    if a.eval_games > 0 {
        let report = evaluate(&out.net, &env, a.eval_games, cfg.seed)?;
        std::fs::write(
            a.out.join("evaluation.json"),
            serde_json::to_string_pretty(&report)?,
        )?;
        println!("{}", serde_json::to_string_pretty(&report)?);
    }
    Ok(())
}

/// Loads an agent and rebuilds its environment around the saved
/// vocabulary and action model.
fn load_agent(model: &Path, corpus: Option<&Path>) -> Result<(QNetwork, Environment), CliError> {
    let (net, vocab, meta) = QNetwork::load(model).map_err(|e| match CliError::from(e) {
        CliError::Io(m) => CliError::Io(format!("{}: {m}", model.display())),
        other => other,
    })?;
    let corpus = load_corpus(corpus)?;
    let mut env = Environment::from_corpus(&corpus)?;
    env.vocab = vocab;
    env.actions = meta.action_model;
    Ok((net, env))
}

fn evaluate_cmd(a: &EvaluateArgs) -> Result<(), CliError> {
    let (net, env) = load_agent(&a.model, a.corpus.as_deref())?;
    let env = env.with_simulator(SimulatorConfig {
        opponent: a.opponent.into(),
        ..SimulatorConfig::default()
    });
    let report = evaluate(&net, &env, a.games, a.seed)?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}

fn serve(a: &ServeArgs) -> Result<(), CliError> {
    let unavailable =
        |what: &str, e: String| CliError::Io(format!("service unavailable: cannot load {what}: {e}"));
    let (net, env) = load_agent(&a.agent, None).map_err(|e| unavailable("agent", e.to_string()))?;
    let (perception, _) =
        PerceptionModel::load(&a.perception).map_err(|e| unavailable("perception model", e.to_string()))?;
    let models = Arc::new(Models::new(Arc::new(perception), net, env.vocab, env.actions));
    let state = AppState::with_ttl(models, Duration::from_secs(a.session_ttl_mins * 60));
    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(async {
        let listener = tokio::net::TcpListener::bind(&a.bind).await?;
        eprintln!("listening on http://{}", listener.local_addr()?);
        noughts::service::serve(state, listener).await
    })?;
    Ok(())
}

fn export_corpus_cmd(a: &ExportCorpusArgs) -> Result<(), CliError> {
    let text = corpus_to_text(&build_seed_corpus());
    match &a.out {
        Some(p) => std::fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn export_images(a: &ExportImagesArgs) -> Result<(), CliError> {
    if a.per_class == 0 {
        return Err(CliError::Usage("per-class count must be positive".into()));
    }
    let seeds = synthesize_seed_set(a.seed, a.per_class);
    let data = if a.augmented > 0 {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(a.seed);
        augmented_dataset(&seeds, a.augmented, &mut rng)
    } else {
        seeds
    };
    export_corpus(&a.out, &data)?;
    eprintln!("wrote {} images to {}", data.len(), a.out.display());
    Ok(())
}
