use std::collections::HashSet;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::agent::{select_action, QNetwork, TERMINAL_BONUS};
use crate::dialogue::{build_seed_corpus, parse_corpus, tokenize, DialogueAct, SeedTurn};
use crate::game::{Board, Location, Outcome, Player, Symbol};

fn repertoire() -> Repertoire {
    Repertoire::from_corpus(&build_seed_corpus())
}

fn user(rep: &Repertoire, cfg: SimulatorConfig, seed: u64) -> SimulatedUser<'_> {
    SimulatedUser::new(rep, cfg, ChaCha8Rng::seed_from_u64(seed))
}

fn user_turn_board() -> Board {
    Board::default().apply_move(Location::LowerMiddle).unwrap()
}

#[test]
fn request_play_gets_an_affirmative() {
    let rep = repertoire();
    let corpus_replies: HashSet<String> = rep
        .replies(DialogueAct::RequestPlayGame)
        .iter()
        .flatten()
        .map(|r| match r {
            Response::Say(t) | Response::Move(t) => t.clone(),
        })
        .collect();
    assert!(corpus_replies.contains("Yes, let's go for it."));
    for seed in 0..20 {
        let mut u = user(&rep, SimulatorConfig::clean(), seed);
        let (utt, ev) = u.respond(DialogueAct::RequestPlayGame, &Board::default());
        let utt = utt.expect("the corpus always answers this request");
        assert!(ev.is_none());
        assert!(corpus_replies.contains(&utt.text), "{}", utt.text);
        assert!(utt.confidences.iter().all(|&c| c == 1.0));
    }
}

#[test]
fn last_empty_cell_is_taken() {
    let rep = repertoire();
    let board: Board = "oxoxo.xoxu".parse().unwrap();
    assert_eq!(board.legal_moves(), [Location::MiddleRight]);
    let mut u = user(&rep, SimulatorConfig::default(), 1);
    let (utt, ev) = u.respond(DialogueAct::RequestUserGameMove, &board);
    let ev = ev.unwrap();
    assert_eq!(ev.location, Location::MiddleRight);
    assert_eq!(ev.who, Player::User);
    assert_eq!(ev.symbol, Symbol::Cross);
    assert!(utt.unwrap().confidences.iter().all(|c| (0.6..=1.0).contains(c)));
}

#[test]
fn moves_on_empty_board_are_uniform() {
    let rep = repertoire();
    let board = Board::new(Symbol::Nought, Player::User);
    let mut u = user(&rep, SimulatorConfig::clean(), 2);
    let n = 10_000;
    let mut counts = [0usize; 9];
    for _ in 0..n {
        let (_, ev) = u.respond(DialogueAct::RequestUserGameMove, &board);
        counts[ev.unwrap().location.index()] += 1;
    }
    let p = 1.0 / 9.0;
    let sigma = (n as f64 * p * (1.0 - p)).sqrt();
    for c in counts {
        assert!((c as f64 - n as f64 * p).abs() <= 3.0 * sigma, "{counts:?}");
    }
}

#[test]
fn no_move_out_of_turn() {
    let rep = repertoire();
    let mut u = user(&rep, SimulatorConfig::clean(), 3);
    let (utt, ev) = u.respond(DialogueAct::RequestUserGameMove, &Board::default());
    assert!(utt.is_none() && ev.is_none());
    let (_, ev) = u.respond(DialogueAct::RequestPlayGame, &user_turn_board());
    assert!(ev.is_none());
}

#[test]
fn spoken_replies_are_not_repeated() {
    let rep = repertoire();
    let distinct: HashSet<_> = rep
        .replies(DialogueAct::RequestPlayGame)
        .iter()
        .flatten()
        .collect();
    let mut u = user(&rep, SimulatorConfig::clean(), 4);
    let mut seen = HashSet::new();
    for _ in 0..distinct.len() + 5 {
        if let (Some(utt), _) = u.respond(DialogueAct::RequestPlayGame, &Board::default()) {
            assert!(seen.insert(utt.text.clone()), "repeated {}", utt.text);
        }
    }
    assert_eq!(seen.len(), distinct.len());
}

#[test]
fn tokens_stay_in_repertoire_plus_noise() {
    let rep = repertoire();
    let mut known = rep.tokens();
    known.extend(NOISE_WORDS.iter().map(|w| w.to_string()));
    let cfg = SimulatorConfig {
        oov_rate: 0.3,
        ..SimulatorConfig::default()
    };
    let mut noisy = 0;
    for seed in 0..50 {
        let mut u = user(&rep, cfg, seed);
        for act in DialogueAct::all() {
            let board = if act == DialogueAct::RequestUserGameMove {
                user_turn_board()
            } else {
                Board::default()
            };
            if let (Some(utt), _) = u.respond(act, &board) {
                assert_eq!(utt.words.len(), utt.confidences.len());
                for w in &utt.words {
                    assert!(known.contains(w), "{w}");
                    noisy += NOISE_WORDS.contains(&w.as_str()) as usize;
                }
                assert_eq!(tokenize(&utt.text), utt.words);
            }
        }
    }
    assert!(noisy > 0);
}

#[test]
fn minimax_opponent_blocks() {
    let rep = repertoire();
    let cfg = SimulatorConfig {
        opponent: OpponentMode::Minimax,
        ..SimulatorConfig::clean()
    };
    // Agent threatens the top row; the only non-losing reply is upper right.
    let board: Board = "oo..x....u".parse().unwrap();
    for seed in 0..10 {
        let mut u = user(&rep, cfg, seed);
        let (_, ev) = u.respond(DialogueAct::RequestUserGameMove, &board);
        assert_eq!(ev.unwrap().location, Location::UpperRight);
    }
}

fn env() -> Environment {
    Environment::from_corpus(&build_seed_corpus()).unwrap()
}

fn random_policy(seed: u64) -> impl FnMut(&crate::dialogue::StateVector, &[DialogueAct]) -> DialogueAct {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let q = QNetwork::new(seed);
    move |s, allowed| select_action(&q, s, allowed, 1.0, &mut rng).unwrap()
}

#[test]
fn episodes_replay_legally_and_terminate() {
    let env = env();
    for seed in 0..200 {
        let rec = run_episode(&env, seed, random_policy(seed)).unwrap();
        assert!(rec.experiences.len() <= MAX_AGENT_TURNS);
        let mut board = Board::default();
        for t in &rec.transcript.turns {
            let ev = match t {
                SeedTurn::Agent(a) => a.location(),
                SeedTurn::User { event, .. } => event.map(|e| e.location),
            };
            if let Some(l) = ev {
                board = board.apply_move(l).unwrap();
            }
        }
        assert_eq!(board, rec.board);
        assert!(rec.experiences.last().unwrap().terminal);
        assert!(rec.experiences[..rec.experiences.len() - 1]
            .iter()
            .all(|e| !e.terminal));
        let total: f64 = rec.experiences.iter().map(|e| e.reward).sum();
        assert!((total - rec.total_reward).abs() < 1e-9);
        if !rec.aborted {
            assert!(rec.outcome.is_finished());
            assert_eq!(
                rec.transcript.turns.last(),
                Some(&SeedTurn::Agent(DialogueAct::SalutationClosing))
            );
        }
    }
}

#[test]
fn agent_win_earns_terminal_bonus() {
    let env = env();
    let mut found = false;
    for seed in 0..300 {
        let rec = run_episode(&env, seed, random_policy(seed + 1000)).unwrap();
        if rec.outcome == Outcome::AgentWin && !rec.aborted {
            let last = rec.experiences.last().unwrap();
            let dr = env
                .actions
                .data_likeness(&last.state, DialogueAct::SalutationClosing);
            let expected = dr * 0.5 - 0.1 + TERMINAL_BONUS;
            assert!((last.reward - expected).abs() < 1e-12);
            found = true;
            break;
        }
    }
    assert!(found);
}

#[test]
fn episodes_are_deterministic() {
    let env = env();
    let a = run_episode(&env, 42, random_policy(1)).unwrap();
    let b = run_episode(&env, 42, random_policy(1)).unwrap();
    assert_eq!(a, b);
}

#[test]
fn illegal_act_is_refused() {
    let env = env();
    let mut ep = env.episode(0);
    let moved = DialogueAct::GameMove(Location::Middle);
    if ep.allowed().contains(&moved) {
        ep.step(moved).unwrap();
    } else {
        assert!(ep.step(moved).is_err());
    }
    assert!(ep.board().is_valid());
}

#[test]
fn transcript_exports_in_corpus_format() {
    let env = env();
    let rec = run_episode(&env, 9, random_policy(9)).unwrap();
    let text = rec.transcript.to_text();
    let parsed = parse_corpus(&text).unwrap();
    assert_eq!(parsed.len(), 1);
    assert_eq!(parsed[0], rec.transcript);
}
