use std::collections::HashSet;

use super::*;

fn play(moves: &[Location]) -> Board {
    moves
        .iter()
        .fold(Board::default(), |b, &l| b.apply_move(l).unwrap())
}

#[test]
fn agent_opens_in_the_middle() {
    let b = Board::default().apply_move(Location::Middle).unwrap();
    assert_eq!(b.cell(Location::Middle), Cell::Nought);
    assert_eq!(b.to_move(), Player::User);
}

#[test]
fn occupied_cell_is_illegal() {
    let b = play(&[Location::Middle]);
    assert_eq!(
        b.apply_move(Location::Middle),
        Err(GameError::Occupied(Location::Middle))
    );
}

#[test]
fn transcript_replay_ends_in_agent_win() {
    use Location::*;
    let b = play(&[LowerMiddle, MiddleLeft, LowerRight, Middle, LowerLeft]);
    assert_eq!(b.outcome(), Outcome::AgentWin);
    assert!(b.legal_moves().is_empty());
    assert!(matches!(
        b.apply_move(UpperLeft),
        Err(GameError::Finished(Outcome::AgentWin))
    ));
}

#[test]
fn simple_outcomes() {
    assert_eq!(Board::default().outcome(), Outcome::InProgress);
    let b: Board = "ooox.x.x.u".parse().unwrap();
    assert_eq!(b.outcome(), Outcome::AgentWin);
    let b: Board = "xxxoo.o..a".parse().unwrap();
    assert_eq!(b.outcome(), Outcome::UserWin);
    let b: Board = "oxooxxxoou".parse().unwrap();
    assert_eq!(b.outcome(), Outcome::Draw);
}

#[test]
fn legal_move_counts() {
    assert_eq!(Board::default().legal_moves().len(), 9);
    let b = play(&[Location::Middle, Location::UpperLeft, Location::LowerRight]);
    assert_eq!(b.legal_moves().len(), 9 - b.occupied());
}

#[test]
fn board_string_round_trip() {
    let b = play(&[Location::Middle, Location::UpperLeft]);
    assert_eq!(b.to_string(), "x...o....a");
    assert_eq!(b.to_string().parse::<Board>().unwrap(), b);
    let crosses = Board::new(Symbol::Cross, Player::User);
    assert_eq!(crosses.to_string(), ".........U");
    assert_eq!(crosses.to_string().parse::<Board>().unwrap(), crosses);
    assert!("ooooooooo a".parse::<Board>().is_err());
    assert!("ooo......a".parse::<Board>().is_err());
}

#[test]
fn location_parsing() {
    assert_eq!("lower left".parse::<Location>().unwrap(), Location::LowerLeft);
    assert_eq!("top-right".parse::<Location>().unwrap(), Location::UpperRight);
    assert_eq!("centre".parse::<Location>().unwrap(), Location::Middle);
    assert_eq!("4".parse::<Location>().unwrap(), Location::Middle);
    assert!("nowhere".parse::<Location>().is_err());
    assert!("9".parse::<Location>().is_err());
}

#[test]
fn minimax_examples() {
    assert_eq!(minimax_value(&Board::default(), Player::Agent), 0);
    // Agent to move with two in a row: immediate win.
    let b: Board = "oo.xx....a".parse().unwrap();
    assert_eq!(minimax_value(&b, Player::Agent), 1);
    assert_eq!(minimax_value(&b, Player::User), -1);
    // Playing lower left opens two lines at once; neither side can win
    // immediately before it.
    let b: Board = "ox..o...xa".parse().unwrap();
    let fork = b.apply_move(Location::LowerLeft).unwrap();
    assert_eq!(fork.outcome(), Outcome::InProgress);
    assert_eq!(minimax_value(&fork, Player::Agent), 1);
}

#[test]
fn bonus_reward_cases() {
    use Location::*;
    let win = play(&[LowerMiddle, MiddleLeft, LowerRight, Middle, LowerLeft]);
    assert_eq!(bonus_reward(&win, BonusMode::DecisiveMove), 5.0);
    let draw: Board = "oxooxxxoou".parse().unwrap();
    assert_eq!(bonus_reward(&draw, BonusMode::DecisiveMove), 1.0);
    let mid = play(&[Middle]);
    assert_eq!(bonus_reward(&mid, BonusMode::DecisiveMove), 0.0);
    assert_eq!(bonus_reward(&mid, BonusMode::Lookahead), 0.0);
    let fork: Board = "ox..o.o.xu".parse().unwrap();
    assert_eq!(bonus_reward(&fork, BonusMode::DecisiveMove), 0.0);
    assert_eq!(bonus_reward(&fork, BonusMode::Lookahead), 5.0);
}

/// Independent brute force: every 3^9 cell assignment, filtered by counting
/// rules and a direct line scan.
fn brute_force_positions() -> HashSet<[u8; 9]> {
    let lines = [
        [0, 1, 2],
        [3, 4, 5],
        [6, 7, 8],
        [0, 3, 6],
        [1, 4, 7],
        [2, 5, 8],
        [0, 4, 8],
        [2, 4, 6],
    ];
    let wins = |c: &[u8; 9], s: u8| lines.iter().any(|l| l.iter().all(|&i| c[i] == s));
    let mut out = HashSet::new();
    for code in 0..3usize.pow(9) {
        let mut c = [0u8; 9];
        let mut k = code;
        for cell in &mut c {
            *cell = (k % 3) as u8;
            k /= 3;
        }
        // 1 = first mover (nought), 2 = second mover (cross)
        let first = c.iter().filter(|&&v| v == 1).count();
        let second = c.iter().filter(|&&v| v == 2).count();
        if !(first == second || first == second + 1) {
            continue;
        }
        let (w1, w2) = (wins(&c, 1), wins(&c, 2));
        if (w1 && w2) || (w1 && first != second + 1) || (w2 && first != second) {
            continue;
        }
        out.insert(c);
    }
    out
}

fn encode(b: &Board) -> [u8; 9] {
    b.cells().map(|c| match c {
        Cell::Empty => 0,
        Cell::Nought => 1,
        Cell::Cross => 2,
    })
}

fn scan_outcome(c: &[u8; 9]) -> Outcome {
    let lines = [
        [0, 1, 2],
        [3, 4, 5],
        [6, 7, 8],
        [0, 3, 6],
        [1, 4, 7],
        [2, 5, 8],
        [0, 4, 8],
        [2, 4, 6],
    ];
    for l in lines {
        if c[l[0]] != 0 && c[l[0]] == c[l[1]] && c[l[1]] == c[l[2]] {
            return if c[l[0]] == 1 {
                Outcome::AgentWin
            } else {
                Outcome::UserWin
            };
        }
    }
    if c.iter().all(|&v| v != 0) {
        Outcome::Draw
    } else {
        Outcome::InProgress
    }
}

#[test]
fn reachability_and_outcomes_match_brute_force() {
    let mut seen: HashSet<[u8; 9]> = HashSet::new();
    let mut stack = vec![Board::default()];
    while let Some(b) = stack.pop() {
        if !seen.insert(encode(&b)) {
            continue;
        }
        assert_eq!(b.outcome(), scan_outcome(&encode(&b)), "{b}");
        let legal = b.legal_moves();
        assert_eq!(legal.is_empty(), b.outcome().is_finished());
        for l in legal {
            stack.push(b.apply_move(l).unwrap());
        }
    }
    let oracle = brute_force_positions();
    assert_eq!(seen.len(), 5478);
    assert_eq!(oracle.len(), 5478);
    assert_eq!(seen, oracle);
}

#[test]
fn minimax_antisymmetry_everywhere() {
    let mut stack = vec![Board::default()];
    let mut seen = HashSet::new();
    while let Some(b) = stack.pop() {
        if !seen.insert(b) {
            continue;
        }
        assert_eq!(minimax_value(&b, Player::Agent), -minimax_value(&b, Player::User));
        for l in b.legal_moves() {
            stack.push(b.apply_move(l).unwrap());
        }
    }
}
