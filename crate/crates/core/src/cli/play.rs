use std::io::{BufRead, Write};
use std::sync::Arc;

use noughts::game::{Board, Cell, Location};
use noughts::perception::{CellImage, CellLabel};
use noughts::service::{CellClassifier, Event, EventKind, Models, Session, SessionError, TurnOwner};

use super::{load_agent, CliError, PlayArgs};

/// Text play never sees rasters.
struct Blind;

impl CellClassifier for Blind {
    fn classify(&self, _: &CellImage) -> CellLabel {
        CellLabel::Nothing
    }
}

fn render(board: &Board) -> String {
    let mark = |c: Cell| match c {
        Cell::Empty => ' ',
        Cell::Nought => 'O',
        Cell::Cross => 'X',
    };
    let cells = board.cells();
    let rows: Vec<String> = (0..3)
        .map(|r| {
            format!(
                " {} | {} | {}",
                mark(cells[3 * r]),
                mark(cells[3 * r + 1]),
                mark(cells[3 * r + 2])
            )
        })
        .collect();
    rows.join("\n---+---+---\n")
}

fn show<W: Write>(out: &mut W, session: &Session, events: &[Event]) -> std::io::Result<()> {
    for ev in events {
        match ev.kind {
            EventKind::AgentUtterance => writeln!(out, "Rob: {}", ev.payload["text"].as_str().unwrap_or(""))?,
            EventKind::AgentMove => writeln!(out, "{}\n", render(session.board()))?,
            EventKind::UserMove => writeln!(out, "{}\n", render(session.board()))?,
            EventKind::Rejection | EventKind::Notice => writeln!(
                out,
                "({})",
                ev.payload
                    .as_object()
                    .and_then(|o| o.values().last())
                    .and_then(|v| v.as_str())
                    .unwrap_or("")
            )?,
            EventKind::Outcome => writeln!(
                out,
                "[game over: {}]",
                ev.payload["outcome"].as_str().unwrap_or("")
            )?,
            EventKind::UserUtterance | EventKind::Turn => {}
        }
    }
    Ok(())
}

/// `draw <cell>` or a bare cell name is a move; anything else is speech.
enum Input<'a> {
    Move(Result<Location, String>),
    Say(&'a str),
}

fn parse(line: &str) -> Input<'_> {
    let lower = line.to_ascii_lowercase();
    if let Some(rest) = lower.strip_prefix("draw ") {
        return Input::Move(rest.trim().parse().map_err(|_| rest.trim().to_string()));
    }
    match line.parse::<Location>() {
        Ok(loc) => Input::Move(Ok(loc)),
        Err(_) => Input::Say(line),
    }
}

pub fn play_text(a: &PlayArgs) -> Result<(), CliError> {
    let (net, env) = load_agent(&a.model, None)?;
    let models = Arc::new(Models::new(Arc::new(Blind), net, env.vocab, env.actions));
    let stdin = std::io::stdin();
    let stdout = std::io::stdout();
    run(models, a.seed, a.confidence, stdin.lock(), &mut stdout.lock())
}

fn run<R: BufRead, W: Write>(
    models: Arc<Models>,
    seed: u64,
    confidence: Option<f64>,
    input: R,
    out: &mut W,
) -> Result<(), CliError> {
    let mut session = Session::new("text".into(), models, seed);
    show(out, &session, session.events_after(0))?;
    writeln!(
        out,
        "(type to talk; 'draw <cell>' or a cell name such as 'upper left' to move)"
    )?;
    for line in input.lines() {
        if session.turn() == TurnOwner::Closed {
            break;
        }
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let result = match parse(line) {
            Input::Move(Err(bad)) => {
                writeln!(
                    out,
                    "(unknown cell '{bad}'; cells are upper/middle/lower + left/middle/right)"
                )?;
                continue;
            }
            Input::Move(Ok(loc)) => session.submit_move(loc),
            Input::Say(text) => session.submit_utterance(text, confidence),
        };
        match result {
            Ok(events) => show(out, &session, &events)?,
            Err(e @ (SessionError::Occupied(_) | SessionError::TurnViolation)) => writeln!(out, "({e})")?,
            Err(e) => return Err(CliError::Usage(e.to_string())),
        }
    }
    writeln!(
        out,
        "game summary: {:?} after {} turns; board {}",
        session.board().outcome(),
        session.transcript().turns.len(),
        session.board()
    )?;
    Ok(())
}
