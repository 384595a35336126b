//! UCI server. Input is read on a helper thread so that `stop`, `quit` and
//! `isready` are seen while a search runs; everything else received during a
//! search is queued and handled afterwards.

use std::cell::RefCell;
use std::collections::VecDeque;
use std::io::{self, BufRead, Write};
use std::path::PathBuf;
use std::sync::mpsc::{self, Receiver};
use std::thread;
use std::time::{Duration, Instant};

use latent_chess_core::chess::{static_status, Color, Move, Position};
use latent_chess_core::planner::{ScoreMode, SearchError, SearchReport};

use crate::model::Model;
use crate::think::{think, Limit, ThinkParams};

pub const ENGINE_NAME: &str = "latent-chess";
pub const MAX_WIDTH: usize = 64;
pub const MAX_DEPTH: usize = 10;
const DIAGNOSTIC_CHARS: usize = 60;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProtocolState {
    PreInit,
    Ready,
    Searching,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Command {
    Uci,
    IsReady,
    NewGame,
    Position { fen: Option<String>, moves: Vec<String> },
    Go(GoParams),
    Stop,
    SetOption { name: String, value: Option<String> },
    Quit,
    /// Recognized and deliberately ignored (`debug`, `ponderhit`, `register`).
    Ignored,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GoParams {
    pub depth: Option<usize>,
    pub movetime: Option<u64>,
    pub wtime: Option<u64>,
    pub btime: Option<u64>,
    pub winc: Option<u64>,
    pub binc: Option<u64>,
    pub movestogo: Option<u64>,
    pub infinite: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseError {
    #[error("empty line")]
    Empty,
    #[error("unknown command '{0}'")]
    Unknown(String),
    #[error("{0}")]
    Malformed(&'static str),
}

fn number<T: std::str::FromStr>(tok: Option<&&str>, what: &'static str) -> Result<T, ParseError> {
    tok.and_then(|t| t.parse().ok()).ok_or(ParseError::Malformed(what))
}

pub fn parse_command(line: &str) -> Result<Command, ParseError> {
    let toks: Vec<&str> = line.split_whitespace().collect();
    let Some(&head) = toks.first() else {
        return Err(ParseError::Empty);
    };
    let rest = &toks[1..];
    Ok(match head {
        "uci" => Command::Uci,
        "isready" => Command::IsReady,
        "ucinewgame" => Command::NewGame,
        "stop" => Command::Stop,
        "quit" => Command::Quit,
        "debug" | "ponderhit" | "register" => Command::Ignored,
        "position" => {
            let split = rest.iter().position(|&t| t == "moves").unwrap_or(rest.len());
            let (spec, moves) = (&rest[..split], rest.get(split + 1..).unwrap_or(&[]));
            let fen = match spec.first() {
                Some(&"startpos") if spec.len() == 1 => None,
                Some(&"fen") if spec.len() == 5 => Some(format!("{} 0 1", spec[1..].join(" "))),
                Some(&"fen") if spec.len() == 7 => Some(spec[1..].join(" ")),
                _ => return Err(ParseError::Malformed("expected 'position startpos|fen <FEN> [moves ...]'")),
            };
            Command::Position {
                fen,
                moves: moves.iter().map(|s| s.to_string()).collect(),
            }
        }
        "go" => {
            let mut g = GoParams::default();
            let mut i = 0;
            while i < rest.len() {
                let next = rest.get(i + 1);
                match rest[i] {
                    "depth" => g.depth = Some(number(next, "go depth needs a number")?),
                    "movetime" => g.movetime = Some(number(next, "go movetime needs a number")?),
                    "wtime" => g.wtime = Some(number(next, "go wtime needs a number")?),
                    "btime" => g.btime = Some(number(next, "go btime needs a number")?),
                    "winc" => g.winc = Some(number(next, "go winc needs a number")?),
                    "binc" => g.binc = Some(number(next, "go binc needs a number")?),
                    "movestogo" => g.movestogo = Some(number(next, "go movestogo needs a number")?),
                    "nodes" | "mate" => {
                        number::<u64>(next, "go nodes/mate needs a number")?;
                    }
                    "infinite" => {
                        g.infinite = true;
                        i += 1;
                        continue;
                    }
                    "ponder" => {
                        i += 1;
                        continue;
                    }
                    "searchmoves" => break,
                    _ => return Err(ParseError::Malformed("unknown go parameter")),
                }
                i += 2;
            }
            Command::Go(g)
        }
        "setoption" => {
            if rest.first() != Some(&"name") {
                return Err(ParseError::Malformed("expected 'setoption name <id> [value <x>]'"));
            }
            let vpos = rest.iter().position(|&t| t == "value");
            let name_end = vpos.unwrap_or(rest.len());
            if name_end <= 1 {
                return Err(ParseError::Malformed("setoption without a name"));
            }
            Command::SetOption {
                name: rest[1..name_end].join(" "),
                value: vpos.map(|v| rest[v + 1..].join(" ")),
            }
        }
        other => return Err(ParseError::Unknown(other.to_string())),
    })
}

/// Printable, length-capped rendering of untrusted input for diagnostics.
fn sanitize(s: &str) -> String {
    s.chars()
        .filter(|c| !c.is_control())
        .take(DIAGNOSTIC_CHARS)
        .collect()
}

pub struct UciSession {
    root: Position,
    moves: Vec<Move>,
    /// Zobrist hashes from the root through the current position.
    history: Vec<u64>,
    position: Position,
    model: Model,
    model_path: Option<PathBuf>,
    params: ThinkParams,
    /// Depth used by a bare `go`.
    default_depth: usize,
    state: ProtocolState,
}

impl Default for UciSession {
    fn default() -> Self {
        UciSession::new(Model::untrained(ScoreMode::Anchored), None)
    }
}

enum Flow {
    Continue,
    Quit,
}

impl UciSession {
    pub fn new(model: Model, model_path: Option<PathBuf>) -> Self {
        let params = ThinkParams {
            mode: model.advantage.mode,
            ..ThinkParams::default()
        };
        let p = Position::startpos();
        UciSession {
            history: vec![p.zobrist()],
            root: p.clone(),
            position: p,
            moves: Vec::new(),
            model,
            model_path,
            params,
            default_depth: 3,
            state: ProtocolState::PreInit,
        }
    }

    pub fn state(&self) -> ProtocolState {
        self.state
    }

    pub fn position(&self) -> &Position {
        &self.position
    }

    pub fn params(&self) -> &ThinkParams {
        &self.params
    }

    fn info(out: &mut dyn Write, msg: &str) -> io::Result<()> {
        writeln!(out, "info string {msg}")
    }

    fn set_position(&mut self, fen: Option<String>, moves: &[String]) -> Result<(), String> {
        let root = match &fen {
            None => Position::startpos(),
            Some(f) => Position::from_fen(f).map_err(|e| format!("bad FEN: {e}"))?,
        };
        let mut p = root.clone();
        let mut history = vec![p.zobrist()];
        let mut applied = Vec::with_capacity(moves.len());
        for (i, text) in moves.iter().enumerate() {
            let m = Move::from_uci(text).ok_or_else(|| format!("move {} '{}' is not UCI notation", i + 1, sanitize(text)))?;
            p = p
                .apply_move(m)
                .map_err(|_| format!("move {} '{}' is illegal", i + 1, sanitize(text)))?;
            history.push(p.zobrist());
            applied.push(m);
        }
        self.root = root;
        self.position = p;
        self.moves = applied;
        self.history = history;
        Ok(())
    }

    fn set_option(&mut self, name: &str, value: Option<&str>) -> Result<(), String> {
        let value = value.unwrap_or("").trim();
        let spin = |lo: usize, hi: usize| -> Result<usize, String> {
            match value.parse::<usize>() {
                Ok(v) if (lo..=hi).contains(&v) => Ok(v),
                _ => Err(format!("{name} must be an integer in {lo}..={hi}")),
            }
        };
        match name.to_ascii_lowercase().as_str() {
            "width" => self.params.width = spin(1, MAX_WIDTH)?,
            "depth" => self.default_depth = spin(1, MAX_DEPTH)?,
            "maxdepth" => self.params.max_depth = spin(1, MAX_DEPTH)?,
            "mode" => {
                self.params.mode = ScoreMode::parse(value).ok_or("Mode must be unanchored, anchored or anchored-raw")?;
            }
            "modelpath" => {
                if value.is_empty() || value == "<builtin>" {
                    self.model = Model::untrained(self.params.mode);
                    self.model_path = None;
                } else {
                    let path = PathBuf::from(value);
                    self.model = Model::load(&path).map_err(|e| format!("model not loaded: {e}"))?;
                    self.model_path = Some(path);
                }
            }
            _ => return Err(format!("unknown option '{}'", sanitize(name))),
        }
        Ok(())
    }

    fn write_id(&self, out: &mut dyn Write) -> io::Result<()> {
        writeln!(out, "id name {ENGINE_NAME} {}", env!("CARGO_PKG_VERSION"))?;
        writeln!(out, "id author the {ENGINE_NAME} developers")?;
        writeln!(out, "option name Width type spin default {} min 1 max {MAX_WIDTH}", self.params.width)?;
        writeln!(out, "option name Depth type spin default {} min 1 max {MAX_DEPTH}", self.default_depth)?;
        writeln!(out, "option name MaxDepth type spin default {} min 1 max {MAX_DEPTH}", self.params.max_depth)?;
        writeln!(
            out,
            "option name Mode type combo default {} var unanchored var anchored var anchored-raw",
            self.params.mode.as_str()
        )?;
        writeln!(out, "option name ModelPath type string default <builtin>")?;
        writeln!(out, "uciok")
    }

    fn limit(&self, g: &GoParams) -> Limit {
        if g.infinite {
            return Limit::Infinite;
        }
        if let Some(d) = g.depth {
            return Limit::Depth(d.clamp(1, self.params.max_depth));
        }
        if let Some(ms) = g.movetime {
            return Limit::MoveTime(Duration::from_millis(ms));
        }
        let (time, inc) = match self.position.side_to_move() {
            Color::White => (g.wtime, g.winc),
            Color::Black => (g.btime, g.binc),
        };
        if let Some(time) = time {
            let moves_left = g.movestogo.unwrap_or(30).clamp(1, 60);
            let budget = (time / moves_left + inc.unwrap_or(0) * 3 / 4).min(time / 2);
            return Limit::MoveTime(Duration::from_millis(budget.max(1)));
        }
        Limit::Depth(self.default_depth)
    }

    fn handle(&mut self, line: &str, out: &mut dyn Write) -> io::Result<Option<GoParams>> {
        let cmd = match parse_command(line) {
            Ok(c) => c,
            Err(ParseError::Empty) => return Ok(None),
            Err(e) => {
                Self::info(out, &format!("ignored: {} ({})", e, sanitize(line.trim())))?;
                return Ok(None);
            }
        };
        match cmd {
            Command::Uci => {
                self.write_id(out)?;
                self.state = ProtocolState::Ready;
            }
            Command::IsReady => writeln!(out, "readyok")?,
            Command::NewGame => {
                let _ = self.set_position(None, &[]);
            }
            Command::Position { fen, moves } => {
                if let Err(e) = self.set_position(fen, &moves) {
                    Self::info(out, &format!("position ignored: {e}"))?;
                }
            }
            Command::SetOption { name, value } => {
                if let Err(e) = self.set_option(&name, value.as_deref()) {
                    Self::info(out, &e)?;
                }
            }
            Command::Go(g) => {
                if self.state == ProtocolState::PreInit {
                    Self::info(out, "go ignored before uci handshake")?;
                } else {
                    return Ok(Some(g));
                }
            }
            Command::Stop | Command::Ignored | Command::Quit => {}
        }
        Ok(None)
    }

    fn write_info(&self, out: &mut dyn Write, depth: usize, r: &SearchReport, started: Instant) -> io::Result<()> {
        let sign = if self.position.side_to_move() == Color::White { 1.0 } else { -1.0 };
        let cp = (sign * r.root_score * 100.0).round() as i64;
        let pv: Vec<String> = r.principal_variation.iter().map(|m| m.to_string()).collect();
        writeln!(
            out,
            "info depth {depth} score cp {cp} nodes {} time {} pv {}",
            r.nodes_encoded,
            started.elapsed().as_millis(),
            pv.join(" ")
        )
    }

    /// Runs one search, polling `rx` for `stop`/`quit`/`isready`.
    fn go(
        &mut self,
        g: GoParams,
        rx: &Receiver<String>,
        pending: &mut VecDeque<String>,
        out: &mut dyn Write,
    ) -> io::Result<Flow> {
        let status = static_status(&self.position);
        if status.is_terminal() {
            Self::info(out, &format!("no legal search: game is {}", status.as_str()))?;
            writeln!(out, "bestmove 0000")?;
            return Ok(Flow::Continue);
        }
        self.state = ProtocolState::Searching;
        let limit = self.limit(&g);
        let started = Instant::now();
        let out = RefCell::new(out);
        let mut stopped = false;
        let mut quit = false;
        let mut poll = |pending: &mut VecDeque<String>, out: &RefCell<&mut dyn Write>| {
            while let Ok(line) = rx.try_recv() {
                match line.trim() {
                    "stop" => stopped = true,
                    "quit" => {
                        stopped = true;
                        quit = true;
                    }
                    // answered at once unless earlier commands still wait, to keep replies in order
                    "isready" if pending.is_empty() => {
                        let _ = writeln!(out.borrow_mut(), "readyok");
                    }
                    _ => pending.push_back(line),
                }
            }
            stopped
        };
        let result = think(
            &self.model,
            &self.position,
            &self.params,
            limit,
            &mut || poll(pending, &out),
            &mut |d, r| {
                let _ = self.write_info(*out.borrow_mut(), d, r, started);
            },
        );
        if limit == Limit::Infinite {
            // bestmove only after the GUI says stop
            while !poll(pending, &out) {
                match rx.recv_timeout(Duration::from_millis(5)) {
                    Ok(line) => {
                        let t = line.trim().to_string();
                        match t.as_str() {
                            "stop" => break,
                            "quit" => {
                                quit = true;
                                break;
                            }
                            "isready" if pending.is_empty() => writeln!(out.borrow_mut(), "readyok")?,
                            _ => pending.push_back(line),
                        }
                    }
                    Err(mpsc::RecvTimeoutError::Timeout) => {}
                    Err(mpsc::RecvTimeoutError::Disconnected) => break,
                }
            }
        }
        let out = out.into_inner();
        match result {
            Ok(t) => writeln!(out, "bestmove {}", t.report.best_move)?,
            Err(SearchError::TerminalRoot(_)) => writeln!(out, "bestmove 0000")?,
            Err(e) => {
                Self::info(out, &format!("search failed: {e}"))?;
                let fallback = self.position.legal_moves()[0];
                writeln!(out, "bestmove {fallback}")?;
            }
        }
        self.state = ProtocolState::Ready;
        Ok(if quit { Flow::Quit } else { Flow::Continue })
    }

    /// Serves UCI until `quit` or end of input.
    pub fn run<R, W>(mut self, input: R, mut output: W) -> io::Result<()>
    where
        R: BufRead + Send + 'static,
        W: Write,
    {
        let (tx, rx) = mpsc::channel::<String>();
        thread::spawn(move || {
            let mut input = input;
            let mut buf = Vec::new();
            loop {
                buf.clear();
                match input.read_until(b'\n', &mut buf) {
                    Ok(0) | Err(_) => break,
                    Ok(_) => {
                        let line = String::from_utf8_lossy(&buf).into_owned();
                        if tx.send(line).is_err() {
                            break;
                        }
                    }
                }
            }
        });
        let mut pending = VecDeque::new();
        loop {
            let line = match pending.pop_front() {
                Some(l) => l,
                None => match rx.recv() {
                    Ok(l) => l,
                    Err(_) => break,
                },
            };
            if line.split_whitespace().next() == Some("quit") {
                break;
            }
            if let Some(g) = self.handle(&line, &mut output)? {
                if let Flow::Quit = self.go(g, &rx, &mut pending, &mut output)? {
                    output.flush()?;
                    break;
                }
            }
            output.flush()?;
        }
        output.flush()
    }
}

/// Serves UCI on stdin/stdout with `model`.
pub fn uci_loop(model: Model, model_path: Option<PathBuf>) -> io::Result<()> {
    let stdin = io::BufReader::new(io::stdin());
    UciSession::new(model, model_path).run(stdin, io::stdout().lock())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(script: &str) -> String {
        let mut out = Vec::new();
        UciSession::default()
            .run(io::Cursor::new(script.as_bytes().to_vec()), &mut out)
            .unwrap();
        String::from_utf8(out).unwrap()
    }

    #[test]
    fn handshake() {
        let out = run("uci\nisready\nquit\n");
        let lines: Vec<&str> = out.lines().collect();
        assert!(lines[0].starts_with("id name latent-chess"));
        assert!(lines.contains(&"uciok"));
        assert_eq!(*lines.last().unwrap(), "readyok");
    }

    #[test]
    fn black_reply_after_e4_is_legal() {
        // no trailing quit: a quit arriving mid-search would cut it short
        let out = run("uci\nposition startpos moves e2e4\ngo depth 3\n");
        let best = out.lines().find_map(|l| l.strip_prefix("bestmove ")).unwrap();
        let p = Position::startpos().apply_move(Move::from_uci("e2e4").unwrap()).unwrap();
        assert!(p.is_legal(Move::from_uci(best).unwrap()));
        assert!(out.contains("info depth 3 score cp"));
    }

    #[test]
    fn garbage_and_bad_commands_get_diagnostics() {
        let out = run("uci\nfoo bar\nposition startpos moves e2e5\ngo depth x\nsetoption name Width value 0\nsetoption name Nope value 1\ngo depth 1\nquit\n");
        assert_eq!(out.matches("info string").count(), 5, "{out}");
        assert_eq!(out.matches("bestmove").count(), 1);
    }

    #[test]
    fn options_change_the_search() {
        let mut s = UciSession::default();
        let mut sink = Vec::new();
        s.handle("setoption name Width value 5", &mut sink).unwrap();
        s.handle("setoption name Mode value unanchored", &mut sink).unwrap();
        s.handle("setoption name MaxDepth value 7", &mut sink).unwrap();
        assert_eq!(s.params().width, 5);
        assert_eq!(s.params().mode, ScoreMode::Unanchored);
        assert_eq!(s.params().max_depth, 7);
        assert!(sink.is_empty());
    }

    #[test]
    fn go_before_uci_and_terminal_positions() {
        let out = run("go depth 1\nuci\nposition fen 7k/6Q1/6K1/8/8/8/8/8 b - - 0 1\ngo depth 2\nquit\n");
        assert!(out.contains("info string go ignored"));
        assert!(out.contains("bestmove 0000"));
    }

    #[test]
    fn parses_go_and_position_forms() {
        assert_eq!(
            parse_command("go wtime 1000 btime 900 winc 10 binc 10").unwrap(),
            Command::Go(GoParams {
                wtime: Some(1000),
                btime: Some(900),
                winc: Some(10),
                binc: Some(10),
                ..GoParams::default()
            })
        );
        assert_eq!(
            parse_command("position fen 8/8/8/8/8/8/8/K6k w - - moves a1a2").unwrap(),
            Command::Position {
                fen: Some("8/8/8/8/8/8/8/K6k w - - 0 1".into()),
                moves: vec!["a1a2".into()]
            }
        );
        assert!(parse_command("position").is_err());
        assert!(parse_command("setoption name").is_err());
    }
}
