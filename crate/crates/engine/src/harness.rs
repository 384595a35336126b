//! Matches against an external UCI engine, tallies, and rating reports.

use std::collections::BTreeMap;
use std::io::{self, BufRead, BufReader, Write};
use std::path::Path;
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::thread;
use std::time::{Duration, Instant};

use latent_chess_core::chess::{game_status, Color, Move};
use latent_chess_core::pgn::{pgn_emit, GameRecord, GameResult, Termination};
use latent_chess_core::planner::ScoreMode;
use latent_chess_core::rating::{elo_estimate, EloEstimate, MatchTally, RatingError};
use serde::{Deserialize, Serialize};

use crate::model::Model;
use crate::think::{think, Limit, ThinkParams};
use crate::uci::ENGINE_NAME;

pub const DEFAULT_MAX_PLIES: usize = 400;
pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(10);

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("opponent command is empty or unparsable")]
    BadCommand,
    #[error("cannot start opponent '{command}': {source}")]
    Spawn { command: String, source: io::Error },
    #[error("opponent failed the UCI handshake: {0}")]
    Handshake(String),
    #[error("invalid match configuration: {0}")]
    Config(&'static str),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Rating(#[from] RatingError),
    #[error("game record: {0}")]
    Record(String),
}

/// Per-move limit for both sides. With `Depth` the opponent receives
/// `go depth N` while we search at our own configured depth.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MoveLimit {
    Depth(usize),
    MoveTime(Duration),
}

#[derive(Debug, Clone)]
pub struct OpponentSpec {
    /// Shell-style command line.
    pub command: String,
    /// `setoption` pairs sent after `uciok`.
    pub options: Vec<(String, String)>,
    pub timeout: Duration,
}

impl OpponentSpec {
    pub fn new(command: impl Into<String>) -> Self {
        OpponentSpec {
            command: command.into(),
            options: Vec::new(),
            timeout: DEFAULT_TIMEOUT,
        }
    }
}

#[derive(Debug, Clone)]
pub struct MatchConfig {
    pub games: u32,
    /// We take White in even-numbered games (0-based) and Black in odd ones.
    pub alternate: bool,
    pub depth: usize,
    pub width: usize,
    pub mode: ScoreMode,
    pub limit: MoveLimit,
    pub max_plies: usize,
    pub opponent: OpponentSpec,
    /// `None` starts from the standard position.
    pub start_fen: Option<String>,
    pub event: String,
}

impl MatchConfig {
    pub fn new(opponent: OpponentSpec) -> Self {
        MatchConfig {
            games: 2,
            alternate: true,
            depth: 3,
            width: 3,
            mode: ScoreMode::Anchored,
            limit: MoveLimit::Depth(3),
            max_plies: DEFAULT_MAX_PLIES,
            opponent,
            start_fen: None,
            event: format!("{ENGINE_NAME} match"),
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.games == 0 {
            return Err(HarnessError::Config("games must be at least 1"));
        }
        if self.alternate && self.games % 2 == 1 {
            return Err(HarnessError::Config("alternating colors needs an even game count"));
        }
        if self.depth == 0 || self.width == 0 {
            return Err(HarnessError::Config("depth and width must be positive"));
        }
        if self.max_plies == 0 {
            return Err(HarnessError::Config("max plies must be positive"));
        }
        Ok(())
    }

    pub fn our_color(&self, game: u32) -> Color {
        if self.alternate && game % 2 == 1 {
            Color::Black
        } else {
            Color::White
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Fault {
    Timeout,
    Crashed,
}

/// A running opponent engine. Its stdout is drained by a helper thread so
/// every wait can time out.
pub struct Opponent {
    child: Child,
    stdin: ChildStdin,
    lines: Receiver<String>,
    timeout: Duration,
    pub name: String,
}

impl Opponent {
    pub fn spawn(spec: &OpponentSpec) -> Result<Opponent, HarnessError> {
        let argv = shlex::split(&spec.command).filter(|a| !a.is_empty()).ok_or(HarnessError::BadCommand)?;
        let mut child = Command::new(&argv[0])
            .args(&argv[1..])
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()
            .map_err(|source| HarnessError::Spawn {
                command: spec.command.clone(),
                source,
            })?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        let (tx, lines) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                let Ok(line) = line else { break };
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        let mut opp = Opponent {
            child,
            stdin,
            lines,
            timeout: spec.timeout,
            name: "opponent".into(),
        };
        opp.handshake(&spec.options)
            .map_err(|f| HarnessError::Handshake(format!("{f:?} waiting for uciok/readyok")))?;
        Ok(opp)
    }

    fn send(&mut self, line: &str) -> Result<(), Fault> {
        writeln!(self.stdin, "{line}").and_then(|_| self.stdin.flush()).map_err(|_| Fault::Crashed)
    }

    /// Reads lines until `want` returns a value, handing every line to it.
    fn wait_for<T>(&mut self, extra: Duration, mut want: impl FnMut(&str) -> Option<T>) -> Result<T, Fault> {
        let deadline = Instant::now() + self.timeout + extra;
        loop {
            let left = deadline.saturating_duration_since(Instant::now());
            match self.lines.recv_timeout(left) {
                Ok(line) => {
                    if let Some(v) = want(line.trim()) {
                        return Ok(v);
                    }
                }
                Err(RecvTimeoutError::Timeout) => return Err(Fault::Timeout),
                Err(RecvTimeoutError::Disconnected) => return Err(Fault::Crashed),
            }
        }
    }

    fn handshake(&mut self, options: &[(String, String)]) -> Result<(), Fault> {
        self.send("uci")?;
        let mut name = None;
        self.wait_for(Duration::ZERO, |l| {
            if let Some(n) = l.strip_prefix("id name ") {
                name = Some(n.trim().to_string());
            }
            (l == "uciok").then_some(())
        })?;
        if let Some(n) = name {
            self.name = n;
        }
        for (k, v) in options {
            self.send(&format!("setoption name {k} value {v}"))?;
        }
        self.sync()
    }

    fn sync(&mut self) -> Result<(), Fault> {
        self.send("isready")?;
        self.wait_for(Duration::ZERO, |l| (l == "readyok").then_some(()))
    }

    /// Asks for a move; returns the raw move text and the last reported node count.
    fn best_move(&mut self, position: &str, limit: MoveLimit) -> Result<(String, Option<u64>), Fault> {
        self.send(position)?;
        let (go, extra) = match limit {
            MoveLimit::Depth(d) => (format!("go depth {d}"), Duration::ZERO),
            MoveLimit::MoveTime(t) => (format!("go movetime {}", t.as_millis()), t),
        };
        self.send(&go)?;
        let mut nodes = None;
        self.wait_for(extra, |l| {
            let toks: Vec<&str> = l.split_whitespace().collect();
            match toks.first() {
                Some(&"info") => {
                    if let Some(i) = toks.iter().position(|&t| t == "nodes") {
                        nodes = toks.get(i + 1).and_then(|n| n.parse().ok()).or(nodes);
                    }
                    None
                }
                Some(&"bestmove") => Some(toks.get(1).unwrap_or(&"").to_string()),
                _ => None,
            }
        })
        .map(|m| (m, nodes))
    }
}

impl Drop for Opponent {
    fn drop(&mut self) {
        let _ = self.send("quit");
        let deadline = Instant::now() + Duration::from_millis(200);
        while Instant::now() < deadline {
            if let Ok(Some(_)) = self.child.try_wait() {
                return;
            }
            thread::sleep(Duration::from_millis(5));
        }
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

fn position_command(start_fen: Option<&str>, moves: &[Move]) -> String {
    let mut s = match start_fen {
        None => "position startpos".to_string(),
        Some(f) => format!("position fen {f}"),
    };
    if !moves.is_empty() {
        s.push_str(" moves");
        for m in moves {
            s.push(' ');
            s.push_str(&m.to_string());
        }
    }
    s
}

/// One finished game with the incidents worth logging.
#[derive(Debug, Clone)]
pub struct PlayedGame {
    pub record: GameRecord,
    pub our_color: Color,
    /// Human-readable reason when the game ended abnormally.
    pub incident: Option<String>,
}

impl PlayedGame {
    /// 1, ½ or 0 from our side.
    pub fn our_points(&self) -> f64 {
        self.record.result.points_for(self.our_color).unwrap_or(0.5)
    }
}

/// Plays game number `index` (0-based) against a freshly spawned opponent.
pub fn play_game(cfg: &MatchConfig, model: &Model, index: u32) -> Result<PlayedGame, HarnessError> {
    let our_color = cfg.our_color(index);
    let mut opp = Opponent::spawn(&cfg.opponent)?;
    let mut record = GameRecord::new(cfg.start_fen.clone());
    record.roster.event = cfg.event.clone();
    record.roster.site = "local".into();
    record.roster.round = (index + 1).to_string();
    let (ours, theirs) = (format!("{ENGINE_NAME} d{} w{} {}", cfg.depth, cfg.width, cfg.mode.as_str()), opp.name.clone());
    (record.roster.white, record.roster.black) = match our_color {
        Color::White => (ours, theirs),
        Color::Black => (theirs, ours),
    };
    let params = ThinkParams {
        width: cfg.width,
        mode: cfg.mode,
        max_depth: cfg.depth,
        ..ThinkParams::default()
    };
    let our_limit = match cfg.limit {
        MoveLimit::Depth(_) => Limit::Depth(cfg.depth),
        MoveLimit::MoveTime(t) => Limit::MoveTime(t),
    };
    let mut pos = record
        .start_position()
        .map_err(|e| HarnessError::Record(e.to_string()))?;
    let mut history = vec![pos.zobrist()];
    let mut incident = None;
    let _ = opp.send("ucinewgame").and_then(|_| opp.sync());

    let (result, termination) = loop {
        let status = game_status(&pos, &history);
        if status.is_terminal() {
            let result = match status.winner() {
                Some(c) => GameResult::win_for(c),
                None => GameResult::Draw,
            };
            break (result, Termination::from_status(status).expect("terminal status"));
        }
        if record.moves.len() >= cfg.max_plies {
            break (GameResult::Draw, Termination::MaxPlies);
        }
        let mover = pos.side_to_move();
        let (m, nodes) = if mover == our_color {
            match think(model, &pos, &params, our_limit, &mut || false, &mut |_, _| {}) {
                Ok(t) => (t.report.best_move, Some(t.report.nodes_encoded as u64)),
                Err(e) => {
                    incident = Some(format!("our search failed: {e}"));
                    break (GameResult::win_for(mover.other()), Termination::Forfeit);
                }
            }
        } else {
            let cmd = position_command(cfg.start_fen.as_deref(), &record.moves);
            match opp.best_move(&cmd, cfg.limit) {
                Ok((text, nodes)) => match Move::from_uci(&text).filter(|&m| pos.is_legal(m)) {
                    Some(m) => (m, nodes),
                    None => {
                        incident = Some(format!("opponent played illegal move '{text}' at ply {}", record.moves.len() + 1));
                        break (GameResult::win_for(our_color), Termination::IllegalMove);
                    }
                },
                Err(f) => {
                    incident = Some(format!("opponent {} at ply {}", if f == Fault::Timeout { "timed out" } else { "crashed" }, record.moves.len() + 1));
                    break (GameResult::win_for(our_color), Termination::Forfeit);
                }
            }
        };
        pos = pos.apply_move(m).expect("checked legal");
        history.push(pos.zobrist());
        record.moves.push(m);
        record.nodes.push(nodes);
    };
    record.result = result;
    record.termination = Some(termination);
    if let Some(msg) = &incident {
        log::warn!("game {}: {msg}", index + 1);
    }
    Ok(PlayedGame {
        record,
        our_color,
        incident,
    })
}

#[derive(Debug, Clone)]
pub struct MatchOutcome {
    pub tally: MatchTally,
    pub games: Vec<PlayedGame>,
}

impl MatchOutcome {
    pub fn pgn(&self) -> Result<String, HarnessError> {
        let mut out = String::new();
        for g in &self.games {
            out.push_str(&pgn_emit(&g.record).map_err(|e| HarnessError::Record(e.to_string()))?);
            out.push('\n');
        }
        Ok(out)
    }
}

/// Plays the whole match on `jobs` worker threads, one opponent process per
/// game; games are tallied in index order.
pub fn run_match(cfg: &MatchConfig, model: &Model, jobs: usize) -> Result<MatchOutcome, HarnessError> {
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|_| HarnessError::Config("cannot build worker pool"))?;
    let games: Vec<PlayedGame> = pool.install(|| {
        use rayon::prelude::*;
        (0..cfg.games)
            .into_par_iter()
            .map(|i| play_game(cfg, model, i))
            .collect::<Result<_, _>>()
    })?;
    let mut tally = MatchTally::default();
    for g in &games {
        let p = g.our_points();
        tally.add(if p == 1.0 {
            MatchTally::new(1, 0, 0)
        } else if p == 0.0 {
            MatchTally::new(0, 0, 1)
        } else {
            MatchTally::new(0, 1, 0)
        });
    }
    Ok(MatchOutcome { tally, games })
}

/// One row of the tally table: a match against one opponent setting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TallyRow {
    pub label: String,
    pub opponent_rating: f64,
    pub width: usize,
    pub depth: usize,
    pub mode: String,
    pub wins: u32,
    pub draws: u32,
    pub losses: u32,
    pub points: f64,
    /// `W--D--L (points)`
    pub cell: String,
}

impl TallyRow {
    pub fn new(label: &str, opponent_rating: f64, cfg: &MatchConfig, tally: MatchTally) -> Self {
        TallyRow {
            label: label.to_string(),
            opponent_rating,
            width: cfg.width,
            depth: cfg.depth,
            mode: cfg.mode.as_str().to_string(),
            wins: tally.wins,
            draws: tally.draws,
            losses: tally.losses,
            points: tally.points(),
            cell: tally.to_string(),
        }
    }

    pub fn tally(&self) -> MatchTally {
        MatchTally::new(self.wins, self.draws, self.losses)
    }
}

/// Appends rows, writing the header only to a new or empty file.
pub fn append_tally_rows(path: &Path, rows: &[TallyRow]) -> Result<(), HarnessError> {
    let fresh = std::fs::metadata(path).map(|m| m.len() == 0).unwrap_or(true);
    let file = std::fs::OpenOptions::new().create(true).append(true).open(path)?;
    let mut w = csv::WriterBuilder::new().has_headers(fresh).from_writer(file);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_tally_rows(path: &Path) -> Result<Vec<TallyRow>, HarnessError> {
    let mut r = csv::Reader::from_path(path)?;
    Ok(r.deserialize().collect::<Result<_, _>>()?)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OpponentLine {
    pub opponent_rating: f64,
    pub cell: String,
}

/// Rating report; infinite values serialize as `null` with `bounded = false`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatingReport {
    pub label: String,
    pub rating: Option<f64>,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    pub bounded: bool,
    pub draw_param: f64,
    pub games: u32,
    pub points: f64,
    pub opponents: Vec<OpponentLine>,
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some((x * 100.0).round() / 100.0)
}

/// Rates every label separately, pooling rows with equal opponent ratings.
pub fn rate_rows(rows: &[TallyRow]) -> Result<Vec<RatingReport>, HarnessError> {
    let mut groups: BTreeMap<&str, BTreeMap<u64, MatchTally>> = BTreeMap::new();
    for r in rows {
        if !r.opponent_rating.is_finite() {
            return Err(RatingError::BadOpponent.into());
        }
        groups
            .entry(&r.label)
            .or_default()
            .entry(r.opponent_rating.to_bits())
            .or_default()
            .add(r.tally());
    }
    let mut out = Vec::new();
    for (label, by_opp) in groups {
        let mut tallies: Vec<(f64, MatchTally)> = by_opp.into_iter().map(|(b, t)| (f64::from_bits(b), t)).collect();
        tallies.sort_by(|a, b| a.0.total_cmp(&b.0));
        let est: EloEstimate = elo_estimate(&tallies)?;
        out.push(RatingReport {
            label: label.to_string(),
            rating: finite(est.rating),
            lower: finite(est.lower),
            upper: finite(est.upper),
            bounded: est.is_bounded(),
            draw_param: est.draw_param,
            games: est.games,
            points: est.points,
            opponents: tallies
                .iter()
                .map(|(r, t)| OpponentLine {
                    opponent_rating: *r,
                    cell: t.to_string(),
                })
                .collect(),
        });
    }
    Ok(out)
}
