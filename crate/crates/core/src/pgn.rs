//! PGN game records: emission with the seven-tag roster and parsing with
//! ply-by-ply legality checks.
//!
//! Per-move node counts travel as `{nodes=N}` comments after the move.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt::Write;

use crate::chess::{parse_san, to_san, Color, FenError, GameStatus, Move, Position, SanError, START_FEN};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GameResult {
    WhiteWins,
    BlackWins,
    Draw,
    Unfinished,
}

impl GameResult {
    pub fn as_str(self) -> &'static str {
        match self {
            GameResult::WhiteWins => "1-0",
            GameResult::BlackWins => "0-1",
            GameResult::Draw => "1/2-1/2",
            GameResult::Unfinished => "*",
        }
    }

    pub fn parse(s: &str) -> Option<GameResult> {
        Some(match s {
            "1-0" => GameResult::WhiteWins,
            "0-1" => GameResult::BlackWins,
            "1/2-1/2" => GameResult::Draw,
            "*" => GameResult::Unfinished,
            _ => return None,
        })
    }

    pub fn win_for(color: Color) -> GameResult {
        match color {
            Color::White => GameResult::WhiteWins,
            Color::Black => GameResult::BlackWins,
        }
    }

    /// Points scored by `color`, `None` for an unfinished game.
    pub fn points_for(self, color: Color) -> Option<f64> {
        match (self, color) {
            (GameResult::Draw, _) => Some(0.5),
            (GameResult::WhiteWins, Color::White) | (GameResult::BlackWins, Color::Black) => Some(1.0),
            (GameResult::WhiteWins, Color::Black) | (GameResult::BlackWins, Color::White) => Some(0.0),
            (GameResult::Unfinished, _) => None,
        }
    }
}

/// Why a game ended; written to the `Termination` tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Termination {
    Checkmate,
    Stalemate,
    Threefold,
    FiftyMove,
    InsufficientMaterial,
    /// Ply cap reached, adjudicated a draw.
    MaxPlies,
    /// The loser played an illegal move.
    IllegalMove,
    /// The loser crashed, hung or broke protocol.
    Forfeit,
}

impl Termination {
    pub fn as_str(self) -> &'static str {
        match self {
            Termination::Checkmate => "checkmate",
            Termination::Stalemate => "stalemate",
            Termination::Threefold => "threefold",
            Termination::FiftyMove => "fifty-move",
            Termination::InsufficientMaterial => "insufficient-material",
            Termination::MaxPlies => "max-plies",
            Termination::IllegalMove => "illegal",
            Termination::Forfeit => "forfeit",
        }
    }

    pub fn parse(s: &str) -> Option<Termination> {
        Some(match s {
            "checkmate" => Termination::Checkmate,
            "stalemate" => Termination::Stalemate,
            "threefold" => Termination::Threefold,
            "fifty-move" => Termination::FiftyMove,
            "insufficient-material" => Termination::InsufficientMaterial,
            "max-plies" => Termination::MaxPlies,
            "illegal" => Termination::IllegalMove,
            "forfeit" => Termination::Forfeit,
            _ => return None,
        })
    }

    /// Termination implied by a decided status; `None` for `Ongoing`.
    pub fn from_status(s: GameStatus) -> Option<Termination> {
        Some(match s {
            GameStatus::Ongoing => return None,
            GameStatus::WhiteWins | GameStatus::BlackWins => Termination::Checkmate,
            GameStatus::DrawStalemate => Termination::Stalemate,
            GameStatus::DrawFifty => Termination::FiftyMove,
            GameStatus::DrawThreefold => Termination::Threefold,
            GameStatus::DrawInsufficient => Termination::InsufficientMaterial,
        })
    }
}

/// Event, Site, Date, Round, White, Black. Result is a typed field.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Roster {
    pub event: String,
    pub site: String,
    pub date: String,
    pub round: String,
    pub white: String,
    pub black: String,
}

impl Default for Roster {
    fn default() -> Self {
        Roster {
            event: "?".into(),
            site: "?".into(),
            date: "????.??.??".into(),
            round: "?".into(),
            white: "?".into(),
            black: "?".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GameRecord {
    pub roster: Roster,
    /// Tags beyond the roster, `Result`, `SetUp`, `FEN` and `Termination`, in order.
    pub extra_tags: Vec<(String, String)>,
    /// `None` for the standard start position.
    pub start_fen: Option<String>,
    pub moves: Vec<Move>,
    /// Node count reported for each ply, when known.
    pub nodes: Vec<Option<u64>>,
    pub result: GameResult,
    pub termination: Option<Termination>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PgnError {
    #[error("bad start position: {0}")]
    Fen(#[from] FenError),
    #[error("ply {ply}: {error}")]
    Move { ply: usize, error: SanError },
    #[error("malformed tag pair near '{0}'")]
    Tag(String),
    #[error("unterminated comment or variation")]
    Unterminated,
    #[error("movetext has no result token")]
    MissingResult,
    #[error("result token {token} disagrees with the Result tag {tag}")]
    ResultMismatch { tag: String, token: String },
    #[error("unknown Termination tag value '{0}'")]
    Termination(String),
    #[error("no game found")]
    Empty,
}

impl GameRecord {
    pub fn new(start_fen: Option<String>) -> Self {
        GameRecord {
            roster: Roster::default(),
            extra_tags: Vec::new(),
            start_fen,
            moves: Vec::new(),
            nodes: Vec::new(),
            result: GameResult::Unfinished,
            termination: None,
        }
    }

    pub fn start_position(&self) -> Result<Position, FenError> {
        Position::from_fen(self.start_fen.as_deref().unwrap_or(START_FEN))
    }

    /// Every position of the game, start included (`moves.len() + 1` entries).
    /// Record moves are legal by construction.
    pub fn positions(&self) -> Result<Vec<Position>, FenError> {
        let mut p = self.start_position()?;
        let mut out = Vec::with_capacity(self.moves.len() + 1);
        out.push(p.clone());
        for &m in &self.moves {
            p = p.apply_move(m).expect("record moves are legal");
            out.push(p.clone());
        }
        Ok(out)
    }

    pub fn sans(&self) -> Result<Vec<String>, FenError> {
        let positions = self.positions()?;
        Ok(self
            .moves
            .iter()
            .zip(&positions)
            .map(|(&m, p)| to_san(p, m))
            .collect())
    }

    /// Status of the final position, threefold included.
    pub fn final_status(&self) -> Result<GameStatus, FenError> {
        let positions = self.positions()?;
        let hashes: Vec<u64> = positions.iter().map(Position::zobrist).collect();
        let last = positions.last().expect("at least the start position");
        Ok(crate::chess::game_status(last, &hashes))
    }
}

fn escape(v: &str) -> String {
    v.replace('\\', "\\\\").replace('"', "\\\"")
}

/// Export format: roster tags, extra tags, 80-column movetext.
pub fn pgn_emit(r: &GameRecord) -> Result<String, FenError> {
    let mut out = String::new();
    let ro = &r.roster;
    for (k, v) in [
        ("Event", &ro.event),
        ("Site", &ro.site),
        ("Date", &ro.date),
        ("Round", &ro.round),
        ("White", &ro.white),
        ("Black", &ro.black),
    ] {
        let _ = writeln!(out, "[{k} \"{}\"]", escape(v));
    }
    let _ = writeln!(out, "[Result \"{}\"]", r.result.as_str());
    if let Some(fen) = &r.start_fen {
        let _ = writeln!(out, "[SetUp \"1\"]");
        let _ = writeln!(out, "[FEN \"{}\"]", escape(fen));
    }
    if let Some(t) = r.termination {
        let _ = writeln!(out, "[Termination \"{}\"]", t.as_str());
    }
    for (k, v) in &r.extra_tags {
        let _ = writeln!(out, "[{k} \"{}\"]", escape(v));
    }
    out.push('\n');

    let mut tokens: Vec<String> = Vec::new();
    let mut p = r.start_position()?;
    for (i, &m) in r.moves.iter().enumerate() {
        let n = p.fullmove_number();
        if p.side_to_move() == Color::White {
            tokens.push(alloc::format!("{n}."));
        } else if i == 0 {
            tokens.push(alloc::format!("{n}..."));
        }
        tokens.push(to_san(&p, m));
        if let Some(Some(nodes)) = r.nodes.get(i) {
            tokens.push(alloc::format!("{{nodes={nodes}}}"));
        }
        p = p.apply_move(m).expect("record moves are legal");
    }
    tokens.push(r.result.as_str().to_string());

    let mut line_len = 0;
    for t in tokens {
        if line_len > 0 && line_len + 1 + t.len() > 79 {
            out.push('\n');
            line_len = 0;
        } else if line_len > 0 {
            out.push(' ');
            line_len += 1;
        }
        out.push_str(&t);
        line_len += t.len();
    }
    out.push_str("\n\n");
    Ok(out)
}

struct Lexer<'a> {
    s: &'a str,
    pos: usize,
}

#[derive(Debug, PartialEq)]
enum Tok<'a> {
    Tag(&'a str, String),
    Comment(&'a str),
    Word(&'a str),
}

impl<'a> Lexer<'a> {
    fn skip_ws(&mut self) {
        let rest = &self.s[self.pos..];
        self.pos += rest.len() - rest.trim_start().len();
    }

    fn next(&mut self) -> Result<Option<Tok<'a>>, PgnError> {
        loop {
            self.skip_ws();
            let rest = &self.s[self.pos..];
            let Some(c) = rest.chars().next() else {
                return Ok(None);
            };
            match c {
                '%' if self.pos == 0 || self.s.as_bytes()[self.pos - 1] == b'\n' => {
                    self.pos += rest.find('\n').unwrap_or(rest.len());
                }
                ';' => self.pos += rest.find('\n').unwrap_or(rest.len()),
                '{' => {
                    let end = rest.find('}').ok_or(PgnError::Unterminated)?;
                    self.pos += end + 1;
                    return Ok(Some(Tok::Comment(&rest[1..end])));
                }
                '(' => {
                    let mut depth = 0usize;
                    let mut end = None;
                    for (i, ch) in rest.char_indices() {
                        match ch {
                            '(' => depth += 1,
                            ')' => {
                                depth -= 1;
                                if depth == 0 {
                                    end = Some(i);
                                    break;
                                }
                            }
                            _ => {}
                        }
                    }
                    self.pos += end.ok_or(PgnError::Unterminated)? + 1;
                }
                '[' => return self.tag().map(Some),
                _ => {
                    let end = rest
                        .find(|ch: char| ch.is_whitespace() || "{}()[];".contains(ch))
                        .unwrap_or(rest.len());
                    self.pos += end.max(1);
                    return Ok(Some(Tok::Word(&rest[..end.max(1)])));
                }
            }
        }
    }

    fn tag(&mut self) -> Result<Tok<'a>, PgnError> {
        let rest = &self.s[self.pos..];
        let near = || PgnError::Tag(rest.chars().take(24).collect());
        let body = &rest[1..];
        let name_end = body.find(char::is_whitespace).ok_or_else(near)?;
        let name = &body[..name_end];
        if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
            return Err(near());
        }
        let after = body[name_end..].trim_start();
        let mut chars = after.char_indices();
        if chars.next().map(|(_, c)| c) != Some('"') {
            return Err(near());
        }
        let mut value = String::new();
        let mut escaped = false;
        let mut close = None;
        for (i, c) in chars {
            if escaped {
                value.push(c);
                escaped = false;
            } else if c == '\\' {
                escaped = true;
            } else if c == '"' {
                close = Some(i);
                break;
            } else {
                value.push(c);
            }
        }
        let close = close.ok_or_else(near)?;
        let tail = after[close + 1..].trim_start();
        if !tail.starts_with(']') {
            return Err(near());
        }
        let consumed = rest.len() - tail.len() + 1;
        self.pos += consumed;
        Ok(Tok::Tag(name, value))
    }
}

fn strip_move_number(word: &str) -> &str {
    let digits = word.bytes().take_while(u8::is_ascii_digit).count();
    if digits > 0 && word[digits..].starts_with('.') {
        word[digits..].trim_start_matches('.')
    } else {
        word
    }
}

fn parse_one(lex: &mut Lexer<'_>) -> Result<Option<GameRecord>, PgnError> {
    let mut rec = GameRecord::new(None);
    let mut result_tag: Option<String> = None;
    let mut pos: Option<Position> = None;
    let mut seen_any = false;

    loop {
        let Some(tok) = lex.next()? else {
            return if seen_any {
                Err(PgnError::MissingResult)
            } else {
                Ok(None)
            };
        };
        seen_any = true;
        match tok {
            Tok::Tag(name, value) => {
                match name {
                    "Event" => rec.roster.event = value,
                    "Site" => rec.roster.site = value,
                    "Date" => rec.roster.date = value,
                    "Round" => rec.roster.round = value,
                    "White" => rec.roster.white = value,
                    "Black" => rec.roster.black = value,
                    "Result" => result_tag = Some(value),
                    "SetUp" => {}
                    "FEN" => rec.start_fen = Some(value),
                    "Termination" => {
                        rec.termination =
                            Some(Termination::parse(&value).ok_or(PgnError::Termination(value))?)
                    }
                    _ => rec.extra_tags.push((name.to_string(), value)),
                }
                continue;
            }
            Tok::Comment(c) => {
                if let Some(n) = c.trim().strip_prefix("nodes=").and_then(|n| n.trim().parse().ok()) {
                    if let Some(last) = rec.nodes.last_mut() {
                        *last = Some(n);
                    }
                }
            }
            Tok::Word(w) => {
                if let Some(res) = GameResult::parse(w) {
                    if let Some(tag) = &result_tag {
                        if tag != w && tag != "*" {
                            return Err(PgnError::ResultMismatch {
                                tag: tag.clone(),
                                token: w.to_string(),
                            });
                        }
                    }
                    rec.result = res;
                    return Ok(Some(rec));
                }
                let san = strip_move_number(w);
                if san.is_empty() || san.starts_with('$') {
                    continue;
                }
                if pos.is_none() {
                    pos = Some(rec.start_position()?);
                }
                let p = pos.as_mut().expect("set above");
                let ply = rec.moves.len() + 1;
                let m = parse_san(p, san).map_err(|error| PgnError::Move { ply, error })?;
                *p = p.apply_move(m).expect("parse_san returns legal moves");
                rec.moves.push(m);
                rec.nodes.push(None);
            }
        }
    }
}

/// Parses the first game in `text`.
pub fn pgn_parse(text: &str) -> Result<GameRecord, PgnError> {
    let mut lex = Lexer { s: text, pos: 0 };
    parse_one(&mut lex)?.ok_or(PgnError::Empty)
}

/// Parses every game in `text`.
pub fn pgn_parse_all(text: &str) -> Result<Vec<GameRecord>, PgnError> {
    let mut lex = Lexer { s: text, pos: 0 };
    let mut out = Vec::new();
    while let Some(r) = parse_one(&mut lex)? {
        out.push(r);
    }
    Ok(out)
}
