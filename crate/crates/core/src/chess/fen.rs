//! Forsyth-Edwards Notation in and out.

use alloc::string::String;
use core::fmt::Write;

use super::position::{CastlingRights, Position, PositionError};
use super::types::{Color, Piece, Square};

pub const START_FEN: &str = "rnbqkbnr/pppppppp/8/8/8/8/PPPPPPPP/RNBQKBNR w KQkq - 0 1";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FenError {
    #[error("expected 6 space-separated fields, found {0}")]
    FieldCount(usize),
    #[error("piece placement: {0}")]
    Placement(&'static str),
    #[error("side to move: expected 'w' or 'b'")]
    SideToMove,
    #[error("castling rights: {0}")]
    Castling(&'static str),
    #[error("en passant: {0}")]
    EnPassant(&'static str),
    #[error("halfmove clock: expected a non-negative integer")]
    HalfmoveClock,
    #[error("fullmove number: expected a positive integer")]
    FullmoveNumber,
    #[error("illegal position: {0}")]
    Invalid(#[from] PositionError),
}

impl Position {
    /// Parses a 6-field FEN and validates the resulting position.
    pub fn from_fen(text: &str) -> Result<Position, FenError> {
        let fields: alloc::vec::Vec<&str> = text.split_whitespace().collect();
        if fields.len() != 6 {
            return Err(FenError::FieldCount(fields.len()));
        }
        let mut p = Position::empty();

        let ranks: alloc::vec::Vec<&str> = fields[0].split('/').collect();
        if ranks.len() != 8 {
            return Err(FenError::Placement("expected 8 ranks"));
        }
        for (i, rank_text) in ranks.iter().enumerate() {
            let rank = 7 - i as u8;
            let mut file = 0u8;
            let mut prev_digit = false;
            for c in rank_text.chars() {
                if let Some(d) = c.to_digit(10) {
                    if !(1..=8).contains(&d) || prev_digit {
                        return Err(FenError::Placement("bad empty-square run"));
                    }
                    file += d as u8;
                    prev_digit = true;
                } else {
                    let piece =
                        Piece::from_fen_char(c).ok_or(FenError::Placement("illegal piece character"))?;
                    if file >= 8 {
                        return Err(FenError::Placement("rank longer than 8 squares"));
                    }
                    p.put(Square::new(file, rank), piece);
                    file += 1;
                    prev_digit = false;
                }
                if file > 8 {
                    return Err(FenError::Placement("rank longer than 8 squares"));
                }
            }
            if file != 8 {
                return Err(FenError::Placement("rank shorter than 8 squares"));
            }
        }

        p.side_to_move = match fields[1] {
            "w" => Color::White,
            "b" => Color::Black,
            _ => return Err(FenError::SideToMove),
        };

        if fields[2] != "-" {
            let mut rights = CastlingRights::NONE;
            for c in fields[2].chars() {
                let i = CastlingRights::LETTERS
                    .iter()
                    .position(|&l| l == c)
                    .ok_or(FenError::Castling("unknown letter"))?;
                if rights.bits() & (1 << i) != 0 {
                    return Err(FenError::Castling("duplicate letter"));
                }
                rights.insert(1 << i);
            }
            p.castling = rights;
        }

        if fields[3] != "-" {
            let sq: Square = fields[3]
                .parse()
                .map_err(|_| FenError::EnPassant("not a square"))?;
            p.en_passant = Some(sq);
        }

        p.halfmove_clock = parse_clock(fields[4]).ok_or(FenError::HalfmoveClock)?;
        p.fullmove_number = parse_clock(fields[5])
            .filter(|&n| n >= 1)
            .ok_or(FenError::FullmoveNumber)?;

        p.zobrist = p.compute_zobrist();
        p.validate()?;
        Ok(p)
    }

    pub fn to_fen(&self) -> String {
        let mut out = String::with_capacity(90);
        for rank in (0..8).rev() {
            let mut empty = 0;
            for file in 0..8 {
                match self.piece_at(Square::new(file, rank)) {
                    Some(piece) => {
                        if empty > 0 {
                            let _ = write!(out, "{empty}");
                            empty = 0;
                        }
                        out.push(piece.to_fen_char());
                    }
                    None => empty += 1,
                }
            }
            if empty > 0 {
                let _ = write!(out, "{empty}");
            }
            if rank > 0 {
                out.push('/');
            }
        }
        out.push(' ');
        out.push(match self.side_to_move {
            Color::White => 'w',
            Color::Black => 'b',
        });
        out.push(' ');
        out.push_str(&castling_field(self.castling));
        out.push(' ');
        match self.en_passant {
            Some(sq) => {
                let _ = write!(out, "{sq}");
            }
            None => out.push('-'),
        }
        let _ = write!(out, " {} {}", self.halfmove_clock, self.fullmove_number);
        out
    }
}

/// Canonical castling field (`KQkq` order, `-` when empty).
pub(crate) fn castling_field(rights: CastlingRights) -> String {
    let mut s = String::new();
    for (i, &l) in CastlingRights::LETTERS.iter().enumerate() {
        if rights.bits() & (1 << i) != 0 {
            s.push(l);
        }
    }
    if s.is_empty() {
        s.push('-');
    }
    s
}

fn parse_clock(s: &str) -> Option<u32> {
    if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    s.parse().ok()
}
