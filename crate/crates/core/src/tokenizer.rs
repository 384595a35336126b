//! Fixed-length 77-token encoding of a FEN.
//!
//! Slot layout (all ASCII, one character per token):
//!
//! | slots  | content                                                   |
//! |--------|-----------------------------------------------------------|
//! | 0..64  | board, rank 8 to rank 1, file a to h, `.` for empty        |
//! | 64     | side to move, `w` or `b`                                  |
//! | 65..69 | castling letters present, in `KQkq` order, `.`-padded     |
//! | 69..71 | en passant square (`e3`) or `..`                          |
//! | 71..74 | halfmove clock, 3 digits, `0`-padded on the left          |
//! | 74..77 | fullmove number, 3 digits, `0`-padded on the left         |
//!
//! The encoder prepends a CLS id, which `tokenize` never emits.

use alloc::string::String;
use core::fmt::Write;

use crate::chess::{FenError, Position, Square};

pub const SEQ_LEN: usize = 77;

/// Characters of the vocabulary in id order. CLS takes the id after them.
const ALPHABET: &[u8; 31] = b".PNBRQKpnbrqk0123456789wacdefgh";

pub const CLS_ID: u8 = ALPHABET.len() as u8;
pub const VOCAB_SIZE: usize = ALPHABET.len() + 1;

const BOARD: core::ops::Range<usize> = 0..64;
const SIDE: usize = 64;
const CASTLING: core::ops::Range<usize> = 65..69;
const EN_PASSANT: core::ops::Range<usize> = 69..71;
const HALFMOVE: core::ops::Range<usize> = 71..74;
const FULLMOVE: core::ops::Range<usize> = 74..77;

/// Token id of an ASCII character, if it is in the vocabulary.
pub fn token_id(c: char) -> Option<u8> {
    ALPHABET
        .iter()
        .position(|&a| a as char == c)
        .map(|i| i as u8)
}

/// Character for a token id; CLS and out-of-range ids have none.
pub fn token_char(id: u8) -> Option<char> {
    ALPHABET.get(id as usize).map(|&b| b as char)
}

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct TokenSeq(pub [u8; SEQ_LEN]);

impl TokenSeq {
    pub fn as_slice(&self) -> &[u8] {
        &self.0
    }

    /// The sequence rendered back to its 77 characters.
    pub fn to_text(&self) -> String {
        self.0
            .iter()
            .map(|&id| token_char(id).unwrap_or('?'))
            .collect()
    }
}

impl core::fmt::Debug for TokenSeq {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "TokenSeq({})", self.to_text())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TokenizeError {
    #[error(transparent)]
    Fen(#[from] FenError),
    #[error("{0} exceeds three digits")]
    ClockOverflow(&'static str),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DetokenizeError {
    #[error("slot {slot}: token id {id} is not allowed there")]
    BadToken { slot: usize, id: u8 },
    #[error("castling slots are not in canonical order")]
    CastlingOrder,
}

pub fn tokenize(fen: &str) -> Result<TokenSeq, TokenizeError> {
    let p = Position::from_fen(fen)?;
    tokenize_position(&p)
}

/// Tokenizes an already-parsed position.
pub fn tokenize_position(p: &Position) -> Result<TokenSeq, TokenizeError> {
    if p.halfmove_clock() > 999 {
        return Err(TokenizeError::ClockOverflow("halfmove clock"));
    }
    if p.fullmove_number() > 999 {
        return Err(TokenizeError::ClockOverflow("fullmove number"));
    }
    let id = |c: char| token_id(c).expect("tokenizer emits vocabulary characters only");
    let dot = id('.');
    let mut t = [dot; SEQ_LEN];

    for (slot, t_slot) in t[BOARD].iter_mut().enumerate() {
        let sq = Square::new((slot % 8) as u8, 7 - (slot / 8) as u8);
        if let Some(piece) = p.piece_at(sq) {
            *t_slot = id(piece.to_fen_char());
        }
    }
    t[SIDE] = id(match p.side_to_move() {
        crate::chess::Color::White => 'w',
        crate::chess::Color::Black => 'b',
    });
    let rights = p.castling().bits();
    let mut slot = CASTLING.start;
    for (i, &letter) in crate::chess::CastlingRights::LETTERS.iter().enumerate() {
        if rights & (1 << i) != 0 {
            t[slot] = id(letter);
            slot += 1;
        }
    }
    if let Some(ep) = p.en_passant() {
        t[EN_PASSANT.start] = id(ep.file_char());
        t[EN_PASSANT.start + 1] = id(ep.rank_char());
    }
    let mut digits = String::with_capacity(6);
    let _ = write!(digits, "{:03}{:03}", p.halfmove_clock(), p.fullmove_number());
    for (i, c) in digits.chars().enumerate() {
        t[HALFMOVE.start + i] = id(c);
    }
    Ok(TokenSeq(t))
}

/// Rebuilds the canonical FEN of a token sequence.
pub fn detokenize(t: &TokenSeq) -> Result<String, DetokenizeError> {
    let ch = |slot: usize| -> Result<char, DetokenizeError> {
        token_char(t.0[slot]).ok_or(DetokenizeError::BadToken { slot, id: t.0[slot] })
    };
    let bad = |slot: usize| DetokenizeError::BadToken { slot, id: t.0[slot] };

    let mut fen = String::with_capacity(90);
    for rank in 0..8 {
        let mut empty = 0;
        for file in 0..8 {
            let slot = rank * 8 + file;
            let c = ch(slot)?;
            if c == '.' {
                empty += 1;
            } else if "PNBRQKpnbrqk".contains(c) {
                if empty > 0 {
                    let _ = write!(fen, "{empty}");
                    empty = 0;
                }
                fen.push(c);
            } else {
                return Err(bad(slot));
            }
        }
        if empty > 0 {
            let _ = write!(fen, "{empty}");
        }
        if rank < 7 {
            fen.push('/');
        }
    }

    fen.push(' ');
    match ch(SIDE)? {
        c @ ('w' | 'b') => fen.push(c),
        _ => return Err(bad(SIDE)),
    }

    fen.push(' ');
    let mut castling = String::new();
    let mut next_letter = 0;
    let mut padding = false;
    for slot in CASTLING {
        let c = ch(slot)?;
        if c == '.' {
            padding = true;
            continue;
        }
        let idx = crate::chess::CastlingRights::LETTERS
            .iter()
            .position(|&l| l == c)
            .ok_or_else(|| bad(slot))?;
        if padding || idx < next_letter {
            return Err(DetokenizeError::CastlingOrder);
        }
        next_letter = idx + 1;
        castling.push(c);
    }
    fen.push_str(if castling.is_empty() { "-" } else { &castling });

    fen.push(' ');
    let (f, r) = (ch(EN_PASSANT.start)?, ch(EN_PASSANT.start + 1)?);
    match (f, r) {
        ('.', '.') => fen.push('-'),
        ('a'..='h', '3' | '6') => {
            fen.push(f);
            fen.push(r);
        }
        _ => return Err(bad(EN_PASSANT.start)),
    }

    for range in [HALFMOVE, FULLMOVE] {
        fen.push(' ');
        let mut value = 0u32;
        for slot in range {
            let d = ch(slot)?.to_digit(10).ok_or_else(|| bad(slot))?;
            value = value * 10 + d;
        }
        let _ = write!(fen, "{value}");
    }
    Ok(fen)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chess::START_FEN;
    use alloc::string::ToString;
    use alloc::vec::Vec;

    #[test]
    fn vocabulary_is_bijective() {
        let mut seen = Vec::new();
        for id in 0..CLS_ID {
            let c = token_char(id).unwrap();
            assert_eq!(token_id(c), Some(id));
            assert!(!seen.contains(&c));
            seen.push(c);
        }
        assert_eq!(token_char(CLS_ID), None);
        assert_eq!(VOCAB_SIZE, 32);
    }

    #[test]
    fn start_position_layout() {
        let t = tokenize(START_FEN).unwrap();
        let mut expected = "rnbqkbnrpppppppp".to_string();
        expected.push_str(&".".repeat(32));
        expected.push_str("PPPPPPPPRNBQKBNR");
        expected.push_str("wKQkq..000001");
        assert_eq!(t.to_text(), expected);
        assert_eq!(t.0.len(), 77);
        assert!(t.0.iter().all(|&id| id < CLS_ID));
    }

    #[test]
    fn bare_kings_layout() {
        let t = tokenize("k7/8/8/8/8/8/8/K7 w - - 0 1").unwrap();
        let text = t.to_text();
        let mut board = "k".to_string();
        board.push_str(&".".repeat(7 + 48));
        board.push('K');
        board.push_str(&".".repeat(7));
        assert_eq!(&text[..64], board);
        assert_eq!(&text[65..69], "....");
        assert_eq!(&text[69..71], "..");
    }

    #[test]
    fn en_passant_and_clocks() {
        let fen = "rnbqkbnr/ppp1pppp/8/3pP3/8/8/PPPP1PPP/RNBQKBNR w Kq d6 0 3";
        let t = tokenize(fen).unwrap();
        assert_eq!(&t.to_text()[64..], "wKq..d6000003");
        assert_eq!(detokenize(&t).unwrap(), fen);
    }

    #[test]
    fn clock_overflow_rejected() {
        assert_eq!(
            tokenize("k7/8/8/8/8/8/8/K7 w - - 0 1000"),
            Err(TokenizeError::ClockOverflow("fullmove number"))
        );
        assert!(tokenize("k7/8/8/8/8/8/8/K7 w - - 1000 1").is_err());
        assert!(tokenize("k7/8/8/8/8/8/8/K7 w - - 999 999").is_ok());
    }

    #[test]
    fn detokenize_start() {
        assert_eq!(detokenize(&tokenize(START_FEN).unwrap()).unwrap(), START_FEN);
    }

    #[test]
    fn digit_on_board_is_rejected() {
        let mut t = tokenize(START_FEN).unwrap();
        t.0[20] = token_id('3').unwrap();
        assert_eq!(
            detokenize(&t),
            Err(DetokenizeError::BadToken { slot: 20, id: t.0[20] })
        );
        let mut t = tokenize(START_FEN).unwrap();
        t.0[10] = CLS_ID;
        assert!(detokenize(&t).is_err());
    }
}
