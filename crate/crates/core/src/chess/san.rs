//! Standard Algebraic Notation.

use alloc::string::String;
use alloc::vec::Vec;

use super::position::Position;
use super::types::{Move, PieceKind, Square};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SanError {
    #[error("malformed SAN token '{0}'")]
    Syntax(String),
    #[error("no legal move matches '{0}'")]
    Illegal(String),
    #[error("'{0}' matches more than one legal move")]
    Ambiguous(String),
}

fn is_castle(p: &Position, m: Move) -> bool {
    p.piece_at(m.from).is_some_and(|pc| pc.kind == PieceKind::King)
        && m.from.file() == 4
        && m.to.file().abs_diff(4) == 2
}

/// SAN of a legal move `m` in `p`, including the check or mate suffix.
pub fn to_san(p: &Position, m: Move) -> String {
    let children = p.legal_children();
    let mut out = String::with_capacity(8);
    let piece = p.piece_at(m.from).expect("legal move has a piece");
    if is_castle(p, m) {
        out.push_str(if m.to.file() == 6 { "O-O" } else { "O-O-O" });
    } else {
        let capture =
            p.piece_at(m.to).is_some() || (piece.kind == PieceKind::Pawn && m.from.file() != m.to.file());
        match piece.kind.san_letter() {
            None => {
                if capture {
                    out.push(m.from.file_char());
                }
            }
            Some(letter) => {
                out.push(letter);
                let rivals: Vec<Square> = children
                    .iter()
                    .map(|(lm, _)| *lm)
                    .filter(|lm| {
                        lm.to == m.to
                            && lm.from != m.from
                            && p.piece_at(lm.from).map(|x| x.kind) == Some(piece.kind)
                    })
                    .map(|lm| lm.from)
                    .collect();
                if !rivals.is_empty() {
                    let same_file = rivals.iter().any(|s| s.file() == m.from.file());
                    let same_rank = rivals.iter().any(|s| s.rank() == m.from.rank());
                    if !same_file {
                        out.push(m.from.file_char());
                    } else if !same_rank {
                        out.push(m.from.rank_char());
                    } else {
                        out.push(m.from.file_char());
                        out.push(m.from.rank_char());
                    }
                }
            }
        }
        if capture {
            out.push('x');
        }
        out.push(m.to.file_char());
        out.push(m.to.rank_char());
        if let Some(promo) = m.promotion {
            out.push('=');
            out.push(promo.san_letter().expect("promotion piece has a letter"));
        }
    }
    if let Some((_, child)) = children.iter().find(|(lm, _)| *lm == m) {
        if child.in_check() {
            out.push(if child.has_legal_move() { '+' } else { '#' });
        }
    }
    out
}

/// Resolves a SAN token against the legal moves of `p`.
///
/// Accepts check/mate/annotation suffixes, `0-0` castling, and promotions
/// with or without `=`.
pub fn parse_san(p: &Position, token: &str) -> Result<Move, SanError> {
    let core = token.trim_end_matches(['+', '#', '!', '?']);
    let syntax = || SanError::Syntax(token.into());
    if core.is_empty() || !core.is_ascii() {
        return Err(syntax());
    }
    let legal = p.legal_moves();

    if matches!(core, "O-O" | "0-0" | "O-O-O" | "0-0-0") {
        let file = if core.len() == 3 { 6 } else { 2 };
        return legal
            .into_iter()
            .find(|&m| is_castle(p, m) && m.to.file() == file)
            .ok_or_else(|| SanError::Illegal(token.into()));
    }

    let bytes = core.as_bytes();
    let (kind, mut rest) = match PieceKind::from_char(bytes[0] as char) {
        Some(k) if bytes[0].is_ascii_uppercase() && k != PieceKind::Pawn => (k, &core[1..]),
        _ => (PieceKind::Pawn, core),
    };

    let mut promotion = None;
    if let Some(last) = rest.chars().last() {
        if last.is_ascii_uppercase() {
            let k = PieceKind::from_char(last).ok_or_else(syntax)?;
            if kind != PieceKind::Pawn || matches!(k, PieceKind::Pawn | PieceKind::King) {
                return Err(syntax());
            }
            promotion = Some(k);
            rest = &rest[..rest.len() - 1];
            rest = rest.strip_suffix('=').unwrap_or(rest);
        }
    }
    if rest.len() < 2 {
        return Err(syntax());
    }
    let to: Square = rest[rest.len() - 2..].parse().map_err(|_| syntax())?;
    let mut qualifier = &rest[..rest.len() - 2];
    qualifier = qualifier.strip_suffix('x').unwrap_or(qualifier);
    let mut from_file = None;
    let mut from_rank = None;
    for c in qualifier.chars() {
        match c {
            'a'..='h' if from_file.is_none() && from_rank.is_none() => {
                from_file = Some(c as u8 - b'a')
            }
            '1'..='8' if from_rank.is_none() => from_rank = Some(c as u8 - b'1'),
            _ => return Err(syntax()),
        }
    }

    let mut found = None;
    for m in legal {
        let Some(piece) = p.piece_at(m.from) else {
            continue;
        };
        if piece.kind != kind
            || m.to != to
            || m.promotion != promotion
            || from_file.is_some_and(|f| f != m.from.file())
            || from_rank.is_some_and(|r| r != m.from.rank())
            || (kind == PieceKind::King && is_castle(p, m))
        {
            continue;
        }
        if found.replace(m).is_some() {
            return Err(SanError::Ambiguous(token.into()));
        }
    }
    found.ok_or_else(|| SanError::Illegal(token.into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn play(p: Position, sans: &[&str]) -> Position {
        sans.iter().fold(p, |p, s| {
            let m = parse_san(&p, s).unwrap();
            assert_eq!(&to_san(&p, m), s);
            p.apply_move(m).unwrap()
        })
    }

    #[test]
    fn fools_mate() {
        let p = play(Position::startpos(), &["f3", "e5", "g4"]);
        let m = parse_san(&p, "Qh4").unwrap();
        assert_eq!(to_san(&p, m), "Qh4#");
    }

    #[test]
    fn disambiguation_by_file_and_rank() {
        let p = Position::from_fen("k7/8/8/8/8/8/8/KR3R2 w - - 0 1").unwrap();
        let m = parse_san(&p, "Rbd1").unwrap();
        assert_eq!(m.from, "b1".parse().unwrap());
        assert_eq!(to_san(&p, m), "Rbd1");
        assert!(matches!(parse_san(&p, "Rd1"), Err(SanError::Ambiguous(_))));

        let p = Position::from_fen("7k/8/8/8/R7/8/8/R6K w - - 0 1").unwrap();
        let m = parse_san(&p, "R1a2").unwrap();
        assert_eq!(to_san(&p, m), "R1a2");
    }

    #[test]
    fn promotions_and_castling() {
        let p = Position::from_fen("8/P5k1/8/8/8/8/8/R3K2R w KQ - 0 1").unwrap();
        let m = parse_san(&p, "a8=N").unwrap();
        assert_eq!(m.promotion, Some(PieceKind::Knight));
        assert_eq!(parse_san(&p, "a8Q").unwrap().promotion, Some(PieceKind::Queen));
        assert_eq!(to_san(&p, parse_san(&p, "0-0").unwrap()), "O-O");
        assert_eq!(to_san(&p, parse_san(&p, "O-O-O").unwrap()), "O-O-O");
    }

    #[test]
    fn rejects_bad_tokens() {
        let p = Position::startpos();
        for bad in ["", "Zf3", "e9", "Kxe2x"] {
            assert!(matches!(parse_san(&p, bad), Err(SanError::Syntax(_))), "{bad}");
        }
        for bad in vec!["e5", "Nf4", "O-O"] {
            assert!(matches!(parse_san(&p, bad), Err(SanError::Illegal(_))), "{bad}");
        }
    }

    #[test]
    fn en_passant_is_a_capture() {
        let p = play(Position::startpos(), &["e4", "a6", "e5", "d5"]);
        let m = parse_san(&p, "exd6").unwrap();
        assert_eq!(to_san(&p, m), "exd6");
    }
}
