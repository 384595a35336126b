use alloc::vec::Vec;

use super::attacks::{self, Squares};
use super::types::{Color, Move, Piece, PieceKind, Square};
use super::zobrist;

/// Castling rights as a 4-bit mask: `K`, `Q`, `k`, `q` in that bit order.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default, Debug)]
pub struct CastlingRights(u8);

impl CastlingRights {
    pub const NONE: CastlingRights = CastlingRights(0);
    pub const ALL: CastlingRights = CastlingRights(0b1111);

    /// FEN letters in canonical order, matching bit order.
    pub const LETTERS: [char; 4] = ['K', 'Q', 'k', 'q'];

    #[inline]
    pub const fn bit(color: Color, kingside: bool) -> u8 {
        let base = match color {
            Color::White => 0,
            Color::Black => 2,
        };
        1 << (base + if kingside { 0 } else { 1 })
    }

    #[inline]
    pub const fn has(self, color: Color, kingside: bool) -> bool {
        self.0 & Self::bit(color, kingside) != 0
    }

    #[inline]
    pub const fn bits(self) -> u8 {
        self.0
    }

    #[inline]
    pub const fn from_bits(bits: u8) -> CastlingRights {
        CastlingRights(bits & 0b1111)
    }

    #[inline]
    pub fn insert(&mut self, bit: u8) {
        self.0 |= bit & 0b1111;
    }

    #[inline]
    fn retain(&mut self, mask: u8) {
        self.0 &= mask;
    }
}

/// Rights that survive a move touching `sq` (as origin or destination).
fn castling_mask(sq: Square) -> u8 {
    match (sq.file(), sq.rank()) {
        (4, 0) => !0b0011,
        (7, 0) => !0b0001,
        (0, 0) => !0b0010,
        (4, 7) => !0b1100,
        (7, 7) => !0b0100,
        (0, 7) => !0b1000,
        _ => 0b1111,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PositionError {
    #[error("{0:?} must have exactly one king")]
    KingCount(Color),
    #[error("pawn on the first or last rank")]
    PawnOnBackRank,
    #[error("the side not to move is in check")]
    OpponentInCheck,
    #[error("castling right '{0}' without king and rook on their home squares")]
    CastlingWithoutPieces(char),
    #[error("en passant square {0} is not consistent with a double pawn push")]
    BadEnPassant(Square),
    #[error("fullmove number must be at least 1")]
    FullmoveZero,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("illegal move {0}")]
pub struct IllegalMove(pub Move);

/// A complete chess position. Values are immutable; moves produce new
/// positions via [`Position::apply_move`].
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct Position {
    pub(crate) board: [Option<Piece>; 64],
    pub(crate) by_color: [u64; 2],
    pub(crate) by_kind: [u64; 6],
    pub(crate) side_to_move: Color,
    pub(crate) castling: CastlingRights,
    pub(crate) en_passant: Option<Square>,
    pub(crate) halfmove_clock: u32,
    pub(crate) fullmove_number: u32,
    pub(crate) zobrist: u64,
}

impl Default for Position {
    fn default() -> Position {
        Position::startpos()
    }
}

impl Position {
    pub(crate) const fn empty() -> Position {
        Position {
            board: [None; 64],
            by_color: [0; 2],
            by_kind: [0; 6],
            side_to_move: Color::White,
            castling: CastlingRights::NONE,
            en_passant: None,
            halfmove_clock: 0,
            fullmove_number: 1,
            zobrist: 0,
        }
    }

    /// The standard initial position.
    pub fn startpos() -> Position {
        let mut p = Position::empty();
        let back = [
            PieceKind::Rook,
            PieceKind::Knight,
            PieceKind::Bishop,
            PieceKind::Queen,
            PieceKind::King,
            PieceKind::Bishop,
            PieceKind::Knight,
            PieceKind::Rook,
        ];
        for (file, &kind) in back.iter().enumerate() {
            let f = file as u8;
            p.put(Square::new(f, 0), Piece::new(Color::White, kind));
            p.put(Square::new(f, 1), Piece::new(Color::White, PieceKind::Pawn));
            p.put(Square::new(f, 6), Piece::new(Color::Black, PieceKind::Pawn));
            p.put(Square::new(f, 7), Piece::new(Color::Black, kind));
        }
        p.castling = CastlingRights::ALL;
        p.zobrist = p.compute_zobrist();
        p
    }

    #[inline]
    pub fn piece_at(&self, sq: Square) -> Option<Piece> {
        self.board[sq.index()]
    }

    #[inline]
    pub fn side_to_move(&self) -> Color {
        self.side_to_move
    }

    #[inline]
    pub fn castling(&self) -> CastlingRights {
        self.castling
    }

    #[inline]
    pub fn en_passant(&self) -> Option<Square> {
        self.en_passant
    }

    #[inline]
    pub fn halfmove_clock(&self) -> u32 {
        self.halfmove_clock
    }

    #[inline]
    pub fn fullmove_number(&self) -> u32 {
        self.fullmove_number
    }

    /// Incrementally maintained Zobrist hash.
    #[inline]
    pub fn zobrist(&self) -> u64 {
        self.zobrist
    }

    #[inline]
    pub fn pieces(&self, color: Color, kind: PieceKind) -> u64 {
        self.by_color[color.index()] & self.by_kind[kind.index()]
    }

    #[inline]
    pub fn color_occupancy(&self, color: Color) -> u64 {
        self.by_color[color.index()]
    }

    #[inline]
    pub fn occupied(&self) -> u64 {
        self.by_color[0] | self.by_color[1]
    }

    pub fn count(&self, color: Color, kind: PieceKind) -> u32 {
        self.pieces(color, kind).count_ones()
    }

    pub fn king_square(&self, color: Color) -> Option<Square> {
        Squares(self.pieces(color, PieceKind::King)).next()
    }

    /// Hash recomputed from scratch over placement, side, castling and en passant.
    pub fn compute_zobrist(&self) -> u64 {
        let mut h = 0;
        for idx in 0..64u8 {
            let sq = Square::from_index_unchecked(idx);
            if let Some(piece) = self.board[sq.index()] {
                h ^= zobrist::piece_square(piece, sq);
            }
        }
        h ^ zobrist::side(self.side_to_move)
            ^ zobrist::castling(self.castling.bits())
            ^ zobrist::en_passant(self.en_passant)
    }

    #[inline]
    pub(crate) fn put(&mut self, sq: Square, piece: Piece) {
        debug_assert!(self.board[sq.index()].is_none());
        self.board[sq.index()] = Some(piece);
        self.by_color[piece.color.index()] |= sq.bb();
        self.by_kind[piece.kind.index()] |= sq.bb();
        self.zobrist ^= zobrist::piece_square(piece, sq);
    }

    #[inline]
    fn remove(&mut self, sq: Square) -> Option<Piece> {
        let piece = self.board[sq.index()].take()?;
        self.by_color[piece.color.index()] &= !sq.bb();
        self.by_kind[piece.kind.index()] &= !sq.bb();
        self.zobrist ^= zobrist::piece_square(piece, sq);
        Some(piece)
    }

    /// Whether any piece of `by` attacks `sq`.
    pub fn is_attacked(&self, sq: Square, by: Color) -> bool {
        let occ = self.occupied();
        let queens = self.pieces(by, PieceKind::Queen);
        attacks::pawn(by.other(), sq) & self.pieces(by, PieceKind::Pawn) != 0
            || attacks::knight(sq) & self.pieces(by, PieceKind::Knight) != 0
            || attacks::king(sq) & self.pieces(by, PieceKind::King) != 0
            || attacks::bishop(sq, occ) & (self.pieces(by, PieceKind::Bishop) | queens) != 0
            || attacks::rook(sq, occ) & (self.pieces(by, PieceKind::Rook) | queens) != 0
    }

    pub fn in_check(&self) -> bool {
        match self.king_square(self.side_to_move) {
            Some(k) => self.is_attacked(k, self.side_to_move.other()),
            None => false,
        }
    }

    /// Checks every structural invariant a reachable position satisfies.
    pub fn validate(&self) -> Result<(), PositionError> {
        for color in Color::BOTH {
            if self.count(color, PieceKind::King) != 1 {
                return Err(PositionError::KingCount(color));
            }
        }
        const BACK_RANKS: u64 = 0xFF00_0000_0000_00FF;
        if self.by_kind[PieceKind::Pawn.index()] & BACK_RANKS != 0 {
            return Err(PositionError::PawnOnBackRank);
        }
        let them = self.side_to_move.other();
        let their_king = self.king_square(them).expect("king count checked");
        if self.is_attacked(their_king, self.side_to_move) {
            return Err(PositionError::OpponentInCheck);
        }
        for (i, &letter) in CastlingRights::LETTERS.iter().enumerate() {
            if self.castling.bits() & (1 << i) == 0 {
                continue;
            }
            let color = if i < 2 { Color::White } else { Color::Black };
            let rook_file = if i % 2 == 0 { 7 } else { 0 };
            let rank = color.back_rank();
            let king_ok = self.piece_at(Square::new(4, rank))
                == Some(Piece::new(color, PieceKind::King));
            let rook_ok = self.piece_at(Square::new(rook_file, rank))
                == Some(Piece::new(color, PieceKind::Rook));
            if !(king_ok && rook_ok) {
                return Err(PositionError::CastlingWithoutPieces(letter));
            }
        }
        if let Some(ep) = self.en_passant {
            // The side that just moved is `them`; its pawn passed over `ep`.
            let (ep_rank, dr) = match self.side_to_move {
                Color::White => (5, -1),
                Color::Black => (2, 1),
            };
            let pawn_sq = ep.offset(0, dr);
            let origin = ep.offset(0, -dr);
            let ok = ep.rank() == ep_rank
                && self.piece_at(ep).is_none()
                && origin.is_some_and(|o| self.piece_at(o).is_none())
                && pawn_sq
                    .is_some_and(|s| self.piece_at(s) == Some(Piece::new(them, PieceKind::Pawn)));
            if !ok {
                return Err(PositionError::BadEnPassant(ep));
            }
        }
        if self.fullmove_number == 0 {
            return Err(PositionError::FullmoveZero);
        }
        Ok(())
    }

    fn push_pawn_moves(&self, from: Square, to: Square, out: &mut Vec<Move>) {
        if to.rank() == 0 || to.rank() == 7 {
            for kind in PieceKind::PROMOTIONS {
                out.push(Move::with_promotion(from, to, kind));
            }
        } else {
            out.push(Move::new(from, to));
        }
    }

    /// Moves obeying piece movement rules, ignoring self-check.
    fn pseudo_legal(&self, out: &mut Vec<Move>) {
        let us = self.side_to_move;
        let them = us.other();
        let own = self.color_occupancy(us);
        let enemy = self.color_occupancy(them);
        let occ = own | enemy;

        let (dr, start_rank) = match us {
            Color::White => (1i8, 1u8),
            Color::Black => (-1i8, 6u8),
        };
        for from in Squares(self.pieces(us, PieceKind::Pawn)) {
            if let Some(one) = from.offset(0, dr) {
                if occ & one.bb() == 0 {
                    self.push_pawn_moves(from, one, out);
                    if from.rank() == start_rank {
                        let two = one.offset(0, dr).expect("double push stays on board");
                        if occ & two.bb() == 0 {
                            out.push(Move::new(from, two));
                        }
                    }
                }
            }
            let targets = attacks::pawn(us, from);
            for to in Squares(targets & enemy) {
                self.push_pawn_moves(from, to, out);
            }
            if let Some(ep) = self.en_passant {
                if targets & ep.bb() != 0 {
                    out.push(Move::new(from, ep));
                }
            }
        }

        for from in Squares(self.pieces(us, PieceKind::Knight)) {
            for to in Squares(attacks::knight(from) & !own) {
                out.push(Move::new(from, to));
            }
        }
        let queens = self.pieces(us, PieceKind::Queen);
        for from in Squares(self.pieces(us, PieceKind::Bishop) | queens) {
            for to in Squares(attacks::bishop(from, occ) & !own) {
                out.push(Move::new(from, to));
            }
        }
        for from in Squares(self.pieces(us, PieceKind::Rook) | queens) {
            for to in Squares(attacks::rook(from, occ) & !own) {
                out.push(Move::new(from, to));
            }
        }
        if let Some(king) = self.king_square(us) {
            for to in Squares(attacks::king(king) & !own) {
                out.push(Move::new(king, to));
            }
            self.castling_moves(king, occ, out);
        }
    }

    fn castling_moves(&self, king: Square, occ: u64, out: &mut Vec<Move>) {
        let us = self.side_to_move;
        let them = us.other();
        let rank = us.back_rank();
        if king != Square::new(4, rank) {
            return;
        }
        let can_k = self.castling.has(us, true);
        let can_q = self.castling.has(us, false);
        if !(can_k || can_q) || self.is_attacked(king, them) {
            return;
        }
        let sq = |f| Square::new(f, rank);
        let empty = |fs: &[u8]| fs.iter().all(|&f| occ & sq(f).bb() == 0);
        let safe = |fs: &[u8]| fs.iter().all(|&f| !self.is_attacked(sq(f), them));
        if can_k && empty(&[5, 6]) && safe(&[5, 6]) {
            out.push(Move::new(king, sq(6)));
        }
        if can_q && empty(&[1, 2, 3]) && safe(&[3, 2]) {
            out.push(Move::new(king, sq(2)));
        }
    }

    /// Plays `m` without checking legality. `m` must come from move generation.
    pub(crate) fn make(&self, m: Move) -> Position {
        let mut p = *self;
        let us = self.side_to_move;
        let piece = self.board[m.from.index()].expect("move origin holds a piece");
        p.zobrist ^= zobrist::en_passant(self.en_passant) ^ zobrist::castling(self.castling.bits());

        p.remove(m.from);
        let mut is_capture = p.remove(m.to).is_some();
        if piece.kind == PieceKind::Pawn && Some(m.to) == self.en_passant {
            let dr = if us == Color::White { -1 } else { 1 };
            let victim = m.to.offset(0, dr).expect("en passant victim on board");
            is_capture |= p.remove(victim).is_some();
        }
        let placed = match m.promotion {
            Some(kind) => Piece::new(us, kind),
            None => piece,
        };
        p.put(m.to, placed);

        if piece.kind == PieceKind::King && m.from.file() == 4 && m.to.file().abs_diff(4) == 2 {
            let rank = m.from.rank();
            let (rook_from, rook_to) = if m.to.file() == 6 { (7, 5) } else { (0, 3) };
            let rook = p
                .remove(Square::new(rook_from, rank))
                .expect("castling rook present");
            p.put(Square::new(rook_to, rank), rook);
        }

        p.castling
            .retain(castling_mask(m.from) & castling_mask(m.to));
        p.en_passant = if piece.kind == PieceKind::Pawn && m.from.rank().abs_diff(m.to.rank()) == 2
        {
            Some(Square::new(m.from.file(), (m.from.rank() + m.to.rank()) / 2))
        } else {
            None
        };
        p.halfmove_clock = if piece.kind == PieceKind::Pawn || is_capture {
            0
        } else {
            self.halfmove_clock.saturating_add(1)
        };
        if us == Color::Black {
            p.fullmove_number = self.fullmove_number.saturating_add(1);
        }
        p.side_to_move = us.other();
        p.zobrist ^= zobrist::side(Color::Black)
            ^ zobrist::en_passant(p.en_passant)
            ^ zobrist::castling(p.castling.bits());
        p
    }

    /// Every legal move paired with the resulting position, in move order.
    pub fn legal_children(&self) -> Vec<(Move, Position)> {
        let mut pseudo = Vec::with_capacity(64);
        self.pseudo_legal(&mut pseudo);
        pseudo.sort_unstable();
        let us = self.side_to_move;
        pseudo
            .into_iter()
            .filter_map(|m| {
                let child = self.make(m);
                let king = child.king_square(us)?;
                (!child.is_attacked(king, us.other())).then_some((m, child))
            })
            .collect()
    }

    /// Legal moves ordered by (from, to, promotion).
    pub fn legal_moves(&self) -> Vec<Move> {
        self.legal_children().into_iter().map(|(m, _)| m).collect()
    }

    pub fn has_legal_move(&self) -> bool {
        let mut pseudo = Vec::with_capacity(64);
        self.pseudo_legal(&mut pseudo);
        let us = self.side_to_move;
        pseudo.into_iter().any(|m| {
            let child = self.make(m);
            child
                .king_square(us)
                .is_some_and(|k| !child.is_attacked(k, us.other()))
        })
    }

    pub fn is_legal(&self, m: Move) -> bool {
        self.legal_moves().contains(&m)
    }

    /// Returns the child position, or an error if `m` is not legal here.
    pub fn apply_move(&self, m: Move) -> Result<Position, IllegalMove> {
        self.legal_children()
            .into_iter()
            .find_map(|(lm, child)| (lm == m).then_some(child))
            .ok_or(IllegalMove(m))
    }

    /// Position with the side to move flipped and en passant cleared.
    /// Used for null-move style comparisons; the result may be invalid.
    pub fn with_side_flipped(&self) -> Position {
        let mut p = *self;
        p.zobrist ^= zobrist::side(Color::Black) ^ zobrist::en_passant(p.en_passant);
        p.en_passant = None;
        p.side_to_move = p.side_to_move.other();
        p
    }

    /// Colour-mirrored position: ranks flipped, colours swapped.
    pub fn mirrored(&self) -> Position {
        let mut p = Position::empty();
        for idx in 0..64u8 {
            let sq = Square::from_index_unchecked(idx);
            if let Some(piece) = self.board[sq.index()] {
                p.put(
                    Square::new(sq.file(), 7 - sq.rank()),
                    Piece::new(piece.color.other(), piece.kind),
                );
            }
        }
        let b = self.castling.bits();
        p.castling = CastlingRights::from_bits(((b & 0b0011) << 2) | ((b & 0b1100) >> 2));
        p.en_passant = self.en_passant.map(|s| Square::new(s.file(), 7 - s.rank()));
        p.side_to_move = self.side_to_move.other();
        p.halfmove_clock = self.halfmove_clock;
        p.fullmove_number = self.fullmove_number;
        p.zobrist = p.compute_zobrist();
        p
    }
}

/// Leaf count of the legal move tree to `depth` plies.
pub fn perft(p: &Position, depth: u32) -> u64 {
    if depth == 0 {
        return 1;
    }
    let children = p.legal_children();
    if depth == 1 {
        return children.len() as u64;
    }
    children.iter().map(|(_, c)| perft(c, depth - 1)).sum()
}
