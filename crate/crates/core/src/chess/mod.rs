//! Chess rules: position representation, FEN, legal move generation,
//! SAN, game termination and Zobrist hashing.

mod attacks;
mod fen;
mod position;
mod san;
mod status;
mod types;
mod zobrist;

pub use fen::{FenError, START_FEN};
pub use position::{perft, CastlingRights, IllegalMove, Position, PositionError};
pub use san::{parse_san, to_san, SanError};
pub use status::{game_status, insufficient_material, static_status, GameStatus};
pub use types::{Color, Move, Piece, PieceKind, Square};
pub use zobrist::clock_key;

/// Zobrist hash of `p` recomputed from scratch.
pub fn zobrist_hash(p: &Position) -> u64 {
    p.compute_zobrist()
}
