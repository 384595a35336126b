//! Zobrist keys. The hash covers piece placement, side to move, castling
//! rights and the en passant square; the move clocks are not part of it.

use super::types::{Color, Piece, Square};

const SEED: u64 = 0x5EED_C0FF_EE15_B00B;

const fn splitmix64(state: u64) -> (u64, u64) {
    let state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    (state, z ^ (z >> 31))
}

struct Keys {
    pieces: [[u64; 64]; 12],
    black_to_move: u64,
    castling: [u64; 4],
    en_passant_file: [u64; 8],
}

const fn generate() -> Keys {
    let mut state = SEED;
    let mut pieces = [[0u64; 64]; 12];
    let mut p = 0;
    while p < 12 {
        let mut sq = 0;
        while sq < 64 {
            let (s, v) = splitmix64(state);
            state = s;
            pieces[p][sq] = v;
            sq += 1;
        }
        p += 1;
    }
    let (s, black_to_move) = splitmix64(state);
    state = s;
    let mut castling = [0u64; 4];
    let mut i = 0;
    while i < 4 {
        let (s, v) = splitmix64(state);
        state = s;
        castling[i] = v;
        i += 1;
    }
    let mut en_passant_file = [0u64; 8];
    let mut i = 0;
    while i < 8 {
        let (s, v) = splitmix64(state);
        state = s;
        en_passant_file[i] = v;
        i += 1;
    }
    Keys {
        pieces,
        black_to_move,
        castling,
        en_passant_file,
    }
}

static KEYS: Keys = generate();

#[inline]
pub(crate) fn piece_square(piece: Piece, sq: Square) -> u64 {
    KEYS.pieces[piece.index()][sq.index()]
}

#[inline]
pub(crate) fn side(color: Color) -> u64 {
    match color {
        Color::White => 0,
        Color::Black => KEYS.black_to_move,
    }
}

/// XOR of the keys for every right set in the 4-bit castling mask.
#[inline]
pub(crate) fn castling(bits: u8) -> u64 {
    let mut h = 0;
    for (i, key) in KEYS.castling.iter().enumerate() {
        if bits & (1 << i) != 0 {
            h ^= key;
        }
    }
    h
}

#[inline]
pub(crate) fn en_passant(sq: Option<Square>) -> u64 {
    match sq {
        Some(sq) => KEYS.en_passant_file[sq.file() as usize],
        None => 0,
    }
}

/// Mixes the two move clocks into a 64-bit key. Used where the full token
/// input (which includes the clocks) must be distinguished, e.g. score caches.
pub fn clock_key(halfmove_clock: u32, fullmove_number: u32) -> u64 {
    let packed = ((halfmove_clock as u64) << 32) | fullmove_number as u64;
    splitmix64(packed ^ SEED).1
}
