//! Attack sets for every piece kind. Leaper tables are built at compile time;
//! sliders walk rays against the occupancy.

use super::types::{Color, Square};

const KNIGHT_STEPS: [(i8, i8); 8] = [
    (1, 2),
    (2, 1),
    (2, -1),
    (1, -2),
    (-1, -2),
    (-2, -1),
    (-2, 1),
    (-1, 2),
];

const KING_STEPS: [(i8, i8); 8] = [
    (0, 1),
    (1, 1),
    (1, 0),
    (1, -1),
    (0, -1),
    (-1, -1),
    (-1, 0),
    (-1, 1),
];

pub(crate) const ROOK_DIRS: [(i8, i8); 4] = [(0, 1), (1, 0), (0, -1), (-1, 0)];
pub(crate) const BISHOP_DIRS: [(i8, i8); 4] = [(1, 1), (1, -1), (-1, -1), (-1, 1)];

const fn leaper_table(steps: &[(i8, i8); 8]) -> [u64; 64] {
    let mut table = [0u64; 64];
    let mut sq = 0;
    while sq < 64 {
        let f = (sq % 8) as i8;
        let r = (sq / 8) as i8;
        let mut i = 0;
        while i < 8 {
            let nf = f + steps[i].0;
            let nr = r + steps[i].1;
            if nf >= 0 && nf < 8 && nr >= 0 && nr < 8 {
                table[sq] |= 1u64 << (nr * 8 + nf);
            }
            i += 1;
        }
        sq += 1;
    }
    table
}

const fn pawn_table(color: Color) -> [u64; 64] {
    let dr: i8 = match color {
        Color::White => 1,
        Color::Black => -1,
    };
    let mut table = [0u64; 64];
    let mut sq = 0;
    while sq < 64 {
        let f = (sq % 8) as i8;
        let r = (sq / 8) as i8 + dr;
        if r >= 0 && r < 8 {
            if f > 0 {
                table[sq] |= 1u64 << (r * 8 + f - 1);
            }
            if f < 7 {
                table[sq] |= 1u64 << (r * 8 + f + 1);
            }
        }
        sq += 1;
    }
    table
}

static KNIGHT: [u64; 64] = leaper_table(&KNIGHT_STEPS);
static KING: [u64; 64] = leaper_table(&KING_STEPS);
static PAWN: [[u64; 64]; 2] = [pawn_table(Color::White), pawn_table(Color::Black)];

#[inline]
pub fn knight(sq: Square) -> u64 {
    KNIGHT[sq.index()]
}

#[inline]
pub fn king(sq: Square) -> u64 {
    KING[sq.index()]
}

/// Squares a pawn of `color` standing on `sq` attacks.
#[inline]
pub fn pawn(color: Color, sq: Square) -> u64 {
    PAWN[color.index()][sq.index()]
}

fn slide(sq: Square, occupied: u64, dirs: &[(i8, i8); 4]) -> u64 {
    let mut attacks = 0;
    for &(df, dr) in dirs {
        let mut cur = sq;
        while let Some(next) = cur.offset(df, dr) {
            attacks |= next.bb();
            if occupied & next.bb() != 0 {
                break;
            }
            cur = next;
        }
    }
    attacks
}

#[inline]
pub fn bishop(sq: Square, occupied: u64) -> u64 {
    slide(sq, occupied, &BISHOP_DIRS)
}

#[inline]
pub fn rook(sq: Square, occupied: u64) -> u64 {
    slide(sq, occupied, &ROOK_DIRS)
}

/// Iterates the set squares of a bitboard from a1 upward.
pub(crate) struct Squares(pub u64);

impl Iterator for Squares {
    type Item = Square;

    #[inline]
    fn next(&mut self) -> Option<Square> {
        if self.0 == 0 {
            return None;
        }
        let idx = self.0.trailing_zeros() as u8;
        self.0 &= self.0 - 1;
        Some(Square::from_index_unchecked(idx))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corner_knight_has_two_targets() {
        assert_eq!(knight(Square::new(0, 0)).count_ones(), 2);
        assert_eq!(knight(Square::new(3, 3)).count_ones(), 8);
    }

    #[test]
    fn rook_stops_at_blocker() {
        let a1 = Square::new(0, 0);
        let a4 = Square::new(0, 3);
        let att = rook(a1, a4.bb());
        assert!(att & a4.bb() != 0);
        assert!(att & Square::new(0, 4).bb() == 0);
        assert_eq!(att.count_ones(), 3 + 7);
    }

    #[test]
    fn pawn_attacks_respect_edges() {
        assert_eq!(pawn(Color::White, Square::new(0, 1)), Square::new(1, 2).bb());
        assert_eq!(pawn(Color::Black, Square::new(7, 6)), Square::new(6, 5).bb());
        assert_eq!(pawn(Color::White, Square::new(4, 7)), 0);
    }
}
