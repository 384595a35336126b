//! Material-labelled positions from biased random playouts, for training
//! runs without an external evaluator.

use alloc::vec::Vec;

use rand::seq::IndexedRandom;
use rand::Rng;

use crate::chess::{static_status, Color, GameStatus, PieceKind, Position};
use crate::training::LabeledPosition;

/// Logistic slope per pawn of material lead.
pub const MATERIAL_SLOPE: f64 = 0.5;

/// White's material minus Black's, in pawns (P1 N3 B3 R5 Q9).
pub fn material_lead(p: &Position) -> i32 {
    let kinds = [
        (PieceKind::Pawn, 1),
        (PieceKind::Knight, 3),
        (PieceKind::Bishop, 3),
        (PieceKind::Rook, 5),
        (PieceKind::Queen, 9),
    ];
    kinds
        .iter()
        .map(|&(k, v)| v * (p.count(Color::White, k) as i32 - p.count(Color::Black, k) as i32))
        .sum()
}

/// White's win probability: decided games by their result, otherwise
/// `σ(MATERIAL_SLOPE · lead)` rounded to two decimals.
pub fn material_win_prob(p: &Position) -> f64 {
    match static_status(p) {
        GameStatus::WhiteWins => return 1.0,
        GameStatus::BlackWins => return 0.0,
        s if s.is_terminal() => return 0.5,
        _ => {}
    }
    let x = MATERIAL_SLOPE * material_lead(p) as f64;
    let prob = 1.0 / (1.0 + libm::exp(-x));
    libm::round(prob * 100.0) / 100.0
}

/// `n` positions sampled from playouts in which each side captures with its
/// own per-game greed, so material imbalances of both signs are common.
/// Each playout contributes positions from ply 6 onward with probability 1/4.
pub fn generate<R: Rng + ?Sized>(rng: &mut R, n: usize, max_plies: usize) -> Vec<LabeledPosition> {
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let greed = [rng.random::<f64>(), rng.random::<f64>()];
        let mut p = Position::startpos();
        for ply in 0..max_plies {
            if ply >= 6 && rng.random_bool(0.25) {
                out.push(LabeledPosition {
                    fen: p.to_fen(),
                    win_prob_white: material_win_prob(&p),
                });
                if out.len() == n {
                    break;
                }
            }
            let children = p.legal_children();
            if children.is_empty() || static_status(&p).is_terminal() {
                break;
            }
            let side = (p.side_to_move() == Color::Black) as usize;
            let captures: Vec<&Position> = children
                .iter()
                .filter(|(_, c)| c.occupied().count_ones() < p.occupied().count_ones())
                .map(|(_, c)| c)
                .collect();
            p = if !captures.is_empty() && rng.random_bool(greed[side]) {
                (*captures.choose(rng).expect("nonempty")).clone()
            } else {
                children.choose(rng).expect("nonempty").1.clone()
            };
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn start_is_even_and_labels_are_white_relative() {
        assert_eq!(material_win_prob(&Position::startpos()), 0.5);
        let up_queen = Position::from_fen("3k4/8/8/8/8/8/8/3QK3 b - - 0 1").unwrap();
        assert_eq!(material_lead(&up_queen), 9);
        assert_eq!(material_win_prob(&up_queen), 0.99);
        let mated = Position::from_fen("3R2k1/5ppp/8/8/8/8/8/6K1 b - - 0 1").unwrap();
        assert_eq!(material_win_prob(&mated), 1.0);
    }

    #[test]
    fn generation_is_seeded_and_spread() {
        let a = generate(&mut ChaCha8Rng::seed_from_u64(1), 500, 160);
        let b = generate(&mut ChaCha8Rng::seed_from_u64(1), 500, 160);
        assert_eq!(a, b);
        assert_eq!(a.len(), 500);
        let high = a.iter().filter(|l| l.win_prob_white >= 0.9).count();
        let low = a.iter().filter(|l| l.win_prob_white <= 0.1).count();
        assert!(high > 10 && low > 10, "high {high} low {low}");
    }
}
