mod mailbox;

use latent_chess_core::chess::{perft, Move, Position, START_FEN};
use mailbox::Board;
use proptest::prelude::*;
use rand::seq::IndexedRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const KIWIPETE: &str = "r3k2r/p1ppqpb1/bn2pnp1/3PN3/1p2P3/2N2Q1p/PPPBBPPP/R3K2R w KQkq - 0 1";
const ENDGAME: &str = "8/2p5/3p4/KP5r/1R3p1k/8/4P1P1/8 w - - 0 1";
const PROMOTIONS: &str = "r3k2r/Pppp1ppp/1b3nbN/nP6/BBP1P3/q4N2/Pp1P2PP/R2Q1RK1 w kq - 0 1";

fn random_walk(rng: &mut ChaCha8Rng, start: &Position, plies: usize) -> Vec<Position> {
    let mut out = vec![start.clone()];
    let mut p = start.clone();
    for _ in 0..plies {
        let moves = p.legal_moves();
        let Some(&m) = moves.choose(rng) else { break };
        p = p.apply_move(m).unwrap();
        out.push(p.clone());
    }
    out
}

#[test]
fn perft_matches_mailbox_oracle_on_tricky_positions() {
    for (fen, depth) in [(KIWIPETE, 3), (ENDGAME, 4), (PROMOTIONS, 3)] {
        let p = Position::from_fen(fen).unwrap();
        assert_eq!(perft(&p, depth), Board::from_fen(fen).perft(depth), "{fen}");
    }
}

#[test]
fn move_lists_match_oracle_along_random_games() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for start in [START_FEN, KIWIPETE, PROMOTIONS] {
        let start = Position::from_fen(start).unwrap();
        for _ in 0..20 {
            for p in random_walk(&mut rng, &start, 60) {
                let mut ours: Vec<String> = p.legal_moves().iter().map(|m| m.to_string()).collect();
                ours.sort();
                assert_eq!(ours, Board::from_fen(&p.to_fen()).legal_uci(), "{}", p.to_fen());
            }
        }
    }
}

#[test]
fn legal_moves_are_in_from_to_promotion_order() {
    let p = Position::from_fen(PROMOTIONS).unwrap();
    let key = |m: &Move| (m.from.index(), m.to.index());
    let moves = p.legal_moves();
    assert!(moves.windows(2).all(|w| key(&w[0]) <= key(&w[1]) && w[0] < w[1]));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fen_round_trip_and_hash_soundness(seed in any::<u64>(), plies in 0usize..80) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for p in random_walk(&mut rng, &Position::startpos(), plies) {
            let fen = p.to_fen();
            let q = Position::from_fen(&fen).unwrap();
            prop_assert_eq!(q.to_fen(), fen);
            prop_assert_eq!(&q, &p);
            prop_assert_eq!(p.zobrist(), p.compute_zobrist());
            prop_assert!(p.validate().is_ok());
        }
    }
}
