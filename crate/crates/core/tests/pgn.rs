use latent_chess_core::pgn::{pgn_emit, pgn_parse, GameRecord, GameResult, Termination};
use proptest::prelude::*;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn emit_then_parse_is_identity(seed in any::<u64>(), plies in 0usize..160) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut r = GameRecord::new(None);
        r.roster.event = "prop".into();
        let mut p = r.start_position().unwrap();
        for _ in 0..plies {
            let moves = p.legal_moves();
            let Some(&m) = moves.choose(&mut rng) else { break };
            p = p.apply_move(m).unwrap();
            r.moves.push(m);
            r.nodes.push(rng.random_bool(0.5).then(|| rng.random_range(1..400)));
        }
        r.result = GameResult::Draw;
        r.termination = Some(Termination::MaxPlies);
        let text = pgn_emit(&r).unwrap();
        prop_assert_eq!(pgn_parse(&text).unwrap(), r);
    }
}
