mod oracles;

use latent_chess_core::chess::{Move, Position};
use latent_chess_core::planner::{fit_advantage, select_move, AdvantageModel, ScoreMode, SearchConfig};
use oracles::{brute_minimax, random_positions, random_unit, tiny_engine};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

fn cfg(depth: usize, width: usize, mode: ScoreMode, tt: usize) -> SearchConfig {
    SearchConfig {
        depth,
        width,
        mode,
        tt_capacity: tt,
        ..SearchConfig::default()
    }
}

#[test]
fn matches_exhaustive_minimax_for_shallow_full_width() {
    let (enc, model) = tiny_engine(1, ScoreMode::Anchored);
    for (k, p) in random_positions(31, 12, 12).iter().enumerate() {
        let depth = 1 + k % 2;
        for mode in [ScoreMode::Unanchored, ScoreMode::Anchored] {
            let c = cfg(depth, 256, mode, 1 << 12);
            let r = select_move(p, &c, &model, &enc, &mut || false).unwrap();
            let (v, m) = brute_minimax(p, depth, &model, &c, &enc);
            assert_eq!(r.best_move, m, "{}", p.to_fen());
            assert!((r.root_score - v).abs() < 1e-12);
        }
    }
}

#[test]
fn node_bound_is_respected_and_reached() {
    let (enc, model) = tiny_engine(2, ScoreMode::Anchored);
    let busy = Position::from_fen("r1bqkbnr/pppp1ppp/2n5/4p3/4P3/5N2/PPPP1PPP/RNBQKB1R w KQkq - 2 3").unwrap();
    for (depth, bound) in [(3, 40), (4, 121)] {
        let c = cfg(depth, 3, ScoreMode::Anchored, 0);
        let r = select_move(&busy, &c, &model, &enc, &mut || false).unwrap();
        assert_eq!(c.node_bound(), bound);
        assert_eq!(r.nodes_encoded, bound);
    }
    for p in random_positions(8, 10, 30) {
        let c = cfg(3, 3, ScoreMode::Anchored, 1 << 10);
        assert!(select_move(&p, &c, &model, &enc, &mut || false).unwrap().nodes_encoded <= 40);
    }
}

#[test]
fn table_is_a_pure_cache() {
    let (enc, model) = tiny_engine(3, ScoreMode::Anchored);
    let mut hits = 0;
    for p in random_positions(44, 20, 12) {
        let on = select_move(&p, &cfg(3, 3, ScoreMode::Anchored, 1 << 14), &model, &enc, &mut || false).unwrap();
        let off = select_move(&p, &cfg(3, 3, ScoreMode::Anchored, 0), &model, &enc, &mut || false).unwrap();
        assert_eq!(on.best_move, off.best_move);
        assert_eq!(on.root_score.to_bits(), off.root_score.to_bits());
        assert!(on.evaluations <= off.evaluations);
        hits += on.tt_hits;
    }
    assert!(hits > 0);
}

#[test]
fn raw_anchoring_is_a_constant_shift() {
    let (enc, model) = tiny_engine(4, ScoreMode::Unanchored);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..50 {
        let z = random_unit(&mut rng, 16);
        let direct: f64 = z.iter().zip(model.mu_black()).zip(model.direction()).map(|((a, b), c)| (a - b) * c).sum();
        assert!((model.score_with(&z, ScoreMode::AnchoredRaw) - direct).abs() < 1e-12);
    }
    for p in random_positions(12, 20, 20) {
        let u = select_move(&p, &cfg(2, 3, ScoreMode::Unanchored, 1 << 12), &model, &enc, &mut || false).unwrap();
        let a = select_move(&p, &cfg(2, 3, ScoreMode::AnchoredRaw, 1 << 12), &model, &enc, &mut || false).unwrap();
        assert_eq!(u.best_move, a.best_move);
    }
}

#[test]
fn search_is_deterministic() {
    let (enc, model) = tiny_engine(5, ScoreMode::Anchored);
    let p = random_positions(70, 1, 10).remove(0);
    let c = cfg(3, 3, ScoreMode::Anchored, 1 << 12);
    let a = select_move(&p, &c, &model, &enc, &mut || false).unwrap();
    let b = select_move(&p, &c, &model, &enc, &mut || false).unwrap();
    assert_eq!(a, b);
}

#[test]
fn mate_dominates_and_stop_aborts() {
    let (enc, model) = tiny_engine(6, ScoreMode::Anchored);
    let p = Position::from_fen("6k1/5ppp/8/8/8/8/8/3R2K1 w - - 0 1").unwrap();
    let r = select_move(&p, &cfg(1, 3, ScoreMode::Anchored, 0), &model, &enc, &mut || false).unwrap();
    assert_eq!(r.best_move, Move::from_uci("d1d8").unwrap());
    let mut calls = 0;
    let stopped = select_move(&p, &cfg(3, 3, ScoreMode::Anchored, 0), &model, &enc, &mut || {
        calls += 1;
        calls > 2
    });
    assert!(stopped.is_err());
}

#[test]
fn fitted_means_equal_direct_averages() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let z: Vec<Vec<f64>> = (0..600).map(|_| random_unit(&mut rng, 6)).collect();
    let probs: Vec<f64> = (0..600).map(|i| [0.0, 1.0, 0.5][i % 3]).collect();
    let (m, report) = fit_advantage(&z, &probs, ScoreMode::Anchored).unwrap();
    assert!(!report.widened);
    let avg = |target: f64| -> Vec<f64> {
        let rows: Vec<&Vec<f64>> = z.iter().zip(&probs).filter(|(_, &p)| p == target).map(|(v, _)| v).collect();
        (0..6).map(|k| rows.iter().map(|r| r[k]).sum::<f64>() / rows.len() as f64).collect()
    };
    for (got, want) in [(m.mu_white(), avg(1.0)), (m.mu_black(), avg(0.0))] {
        assert!(got.iter().zip(&want).all(|(a, b)| (a - b).abs() < 1e-12));
    }
    let diff: Vec<f64> = m.mu_white().iter().zip(m.mu_black()).map(|(a, b)| a - b).collect();
    let n = diff.iter().map(|x| x * x).sum::<f64>().sqrt();
    assert!(m.direction().iter().zip(&diff).all(|(a, d)| (a - d / n).abs() < 1e-9));
    let text = m.to_text();
    assert_eq!(AdvantageModel::parse(&text).unwrap(), m);
}
