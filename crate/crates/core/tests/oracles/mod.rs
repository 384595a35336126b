//! Straightforward reference computations that the optimized library code
//! is checked against.

#![allow(dead_code)]

use latent_chess_core::chess::{static_status, Color, Move, Position};
use latent_chess_core::encoder::{EncoderConfig, EncoderParams};
use latent_chess_core::planner::{terminal_value, AdvantageModel, Evaluator, ScoreMode, SearchConfig};
use latent_chess_core::tokenizer::tokenize_position;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

/// Contrastive loss by the textbook double loop: for every anchor with
/// positives, average `−log(exp(s_ip) / Σ_{a≠i} exp(s_ia))` over its
/// positives, and sum over anchors. Uses plain `exp`/`ln`.
pub fn naive_supcon(z: &[Vec<f64>], positive: &dyn Fn(usize, usize) -> bool, tau: f64) -> f64 {
    let sim = |i: usize, j: usize| -> f64 { z[i].iter().zip(&z[j]).map(|(a, b)| a * b).sum::<f64>() / tau };
    let n = z.len();
    let mut total = 0.0;
    for i in 0..n {
        let pos: Vec<usize> = (0..n).filter(|&p| p != i && positive(i, p)).collect();
        if pos.is_empty() {
            continue;
        }
        let denom: f64 = (0..n).filter(|&a| a != i).map(|a| sim(i, a).exp()).sum();
        let mut inner = 0.0;
        for &p in &pos {
            inner += (sim(i, p).exp() / denom).ln();
        }
        total += -inner / pos.len() as f64;
    }
    total
}

pub fn random_unit(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-3 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

/// Non-terminal positions reached by uniformly random play of
/// `1..=max_plies` plies from the start.
pub fn random_positions(seed: u64, count: usize, max_plies: usize) -> Vec<Position> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let plies = rng.random_range(1..=max_plies);
        let mut p = Position::startpos();
        for _ in 0..plies {
            let moves = p.legal_moves();
            let Some(&m) = moves.choose(&mut rng) else { break };
            p = p.apply_move(m).unwrap();
        }
        if !static_status(&p).is_terminal() {
            out.push(p);
        }
    }
    out
}

/// Exhaustive min-max over raw child scores, every child expanded. Returns
/// the value and the first move (in move order) attaining it.
pub fn brute_minimax<E: Evaluator>(
    pos: &Position,
    depth: usize,
    model: &AdvantageModel,
    cfg: &SearchConfig,
    eval: &E,
) -> (f64, Move) {
    let white = pos.side_to_move() == Color::White;
    let mut best: Option<(f64, Move)> = None;
    for (m, child) in pos.legal_children() {
        let status = static_status(&child);
        let v = if status.is_terminal() {
            terminal_value(status, model, cfg)
        } else if depth == 1 {
            let z = eval.embed_batch(&[tokenize_position(&child).unwrap()]).unwrap();
            model.score_with(&z[0], cfg.mode)
        } else {
            brute_minimax(&child, depth - 1, model, cfg, eval).0
        };
        let better = match best {
            None => true,
            Some((bv, _)) => (white && v > bv) || (!white && v < bv),
        };
        if better {
            best = Some((v, m));
        }
    }
    best.expect("non-terminal position")
}

/// A small randomly initialized encoder with an advantage model fitted to
/// the embeddings of a material-up and a material-down position.
pub fn tiny_engine(seed: u64, mode: ScoreMode) -> (EncoderParams, AdvantageModel) {
    let enc = EncoderParams::init(EncoderConfig::new(1, 16, 2, 32).with_dropout(0.0), seed).unwrap();
    let white_up = [
        "4k3/8/8/8/8/8/8/QQQQK3 w - - 0 1",
        "4k3/8/8/8/8/8/PPPPPPPP/RNBQKBNR w KQ - 0 1",
    ];
    let black_up = [
        "qqqqk3/8/8/8/8/8/8/4K3 w - - 0 1",
        "rnbqkbnr/pppppppp/8/8/8/8/8/4K3 w kq - 0 1",
    ];
    let mean = |fens: &[&str]| -> Vec<f64> {
        let seqs: Vec<_> = fens
            .iter()
            .map(|f| tokenize_position(&Position::from_fen(f).unwrap()).unwrap())
            .collect();
        let z = enc.encode(&seqs).unwrap();
        (0..16).map(|k| z.iter().map(|v| v[k]).sum::<f64>() / z.len() as f64).collect()
    };
    let model = AdvantageModel::new(mean(&white_up), mean(&black_up), mode).unwrap();
    (enc, model)
}

/// Spearman rank correlation with average ranks for ties.
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    fn ranks(v: &[f64]) -> Vec<f64> {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
        let mut r = vec![0.0; v.len()];
        let mut i = 0;
        while i < idx.len() {
            let mut j = i;
            while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
                j += 1;
            }
            let avg = (i + j) as f64 / 2.0;
            for &k in &idx[i..=j] {
                r[k] = avg;
            }
            i = j + 1;
        }
        r
    }
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    cov / (vx * vy).sqrt()
}
