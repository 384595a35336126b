use latent_chess::export::{embed_positions, fit_on_game, trajectory, trajectory_csv, trajectory_svg};
use latent_chess::model::Model;
use latent_chess::train::{run_training, RunFile};
use latent_chess_core::pgn::{pgn_parse_all, GameRecord, GameResult};
use latent_chess_core::projection::fit_projection;
use latent_chess_core::synthetic::generate;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GAMES: &str = include_str!("fixtures/reference_games.pgn");

fn reference_games() -> Vec<GameRecord> {
    pgn_parse_all(GAMES).unwrap()
}

/// A small encoder trained on material-labeled positions, enough for the
/// advantage axis to order material.
fn small_trained_model() -> Model {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let data = generate(&mut rng, 5000, 120);
    let mut run = RunFile::default();
    run.encoder.layers = 1;
    run.encoder.embed_dim = 32;
    run.encoder.heads = 2;
    run.encoder.mlp_size = 64;
    run.encoder.dropout = 0.0;
    run.encoder.seed = 1;
    run.train.batch_size = 16;
    run.train.steps = 2000;
    run.train.lr = 0.01;
    let dir = tempfile::tempdir().unwrap();
    run_training(&data, &run, dir.path(), |_| {}).unwrap().model
}

#[test]
fn white_wins_move_up_the_advantage_axis() {
    let model = small_trained_model();
    let games = reference_games();
    let game_a = &games[0];
    assert_eq!(game_a.result, GameResult::WhiteWins);
    let proj = fit_on_game(game_a, &model).unwrap();
    let pts = trajectory(game_a, &model, &proj).unwrap();
    assert_eq!(pts.len(), game_a.moves.len() + 1);
    assert_eq!(pts.last().unwrap().san, "Qf6#");
    assert!(
        pts.last().unwrap().advantage_score > pts[0].advantage_score,
        "{} -> {}",
        pts[0].advantage_score,
        pts.last().unwrap().advantage_score
    );
    // the exported score is the planner's score of the same embedding
    let z = embed_positions(&model, &game_a.positions().unwrap()).unwrap();
    for (p, zi) in pts.iter().zip(&z) {
        assert_eq!(p.advantage_score, model.advantage.score(zi));
    }
}

#[test]
fn exports_are_byte_identical_across_runs() {
    let model = Model::untrained(latent_chess_core::planner::ScoreMode::Anchored);
    let games = reference_games();
    let g = &games[2];
    let render = || {
        let proj = fit_on_game(g, &model).unwrap();
        let pts = trajectory(g, &model, &proj).unwrap();
        (trajectory_csv(&pts), trajectory_svg(&pts, "game"))
    };
    let (csv1, svg1) = render();
    let (csv2, svg2) = render();
    assert_eq!(csv1, csv2);
    assert_eq!(svg1, svg2);
    assert_eq!(csv1.lines().count(), g.moves.len() + 2);
    assert!(svg1.starts_with("<?xml"));
    assert_eq!(svg1.matches("marker-end").count(), g.moves.len());
}

#[test]
fn a_shared_projection_places_every_game() {
    let model = Model::untrained(latent_chess_core::planner::ScoreMode::Anchored);
    let games = reference_games();
    let all: Vec<_> = games.iter().flat_map(|g| g.positions().unwrap()).collect();
    let proj = fit_projection(&embed_positions(&model, &all).unwrap()).unwrap();
    for g in &games {
        let pts = trajectory(g, &model, &proj).unwrap();
        assert!(pts.iter().all(|p| p.x.is_finite() && p.y.is_finite()));
    }
}
