use std::path::Path;
use std::time::Duration;

use latent_chess::harness::{play_game, run_match, HarnessError, MatchConfig, MoveLimit, Opponent, OpponentSpec};
use latent_chess::model::Model;
use latent_chess_core::chess::Color;
use latent_chess_core::pgn::{pgn_parse_all, GameResult, Termination};
use latent_chess_core::planner::ScoreMode;

const BIN: &str = env!("CARGO_BIN_EXE_latent-chess");

/// A shell UCI stub whose reply to `go` is `on_go` (a shell command).
fn stub(dir: &Path, name: &str, on_go: &str) -> String {
    let path = dir.join(name);
    let body = format!(
        "while read line; do\n  case \"$line\" in\n    uci) echo 'id name {name}'; echo uciok;;\n    isready) echo readyok;;\n    go*) {on_go};;\n    quit) exit 0;;\n  esac\ndone\n"
    );
    std::fs::write(&path, body).unwrap();
    format!("sh {}", path.display())
}

fn self_opponent(width: usize) -> OpponentSpec {
    OpponentSpec {
        command: format!("{BIN} uci"),
        options: vec![("Width".into(), width.to_string()), ("Mode".into(), "anchored".into())],
        timeout: Duration::from_secs(10),
    }
}

fn model() -> Model {
    Model::untrained(ScoreMode::Anchored)
}

#[test]
fn illegal_opponent_move_loses_the_game() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = MatchConfig::new(OpponentSpec::new(stub(dir.path(), "illegal", "echo 'bestmove e2e4'")));
    cfg.games = 1;
    cfg.alternate = false;
    cfg.depth = 1;
    let g = play_game(&cfg, &model(), 0).unwrap();
    assert_eq!(g.our_color, Color::White);
    assert_eq!(g.record.result, GameResult::WhiteWins);
    assert_eq!(g.record.termination, Some(Termination::IllegalMove));
    assert_eq!(g.record.moves.len(), 1);
    assert!(g.incident.unwrap().contains("illegal"));
}

#[test]
fn crashing_or_silent_opponents_forfeit() {
    let dir = tempfile::tempdir().unwrap();
    for (name, on_go) in [("crash", "exit 3"), ("silent", ":")] {
        let mut spec = OpponentSpec::new(stub(dir.path(), name, on_go));
        spec.timeout = Duration::from_millis(500);
        let mut cfg = MatchConfig::new(spec);
        cfg.depth = 1;
        let out = run_match(&cfg, &model(), 1).unwrap();
        assert_eq!((out.tally.wins, out.tally.draws, out.tally.losses), (2, 0, 0), "{name}");
        for g in &out.games {
            assert_eq!(g.record.termination, Some(Termination::Forfeit));
            assert_eq!(g.record.result, GameResult::win_for(g.our_color));
        }
        // as Black we never moved, as White we moved once
        assert_eq!(out.games[0].record.moves.len(), 1);
        assert_eq!(out.games[1].record.moves.len(), 0);
    }
}

#[test]
fn failed_handshakes_are_errors() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("mute");
    std::fs::write(&path, "while read line; do :; done\n").unwrap();
    let mut spec = OpponentSpec::new(format!("sh {}", path.display()));
    spec.timeout = Duration::from_millis(300);
    assert!(matches!(Opponent::spawn(&spec), Err(HarnessError::Handshake(_))));
}

#[test]
fn self_play_is_symmetric() {
    let mut cfg = MatchConfig::new(self_opponent(3));
    cfg.depth = 2;
    cfg.width = 3;
    cfg.limit = MoveLimit::Depth(2);
    let out = run_match(&cfg, &model(), 1).unwrap();
    assert_eq!(out.tally.games(), 2);
    assert_eq!(out.tally.points(), 1.0, "{}", out.tally);
    // both sides run the same deterministic search, so the games coincide
    assert_eq!(out.games[0].record.moves, out.games[1].record.moves);
    assert_eq!(out.games[0].record.result, out.games[1].record.result);
}

#[test]
fn ten_game_match_conserves_games_and_round_trips_pgn() {
    let mut cfg = MatchConfig::new(self_opponent(2));
    cfg.games = 10;
    cfg.depth = 1;
    cfg.width = 3;
    cfg.limit = MoveLimit::Depth(1);
    cfg.max_plies = 60;
    let out = run_match(&cfg, &model(), 2).unwrap();
    let t = out.tally;
    assert_eq!(t.wins + t.draws + t.losses, 10);
    assert_eq!(t.points(), t.wins as f64 + t.draws as f64 / 2.0);
    let parsed = pgn_parse_all(&out.pgn().unwrap()).unwrap();
    assert_eq!(parsed.len(), 10);
    for (p, g) in parsed.iter().zip(&out.games) {
        assert_eq!(p, &g.record);
        assert!(p.termination.is_some());
        // our nodes per move stay within 1 + W for a depth-1 search
        let ours = if g.our_color == Color::White { 0 } else { 1 };
        for n in g.record.nodes.iter().skip(ours).step_by(2) {
            assert!(n.unwrap() <= 4);
        }
    }
}

#[test]
fn ply_cap_adjudicates_a_draw() {
    let mut cfg = MatchConfig::new(self_opponent(3));
    cfg.games = 1;
    cfg.alternate = false;
    cfg.depth = 1;
    cfg.limit = MoveLimit::Depth(1);
    cfg.max_plies = 6;
    let g = play_game(&cfg, &model(), 0).unwrap();
    assert_eq!(g.record.moves.len(), 6);
    assert_eq!(g.record.result, GameResult::Draw);
    assert_eq!(g.record.termination, Some(Termination::MaxPlies));
}

#[test]
fn movetime_matches_record_opponent_nodes() {
    let mut cfg = MatchConfig::new(self_opponent(3));
    cfg.games = 1;
    cfg.alternate = false;
    cfg.limit = MoveLimit::MoveTime(Duration::from_millis(20));
    cfg.max_plies = 4;
    let g = play_game(&cfg, &model(), 0).unwrap();
    assert_eq!(g.record.nodes.len(), 4);
    assert!(g.record.nodes.iter().all(|n| n.is_some()));
}
