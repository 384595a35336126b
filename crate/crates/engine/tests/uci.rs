mod common;

use std::io::Write;
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use common::Live;
use latent_chess_core::chess::{Move, Position};

const BIN: &str = env!("CARGO_BIN_EXE_latent-chess");

/// Runs the binary on a whole script and returns its stdout.
fn run_binary(script: &str) -> String {
    let mut child = Command::new(BIN)
        .arg("uci")
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(script.as_bytes()).unwrap();
    let out = child.wait_with_output().unwrap();
    assert!(out.status.success());
    String::from_utf8(out.stdout).unwrap()
}

#[test]
fn binary_handshake_and_clean_exit() {
    let out = run_binary("uci\nisready\nquit\n");
    assert!(out.lines().any(|l| l == "uciok"));
    assert_eq!(out.lines().last(), Some("readyok"));
    assert!(out.contains("option name Width type spin"));
    assert!(out.contains("option name Mode type combo"));
    assert!(out.contains("option name ModelPath type string"));
}

#[test]
fn binary_plays_a_legal_black_reply() {
    let out = run_binary("uci\nposition startpos moves e2e4\ngo depth 3\n");
    let best = out.lines().find_map(|l| l.strip_prefix("bestmove ")).unwrap();
    let p = Position::startpos().apply_move(Move::from_uci("e2e4").unwrap()).unwrap();
    assert!(p.is_legal(Move::from_uci(best).unwrap()), "{best}");
}

#[test]
fn movetime_budget_is_kept() {
    let mut s = Live::start();
    s.send("uci");
    s.until("uciok");
    s.send("setoption name MaxDepth value 10");
    for _ in 0..5 {
        s.send("isready");
        s.until("readyok");
        let t = Instant::now();
        s.send("go movetime 50");
        s.until("bestmove");
        assert!(t.elapsed() <= Duration::from_millis(70), "{:?}", t.elapsed());
    }
}

#[test]
fn stop_ends_an_infinite_search() {
    let mut s = Live::start();
    s.send("uci");
    s.until("uciok");
    s.send("position startpos");
    s.send("go infinite");
    s.until("info depth 1");
    s.send("isready");
    s.until("readyok");
    let t = Instant::now();
    s.send("stop");
    let best = s.until("bestmove ");
    assert!(t.elapsed() < Duration::from_secs(2));
    let m = Move::from_uci(best.strip_prefix("bestmove ").unwrap()).unwrap();
    assert!(Position::startpos().is_legal(m));
}

#[test]
fn commands_sent_during_a_search_are_applied_afterwards() {
    let mut s = Live::start();
    s.send("uci");
    s.until("uciok");
    s.send("go infinite");
    s.until("info depth 1");
    s.send("position startpos moves g1f3");
    s.send("stop");
    s.until("bestmove");
    s.send("go depth 1");
    let best = s.until("bestmove ");
    let p = Position::startpos().apply_move(Move::from_uci("g1f3").unwrap()).unwrap();
    assert!(p.is_legal(Move::from_uci(best.strip_prefix("bestmove ").unwrap()).unwrap()));
}

#[test]
fn clock_based_go_reply_is_legal_and_prompt() {
    let out = run_binary("uci\nposition startpos moves e2e4 e7e5\ngo wtime 3000 btime 3000 winc 0 binc 0\n");
    let best = out.lines().find_map(|l| l.strip_prefix("bestmove ")).unwrap();
    let p = Position::startpos()
        .apply_move(Move::from_uci("e2e4").unwrap())
        .unwrap()
        .apply_move(Move::from_uci("e7e5").unwrap())
        .unwrap();
    assert!(p.is_legal(Move::from_uci(best).unwrap()));
}

#[test]
fn garbage_never_kills_the_binary() {
    let mut script = String::from("uci\n");
    for junk in ["", "   ", "go depth", "position fen", "position fen 8/8 w", "setoption", "setoption name Width value 999", "\u{7}\u{0}", "go movetime -5", "position startpos moves zz99"] {
        script.push_str(junk);
        script.push('\n');
    }
    script.push_str("isready\nquit\n");
    let out = run_binary(&script);
    assert_eq!(out.lines().last(), Some("readyok"));
}
