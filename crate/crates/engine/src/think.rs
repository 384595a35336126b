//! Anytime move selection shared by the UCI server and the match harness.

use std::time::{Duration, Instant};

use latent_chess_core::chess::Position;
use latent_chess_core::planner::{select_move, ScoreMode, SearchConfig, SearchError, SearchReport};

use crate::model::Model;

/// Safety margin kept back from a movetime budget for move output.
pub const MOVETIME_MARGIN: Duration = Duration::from_millis(5);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Limit {
    /// One search at exactly this depth.
    Depth(usize),
    /// Depths 1, 2, … up to the maximum until the budget runs out.
    MoveTime(Duration),
    /// Depths 1, 2, … up to the maximum until stopped.
    Infinite,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThinkParams {
    pub width: usize,
    pub mode: ScoreMode,
    /// Ceiling for iterative deepening.
    pub max_depth: usize,
    pub tt_capacity: usize,
}

impl Default for ThinkParams {
    fn default() -> Self {
        let s = SearchConfig::default();
        ThinkParams {
            width: s.width,
            mode: s.mode,
            max_depth: 5,
            tt_capacity: s.tt_capacity,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Thought {
    pub report: SearchReport,
    /// Depth of the search that produced `report`.
    pub depth: usize,
    /// Tree nodes summed over every completed iteration.
    pub total_nodes: usize,
}

/// Searches `pos` under `limit`. Depth 1 always completes, so a move is
/// returned for every non-terminal position; deeper iterations are abandoned
/// when the deadline passes or `stop` returns true. `on_depth` sees each
/// completed iteration.
pub fn think(
    model: &Model,
    pos: &Position,
    params: &ThinkParams,
    limit: Limit,
    stop: &mut dyn FnMut() -> bool,
    on_depth: &mut dyn FnMut(usize, &SearchReport),
) -> Result<Thought, SearchError> {
    let start = Instant::now();
    let cfg = |depth: usize| SearchConfig {
        depth,
        width: params.width,
        mode: params.mode,
        tt_capacity: params.tt_capacity,
        ..SearchConfig::default()
    };
    let eval = model.evaluator();
    let (first, last, deadline) = match limit {
        Limit::Depth(d) => (d.max(1), d.max(1), None),
        Limit::MoveTime(t) => (1, params.max_depth.max(1), Some(start + t.saturating_sub(MOVETIME_MARGIN))),
        Limit::Infinite => (1, params.max_depth.max(1), None),
    };
    // a stopped fixed-depth search falls back to depth 1, which never polls
    let (report, first) = if first == 1 {
        (select_move(pos, &cfg(1), &model.advantage, &eval, &mut || false)?, 1)
    } else {
        match select_move(pos, &cfg(first), &model.advantage, &eval, &mut *stop) {
            Ok(r) => (r, first),
            Err(SearchError::Stopped) => (select_move(pos, &cfg(1), &model.advantage, &eval, &mut || false)?, 1),
            Err(e) => return Err(e),
        }
    };
    on_depth(first, &report);
    let mut best = Thought {
        total_nodes: report.nodes_encoded,
        report,
        depth: first,
    };
    for depth in first + 1..=last {
        let mut halt = || stop() || deadline.is_some_and(|d| Instant::now() >= d);
        if halt() {
            break;
        }
        match select_move(pos, &cfg(depth), &model.advantage, &eval, &mut halt) {
            Ok(report) => {
                on_depth(depth, &report);
                best.total_nodes += report.nodes_encoded;
                best.report = report;
                best.depth = depth;
            }
            Err(SearchError::Stopped) => break,
            Err(e) => return Err(e),
        }
    }
    Ok(best)
}
