use alloc::vec;
use alloc::vec::Vec;

use super::{AdvantageModel, Evaluator, ScoreMode};
use crate::chess::{clock_key, static_status, Color, GameStatus, Move, Position};
use crate::encoder::EncodeError;
use crate::tokenizer::{tokenize_position, TokenSeq, TokenizeError};

#[derive(Debug, Clone, PartialEq)]
pub struct SearchConfig {
    /// Plies searched below the root, `S ≥ 1`.
    pub depth: usize,
    /// Children kept per node, `W ≥ 1`.
    pub width: usize,
    pub mode: ScoreMode,
    /// Transposition-table slots; 0 disables the table.
    pub tt_capacity: usize,
    /// Mate values sit at `±(1 + mate_margin)`, beyond any embedding score.
    pub mate_margin: f64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            depth: 3,
            width: 3,
            mode: ScoreMode::Anchored,
            tt_capacity: 1 << 16,
            mate_margin: 1.0,
        }
    }
}

impl SearchConfig {
    /// `Σ_{i=0..S} W^i`, the size of a full top-W tree of depth S.
    pub fn node_bound(&self) -> usize {
        (0..=self.depth).map(|i| self.width.pow(i as u32)).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchReport {
    pub best_move: Move,
    /// Backed-up value of the root, White-positive.
    pub root_score: f64,
    /// Tree nodes: the root plus every retained child.
    pub nodes_encoded: usize,
    /// Encoder invocations, i.e. scored children that missed the table.
    pub evaluations: usize,
    pub tt_hits: usize,
    pub principal_variation: Vec<Move>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SearchError {
    #[error("root position is already decided ({})", .0.as_str())]
    TerminalRoot(GameStatus),
    #[error("depth and width must both be at least 1")]
    InvalidConfig,
    #[error("encoder emits {found}-dimensional embeddings, advantage model expects {expected}")]
    Dimension { expected: usize, found: usize },
    #[error(transparent)]
    Encode(#[from] EncodeError),
    #[error(transparent)]
    Tokenize(#[from] TokenizeError),
    #[error("search stopped")]
    Stopped,
}

/// Always-replace cache of child scores keyed by Zobrist hash mixed with the
/// clocks (the tokenizer sees the clocks, so positions differing only in
/// clocks embed differently).
#[derive(Debug, Clone)]
pub struct TranspositionTable {
    slots: Vec<Option<(u64, f64)>>,
}

impl TranspositionTable {
    pub fn new(capacity: usize) -> Self {
        TranspositionTable {
            slots: vec![None; capacity],
        }
    }

    pub fn key(p: &Position) -> u64 {
        p.zobrist() ^ clock_key(p.halfmove_clock(), p.fullmove_number())
    }

    pub fn get(&self, key: u64) -> Option<f64> {
        if self.slots.is_empty() {
            return None;
        }
        match self.slots[(key % self.slots.len() as u64) as usize] {
            Some((k, v)) if k == key => Some(v),
            _ => None,
        }
    }

    pub fn insert(&mut self, key: u64, score: f64) {
        if !self.slots.is_empty() {
            let n = self.slots.len() as u64;
            self.slots[(key % n) as usize] = Some((key, score));
        }
    }
}

struct Search<'a, E: ?Sized> {
    cfg: &'a SearchConfig,
    model: &'a AdvantageModel,
    eval: &'a E,
    stop: &'a mut dyn FnMut() -> bool,
    tt: TranspositionTable,
    nodes: usize,
    evaluations: usize,
    tt_hits: usize,
}

/// Value of a decided position on the White-positive scale of `mode`.
pub fn terminal_value(status: GameStatus, model: &AdvantageModel, cfg: &SearchConfig) -> f64 {
    let shift = model.shift(cfg.mode);
    match status.winner() {
        Some(Color::White) => 1.0 + cfg.mate_margin + shift,
        Some(Color::Black) => -(1.0 + cfg.mate_margin) + shift,
        None => shift,
    }
}

impl<E: Evaluator + ?Sized> Search<'_, E> {
    /// Backed-up value of a non-terminal `pos` searched `depth ≥ 1` plies,
    /// with the line that realizes it.
    fn expand(&mut self, pos: &Position, depth: usize) -> Result<(f64, Vec<Move>), SearchError> {
        if (self.stop)() {
            return Err(SearchError::Stopped);
        }
        let children = pos.legal_children();
        let mut score = vec![0.0; children.len()];
        let mut terminal = vec![false; children.len()];
        let mut pending: Vec<(usize, u64, TokenSeq)> = Vec::new();
        for (i, (_, child)) in children.iter().enumerate() {
            let status = static_status(child);
            if status.is_terminal() {
                terminal[i] = true;
                score[i] = terminal_value(status, self.model, self.cfg);
                continue;
            }
            let key = TranspositionTable::key(child);
            match self.tt.get(key) {
                Some(s) => {
                    self.tt_hits += 1;
                    score[i] = s;
                }
                None => pending.push((i, key, tokenize_position(child)?)),
            }
        }
        if !pending.is_empty() {
            let seqs: Vec<TokenSeq> = pending.iter().map(|(_, _, t)| *t).collect();
            let z = self.eval.embed_batch(&seqs)?;
            self.evaluations += z.len();
            for ((i, key, _), zi) in pending.iter().zip(&z) {
                if zi.len() != self.model.dim() {
                    return Err(SearchError::Dimension {
                        expected: self.model.dim(),
                        found: zi.len(),
                    });
                }
                let s = self.model.score_with(zi, self.cfg.mode);
                score[*i] = s;
                self.tt.insert(*key, s);
            }
        }

        let white = pos.side_to_move() == Color::White;
        let mut kept: Vec<usize> = (0..children.len()).collect();
        // stable: equal scores stay in move order
        if white {
            kept.sort_by(|&a, &b| score[b].total_cmp(&score[a]));
        } else {
            kept.sort_by(|&a, &b| score[a].total_cmp(&score[b]));
        }
        kept.truncate(self.cfg.width);
        kept.sort_unstable();
        self.nodes += kept.len();

        let mut best: Option<(f64, Vec<Move>)> = None;
        for i in kept {
            let (m, child) = &children[i];
            let (v, mut line) = if depth == 1 || terminal[i] {
                (score[i], Vec::new())
            } else {
                self.expand(child, depth - 1)?
            };
            let better = match &best {
                None => true,
                Some((bv, _)) => {
                    if white {
                        v > *bv
                    } else {
                        v < *bv
                    }
                }
            };
            if better {
                line.insert(0, *m);
                best = Some((v, line));
            }
        }
        Ok(best.expect("non-terminal position has a legal move"))
    }
}

/// Top-W, depth-S min-max over embedding scores. White maximizes.
///
/// `stop` is polled before each node expansion; returning `true` aborts with
/// [`SearchError::Stopped`].
pub fn select_move<E: Evaluator + ?Sized>(
    root: &Position,
    cfg: &SearchConfig,
    model: &AdvantageModel,
    eval: &E,
    stop: &mut dyn FnMut() -> bool,
) -> Result<SearchReport, SearchError> {
    if cfg.depth == 0 || cfg.width == 0 {
        return Err(SearchError::InvalidConfig);
    }
    if eval.embed_dim() != model.dim() {
        return Err(SearchError::Dimension {
            expected: model.dim(),
            found: eval.embed_dim(),
        });
    }
    let status = static_status(root);
    if status.is_terminal() {
        return Err(SearchError::TerminalRoot(status));
    }
    let mut s = Search {
        cfg,
        model,
        eval,
        stop,
        tt: TranspositionTable::new(cfg.tt_capacity),
        nodes: 1,
        evaluations: 0,
        tt_hits: 0,
    };
    let (root_score, pv) = s.expand(root, cfg.depth)?;
    Ok(SearchReport {
        best_move: pv[0],
        root_score,
        nodes_encoded: s.nodes,
        evaluations: s.evaluations,
        tt_hits: s.tt_hits,
        principal_variation: pv,
    })
}
