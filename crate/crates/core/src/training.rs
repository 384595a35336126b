//! Labelled data, batch sampling and the SGD-with-momentum training step.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::chess::{Color, Position};
use crate::contrastive::{build_mask, supcon_loss, LossError, PositiveMask};
use crate::encoder::{EncodeError, EncoderParams};
use crate::tokenizer::{tokenize_position, TokenSeq, TokenizeError};

/// A position with White's win probability.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledPosition {
    pub fen: String,
    pub win_prob_white: f64,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LineError {
    #[error("expected 'FEN,win_prob'")]
    MissingComma,
    #[error("win probability '{0}' is not a number")]
    NotANumber(String),
    #[error("win probability {0} outside [0, 1]")]
    OutOfRange(f64),
    #[error(transparent)]
    Position(#[from] TokenizeError),
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("line {line}: {error}")]
pub struct DatasetError {
    pub line: usize,
    pub error: LineError,
}

impl LabeledPosition {
    /// `FEN,win_prob` with the probability for the side to move.
    pub fn to_line(&self) -> Result<String, crate::chess::FenError> {
        let pos = Position::from_fen(&self.fen)?;
        let p = match pos.side_to_move() {
            Color::White => self.win_prob_white,
            Color::Black => 1.0 - self.win_prob_white,
        };
        Ok(alloc::format!("{},{}", self.fen, p))
    }
}

/// Parses one `FEN,win_prob` line, where `win_prob` is for the side to move.
pub fn parse_labeled_line(line: &str) -> Result<LabeledPosition, LineError> {
    let (fen, prob) = line.rsplit_once(',').ok_or(LineError::MissingComma)?;
    let prob = prob.trim();
    let p: f64 = prob
        .parse()
        .map_err(|_| LineError::NotANumber(prob.to_string()))?;
    if !(0.0..=1.0).contains(&p) {
        return Err(LineError::OutOfRange(p));
    }
    let pos = Position::from_fen(fen.trim()).map_err(TokenizeError::from)?;
    tokenize_position(&pos)?;
    let win_prob_white = match pos.side_to_move() {
        Color::White => p,
        Color::Black => 1.0 - p,
    };
    Ok(LabeledPosition {
        fen: pos.to_fen(),
        win_prob_white,
    })
}

/// Parses a whole dataset. Blank lines and lines starting with `#` are skipped;
/// line numbers in errors are 1-based.
pub fn parse_dataset(text: &str) -> Result<Vec<LabeledPosition>, DatasetError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        out.push(parse_labeled_line(t).map_err(|error| DatasetError { line: i + 1, error })?);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub tau: f64,
    pub delta: f64,
    pub positives_per_anchor: usize,
    pub lr: f64,
    pub momentum: f64,
    pub batch_size: usize,
    pub steps: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            tau: 0.07,
            delta: 0.05,
            positives_per_anchor: 5,
            lr: 0.05,
            momentum: 0.9,
            batch_size: 128,
            steps: 1000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TrainError {
    #[error("temperature must be positive")]
    Temperature,
    #[error("positive margin must lie in (0, 1)")]
    Delta,
    #[error("batch size must be at least 2")]
    BatchSize,
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("no position in the dataset has a positive within the margin")]
    NoPositives,
    #[error("non-finite loss at step {0}")]
    NonFinite(usize),
    #[error(transparent)]
    Encode(#[from] EncodeError),
    #[error(transparent)]
    Loss(#[from] LossError),
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        if !(self.tau > 0.0) {
            return Err(TrainError::Temperature);
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(TrainError::Delta);
        }
        if self.batch_size < 2 {
            return Err(TrainError::BatchSize);
        }
        Ok(())
    }
}

/// Tokenized dataset ordered by label, so every anchor's candidate
/// positives form one contiguous index range.
#[derive(Debug, Clone)]
pub struct TrainingSet {
    tokens: Vec<TokenSeq>,
    probs: Vec<f64>,
}

impl TrainingSet {
    pub fn new(items: &[LabeledPosition]) -> Result<TrainingSet, TokenizeError> {
        let mut rows = Vec::with_capacity(items.len());
        for it in items {
            let pos = Position::from_fen(&it.fen)?;
            rows.push((it.win_prob_white, tokenize_position(&pos)?));
        }
        rows.sort_by(|a, b| a.0.total_cmp(&b.0));
        let (probs, tokens) = rows.into_iter().unzip();
        Ok(TrainingSet { tokens, probs })
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn tokens(&self) -> &[TokenSeq] {
        &self.tokens
    }

    /// Indices `j ≠ i` with `|p_j − p_i| < δ`, as a half-open range that
    /// contains `i`.
    fn candidate_range(&self, i: usize, delta: f64) -> (usize, usize) {
        let p = self.probs[i];
        let lo = self.probs.partition_point(|&q| q <= p - delta);
        let hi = self.probs.partition_point(|&q| q < p + delta);
        // the binary search works on the sorted order; guard the strict bound exactly
        let lo = (lo..i).find(|&j| (self.probs[j] - p).abs() < delta).unwrap_or(i);
        let hi = (i + 1..hi)
            .rev()
            .find(|&j| (self.probs[j] - p).abs() < delta)
            .map_or(i + 1, |j| j + 1);
        (lo, hi)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    /// Indices into the [`TrainingSet`], distinct.
    pub indices: Vec<usize>,
    pub probs: Vec<f64>,
    pub mask: PositiveMask,
    /// Anchors drawn but dropped for lack of any candidate positive.
    pub skipped_anchors: usize,
}

/// Draws anchors uniformly; for each, samples up to `positives_per_anchor`
/// candidates without replacement from the whole set, and stops at
/// `batch_size` distinct items.
pub fn sample_batch<R: Rng + ?Sized>(
    set: &TrainingSet,
    cfg: &TrainConfig,
    rng: &mut R,
) -> Result<Batch, TrainError> {
    cfg.validate()?;
    if set.is_empty() {
        return Err(TrainError::EmptyDataset);
    }
    let mut indices: Vec<usize> = Vec::with_capacity(cfg.batch_size);
    let mut skipped = 0;
    let mut attempts = 0;
    let max_attempts = 64 * cfg.batch_size + set.len();
    while indices.len() < cfg.batch_size {
        attempts += 1;
        if attempts > max_attempts {
            if indices.len() >= 2 {
                break;
            }
            return Err(TrainError::NoPositives);
        }
        let a = rng.random_range(0..set.len());
        let (lo, hi) = set.candidate_range(a, cfg.delta);
        let n_cand = hi - lo - 1;
        if n_cand == 0 {
            skipped += 1;
            continue;
        }
        let take = n_cand.min(cfg.positives_per_anchor);
        let mut group = Vec::with_capacity(take + 1);
        group.push(a);
        for k in index::sample(rng, n_cand, take) {
            let j = lo + k;
            group.push(if j >= a { j + 1 } else { j });
        }
        for j in group {
            if indices.len() < cfg.batch_size && !indices.contains(&j) {
                indices.push(j);
            }
        }
    }
    let probs: Vec<f64> = indices.iter().map(|&i| set.probs[i]).collect();
    let mask = build_mask(&probs, cfg.delta);
    Ok(Batch {
        indices,
        probs,
        mask,
        skipped_anchors: skipped,
    })
}

/// `v ← m·v + g; w ← w − lr·v`
#[derive(Debug, Clone)]
pub struct SgdMomentum {
    pub lr: f64,
    pub momentum: f64,
    velocity: Vec<f64>,
}

impl SgdMomentum {
    pub fn new(lr: f64, momentum: f64, n: usize) -> Self {
        SgdMomentum {
            lr,
            momentum,
            velocity: alloc::vec![0.0; n],
        }
    }

    pub fn step(&mut self, weights: &mut [f64], grad: &[f64]) {
        for ((w, v), g) in weights.iter_mut().zip(&mut self.velocity).zip(grad) {
            *v = self.momentum * *v + g;
            *w -= self.lr * *v;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepReport {
    pub step: usize,
    /// Loss averaged over contributing anchors.
    pub loss: f64,
    pub batch_len: usize,
    pub skipped_anchors: usize,
}

/// Owns the parameters, optimizer state and sampling RNG of one run.
pub struct Trainer<'d> {
    set: &'d TrainingSet,
    cfg: TrainConfig,
    params: EncoderParams,
    opt: SgdMomentum,
    rng: ChaCha8Rng,
    step: usize,
}

impl<'d> Trainer<'d> {
    pub fn new(set: &'d TrainingSet, params: EncoderParams, cfg: TrainConfig) -> Result<Self, TrainError> {
        cfg.validate()?;
        if set.is_empty() {
            return Err(TrainError::EmptyDataset);
        }
        let opt = SgdMomentum::new(cfg.lr, cfg.momentum, params.len());
        let rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        Ok(Trainer {
            set,
            cfg,
            params,
            opt,
            rng,
            step: 0,
        })
    }

    pub fn params(&self) -> &EncoderParams {
        &self.params
    }

    pub fn into_params(self) -> EncoderParams {
        self.params
    }

    pub fn steps_done(&self) -> usize {
        self.step
    }

    /// One sample → encode → loss → backward → update cycle. The update
    /// follows the per-anchor mean of the loss so the step size does not
    /// scale with the batch.
    pub fn step(&mut self) -> Result<StepReport, TrainError> {
        let batch = sample_batch(self.set, &self.cfg, &mut self.rng)?;
        let seqs: Vec<TokenSeq> = batch.indices.iter().map(|&i| self.set.tokens[i]).collect();
        let dropout_seed = self.cfg.seed ^ (self.step as u64).wrapping_mul(0xD1B5_4A32_D192_ED03);
        let (z, tape) = self.params.encode_train(&seqs, dropout_seed)?;
        let out = supcon_loss(&z, &batch.mask, self.cfg.tau)?;
        let anchors = out.anchors.max(1) as f64;
        let loss = out.loss / anchors;
        if !loss.is_finite() {
            return Err(TrainError::NonFinite(self.step));
        }
        let dz: Vec<Vec<f64>> = out
            .grad
            .into_iter()
            .map(|g| g.into_iter().map(|v| v / anchors).collect())
            .collect();
        let grad = tape.backward(&dz);
        if grad.iter().any(|g| !g.is_finite()) {
            return Err(TrainError::NonFinite(self.step));
        }
        self.opt.step(self.params.as_mut_slice(), &grad);
        self.step += 1;
        Ok(StepReport {
            step: self.step,
            loss,
            batch_len: seqs.len(),
            skipped_anchors: batch.skipped_anchors,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lp(fen: &str, p: f64) -> LabeledPosition {
        LabeledPosition {
            fen: fen.into(),
            win_prob_white: p,
        }
    }

    #[test]
    fn side_to_move_probability_is_flipped_for_black() {
        let w = parse_labeled_line("k7/8/8/8/8/8/8/K7 w - - 0 1,0.8").unwrap();
        assert_eq!(w.win_prob_white, 0.8);
        let b = parse_labeled_line("k7/8/8/8/8/8/8/K7 b - - 0 1,0.8").unwrap();
        assert!((b.win_prob_white - 0.2).abs() < 1e-15);
        assert_eq!(
            parse_labeled_line("k7/8/8/8/8/8/8/K7 w - - 0 1,1.5"),
            Err(LineError::OutOfRange(1.5))
        );
        assert!(matches!(
            parse_labeled_line("k7/8/8/8/8/8/8/K7 w - - 0 1"),
            Err(LineError::MissingComma)
        ));
    }

    #[test]
    fn dataset_errors_carry_line_numbers() {
        let text = "# header\nk7/8/8/8/8/8/8/K7 w - - 0 1,0.5\n\nk7/8/8 w - - 0 1,0.5\n";
        let err = parse_dataset(text).unwrap_err();
        assert_eq!(err.line, 4);
    }

    fn set_with(probs: &[f64]) -> TrainingSet {
        let items: Vec<_> = probs
            .iter()
            .map(|&p| lp("k7/8/8/8/8/8/8/K7 w - - 0 1", p))
            .collect();
        TrainingSet::new(&items).unwrap()
    }

    #[test]
    fn candidate_ranges_respect_the_strict_margin() {
        let s = set_with(&[0.0, 0.1, 0.12, 0.15, 0.5]);
        assert_eq!(s.candidate_range(1, 0.05), (1, 4));
        assert_eq!(s.candidate_range(0, 0.05), (0, 1));
        assert_eq!(s.candidate_range(4, 0.05), (4, 5));
    }

    #[test]
    fn seven_candidates_yield_five_sampled() {
        let mut probs = alloc::vec![0.5; 8];
        probs.push(0.95);
        let s = set_with(&probs);
        let cfg = TrainConfig {
            batch_size: 6,
            ..TrainConfig::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let b = sample_batch(&s, &cfg, &mut rng).unwrap();
        assert_eq!(b.indices.len(), 6);
        let mut sorted = b.indices.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), 6);
        assert!(b.probs.iter().all(|&p| p == 0.5));
    }

    #[test]
    fn few_candidates_are_not_duplicated_and_sampling_is_seeded() {
        let s = set_with(&[0.1, 0.11, 0.12, 0.9]);
        let cfg = TrainConfig {
            batch_size: 8,
            ..TrainConfig::default()
        };
        let b1 = sample_batch(&s, &cfg, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        let b2 = sample_batch(&s, &cfg, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        assert_eq!(b1, b2);
        assert_eq!(b1.indices.len(), 3);
        assert!(!b1.indices.contains(&3));
        assert!(b1.skipped_anchors > 0);
        assert_eq!(
            sample_batch(&set_with(&[0.1, 0.5, 0.9]), &cfg, &mut ChaCha8Rng::seed_from_u64(3)),
            Err(TrainError::NoPositives)
        );
    }

    #[test]
    fn momentum_update_rule() {
        let mut opt = SgdMomentum::new(0.1, 0.9, 1);
        let mut w = [1.0];
        opt.step(&mut w, &[1.0]);
        assert!((w[0] - 0.9).abs() < 1e-15);
        opt.step(&mut w, &[1.0]);
        // v = 0.9 + 1 = 1.9
        assert!((w[0] - (0.9 - 0.19)).abs() < 1e-15);
    }
}
