//! Advantage direction and embedding-guided move selection.

mod search;

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt::Write;

use crate::encoder::{EncodeError, EncoderParams, Embedding};
use crate::math::{dot, norm};
use crate::tokenizer::TokenSeq;

pub use search::{select_move, terminal_value, SearchConfig, SearchError, SearchReport, TranspositionTable};

/// How a child embedding is turned into a White-perspective score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum ScoreMode {
    /// `⟨z, â⟩`
    Unanchored,
    /// `cos(z − μ_black, â)`; zero when `z == μ_black`.
    #[default]
    Anchored,
    /// `⟨z − μ_black, â⟩`, a constant shift of the unanchored score.
    AnchoredRaw,
}

impl ScoreMode {
    pub fn as_str(self) -> &'static str {
        match self {
            ScoreMode::Unanchored => "unanchored",
            ScoreMode::Anchored => "anchored",
            ScoreMode::AnchoredRaw => "anchored-raw",
        }
    }

    pub fn parse(s: &str) -> Option<ScoreMode> {
        Some(match s.to_ascii_lowercase().as_str() {
            "unanchored" => ScoreMode::Unanchored,
            "anchored" | "anchored-cosine" => ScoreMode::Anchored,
            "anchored-raw" | "raw" => ScoreMode::AnchoredRaw,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AdvantageError {
    #[error("no White-winning samples to average")]
    NoWhiteSamples,
    #[error("no Black-winning samples to average")]
    NoBlackSamples,
    #[error("class means coincide; the advantage direction is undefined")]
    ZeroDirection,
    #[error("{embeddings} embeddings but {probs} labels")]
    LengthMismatch { embeddings: usize, probs: usize },
    #[error("embedding dimension {found} differs from {expected}")]
    Dimension { expected: usize, found: usize },
    #[error("advantage file line {line}: {reason}")]
    Parse { line: usize, reason: &'static str },
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdvantageModel {
    mu_white: Vec<f64>,
    mu_black: Vec<f64>,
    a_hat: Vec<f64>,
    /// `⟨μ_black, â⟩`
    black_offset: f64,
    pub mode: ScoreMode,
}

/// Exact-extreme class sizes below this fall back to the ε band.
pub const MIN_EXTREME_SAMPLES: usize = 100;
pub const EXTREME_BAND: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FitReport {
    pub white_samples: usize,
    pub black_samples: usize,
    /// True when the `p ≥ 1−ε` / `p ≤ ε` band was used.
    pub widened: bool,
}

impl AdvantageModel {
    pub fn new(mu_white: Vec<f64>, mu_black: Vec<f64>, mode: ScoreMode) -> Result<Self, AdvantageError> {
        if mu_white.len() != mu_black.len() {
            return Err(AdvantageError::Dimension {
                expected: mu_white.len(),
                found: mu_black.len(),
            });
        }
        let diff: Vec<f64> = mu_white.iter().zip(&mu_black).map(|(w, b)| w - b).collect();
        let n = norm(&diff);
        if !(n > 0.0) {
            return Err(AdvantageError::ZeroDirection);
        }
        let a_hat: Vec<f64> = diff.iter().map(|v| v / n).collect();
        let black_offset = dot(&mu_black, &a_hat);
        Ok(AdvantageModel {
            mu_white,
            mu_black,
            a_hat,
            black_offset,
            mode,
        })
    }

    pub fn dim(&self) -> usize {
        self.a_hat.len()
    }

    pub fn mu_white(&self) -> &[f64] {
        &self.mu_white
    }

    pub fn mu_black(&self) -> &[f64] {
        &self.mu_black
    }

    pub fn direction(&self) -> &[f64] {
        &self.a_hat
    }

    pub fn with_mode(mut self, mode: ScoreMode) -> Self {
        self.mode = mode;
        self
    }

    /// Score of `z` under this model's own mode.
    pub fn score(&self, z: &[f64]) -> f64 {
        self.score_with(z, self.mode)
    }

    pub fn score_with(&self, z: &[f64], mode: ScoreMode) -> f64 {
        match mode {
            ScoreMode::Unanchored => dot(z, &self.a_hat),
            ScoreMode::AnchoredRaw => dot(z, &self.a_hat) - self.black_offset,
            ScoreMode::Anchored => {
                let mut num = 0.0;
                let mut sq = 0.0;
                for ((zi, bi), ai) in z.iter().zip(&self.mu_black).zip(&self.a_hat) {
                    let s = zi - bi;
                    num += s * ai;
                    sq += s * s;
                }
                if sq == 0.0 {
                    0.0
                } else {
                    num / libm::sqrt(sq)
                }
            }
        }
    }

    /// Additive offset between `mode` and unanchored scores; the neutral
    /// (draw) value and the mate values are placed relative to it.
    pub fn shift(&self, mode: ScoreMode) -> f64 {
        match mode {
            ScoreMode::AnchoredRaw => -self.black_offset,
            ScoreMode::Unanchored | ScoreMode::Anchored => 0.0,
        }
    }

    /// Text form: a header line `dim <D> mode <mode>`, then `mu_white` and
    /// `mu_black` lines of space-separated values.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "dim {} mode {}", self.dim(), self.mode.as_str());
        for (name, v) in [("mu_white", &self.mu_white), ("mu_black", &self.mu_black)] {
            s.push_str(name);
            for x in v.iter() {
                let _ = write!(s, " {x:e}");
            }
            s.push('\n');
        }
        s
    }

    pub fn parse(text: &str) -> Result<AdvantageModel, AdvantageError> {
        let err = |line, reason| AdvantageError::Parse { line, reason };
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines.next().ok_or(err(1, "empty file"))?;
        let h: Vec<&str> = header.split_whitespace().collect();
        if h.len() != 4 || h[0] != "dim" || h[2] != "mode" {
            return Err(err(1, "expected 'dim <D> mode <mode>'"));
        }
        let dim: usize = h[1].parse().map_err(|_| err(1, "bad dimension"))?;
        let mode = ScoreMode::parse(h[3]).ok_or(err(1, "unknown mode"))?;
        let mut read = |name: &'static str| -> Result<Vec<f64>, AdvantageError> {
            let (i, l) = lines.next().ok_or(err(0, "missing vector line"))?;
            let mut parts = l.split_whitespace();
            if parts.next() != Some(name) {
                return Err(err(i + 1, "unexpected vector name"));
            }
            let v: Result<Vec<f64>, _> = parts.map(str::parse).collect();
            let v = v.map_err(|_| err(i + 1, "bad number"))?;
            if v.len() != dim || v.iter().any(|x| !x.is_finite()) {
                return Err(err(i + 1, "wrong length or non-finite value"));
            }
            Ok(v)
        };
        let mu_white = read("mu_white")?;
        let mu_black = read("mu_black")?;
        AdvantageModel::new(mu_white, mu_black, mode)
    }
}

fn mean(rows: &[&[f64]], dim: usize) -> Vec<f64> {
    let mut m = vec![0.0; dim];
    for r in rows {
        for (a, b) in m.iter_mut().zip(r.iter()) {
            *a += b;
        }
    }
    let inv = 1.0 / rows.len() as f64;
    m.iter_mut().for_each(|v| *v *= inv);
    m
}

/// Class means of the exact extremes `p == 1` and `p == 0`. If either exact
/// class has fewer than [`MIN_EXTREME_SAMPLES`], both widen to
/// `p ≥ 1 − ε` / `p ≤ ε` with `ε =` [`EXTREME_BAND`].
pub fn fit_advantage(
    embeddings: &[Embedding],
    probs: &[f64],
    mode: ScoreMode,
) -> Result<(AdvantageModel, FitReport), AdvantageError> {
    if embeddings.len() != probs.len() {
        return Err(AdvantageError::LengthMismatch {
            embeddings: embeddings.len(),
            probs: probs.len(),
        });
    }
    let dim = embeddings.first().map_or(0, Vec::len);
    if let Some(bad) = embeddings.iter().find(|z| z.len() != dim) {
        return Err(AdvantageError::Dimension {
            expected: dim,
            found: bad.len(),
        });
    }
    let pick = |pred: &dyn Fn(f64) -> bool| -> Vec<&[f64]> {
        embeddings
            .iter()
            .zip(probs)
            .filter(|(_, &p)| pred(p))
            .map(|(z, _)| z.as_slice())
            .collect()
    };
    let mut white = pick(&|p| p == 1.0);
    let mut black = pick(&|p| p == 0.0);
    let widened = white.len() < MIN_EXTREME_SAMPLES || black.len() < MIN_EXTREME_SAMPLES;
    if widened {
        white = pick(&|p| p >= 1.0 - EXTREME_BAND);
        black = pick(&|p| p <= EXTREME_BAND);
    }
    if white.is_empty() {
        return Err(AdvantageError::NoWhiteSamples);
    }
    if black.is_empty() {
        return Err(AdvantageError::NoBlackSamples);
    }
    let report = FitReport {
        white_samples: white.len(),
        black_samples: black.len(),
        widened,
    };
    let model = AdvantageModel::new(mean(&white, dim), mean(&black, dim), mode)?;
    Ok((model, report))
}

/// Batch embedding of positions; implementations may parallelize.
pub trait Evaluator {
    fn embed_dim(&self) -> usize;
    fn embed_batch(&self, seqs: &[TokenSeq]) -> Result<Vec<Embedding>, EncodeError>;
}

impl Evaluator for EncoderParams {
    fn embed_dim(&self) -> usize {
        self.config().embed_dim
    }

    fn embed_batch(&self, seqs: &[TokenSeq]) -> Result<Vec<Embedding>, EncodeError> {
        self.encode(seqs)
    }
}

impl<E: Evaluator + ?Sized> Evaluator for &E {
    fn embed_dim(&self) -> usize {
        (**self).embed_dim()
    }

    fn embed_batch(&self, seqs: &[TokenSeq]) -> Result<Vec<Embedding>, EncodeError> {
        (**self).embed_batch(seqs)
    }
}
