//! Model directories: an encoder checkpoint plus the advantage model fitted
//! to it, and the parallel evaluator used by search.

use std::fs;
use std::path::{Path, PathBuf};

use latent_chess_core::chess::Position;
use latent_chess_core::encoder::{CheckpointError, EncodeError, Embedding, EncoderConfig, EncoderParams};
use latent_chess_core::planner::{AdvantageError, AdvantageModel, Evaluator, ScoreMode};
use latent_chess_core::tokenizer::{tokenize_position, TokenSeq};
use rayon::prelude::*;

pub const ENCODER_FILE: &str = "encoder.ckpt";
pub const ADVANTAGE_FILE: &str = "advantage.txt";

/// Sequences per rayon task; small batches are encoded inline.
const CHUNK: usize = 8;

#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Checkpoint { path: PathBuf, source: CheckpointError },
    #[error("{path}: {source}")]
    Advantage { path: PathBuf, source: AdvantageError },
    #[error("encoder embeds into {encoder} dimensions but the advantage model has {advantage}")]
    Dimension { encoder: usize, advantage: usize },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ModelError + '_ {
    move |source| ModelError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Encoder plus advantage model; the pair a search needs.
#[derive(Debug, Clone)]
pub struct Model {
    pub encoder: EncoderParams,
    pub advantage: AdvantageModel,
}

impl Model {
    pub fn new(encoder: EncoderParams, advantage: AdvantageModel) -> Result<Model, ModelError> {
        if encoder.embed_dim() != advantage.dim() {
            return Err(ModelError::Dimension {
                encoder: encoder.embed_dim(),
                advantage: advantage.dim(),
            });
        }
        Ok(Model { encoder, advantage })
    }

    pub fn load(dir: &Path) -> Result<Model, ModelError> {
        let ckpt = dir.join(ENCODER_FILE);
        let bytes = fs::read(&ckpt).map_err(io_err(&ckpt))?;
        let encoder = EncoderParams::from_bytes(&bytes).map_err(|source| ModelError::Checkpoint { path: ckpt, source })?;
        let adv = dir.join(ADVANTAGE_FILE);
        let text = fs::read_to_string(&adv).map_err(io_err(&adv))?;
        let advantage = AdvantageModel::parse(&text).map_err(|source| ModelError::Advantage { path: adv, source })?;
        Model::new(encoder, advantage)
    }

    pub fn save(&self, dir: &Path) -> Result<(), ModelError> {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
        let ckpt = dir.join(ENCODER_FILE);
        fs::write(&ckpt, self.encoder.to_bytes()).map_err(io_err(&ckpt))?;
        let adv = dir.join(ADVANTAGE_FILE);
        fs::write(&adv, self.advantage.to_text()).map_err(io_err(&adv))
    }

    /// Small untrained encoder whose advantage direction points from
    /// Black-heavy to White-heavy material. Cheap enough for 50 ms moves.
    pub fn untrained(mode: ScoreMode) -> Model {
        const WHITE_UP: [&str; 3] = [
            "4k3/8/8/8/8/8/PPPPPPPP/RNBQKBNR w KQ - 0 1",
            "3qk3/8/8/8/8/8/8/QQQQK3 w - - 0 1",
            "rnb1kbnr/pppppppp/8/8/8/8/PPPPPPPP/RNBQKBNR w KQkq - 0 1",
        ];
        const BLACK_UP: [&str; 3] = [
            "rnbqkbnr/pppppppp/8/8/8/8/8/4K3 b kq - 0 1",
            "qqqqk3/8/8/8/8/8/8/3QK3 b - - 0 1",
            "rnbqkbnr/pppppppp/8/8/8/8/PPPPPPPP/RNB1KBNR b KQkq - 0 1",
        ];
        let encoder = EncoderParams::init(EncoderConfig::new(1, 16, 2, 32).with_dropout(0.0), 0x5eed)
            .expect("built-in config is valid");
        let mean = |fens: &[&str]| -> Vec<f64> {
            let seqs: Vec<TokenSeq> = fens
                .iter()
                .map(|f| tokenize_position(&Position::from_fen(f).expect("built-in FEN")).expect("built-in FEN"))
                .collect();
            let z = encoder.encode(&seqs).expect("tokens are in range");
            let d = encoder.embed_dim();
            (0..d).map(|k| z.iter().map(|v| v[k]).sum::<f64>() / z.len() as f64).collect()
        };
        let advantage = AdvantageModel::new(mean(&WHITE_UP), mean(&BLACK_UP), mode).expect("anchor sets differ");
        Model { encoder, advantage }
    }

    pub fn evaluator(&self) -> ParallelEncoder<'_> {
        ParallelEncoder(&self.encoder)
    }
}

/// Encodes a batch of sequences across the rayon pool.
#[derive(Debug, Clone, Copy)]
pub struct ParallelEncoder<'a>(pub &'a EncoderParams);

impl Evaluator for ParallelEncoder<'_> {
    fn embed_dim(&self) -> usize {
        self.0.embed_dim()
    }

    fn embed_batch(&self, seqs: &[TokenSeq]) -> Result<Vec<Embedding>, EncodeError> {
        if seqs.len() <= CHUNK || rayon::current_num_threads() == 1 {
            return self.0.encode(seqs);
        }
        let parts: Result<Vec<Vec<Embedding>>, EncodeError> = seqs.par_chunks(CHUNK).map(|c| self.0.encode(c)).collect();
        Ok(parts?.into_iter().flatten().collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn save_and_load_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let m = Model::untrained(ScoreMode::Anchored);
        m.save(dir.path()).unwrap();
        let back = Model::load(dir.path()).unwrap();
        assert_eq!(back.encoder.as_slice(), m.encoder.as_slice());
        assert_eq!(back.advantage, m.advantage);
        assert!(matches!(Model::load(&dir.path().join("missing")), Err(ModelError::Io { .. })));
    }

    #[test]
    fn parallel_and_serial_encodings_agree() {
        let m = Model::untrained(ScoreMode::Anchored);
        let p = Position::startpos();
        let seqs: Vec<TokenSeq> = p.legal_children().iter().map(|(_, c)| tokenize_position(c).unwrap()).collect();
        assert_eq!(m.evaluator().embed_batch(&seqs).unwrap(), m.encoder.encode(&seqs).unwrap());
    }
}
