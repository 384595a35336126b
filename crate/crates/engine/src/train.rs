//! Training runs: config file, loop with checkpoints and a `step,loss` log,
//! and advantage fitting on the extremes of the training data.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use latent_chess_core::encoder::{ConfigError, EncodeError, EncoderConfig, EncoderParams};
use latent_chess_core::planner::{
    fit_advantage, AdvantageError, AdvantageModel, Evaluator, FitReport, ScoreMode, EXTREME_BAND,
};
use latent_chess_core::tokenizer::{tokenize, TokenizeError};
use latent_chess_core::training::{LabeledPosition, StepReport, TrainConfig, TrainError, Trainer, TrainingSet};
use serde::Deserialize;

use crate::model::{Model, ModelError, ParallelEncoder};

pub const LOSS_LOG: &str = "loss.csv";

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Config { path: PathBuf, source: toml::de::Error },
    #[error("unknown advantage mode '{0}'")]
    Mode(String),
    #[error(transparent)]
    Encoder(#[from] ConfigError),
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error(transparent)]
    Tokenize(#[from] TokenizeError),
    #[error(transparent)]
    Encode(#[from] EncodeError),
    #[error("fitting the advantage model: {0}")]
    Advantage(#[from] AdvantageError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// The training config file. Every field is optional.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunFile {
    pub encoder: EncoderSection,
    pub train: TrainSection,
    pub advantage: AdvantageSection,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EncoderSection {
    pub layers: usize,
    pub embed_dim: usize,
    pub heads: usize,
    pub mlp_size: usize,
    pub dropout: f64,
    pub seed: u64,
}

impl Default for EncoderSection {
    fn default() -> Self {
        let m = EncoderConfig::MINI;
        EncoderSection {
            layers: m.layers,
            embed_dim: m.embed_dim,
            heads: m.heads,
            mlp_size: m.mlp_size,
            dropout: m.dropout,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    pub tau: f64,
    pub delta: f64,
    pub positives_per_anchor: usize,
    pub lr: f64,
    pub momentum: f64,
    pub batch_size: usize,
    pub steps: usize,
    pub seed: u64,
    /// Write `step_NNNNNN.ckpt` every this many steps; 0 disables.
    pub checkpoint_every: usize,
}

impl Default for TrainSection {
    fn default() -> Self {
        let t = TrainConfig::default();
        TrainSection {
            tau: t.tau,
            delta: t.delta,
            positives_per_anchor: t.positives_per_anchor,
            lr: t.lr,
            momentum: t.momentum,
            batch_size: t.batch_size,
            steps: t.steps,
            seed: t.seed,
            checkpoint_every: 0,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdvantageSection {
    pub mode: String,
}

impl Default for AdvantageSection {
    fn default() -> Self {
        AdvantageSection {
            mode: ScoreMode::Anchored.as_str().into(),
        }
    }
}

impl RunFile {
    pub fn load(path: &Path) -> Result<RunFile, RunError> {
        let text = fs::read_to_string(path).map_err(|source| RunError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        toml::from_str(&text).map_err(|source| RunError::Config {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn encoder_config(&self) -> EncoderConfig {
        let e = &self.encoder;
        EncoderConfig::new(e.layers, e.embed_dim, e.heads, e.mlp_size).with_dropout(e.dropout)
    }

    pub fn train_config(&self) -> TrainConfig {
        let t = &self.train;
        TrainConfig {
            tau: t.tau,
            delta: t.delta,
            positives_per_anchor: t.positives_per_anchor,
            lr: t.lr,
            momentum: t.momentum,
            batch_size: t.batch_size,
            steps: t.steps,
            seed: t.seed,
        }
    }

    pub fn mode(&self) -> Result<ScoreMode, RunError> {
        ScoreMode::parse(&self.advantage.mode).ok_or_else(|| RunError::Mode(self.advantage.mode.clone()))
    }
}

pub struct RunSummary {
    pub model: Model,
    pub losses: Vec<f64>,
    pub fit: FitReport,
    pub skipped_anchors: usize,
}

/// Trains, writing `loss.csv`, periodic checkpoints and the final model
/// (`encoder.ckpt`, `advantage.txt`) into `out_dir`. `progress` sees every step.
pub fn run_training(
    data: &[LabeledPosition],
    run: &RunFile,
    out_dir: &Path,
    mut progress: impl FnMut(&StepReport),
) -> Result<RunSummary, RunError> {
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| RunError::Io { path, source }
    };
    fs::create_dir_all(out_dir).map_err(io(out_dir))?;
    let mode = run.mode()?;
    let cfg = run.train_config();
    let set = TrainingSet::new(data)?;
    let params = EncoderParams::init(run.encoder_config(), run.encoder.seed)?;
    let mut trainer = Trainer::new(&set, params, cfg.clone())?;

    let log_path = out_dir.join(LOSS_LOG);
    let mut log = std::io::BufWriter::new(fs::File::create(&log_path).map_err(io(&log_path))?);
    writeln!(log, "step,loss").map_err(io(&log_path))?;
    let mut losses = Vec::with_capacity(cfg.steps);
    let mut skipped_anchors = 0;
    for _ in 0..cfg.steps {
        let r = trainer.step()?;
        writeln!(log, "{},{}", r.step, r.loss).map_err(io(&log_path))?;
        losses.push(r.loss);
        skipped_anchors += r.skipped_anchors;
        progress(&r);
        let every = run.train.checkpoint_every;
        if every > 0 && r.step % every == 0 {
            let path = out_dir.join(format!("step_{:06}.ckpt", r.step));
            fs::write(&path, trainer.params().to_bytes()).map_err(io(&path))?;
        }
    }
    log.flush().map_err(io(&log_path))?;

    let encoder = trainer.into_params();
    let (advantage, fit) = fit_extremes(&encoder, data, mode)?;
    let model = Model::new(encoder, advantage)?;
    model.save(out_dir)?;
    Ok(RunSummary {
        model,
        losses,
        fit,
        skipped_anchors,
    })
}

/// Fits the advantage model, encoding only positions inside the widest
/// band [`fit_advantage`] may fall back to.
pub fn fit_extremes(
    encoder: &EncoderParams,
    data: &[LabeledPosition],
    mode: ScoreMode,
) -> Result<(AdvantageModel, FitReport), RunError> {
    let extremes: Vec<&LabeledPosition> = data
        .iter()
        .filter(|l| l.win_prob_white >= 1.0 - EXTREME_BAND || l.win_prob_white <= EXTREME_BAND)
        .collect();
    let seqs = extremes
        .iter()
        .map(|l| tokenize(&l.fen))
        .collect::<Result<Vec<_>, _>>()?;
    let z = ParallelEncoder(encoder).embed_batch(&seqs)?;
    let probs: Vec<f64> = extremes.iter().map(|l| l.win_prob_white).collect();
    Ok(fit_advantage(&z, &probs, mode)?)
}
