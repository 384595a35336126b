//! Pre-layer-norm transformer encoder with a hand-written reverse pass.
//!
//! A [`TokenSeq`] is prefixed with the CLS id, embedded with learned token and
//! positional tables, run through `layers` blocks of bidirectional multi-head
//! attention and a GELU MLP, and the CLS row is read out through a final layer
//! norm, a square linear projection and ℓ2 normalization.
//!
//! All parameters live in one flat `Vec<f64>`; [`Layout`] names the tensors.
//! Weight matrices are stored `in × out`, row-major.

mod forward;

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::tokenizer::{TokenSeq, CLS_ID, SEQ_LEN, VOCAB_SIZE};

pub use forward::Tape;

/// Length of the encoder input: CLS followed by the 77 tokens.
pub const INPUT_LEN: usize = SEQ_LEN + 1;

/// Unit-norm output vector.
pub type Embedding = Vec<f64>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EncoderConfig {
    pub layers: usize,
    pub embed_dim: usize,
    pub heads: usize,
    pub mlp_size: usize,
    pub dropout: f64,
    pub vocab_size: usize,
    pub seq_len: usize,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("embed_dim {embed_dim} is not divisible by heads {heads}")]
    HeadsDoNotDivide { embed_dim: usize, heads: usize },
    #[error("{0} must be at least 1")]
    Zero(&'static str),
    #[error("dropout rate {0} outside [0, 1)")]
    Dropout(f64),
    #[error("vocab_size {0} cannot hold the CLS id")]
    Vocab(usize),
    #[error("seq_len must be {INPUT_LEN}, got {0}")]
    SeqLen(usize),
}

impl EncoderConfig {
    /// 6 layers, D=128, 8 heads, MLP 256.
    pub const MINI: EncoderConfig = EncoderConfig::new(6, 128, 8, 256);
    /// 6 layers, D=1024, 16 heads, MLP 1024.
    pub const BASE: EncoderConfig = EncoderConfig::new(6, 1024, 16, 1024);

    /// Tokenizer vocabulary, input length 78 and dropout 0.1.
    pub const fn new(layers: usize, embed_dim: usize, heads: usize, mlp_size: usize) -> Self {
        EncoderConfig {
            layers,
            embed_dim,
            heads,
            mlp_size,
            dropout: 0.1,
            vocab_size: VOCAB_SIZE,
            seq_len: INPUT_LEN,
        }
    }

    pub const fn with_dropout(mut self, dropout: f64) -> Self {
        self.dropout = dropout;
        self
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        for (name, v) in [
            ("layers", self.layers),
            ("embed_dim", self.embed_dim),
            ("heads", self.heads),
            ("mlp_size", self.mlp_size),
        ] {
            if v == 0 {
                return Err(ConfigError::Zero(name));
            }
        }
        if self.embed_dim % self.heads != 0 {
            return Err(ConfigError::HeadsDoNotDivide {
                embed_dim: self.embed_dim,
                heads: self.heads,
            });
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(ConfigError::Dropout(self.dropout));
        }
        if self.vocab_size <= CLS_ID as usize {
            return Err(ConfigError::Vocab(self.vocab_size));
        }
        if self.seq_len != INPUT_LEN {
            return Err(ConfigError::SeqLen(self.seq_len));
        }
        Ok(())
    }

    pub fn head_dim(&self) -> usize {
        self.embed_dim / self.heads
    }

    pub fn param_count(&self) -> usize {
        Layout::new(self).total
    }
}

/// One named tensor inside the flat parameter vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TensorSpec {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    pub offset: usize,
}

impl TensorSpec {
    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Offsets of one block's tensors. Each bias (and each LN β) directly follows
/// its weight (LN γ).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct BlockOffsets {
    pub ln1_g: usize,
    pub ln1_b: usize,
    pub wq: usize,
    pub bq: usize,
    pub wk: usize,
    pub bk: usize,
    pub wv: usize,
    pub bv: usize,
    pub wo: usize,
    pub bo: usize,
    pub ln2_g: usize,
    pub ln2_b: usize,
    pub w1: usize,
    pub b1: usize,
    pub w2: usize,
    pub b2: usize,
}

/// Tensor order: token embedding, positional table, then per block
/// `ln1 γ, ln1 β, Wq, bq, Wk, bk, Wv, bv, Wo, bo, ln2 γ, ln2 β, W1, b1, W2, b2`,
/// then final `ln γ, ln β, Wp, bp`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    pub(crate) tok: usize,
    pub(crate) pos: usize,
    pub(crate) blocks: Vec<BlockOffsets>,
    pub(crate) lnf_g: usize,
    pub(crate) lnf_b: usize,
    pub(crate) proj_w: usize,
    pub(crate) proj_b: usize,
    pub tensors: Vec<TensorSpec>,
    pub total: usize,
}

impl Layout {
    pub fn new(cfg: &EncoderConfig) -> Layout {
        let mut tensors = Vec::new();
        let mut cursor = 0;
        let mut add = |name: String, rows: usize, cols: usize| {
            let offset = cursor;
            cursor += rows * cols;
            tensors.push(TensorSpec {
                name,
                rows,
                cols,
                offset,
            });
            offset
        };
        let (d, m) = (cfg.embed_dim, cfg.mlp_size);
        let tok = add("tok_emb".into(), cfg.vocab_size, d);
        let pos = add("pos_emb".into(), cfg.seq_len, d);
        let mut blocks = Vec::with_capacity(cfg.layers);
        for l in 0..cfg.layers {
            let mut t = |s: &str, r, c| add(format!("block{l}.{s}"), r, c);
            blocks.push(BlockOffsets {
                ln1_g: t("ln1.gamma", 1, d),
                ln1_b: t("ln1.beta", 1, d),
                wq: t("attn.wq", d, d),
                bq: t("attn.bq", 1, d),
                wk: t("attn.wk", d, d),
                bk: t("attn.bk", 1, d),
                wv: t("attn.wv", d, d),
                bv: t("attn.bv", 1, d),
                wo: t("attn.wo", d, d),
                bo: t("attn.bo", 1, d),
                ln2_g: t("ln2.gamma", 1, d),
                ln2_b: t("ln2.beta", 1, d),
                w1: t("mlp.w1", d, m),
                b1: t("mlp.b1", 1, m),
                w2: t("mlp.w2", m, d),
                b2: t("mlp.b2", 1, d),
            });
        }
        let lnf_g = add("final_ln.gamma".into(), 1, d);
        let lnf_b = add("final_ln.beta".into(), 1, d);
        let proj_w = add("proj.w".into(), d, d);
        let proj_b = add("proj.b".into(), 1, d);
        Layout {
            tok,
            pos,
            blocks,
            lnf_g,
            lnf_b,
            proj_w,
            proj_b,
            tensors,
            total: cursor,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EncodeError {
    #[error("token id {id} at slot {slot} is outside the vocabulary of {vocab}")]
    TokenOutOfRange { slot: usize, id: u8, vocab: usize },
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CheckpointError {
    #[error("not an encoder checkpoint (bad magic)")]
    Magic,
    #[error("unsupported checkpoint version {0}")]
    Version(u32),
    #[error("checkpoint truncated")]
    Truncated,
    #[error("{0} trailing bytes after the weights")]
    Trailing(usize),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("shape table disagrees with the config at tensor {0}")]
    Shape(usize),
    #[error("non-finite weight at index {0}")]
    NonFinite(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct EncoderParams {
    config: EncoderConfig,
    layout: Layout,
    data: Vec<f64>,
}

const MAGIC: &[u8; 8] = b"LCENCODR";
const VERSION: u32 = 1;

impl EncoderParams {
    /// Xavier-uniform weight matrices, U(−0.1, 0.1) embeddings, zero biases,
    /// unit LN gains. Deterministic in `seed`.
    pub fn init(config: EncoderConfig, seed: u64) -> Result<EncoderParams, ConfigError> {
        config.validate()?;
        let layout = Layout::new(&config);
        let mut data = vec![0.0; layout.total];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for t in &layout.tensors {
            let slot = &mut data[t.offset..t.offset + t.len()];
            let kind = t.name.rsplit('.').next().unwrap_or("");
            if t.name.ends_with("_emb") {
                slot.iter_mut().for_each(|v| *v = rng.random_range(-0.1..0.1));
            } else if kind == "gamma" {
                slot.fill(1.0);
            } else if t.rows > 1 {
                let a = libm::sqrt(6.0 / (t.rows + t.cols) as f64);
                slot.iter_mut().for_each(|v| *v = rng.random_range(-a..a));
            }
        }
        Ok(EncoderParams {
            config,
            layout,
            data,
        })
    }

    /// Wraps an existing flat weight vector, checking its length.
    pub fn from_vec(config: EncoderConfig, data: Vec<f64>) -> Result<EncoderParams, CheckpointError> {
        config.validate()?;
        let layout = Layout::new(&config);
        if data.len() != layout.total {
            return Err(CheckpointError::Truncated);
        }
        Ok(EncoderParams {
            config,
            layout,
            data,
        })
    }

    pub fn config(&self) -> &EncoderConfig {
        &self.config
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn embed_dim(&self) -> usize {
        self.config.embed_dim
    }

    /// Inference-mode embedding of one sequence (no dropout).
    pub fn embed(&self, seq: &TokenSeq) -> Result<Embedding, EncodeError> {
        let input = self.input(seq)?;
        Ok(forward::forward(self, &input, None).z)
    }

    /// Inference-mode embeddings, in input order.
    pub fn encode(&self, batch: &[TokenSeq]) -> Result<Vec<Embedding>, EncodeError> {
        batch
            .iter()
            .map(|s| {
                let input = self.input(s)?;
                Ok(forward::forward(self, &input, None).z)
            })
            .collect()
    }

    /// Training-mode embeddings with seeded dropout, plus the tape for the
    /// reverse pass. Sequence `i` draws its dropout masks from `(seed, i)`.
    pub fn encode_train(
        &self,
        batch: &[TokenSeq],
        seed: u64,
    ) -> Result<(Vec<Embedding>, Tape<'_>), EncodeError> {
        let mut caches = Vec::with_capacity(batch.len());
        for (i, s) in batch.iter().enumerate() {
            let input = self.input(s)?;
            let rng = ChaCha8Rng::seed_from_u64(
                seed ^ (i as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15),
            );
            caches.push(forward::forward(self, &input, Some(rng)));
        }
        let z = caches.iter().map(|c| c.z.clone()).collect();
        Ok((z, Tape::new(self, caches)))
    }

    fn input(&self, seq: &TokenSeq) -> Result<[u8; INPUT_LEN], EncodeError> {
        let mut input = [CLS_ID; INPUT_LEN];
        for (slot, &id) in seq.0.iter().enumerate() {
            if id as usize >= self.config.vocab_size || id == CLS_ID {
                return Err(EncodeError::TokenOutOfRange {
                    slot,
                    id,
                    vocab: self.config.vocab_size,
                });
            }
            input[slot + 1] = id;
        }
        Ok(input)
    }

    /// Checkpoint image: magic, version, config, shape table, LE f64 weights.
    pub fn to_bytes(&self) -> Vec<u8> {
        let layout = &self.layout;
        let mut out = Vec::with_capacity(64 + layout.tensors.len() * 8 + self.data.len() * 8);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        let c = &self.config;
        for v in [c.layers, c.embed_dim, c.heads, c.mlp_size, c.vocab_size, c.seq_len] {
            out.extend_from_slice(&(v as u32).to_le_bytes());
        }
        out.extend_from_slice(&c.dropout.to_le_bytes());
        out.extend_from_slice(&(layout.tensors.len() as u32).to_le_bytes());
        for t in &layout.tensors {
            out.extend_from_slice(&(t.rows as u32).to_le_bytes());
            out.extend_from_slice(&(t.cols as u32).to_le_bytes());
        }
        for v in &self.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<EncoderParams, CheckpointError> {
        let mut r = Reader(bytes);
        if r.take(8)? != MAGIC {
            return Err(CheckpointError::Magic);
        }
        let version = r.u32()?;
        if version != VERSION {
            return Err(CheckpointError::Version(version));
        }
        let mut dims = [0usize; 6];
        for d in &mut dims {
            *d = r.u32()? as usize;
        }
        let dropout = f64::from_le_bytes(r.take(8)?.try_into().expect("8 bytes"));
        let config = EncoderConfig {
            layers: dims[0],
            embed_dim: dims[1],
            heads: dims[2],
            mlp_size: dims[3],
            vocab_size: dims[4],
            seq_len: dims[5],
            dropout,
        };
        config.validate()?;
        let layout = Layout::new(&config);
        let count = r.u32()? as usize;
        if count != layout.tensors.len() {
            return Err(CheckpointError::Shape(count.min(layout.tensors.len())));
        }
        for (i, t) in layout.tensors.iter().enumerate() {
            let (rows, cols) = (r.u32()? as usize, r.u32()? as usize);
            if (rows, cols) != (t.rows, t.cols) {
                return Err(CheckpointError::Shape(i));
            }
        }
        let mut data = Vec::with_capacity(layout.total);
        for i in 0..layout.total {
            let v = f64::from_le_bytes(r.take(8)?.try_into().expect("8 bytes"));
            if !v.is_finite() {
                return Err(CheckpointError::NonFinite(i));
            }
            data.push(v);
        }
        if !r.0.is_empty() {
            return Err(CheckpointError::Trailing(r.0.len()));
        }
        Ok(EncoderParams {
            config,
            layout,
            data,
        })
    }
}

struct Reader<'a>(&'a [u8]);

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], CheckpointError> {
        if self.0.len() < n {
            return Err(CheckpointError::Truncated);
        }
        let (head, tail) = self.0.split_at(n);
        self.0 = tail;
        Ok(head)
    }

    fn u32(&mut self) -> Result<u32, CheckpointError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }
}
