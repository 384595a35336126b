use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{EncoderParams, INPUT_LEN};
use crate::math::{
    axpy, dot, gelu, gelu_grad, layer_norm, layer_norm_backward, linear, linear_backward,
};

/// Activations of one block. `rows` is the number of query rows carried
/// through the block: all of them, except in the last block where only the
/// CLS row feeds the readout.
struct BlockCache {
    rows: usize,
    xhat1: Vec<f64>,
    rstd1: Vec<f64>,
    h1: Vec<f64>,
    q: Vec<f64>,
    k: Vec<f64>,
    v: Vec<f64>,
    /// `heads × rows × L` attention weights.
    probs: Vec<f64>,
    ctx: Vec<f64>,
    drop_attn: Option<Vec<f64>>,
    xhat2: Vec<f64>,
    rstd2: Vec<f64>,
    h2: Vec<f64>,
    u: Vec<f64>,
    g: Vec<f64>,
    drop_mlp: Option<Vec<f64>>,
}

pub(super) struct SeqCache {
    input: [u8; INPUT_LEN],
    drop_emb: Option<Vec<f64>>,
    blocks: Vec<BlockCache>,
    xhat_f: Vec<f64>,
    rstd_f: f64,
    hf: Vec<f64>,
    norm: f64,
    pub(super) z: Vec<f64>,
}

/// Inverted-dropout mask: each entry is 0 with probability `rate`, else `1/(1−rate)`.
fn dropout_mask(rng: &mut ChaCha8Rng, n: usize, rate: f64) -> Vec<f64> {
    let keep = 1.0 / (1.0 - rate);
    (0..n)
        .map(|_| if rng.random::<f64>() < rate { 0.0 } else { keep })
        .collect()
}

fn apply_mask(x: &mut [f64], mask: &Option<Vec<f64>>) {
    if let Some(m) = mask {
        x.iter_mut().zip(m).for_each(|(v, k)| *v *= k);
    }
}

pub(super) fn forward(
    p: &EncoderParams,
    input: &[u8; INPUT_LEN],
    mut rng: Option<ChaCha8Rng>,
) -> SeqCache {
    let cfg = &p.config;
    let lay = &p.layout;
    let w = &p.data[..];
    let (d, l, heads, m) = (cfg.embed_dim, cfg.seq_len, cfg.heads, cfg.mlp_size);
    let dh = d / heads;
    let scale = 1.0 / libm::sqrt(dh as f64);
    let rate = cfg.dropout;
    let mut drop = |n: usize| match rng.as_mut() {
        Some(r) if rate > 0.0 => Some(dropout_mask(r, n, rate)),
        _ => None,
    };

    let mut x = vec![0.0; l * d];
    for (t, row) in x.chunks_exact_mut(d).enumerate() {
        let id = input[t] as usize;
        row.copy_from_slice(&w[lay.tok + id * d..][..d]);
        axpy(1.0, &w[lay.pos + t * d..][..d], row);
    }
    let drop_emb = drop(l * d);
    apply_mask(&mut x, &drop_emb);

    let mut blocks = Vec::with_capacity(cfg.layers);
    for (bi, o) in lay.blocks.iter().enumerate() {
        let rows = if bi + 1 == cfg.layers { 1 } else { l };

        let mut xhat1 = vec![0.0; l * d];
        let mut rstd1 = vec![0.0; l];
        let mut h1 = vec![0.0; l * d];
        layer_norm(&x, &w[o.ln1_g..][..d], &w[o.ln1_b..][..d], d, &mut xhat1, &mut rstd1, &mut h1);

        let mut q = vec![0.0; rows * d];
        let mut k = vec![0.0; l * d];
        let mut v = vec![0.0; l * d];
        linear(&h1[..rows * d], &w[o.wq..][..d * d], &w[o.bq..][..d], d, d, &mut q);
        linear(&h1, &w[o.wk..][..d * d], &w[o.bk..][..d], d, d, &mut k);
        linear(&h1, &w[o.wv..][..d * d], &w[o.bv..][..d], d, d, &mut v);

        let mut probs = vec![0.0; heads * rows * l];
        let mut ctx = vec![0.0; rows * d];
        for hd in 0..heads {
            let c = hd * dh;
            for r in 0..rows {
                let pr = &mut probs[(hd * rows + r) * l..][..l];
                let qr = &q[r * d + c..][..dh];
                for (j, s) in pr.iter_mut().enumerate() {
                    *s = dot(qr, &k[j * d + c..][..dh]) * scale;
                }
                crate::math::softmax(pr);
                let cr = &mut ctx[r * d + c..][..dh];
                for (j, &pj) in pr.iter().enumerate() {
                    axpy(pj, &v[j * d + c..][..dh], cr);
                }
            }
        }

        let mut a = vec![0.0; rows * d];
        linear(&ctx, &w[o.wo..][..d * d], &w[o.bo..][..d], d, d, &mut a);
        let drop_attn = drop(rows * d);
        apply_mask(&mut a, &drop_attn);
        x.truncate(rows * d);
        axpy(1.0, &a, &mut x);

        let mut xhat2 = vec![0.0; rows * d];
        let mut rstd2 = vec![0.0; rows];
        let mut h2 = vec![0.0; rows * d];
        layer_norm(&x, &w[o.ln2_g..][..d], &w[o.ln2_b..][..d], d, &mut xhat2, &mut rstd2, &mut h2);
        let mut u = vec![0.0; rows * m];
        linear(&h2, &w[o.w1..][..d * m], &w[o.b1..][..m], d, m, &mut u);
        let g: Vec<f64> = u.iter().map(|&x| gelu(x)).collect();
        let mut f = vec![0.0; rows * d];
        linear(&g, &w[o.w2..][..m * d], &w[o.b2..][..d], m, d, &mut f);
        let drop_mlp = drop(rows * d);
        apply_mask(&mut f, &drop_mlp);
        axpy(1.0, &f, &mut x);

        blocks.push(BlockCache {
            rows,
            xhat1,
            rstd1,
            h1,
            q,
            k,
            v,
            probs,
            ctx,
            drop_attn,
            xhat2,
            rstd2,
            h2,
            u,
            g,
            drop_mlp,
        });
    }

    let mut xhat_f = vec![0.0; d];
    let mut rstd_f = [0.0];
    let mut hf = vec![0.0; d];
    layer_norm(&x[..d], &w[lay.lnf_g..][..d], &w[lay.lnf_b..][..d], d, &mut xhat_f, &mut rstd_f, &mut hf);
    let mut y = vec![0.0; d];
    linear(&hf, &w[lay.proj_w..][..d * d], &w[lay.proj_b..][..d], d, d, &mut y);
    let norm = libm::sqrt(dot(&y, &y)).max(f64::MIN_POSITIVE);
    y.iter_mut().for_each(|v| *v /= norm);

    SeqCache {
        input: *input,
        drop_emb,
        blocks,
        xhat_f,
        rstd_f: rstd_f[0],
        hf,
        norm,
        z: y,
    }
}

/// Recorded forward pass of one training batch.
///
/// [`Tape::backward`] takes the tape by value, so a tape can be consumed once.
pub struct Tape<'a> {
    params: &'a EncoderParams,
    seqs: Vec<SeqCache>,
}

impl<'a> Tape<'a> {
    pub(super) fn new(params: &'a EncoderParams, seqs: Vec<SeqCache>) -> Self {
        Tape { params, seqs }
    }

    pub fn len(&self) -> usize {
        self.seqs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.seqs.is_empty()
    }

    /// Gradient of a scalar loss w.r.t. every parameter, given `dz[i]`, the
    /// loss gradient w.r.t. the `i`-th embedding. Laid out like the params.
    pub fn backward(self, dz: &[Vec<f64>]) -> Vec<f64> {
        assert_eq!(dz.len(), self.seqs.len(), "one upstream gradient per embedding");
        let mut grad = vec![0.0; self.params.data.len()];
        for (cache, dzi) in self.seqs.iter().zip(dz) {
            backward_one(self.params, cache, dzi, &mut grad);
        }
        grad
    }
}

fn backward_one(p: &EncoderParams, c: &SeqCache, dz: &[f64], grad: &mut [f64]) {
    let cfg = &p.config;
    let lay = &p.layout;
    let w = &p.data[..];
    let (d, l, heads, m) = (cfg.embed_dim, cfg.seq_len, cfg.heads, cfg.mlp_size);
    let dh = d / heads;
    let scale = 1.0 / libm::sqrt(dh as f64);

    // z = y / ‖y‖
    let zdz = dot(&c.z, dz);
    let dy: Vec<f64> = c
        .z
        .iter()
        .zip(dz)
        .map(|(z, g)| (g - z * zdz) / c.norm)
        .collect();
    let mut dhf = vec![0.0; d];
    {
        let (dw, db) = grad[lay.proj_w..lay.proj_b + d].split_at_mut(d * d);
        linear_backward(&c.hf, &w[lay.proj_w..][..d * d], &dy, d, d, dw, db, &mut dhf);
    }
    let mut dx = vec![0.0; d];
    {
        let (dg, db) = grad[lay.lnf_g..lay.lnf_b + d].split_at_mut(d);
        layer_norm_backward(&dhf, &c.xhat_f, &[c.rstd_f], &w[lay.lnf_g..][..d], d, dg, db, &mut dx);
    }

    for (o, b) in lay.blocks.iter().zip(&c.blocks).rev() {
        let rows = b.rows;
        debug_assert_eq!(dx.len(), rows * d);

        // MLP branch: x_out = x_mid + drop(W2 · gelu(W1 · ln2(x_mid)))
        let mut df = dx.clone();
        apply_mask(&mut df, &b.drop_mlp);
        let mut dg = vec![0.0; rows * m];
        {
            let (dw, db) = grad[o.w2..o.b2 + d].split_at_mut(m * d);
            linear_backward(&b.g, &w[o.w2..][..m * d], &df, m, d, dw, db, &mut dg);
        }
        for (g, &u) in dg.iter_mut().zip(&b.u) {
            *g *= gelu_grad(u);
        }
        let mut dh2 = vec![0.0; rows * d];
        {
            let (dw, db) = grad[o.w1..o.b1 + m].split_at_mut(d * m);
            linear_backward(&b.h2, &w[o.w1..][..d * m], &dg, d, m, dw, db, &mut dh2);
        }
        let mut dxmid = dx;
        {
            let (dgam, dbet) = grad[o.ln2_g..o.ln2_b + d].split_at_mut(d);
            layer_norm_backward(&dh2, &b.xhat2, &b.rstd2, &w[o.ln2_g..][..d], d, dgam, dbet, &mut dxmid);
        }

        // attention branch: x_mid = x_in[..rows] + drop(Wo · attn(ln1(x_in)))
        let mut da = dxmid.clone();
        apply_mask(&mut da, &b.drop_attn);
        let mut dctx = vec![0.0; rows * d];
        {
            let (dw, db) = grad[o.wo..o.bo + d].split_at_mut(d * d);
            linear_backward(&b.ctx, &w[o.wo..][..d * d], &da, d, d, dw, db, &mut dctx);
        }
        let mut dq = vec![0.0; rows * d];
        let mut dk = vec![0.0; l * d];
        let mut dv = vec![0.0; l * d];
        let mut dp = vec![0.0; l];
        for hd in 0..heads {
            let c0 = hd * dh;
            for r in 0..rows {
                let pr = &b.probs[(hd * rows + r) * l..][..l];
                let dcr = &dctx[r * d + c0..][..dh];
                let mut s = 0.0;
                for j in 0..l {
                    dp[j] = dot(dcr, &b.v[j * d + c0..][..dh]);
                    axpy(pr[j], dcr, &mut dv[j * d + c0..][..dh]);
                    s += pr[j] * dp[j];
                }
                let qr = &b.q[r * d + c0..][..dh];
                for j in 0..l {
                    let ds = pr[j] * (dp[j] - s) * scale;
                    if ds != 0.0 {
                        axpy(ds, &b.k[j * d + c0..][..dh], &mut dq[r * d + c0..][..dh]);
                        axpy(ds, qr, &mut dk[j * d + c0..][..dh]);
                    }
                }
            }
        }
        let mut dh1 = vec![0.0; l * d];
        {
            let (dw, db) = grad[o.wq..o.bq + d].split_at_mut(d * d);
            linear_backward(&b.h1[..rows * d], &w[o.wq..][..d * d], &dq, d, d, dw, db, &mut dh1[..rows * d]);
        }
        {
            let (dw, db) = grad[o.wk..o.bk + d].split_at_mut(d * d);
            linear_backward(&b.h1, &w[o.wk..][..d * d], &dk, d, d, dw, db, &mut dh1);
        }
        {
            let (dw, db) = grad[o.wv..o.bv + d].split_at_mut(d * d);
            linear_backward(&b.h1, &w[o.wv..][..d * d], &dv, d, d, dw, db, &mut dh1);
        }
        let mut dxin = vec![0.0; l * d];
        dxin[..rows * d].copy_from_slice(&dxmid);
        {
            let (dgam, dbet) = grad[o.ln1_g..o.ln1_b + d].split_at_mut(d);
            layer_norm_backward(&dh1, &b.xhat1, &b.rstd1, &w[o.ln1_g..][..d], d, dgam, dbet, &mut dxin);
        }
        dx = dxin;
    }

    apply_mask(&mut dx, &c.drop_emb);
    for (t, row) in dx.chunks_exact(d).enumerate() {
        let id = c.input[t] as usize;
        axpy(1.0, row, &mut grad[lay.tok + id * d..][..d]);
        axpy(1.0, row, &mut grad[lay.pos + t * d..][..d]);
    }
}
