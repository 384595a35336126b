//! Margin-masked supervised contrastive loss.
//!
//! For anchors `i` with a non-empty positive set `P(i)`:
//!
//! ```text
//! L = Σ_i  −1/|P(i)|  Σ_{p∈P(i)}  log( exp(z_i·z_p/τ) / Σ_{a≠i} exp(z_i·z_a/τ) )
//! ```
//!
//! Anchors without positives are left out of the outer sum but still appear
//! in the denominators of the others.

use alloc::vec;
use alloc::vec::Vec;

use crate::math::{axpy, dot, log_sum_exp};

/// Symmetric `B × B` positive mask with a false diagonal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PositiveMask {
    n: usize,
    bits: Vec<bool>,
}

impl PositiveMask {
    /// Mask from explicit pairs. Panics on an out-of-range index.
    pub fn from_pairs(n: usize, pairs: &[(usize, usize)]) -> PositiveMask {
        let mut bits = vec![false; n * n];
        for &(i, j) in pairs {
            assert!(i < n && j < n, "pair ({i}, {j}) outside {n}");
            if i != j {
                bits[i * n + j] = true;
                bits[j * n + i] = true;
            }
        }
        PositiveMask { n, bits }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> bool {
        self.bits[i * self.n + j]
    }

    pub fn positives(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.n).filter(move |&j| self.get(i, j))
    }

    /// Number of rows with at least one positive.
    pub fn anchor_count(&self) -> usize {
        (0..self.n).filter(|&i| self.positives(i).next().is_some()).count()
    }
}

/// `mask[i][j] = i ≠ j ∧ |p_i − p_j| < δ`.
pub fn build_mask(probs: &[f64], delta: f64) -> PositiveMask {
    let n = probs.len();
    let mut bits = vec![false; n * n];
    for i in 0..n {
        for j in 0..n {
            bits[i * n + j] = i != j && (probs[i] - probs[j]).abs() < delta;
        }
    }
    PositiveMask { n, bits }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LossError {
    #[error("temperature must be positive, got {0}")]
    Temperature(f64),
    #[error("{embeddings} embeddings for a {mask}-row mask")]
    Size { embeddings: usize, mask: usize },
    #[error("contrastive loss needs at least two embeddings")]
    TooSmall,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SupConOutput {
    /// Summed over contributing anchors.
    pub loss: f64,
    /// `∂loss/∂z_i`, one row per embedding.
    pub grad: Vec<Vec<f64>>,
    /// Anchors that contributed to the sum.
    pub anchors: usize,
}

pub fn supcon_loss(z: &[Vec<f64>], mask: &PositiveMask, tau: f64) -> Result<SupConOutput, LossError> {
    // also rejects NaN
    if !(tau > 0.0) {
        return Err(LossError::Temperature(tau));
    }
    let b = z.len();
    if b != mask.len() {
        return Err(LossError::Size {
            embeddings: b,
            mask: mask.len(),
        });
    }
    if b < 2 {
        return Err(LossError::TooSmall);
    }
    let d = z[0].len();
    let inv_tau = 1.0 / tau;
    let mut logits = vec![0.0; b * b];
    for i in 0..b {
        for j in i + 1..b {
            let s = dot(&z[i], &z[j]) * inv_tau;
            logits[i * b + j] = s;
            logits[j * b + i] = s;
        }
    }

    let mut loss = 0.0;
    let mut anchors = 0;
    let mut grad = vec![vec![0.0; d]; b];
    // g[i][j] = ∂loss/∂s_ij
    let mut g = vec![0.0; b];
    for i in 0..b {
        let n_pos = mask.positives(i).count();
        if n_pos == 0 {
            continue;
        }
        anchors += 1;
        let row = &logits[i * b..(i + 1) * b];
        let others = (0..b).filter(|&a| a != i).map(|a| row[a]);
        let lse = log_sum_exp(others);
        let inv_pos = 1.0 / n_pos as f64;
        let mut term = 0.0;
        for j in 0..b {
            if j == i {
                g[j] = 0.0;
                continue;
            }
            let soft = libm::exp(row[j] - lse);
            if mask.get(i, j) {
                term += row[j] - lse;
                g[j] = soft - inv_pos;
            } else {
                g[j] = soft;
            }
        }
        loss -= term * inv_pos;
        for j in 0..b {
            if g[j] != 0.0 {
                axpy(g[j] * inv_tau, &z[j], &mut grad[i]);
                axpy(g[j] * inv_tau, &z[i], &mut grad[j]);
            }
        }
    }
    Ok(SupConOutput {
        loss,
        grad,
        anchors,
    })
}
