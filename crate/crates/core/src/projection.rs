//! Two-component PCA used to draw embeddings and game trajectories in 2D.

use alloc::vec;
use alloc::vec::Vec;

use crate::math::dot;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ProjectionError {
    #[error("need at least 3 embeddings, got {0}")]
    TooFew(usize),
    #[error("embeddings must have dimension ≥ 2 and equal length")]
    Dimension,
    #[error("embeddings span fewer than two directions")]
    RankDeficient,
}

/// Mean-centred projection onto the top two principal axes.
#[derive(Debug, Clone, PartialEq)]
pub struct Projection2D {
    mean: Vec<f64>,
    basis: [Vec<f64>; 2],
    variances: [f64; 2],
    total_variance: f64,
}

impl Projection2D {
    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    /// Orthonormal rows, largest-magnitude entry of each positive.
    pub fn basis(&self) -> [&[f64]; 2] {
        [&self.basis[0], &self.basis[1]]
    }

    /// Fraction of total variance captured by the two axes.
    pub fn explained_variance_ratio(&self) -> f64 {
        (self.variances[0] + self.variances[1]) / self.total_variance
    }

    pub fn project(&self, z: &[f64]) -> (f64, f64) {
        let centred: Vec<f64> = z.iter().zip(&self.mean).map(|(a, m)| a - m).collect();
        (dot(&centred, &self.basis[0]), dot(&centred, &self.basis[1]))
    }
}

pub fn fit_projection(embeddings: &[Vec<f64>]) -> Result<Projection2D, ProjectionError> {
    let n = embeddings.len();
    if n < 3 {
        return Err(ProjectionError::TooFew(n));
    }
    let d = embeddings[0].len();
    if d < 2 || embeddings.iter().any(|z| z.len() != d) {
        return Err(ProjectionError::Dimension);
    }
    let mut mean = vec![0.0; d];
    for z in embeddings {
        for (m, v) in mean.iter_mut().zip(z) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);

    let mut cov = vec![0.0; d * d];
    let mut c = vec![0.0; d];
    for z in embeddings {
        for (ci, (v, m)) in c.iter_mut().zip(z.iter().zip(&mean)) {
            *ci = v - m;
        }
        for i in 0..d {
            for j in i..d {
                cov[i * d + j] += c[i] * c[j];
            }
        }
    }
    for i in 0..d {
        for j in i..d {
            let v = cov[i * d + j] / (n - 1) as f64;
            cov[i * d + j] = v;
            cov[j * d + i] = v;
        }
    }
    let total_variance: f64 = (0..d).map(|i| cov[i * d + i]).sum();
    let (values, vectors) = jacobi_eigen(cov, d);

    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    let (top, second) = (values[order[0]], values[order[1]]);
    if !(top > 0.0) || second <= 1e-12 * top {
        return Err(ProjectionError::RankDeficient);
    }
    let axis = |k: usize| -> Vec<f64> {
        let mut v: Vec<f64> = (0..d).map(|i| vectors[i * d + k]).collect();
        let big = v
            .iter()
            .copied()
            .fold(0.0f64, |acc, x| if x.abs() > acc.abs() { x } else { acc });
        if big < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
        v
    };
    Ok(Projection2D {
        mean,
        basis: [axis(order[0]), axis(order[1])],
        variances: [top, second],
        total_variance,
    })
}

/// Cyclic Jacobi rotations on a symmetric `d × d` matrix. Returns the
/// eigenvalues and the eigenvectors as the columns of a row-major matrix.
fn jacobi_eigen(mut a: Vec<f64>, d: usize) -> (Vec<f64>, Vec<f64>) {
    let mut v = vec![0.0; d * d];
    for i in 0..d {
        v[i * d + i] = 1.0;
    }
    let scale: f64 = a.iter().map(|x| x * x).sum::<f64>().max(f64::MIN_POSITIVE);
    for _sweep in 0..100 {
        let off: f64 = (0..d)
            .flat_map(|i| (0..d).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i * d + j] * a[i * d + j])
            .sum();
        if off <= 1e-30 * scale {
            break;
        }
        for p in 0..d {
            for q in p + 1..d {
                let apq = a[p * d + q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[q * d + q] - a[p * d + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + libm::sqrt(theta * theta + 1.0));
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / libm::sqrt(t * t + 1.0);
                let s = t * c;
                for k in 0..d {
                    let (akp, akq) = (a[k * d + p], a[k * d + q]);
                    a[k * d + p] = c * akp - s * akq;
                    a[k * d + q] = s * akp + c * akq;
                }
                for k in 0..d {
                    let (apk, aqk) = (a[p * d + k], a[q * d + k]);
                    a[p * d + k] = c * apk - s * aqk;
                    a[q * d + k] = s * apk + c * aqk;
                }
                for k in 0..d {
                    let (vkp, vkq) = (v[k * d + p], v[k * d + q]);
                    v[k * d + p] = c * vkp - s * vkq;
                    v[k * d + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    ((0..d).map(|i| a[i * d + i]).collect(), v)
}
