//! Dense f64 kernels shared by the encoder, loss and planner.
//!
//! Matrices are row-major. A weight `w` of shape `n × m` maps an `n`-vector
//! to an `m`-vector as `y = x · w`.

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [0.0f64; 4];
    let mut ca = a.chunks_exact(4);
    let mut cb = b.chunks_exact(4);
    for (x, y) in (&mut ca).zip(&mut cb) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    let mut tail = 0.0;
    for (x, y) in ca.remainder().iter().zip(cb.remainder()) {
        tail += x * y;
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// `y += alpha · x`
#[inline]
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn norm(a: &[f64]) -> f64 {
    libm::sqrt(dot(a, a))
}

/// `y += a0·w0 + a1·w1 + a2·w2 + a3·w3`
#[inline]
fn axpy4(a: [f64; 4], w: [&[f64]; 4], y: &mut [f64]) {
    let m = y.len();
    let (w0, w1, w2, w3) = (&w[0][..m], &w[1][..m], &w[2][..m], &w[3][..m]);
    for j in 0..m {
        y[j] += a[0] * w0[j] + a[1] * w1[j] + a[2] * w2[j] + a[3] * w3[j];
    }
}

/// `out[r] = b + x[r] · w` for every row of `x` (`rows × n`), `w` is `n × m`.
pub fn linear(x: &[f64], w: &[f64], b: &[f64], n: usize, m: usize, out: &mut [f64]) {
    debug_assert_eq!(w.len(), n * m);
    let row = |i: usize| &w[i * m..(i + 1) * m];
    for (xr, or) in x.chunks_exact(n).zip(out.chunks_exact_mut(m)) {
        or.copy_from_slice(b);
        let mut i = 0;
        while i + 4 <= n {
            axpy4(
                [xr[i], xr[i + 1], xr[i + 2], xr[i + 3]],
                [row(i), row(i + 1), row(i + 2), row(i + 3)],
                or,
            );
            i += 4;
        }
        for i in i..n {
            axpy(xr[i], row(i), or);
        }
    }
}

/// Reverse of [`linear`]: `dw += xᵀ dy`, `db += Σ_r dy[r]`, `dx += dy · wᵀ`.
#[allow(clippy::too_many_arguments)]
pub fn linear_backward(
    x: &[f64],
    w: &[f64],
    dy: &[f64],
    n: usize,
    m: usize,
    dw: &mut [f64],
    db: &mut [f64],
    dx: &mut [f64],
) {
    let rows = dy.len() / m;
    let dy_row = |r: usize| &dy[r * m..(r + 1) * m];
    for r in 0..rows {
        let dyr = dy_row(r);
        axpy(1.0, dyr, db);
        let dxr = &mut dx[r * n..(r + 1) * n];
        for (i, d) in dxr.iter_mut().enumerate() {
            *d += dot(dyr, &w[i * m..(i + 1) * m]);
        }
    }
    for i in 0..n {
        let dwi = &mut dw[i * m..(i + 1) * m];
        let mut r = 0;
        while r + 4 <= rows {
            axpy4(
                [x[r * n + i], x[(r + 1) * n + i], x[(r + 2) * n + i], x[(r + 3) * n + i]],
                [dy_row(r), dy_row(r + 1), dy_row(r + 2), dy_row(r + 3)],
                dwi,
            );
            r += 4;
        }
        for r in r..rows {
            axpy(x[r * n + i], dy_row(r), dwi);
        }
    }
}

pub const LN_EPS: f64 = 1e-5;

/// Row-wise layer norm over width `d`; records `xhat` and `rstd` for the reverse pass.
pub fn layer_norm(
    x: &[f64],
    gamma: &[f64],
    beta: &[f64],
    d: usize,
    xhat: &mut [f64],
    rstd: &mut [f64],
    out: &mut [f64],
) {
    for (r, xr) in x.chunks_exact(d).enumerate() {
        let mean = xr.iter().sum::<f64>() / d as f64;
        let var = xr.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / d as f64;
        let rs = 1.0 / libm::sqrt(var + LN_EPS);
        rstd[r] = rs;
        let hr = &mut xhat[r * d..(r + 1) * d];
        let or = &mut out[r * d..(r + 1) * d];
        for j in 0..d {
            hr[j] = (xr[j] - mean) * rs;
            or[j] = hr[j] * gamma[j] + beta[j];
        }
    }
}

/// Reverse of [`layer_norm`]; accumulates into `dgamma`, `dbeta` and `dx`.
#[allow(clippy::too_many_arguments)]
pub fn layer_norm_backward(
    dy: &[f64],
    xhat: &[f64],
    rstd: &[f64],
    gamma: &[f64],
    d: usize,
    dgamma: &mut [f64],
    dbeta: &mut [f64],
    dx: &mut [f64],
) {
    let inv_d = 1.0 / d as f64;
    for (r, dyr) in dy.chunks_exact(d).enumerate() {
        let hr = &xhat[r * d..(r + 1) * d];
        let mut mean_g = 0.0;
        let mut mean_gh = 0.0;
        for j in 0..d {
            dgamma[j] += dyr[j] * hr[j];
            dbeta[j] += dyr[j];
            let g = dyr[j] * gamma[j];
            mean_g += g;
            mean_gh += g * hr[j];
        }
        mean_g *= inv_d;
        mean_gh *= inv_d;
        let dxr = &mut dx[r * d..(r + 1) * d];
        for j in 0..d {
            dxr[j] += rstd[r] * (dyr[j] * gamma[j] - mean_g - hr[j] * mean_gh);
        }
    }
}

const FRAC_1_SQRT_2: f64 = core::f64::consts::FRAC_1_SQRT_2;
const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Exact GELU, `u · Φ(u)`.
#[inline]
pub fn gelu(u: f64) -> f64 {
    0.5 * u * (1.0 + libm::erf(u * FRAC_1_SQRT_2))
}

#[inline]
pub fn gelu_grad(u: f64) -> f64 {
    0.5 * (1.0 + libm::erf(u * FRAC_1_SQRT_2)) + u * FRAC_1_SQRT_2PI * libm::exp(-0.5 * u * u)
}

/// In-place softmax; returns nothing, the slice sums to 1 afterwards.
pub fn softmax(s: &mut [f64]) {
    let mx = s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in s.iter_mut() {
        *v = libm::exp(*v - mx);
        sum += *v;
    }
    let inv = 1.0 / sum;
    for v in s.iter_mut() {
        *v *= inv;
    }
}

/// `ln Σ exp(s_i)`, stable for large magnitudes.
pub fn log_sum_exp(s: impl Iterator<Item = f64> + Clone) -> f64 {
    let mx = s.clone().fold(f64::NEG_INFINITY, f64::max);
    if mx == f64::NEG_INFINITY {
        return mx;
    }
    mx + libm::log(s.map(|v| libm::exp(v - mx)).sum::<f64>())
}
