//! Layer primitives on batched `[batch][maps][len]` tensors.
//!
//! Parallelism never reorders floating-point reductions: batch-sliced work
//! writes disjoint outputs, and cross-batch reductions (weight gradients,
//! batch-norm statistics) accumulate over fixed-size chunks that are summed
//! in index order, so results are bit-identical at any thread count.

use rayon::prelude::*;

use super::real::Real;

pub const KERNEL: usize = 4;
/// Examples per reduction chunk for weight gradients.
const GRAD_CHUNK: usize = 64;

/// Dense batch tensor, `data[b * maps * len + m * len + i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch<T> {
    pub data: Vec<T>,
    pub b: usize,
    pub maps: usize,
    pub len: usize,
}

impl<T: Real> Batch<T> {
    pub fn zeros(b: usize, maps: usize, len: usize) -> Self {
        Batch {
            data: vec![T::ZERO; b * maps * len],
            b,
            maps,
            len,
        }
    }

    /// Reshape in place, reusing the allocation.
    pub fn reset(&mut self, b: usize, maps: usize, len: usize) {
        self.data.clear();
        self.data.resize(b * maps * len, T::ZERO);
        self.b = b;
        self.maps = maps;
        self.len = len;
    }

    pub fn example(&self, bi: usize) -> &[T] {
        let stride = self.maps * self.len;
        &self.data[bi * stride..(bi + 1) * stride]
    }

    pub fn map(&self, bi: usize, m: usize) -> &[T] {
        let start = bi * self.maps * self.len + m * self.len;
        &self.data[start..start + self.len]
    }
}

/// Valid cross-correlation with stride 1 and kernel 4:
/// `y[k][i] = sum_c sum_j w[k][c][j] * x[c][i+j] + b[k]`.
pub fn conv_forward<T: Real>(x: &Batch<T>, w: &[T], bias: &[T], out: &mut Batch<T>) {
    let (c_in, l_in) = (x.maps, x.len);
    let k_out = bias.len();
    let l_out = l_in - (KERNEL - 1);
    debug_assert_eq!(w.len(), k_out * c_in * KERNEL);
    out.reset(x.b, k_out, l_out);

    let in_stride = c_in * l_in;
    out.data
        .par_chunks_mut(k_out * l_out)
        .enumerate()
        .for_each(|(bi, yb)| {
            let xb = &x.data[bi * in_stride..(bi + 1) * in_stride];
            for k in 0..k_out {
                let yk = &mut yb[k * l_out..(k + 1) * l_out];
                for v in yk.iter_mut() {
                    *v = bias[k];
                }
                for c in 0..c_in {
                    let xc = &xb[c * l_in..(c + 1) * l_in];
                    let wb = &w[(k * c_in + c) * KERNEL..(k * c_in + c + 1) * KERNEL];
                    let (w0, w1, w2, w3) = (wb[0], wb[1], wb[2], wb[3]);
                    for i in 0..l_out {
                        yk[i] += w0 * xc[i] + w1 * xc[i + 1] + w2 * xc[i + 2] + w3 * xc[i + 3];
                    }
                }
            }
        });
}

/// Gradient of the conv inputs: `dx[c][i+j] += w[k][c][j] * gy[k][i]`.
/// Accumulates into a fixed local buffer so the compiler can prove the
/// stores never alias the gradient reads (keeps the loop vectorized).
pub fn conv_backward_input<T: Real>(w: &[T], grad_y: &Batch<T>, c_in: usize, dx: &mut Batch<T>) {
    let (k_out, l_out) = (grad_y.maps, grad_y.len);
    let l_in = l_out + KERNEL - 1;
    debug_assert!(l_in <= 256);
    dx.reset(grad_y.b, c_in, l_in);

    let gy_stride = k_out * l_out;
    dx.data
        .par_chunks_mut(c_in * l_in)
        .enumerate()
        .for_each(|(bi, dxb)| {
            let gyb = &grad_y.data[bi * gy_stride..(bi + 1) * gy_stride];
            let mut local = [T::ZERO; 256];
            for c in 0..c_in {
                local[..l_in].fill(T::ZERO);
                for k in 0..k_out {
                    let gyk = &gyb[k * l_out..(k + 1) * l_out];
                    let wb = &w[(k * c_in + c) * KERNEL..(k * c_in + c + 1) * KERNEL];
                    // four shifted saxpy passes; offsets keep each pass free
                    // of loop-carried writes
                    for (j, &wj) in wb.iter().enumerate() {
                        let dst = &mut local[j..j + l_out];
                        for (d, &g) in dst.iter_mut().zip(gyk) {
                            *d += wj * g;
                        }
                    }
                }
                dxb[c * l_in..(c + 1) * l_in].copy_from_slice(&local[..l_in]);
            }
        });
}

/// Gradients of the conv parameters, reduced over the batch in fixed chunk
/// order: `dw[k][c][j] = sum_b sum_i gy[b][k][i] * x[b][c][i+j]`.
pub fn conv_backward_params<T: Real>(x: &Batch<T>, grad_y: &Batch<T>, dw: &mut [T], db: &mut [T]) {
    let (c_in, l_in) = (x.maps, x.len);
    let (k_out, l_out) = (grad_y.maps, grad_y.len);
    let n_chunks = x.b.div_ceil(GRAD_CHUNK);

    let partials: Vec<(Vec<T>, Vec<T>)> = (0..n_chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut pw = vec![T::ZERO; k_out * c_in * KERNEL];
            let mut pb = vec![T::ZERO; k_out];
            let lo = chunk * GRAD_CHUNK;
            let hi = (lo + GRAD_CHUNK).min(x.b);
            for bi in lo..hi {
                let xb = x.example(bi);
                let gyb = grad_y.example(bi);
                for k in 0..k_out {
                    let gyk = &gyb[k * l_out..(k + 1) * l_out];
                    let mut bsum = T::ZERO;
                    for &g in gyk {
                        bsum += g;
                    }
                    pb[k] += bsum;
                    for c in 0..c_in {
                        let xc = &xb[c * l_in..(c + 1) * l_in];
                        let acc = &mut pw[(k * c_in + c) * KERNEL..(k * c_in + c + 1) * KERNEL];
                        // eight parallel partial sums per tap sidestep the
                        // FMA latency chain of a plain dot product
                        let mut l0 = [T::ZERO; 8];
                        let mut l1 = [T::ZERO; 8];
                        let mut l2 = [T::ZERO; 8];
                        let mut l3 = [T::ZERO; 8];
                        let chunks = l_out / 8;
                        for ch in 0..chunks {
                            let base = ch * 8;
                            let g8 = &gyk[base..base + 8];
                            let x8 = &xc[base..base + 11];
                            for l in 0..8 {
                                let g = g8[l];
                                l0[l] += g * x8[l];
                                l1[l] += g * x8[l + 1];
                                l2[l] += g * x8[l + 2];
                                l3[l] += g * x8[l + 3];
                            }
                        }
                        let (mut a0, mut a1, mut a2, mut a3) = (T::ZERO, T::ZERO, T::ZERO, T::ZERO);
                        for i in chunks * 8..l_out {
                            let g = gyk[i];
                            a0 += g * xc[i];
                            a1 += g * xc[i + 1];
                            a2 += g * xc[i + 2];
                            a3 += g * xc[i + 3];
                        }
                        for l in 0..8 {
                            a0 += l0[l];
                            a1 += l1[l];
                            a2 += l2[l];
                            a3 += l3[l];
                        }
                        acc[0] += a0;
                        acc[1] += a1;
                        acc[2] += a2;
                        acc[3] += a3;
                    }
                }
            }
            (pw, pb)
        })
        .collect();

    dw.iter_mut().for_each(|v| *v = T::ZERO);
    db.iter_mut().for_each(|v| *v = T::ZERO);
    for (pw, pb) in partials {
        for (d, p) in dw.iter_mut().zip(&pw) {
            *d += *p;
        }
        for (d, p) in db.iter_mut().zip(&pb) {
            *d += *p;
        }
    }
}

pub fn relu_inplace<T: Real>(x: &mut Batch<T>) {
    x.data.par_iter_mut().for_each(|v| *v = v.max_zero());
}

/// ReLU gradient: zero wherever the forward output was clipped.
pub fn relu_backward_inplace<T: Real>(grad: &mut Batch<T>, out: &Batch<T>) {
    grad.data.par_iter_mut().zip(&out.data).for_each(|(g, &o)| {
        if !(o > T::ZERO) {
            *g = T::ZERO;
        }
    });
}

/// Average pooling: `y[k][i] = mean x[k][i*stride .. i*stride+width]`.
pub fn avgpool_forward<T: Real>(x: &Batch<T>, width: usize, stride: usize, out: &mut Batch<T>) {
    let l_out = (x.len - width) / stride + 1;
    out.reset(x.b, x.maps, l_out);
    let scale = T::from_f64(1.0 / width as f64);
    let in_stride = x.maps * x.len;
    let maps = x.maps;
    let l_in = x.len;
    out.data
        .par_chunks_mut(maps * l_out)
        .enumerate()
        .for_each(|(bi, yb)| {
            let xb = &x.data[bi * in_stride..(bi + 1) * in_stride];
            for m in 0..maps {
                let xm = &xb[m * l_in..(m + 1) * l_in];
                let ym = &mut yb[m * l_out..(m + 1) * l_out];
                for (i, y) in ym.iter_mut().enumerate() {
                    let mut acc = T::ZERO;
                    for t in 0..width {
                        acc += xm[i * stride + t];
                    }
                    *y = acc * scale;
                }
            }
        });
}

pub fn avgpool_backward<T: Real>(
    grad_y: &Batch<T>,
    width: usize,
    stride: usize,
    l_in: usize,
    dx: &mut Batch<T>,
) {
    dx.reset(grad_y.b, grad_y.maps, l_in);
    let scale = T::from_f64(1.0 / width as f64);
    let maps = grad_y.maps;
    let l_out = grad_y.len;
    dx.data
        .par_chunks_mut(maps * l_in)
        .enumerate()
        .for_each(|(bi, dxb)| {
            let gyb = grad_y.example(bi);
            for m in 0..maps {
                let gym = &gyb[m * l_out..(m + 1) * l_out];
                let dxm = &mut dxb[m * l_in..(m + 1) * l_in];
                for (i, &g) in gym.iter().enumerate() {
                    let spread = g * scale;
                    for t in 0..width {
                        dxm[i * stride + t] += spread;
                    }
                }
            }
        });
}

/// Per-map batch statistics over (batch, time), accumulated in f64.
pub fn batch_stats<T: Real>(x: &Batch<T>) -> (Vec<f64>, Vec<f64>) {
    let n = (x.b * x.len) as f64;
    let stats: Vec<(f64, f64)> = (0..x.maps)
        .into_par_iter()
        .map(|m| {
            let mut sum = 0.0;
            let mut sumsq = 0.0;
            for bi in 0..x.b {
                for &v in x.map(bi, m) {
                    let v = v.to_f64();
                    sum += v;
                    sumsq += v * v;
                }
            }
            let mean = sum / n;
            (mean, (sumsq / n - mean * mean).max(0.0))
        })
        .collect();
    (
        stats.iter().map(|s| s.0).collect(),
        stats.iter().map(|s| s.1).collect(),
    )
}

pub const BN_EPSILON: f64 = 1e-5;

/// Normalizes with the given statistics and applies the affine transform.
/// `xhat_out` keeps the pre-affine normalized values for the backward pass.
pub fn batchnorm_apply<T: Real>(
    x: &Batch<T>,
    mean: &[f64],
    var: &[f64],
    gamma: &[T],
    beta: &[T],
    xhat_out: &mut Batch<T>,
    out: &mut Batch<T>,
) {
    xhat_out.reset(x.b, x.maps, x.len);
    out.reset(x.b, x.maps, x.len);
    let maps = x.maps;
    let len = x.len;
    let inv_std: Vec<T> = (0..maps)
        .map(|m| T::from_f64(1.0 / (var[m] + BN_EPSILON).sqrt()))
        .collect();
    let mean_t: Vec<T> = mean.iter().map(|&m| T::from_f64(m)).collect();
    let stride = maps * len;
    xhat_out
        .data
        .par_chunks_mut(stride)
        .zip(out.data.par_chunks_mut(stride))
        .enumerate()
        .for_each(|(bi, (xhb, yb))| {
            let xb = &x.data[bi * stride..(bi + 1) * stride];
            for m in 0..maps {
                let (mu, is, g, be) = (mean_t[m], inv_std[m], gamma[m], beta[m]);
                for i in 0..len {
                    let xh = (xb[m * len + i] - mu) * is;
                    xhb[m * len + i] = xh;
                    yb[m * len + i] = g * xh + be;
                }
            }
        });
}

/// Batch-norm backward through the batch statistics. Returns per-map
/// (dgamma, dbeta); writes dx in place of `grad` reusing its buffer.
pub fn batchnorm_backward<T: Real>(
    grad: &mut Batch<T>,
    xhat: &Batch<T>,
    var: &[f64],
    gamma: &[T],
    dgamma: &mut [T],
    dbeta: &mut [T],
) {
    let n = (grad.b * grad.len) as f64;
    let maps = grad.maps;
    let len = grad.len;
    // per-map reductions in f64, map-parallel
    let sums: Vec<(f64, f64)> = (0..maps)
        .into_par_iter()
        .map(|m| {
            let mut s_dy = 0.0;
            let mut s_dy_xhat = 0.0;
            for bi in 0..grad.b {
                let g = grad.map(bi, m);
                let xh = xhat.map(bi, m);
                for i in 0..len {
                    let gy = g[i].to_f64();
                    s_dy += gy;
                    s_dy_xhat += gy * xh[i].to_f64();
                }
            }
            (s_dy, s_dy_xhat)
        })
        .collect();
    for m in 0..maps {
        dgamma[m] = T::from_f64(sums[m].1);
        dbeta[m] = T::from_f64(sums[m].0);
    }
    let coef: Vec<(T, T, T)> = (0..maps)
        .map(|m| {
            let inv_std = 1.0 / (var[m] + BN_EPSILON).sqrt();
            let scale = gamma[m].to_f64() * inv_std;
            (
                T::from_f64(scale),
                T::from_f64(sums[m].0 / n),
                T::from_f64(sums[m].1 / n),
            )
        })
        .collect();
    let stride = maps * len;
    grad.data
        .par_chunks_mut(stride)
        .enumerate()
        .for_each(|(bi, gb)| {
            let xhb = &xhat.data[bi * stride..(bi + 1) * stride];
            for m in 0..maps {
                let (scale, mean_dy, mean_dy_xhat) = coef[m];
                for i in 0..len {
                    let gy = gb[m * len + i];
                    gb[m * len + i] = scale * (gy - mean_dy - xhb[m * len + i] * mean_dy_xhat);
                }
            }
        });
}

/// Inference-mode batch norm using running statistics.
pub fn batchnorm_infer<T: Real>(
    x: &Batch<T>,
    running_mean: &[T],
    running_var: &[T],
    gamma: &[T],
    beta: &[T],
    out: &mut Batch<T>,
) {
    out.reset(x.b, x.maps, x.len);
    let maps = x.maps;
    let len = x.len;
    let coef: Vec<(T, T)> = (0..maps)
        .map(|m| {
            let inv_std = 1.0 / (running_var[m].to_f64() + BN_EPSILON).sqrt();
            let scale = gamma[m].to_f64() * inv_std;
            let shift = beta[m].to_f64() - running_mean[m].to_f64() * scale;
            (T::from_f64(scale), T::from_f64(shift))
        })
        .collect();
    let stride = maps * len;
    out.data
        .par_chunks_mut(stride)
        .enumerate()
        .for_each(|(bi, yb)| {
            let xb = &x.data[bi * stride..(bi + 1) * stride];
            for m in 0..maps {
                let (scale, shift) = coef[m];
                for i in 0..len {
                    yb[m * len + i] = scale * xb[m * len + i] + shift;
                }
            }
        });
}

/// Global average pooling: one logit per map.
pub fn gap<T: Real>(x: &Batch<T>, logits: &mut Vec<f64>) {
    logits.clear();
    logits.resize(x.b * x.maps, 0.0);
    let inv = 1.0 / x.len as f64;
    for bi in 0..x.b {
        for m in 0..x.maps {
            let mut acc = 0.0;
            for &v in x.map(bi, m) {
                acc += v.to_f64();
            }
            logits[bi * x.maps + m] = acc * inv;
        }
    }
}

/// Numerically-stable two-class softmax.
pub fn softmax2(logits: &[f64], probs: &mut Vec<f64>) {
    probs.clear();
    probs.reserve(logits.len());
    for pair in logits.chunks_exact(2) {
        let m = pair[0].max(pair[1]);
        let e0 = (pair[0] - m).exp();
        let e1 = (pair[1] - m).exp();
        let z = e0 + e1;
        probs.push(e0 / z);
        probs.push(e1 / z);
    }
}
