//! Independent from-definition reference implementations used only to
//! cross-check the production code. Written separately on purpose: direct
//! DFT instead of FFT, Gaussian elimination on the Yule-Walker system
//! instead of Levinson-Durbin, one-sided Jacobi SVD instead of the Gram
//! eigenproblem, and plain quadruple loops for the network layers.

pub const FS: f64 = 32.0;
pub const N: usize = 256;

// ---------------------------------------------------------------------------
// spectra
// ---------------------------------------------------------------------------

/// Hann-windowed single-sided periodogram by direct DFT.
pub fn psd(x: &[f64]) -> Vec<f64> {
    assert_eq!(x.len(), N);
    let w: Vec<f64> = (0..N)
        .map(|i| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / (N - 1) as f64).cos())
        .collect();
    let u: f64 = w.iter().map(|v| v * v).sum();
    let wx: Vec<f64> = x.iter().zip(&w).map(|(v, wi)| v * wi).collect();
    (0..=N / 2)
        .map(|k| {
            let (mut re, mut im) = (0.0, 0.0);
            for (i, &v) in wx.iter().enumerate() {
                let ph = 2.0 * std::f64::consts::PI * (k * i) as f64 / N as f64;
                re += v * ph.cos();
                im -= v * ph.sin();
            }
            let p = (re * re + im * im) / (FS * u);
            if k == 0 || k == N / 2 {
                p
            } else {
                2.0 * p
            }
        })
        .collect()
}

const DF: f64 = FS / N as f64;

fn band_sum(psd: &[f64], lo: f64, hi: f64) -> f64 {
    let mut acc = 0.0;
    for (k, &p) in psd.iter().enumerate() {
        let f = k as f64 * DF;
        if f > lo && f <= hi + 1e-9 {
            acc += p;
        }
    }
    acc * DF
}

/// Indices 0..27 from the definitions.
pub fn spectral(psd: &[f64]) -> Vec<f64> {
    let total = band_sum(psd, 0.0, 12.0);
    let mut out = vec![0.0; 27];
    if total <= 0.0 {
        return out;
    }
    out[0] = total;
    let mut best = (0usize, f64::MIN);
    for (k, &p) in psd.iter().enumerate() {
        let f = k as f64 * DF;
        if f > 0.5 && f <= 12.8 + 1e-9 && p > best.1 {
            best = (k, p);
        }
    }
    out[1] = best.0 as f64 * DF;
    for (e, pct) in [(2usize, 0.80f64), (3, 0.90), (4, 0.95)] {
        let mut cum = 0.0;
        for (k, &p) in psd.iter().enumerate() {
            let f = k as f64 * DF;
            if f > 0.0 && f <= 12.0 + 1e-9 {
                cum += p * DF;
                if cum >= pct * total - 1e-15 {
                    out[e] = f;
                    break;
                }
            }
        }
    }
    for b in 0..11 {
        let power = band_sum(psd, b as f64, b as f64 + 2.0);
        out[5 + b] = power;
        out[16 + b] = power / total;
    }
    out
}

/// Normalized spectral entropy over (0, 12.8].
pub fn spectral_entropy(psd: &[f64]) -> f64 {
    let mut bins = Vec::new();
    for (k, &p) in psd.iter().enumerate() {
        let f = k as f64 * DF;
        if f > 0.0 && f <= 12.8 + 1e-9 {
            bins.push(p);
        }
    }
    let total: f64 = bins.iter().sum();
    if total <= 0.0 {
        return 0.0;
    }
    let h: f64 = -bins
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| {
            let q = p / total;
            q * q.ln()
        })
        .sum::<f64>();
    h / (bins.len() as f64).ln()
}

// ---------------------------------------------------------------------------
// time domain
// ---------------------------------------------------------------------------

pub fn var(x: &[f64]) -> f64 {
    let m = x.iter().sum::<f64>() / x.len() as f64;
    x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / x.len() as f64
}

pub fn delta(x: &[f64]) -> Vec<f64> {
    (1..x.len()).map(|i| x[i] - x[i - 1]).collect()
}

pub fn hjorth(x: &[f64]) -> (f64, f64, f64) {
    let v0 = var(x);
    if v0 <= 0.0 {
        return (0.0, 0.0, 0.0);
    }
    let d1 = delta(x);
    let v1 = var(&d1);
    let mob = (v1 / v0).sqrt();
    if v1 <= 0.0 {
        return (v0, mob, 0.0);
    }
    let v2 = var(&delta(&d1));
    (v0, mob, (v2 / v1).sqrt() / mob)
}

pub fn zero_crossings(x: &[f64]) -> f64 {
    let mut count = 0usize;
    let mut prev = 0.0f64;
    for &v in x {
        let s = if v == 0.0 { prev } else { v.signum() };
        if prev != 0.0 && s != 0.0 && s != prev {
            count += 1;
        }
        if s != 0.0 {
            prev = s;
        }
    }
    count as f64
}

/// AR(p) final prediction error by directly solving the Yule-Walker system
/// with Gaussian elimination (partial pivoting).
pub fn ar_errors(x: &[f64]) -> [f64; 9] {
    let n = x.len();
    let mut r = [0.0f64; 10];
    for (k, rk) in r.iter_mut().enumerate() {
        for i in 0..n - k {
            *rk += x[i] * x[i + k];
        }
        *rk /= n as f64;
    }
    let mut out = [0.0f64; 9];
    if r[0] <= 0.0 {
        return out;
    }
    for p in 1..=9 {
        // solve R a = rhs with R[i][j] = r[|i-j|], rhs[i] = r[i+1]
        let mut m = vec![vec![0.0f64; p + 1]; p];
        for i in 0..p {
            for j in 0..p {
                m[i][j] = r[i.abs_diff(j)];
            }
            m[i][p] = r[i + 1];
        }
        for col in 0..p {
            let pivot = (col..p)
                .max_by(|&a, &b| m[a][col].abs().partial_cmp(&m[b][col].abs()).unwrap())
                .unwrap();
            m.swap(col, pivot);
            let diag = m[col][col];
            if diag.abs() < 1e-300 {
                continue;
            }
            for row in 0..p {
                if row != col {
                    let f = m[row][col] / diag;
                    for j in col..=p {
                        m[row][j] -= f * m[col][j];
                    }
                }
            }
        }
        let a: Vec<f64> = (0..p).map(|i| m[i][p] / m[i][i]).collect();
        let err = r[0]
            - a.iter()
                .enumerate()
                .map(|(j, aj)| aj * r[j + 1])
                .sum::<f64>();
        out[p - 1] = err.max(0.0);
    }
    out
}

/// Daubechies 8-tap detail energy over 5 periodized levels, via the
/// Parseval route: total energy minus the level-5 approximation energy.
pub fn wavelet_energy(x: &[f64]) -> f64 {
    const LO: [f64; 8] = [
        0.230_377_813_308_855_23,
        0.714_846_570_552_541_5,
        0.630_880_767_929_590_4,
        -0.027_983_769_416_983_85,
        -0.187_034_811_718_881_14,
        0.030_841_381_835_986_965,
        0.032_883_011_666_982_945,
        -0.010_597_401_784_997_278,
    ];
    let mut approx: Vec<f64> = x.to_vec();
    for _level in 0..5 {
        let n = approx.len();
        let mut next = Vec::with_capacity(n / 2);
        for k in 0..n / 2 {
            let mut acc = 0.0;
            for (j, &h) in LO.iter().enumerate() {
                acc += h * approx[(2 * k + j) % n];
            }
            next.push(acc);
        }
        approx = next;
    }
    let total: f64 = x.iter().map(|v| v * v).sum();
    let a5: f64 = approx.iter().map(|v| v * v).sum();
    total - a5
}

pub fn shannon_entropy(x: &[f64]) -> f64 {
    let lo = x.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if hi <= lo {
        return 0.0;
    }
    let mut counts = [0usize; 64];
    for &v in x {
        let b = (((v - lo) / (hi - lo)) * 64.0).floor() as usize;
        counts[b.min(63)] += 1;
    }
    -counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / x.len() as f64;
            p * p.ln()
        })
        .sum::<f64>()
}

/// Singular values of the delay-embedding matrix by one-sided Jacobi
/// orthogonalization of the columns.
pub fn embedding_singular_values(x: &[f64]) -> Vec<f64> {
    const DIM: usize = 20;
    let rows = x.len() - DIM + 1;
    // columns of the embedding matrix
    let mut cols: Vec<Vec<f64>> = (0..DIM)
        .map(|j| (0..rows).map(|i| x[i + j]).collect())
        .collect();
    for _sweep in 0..60 {
        let mut off = 0.0f64;
        for p in 0..DIM {
            for q in p + 1..DIM {
                let (mut app, mut aqq, mut apq) = (0.0, 0.0, 0.0);
                for i in 0..rows {
                    app += cols[p][i] * cols[p][i];
                    aqq += cols[q][i] * cols[q][i];
                    apq += cols[p][i] * cols[q][i];
                }
                off += apq.abs();
                if apq.abs() < 1e-30 {
                    continue;
                }
                let tau = (aqq - app) / (2.0 * apq);
                let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..rows {
                    let (vp, vq) = (cols[p][i], cols[q][i]);
                    cols[p][i] = c * vp - s * vq;
                    cols[q][i] = s * vp + c * vq;
                }
            }
        }
        if off < 1e-22 {
            break;
        }
    }
    let mut sigma: Vec<f64> = cols
        .iter()
        .map(|col| col.iter().map(|v| v * v).sum::<f64>().sqrt())
        .collect();
    sigma.sort_by(|a, b| b.partial_cmp(a).unwrap());
    sigma
}

/// The full 55-value reference vector.
pub fn features(x: &[f64]) -> Vec<f64> {
    let psd = psd(x);
    let mut out = vec![0.0f64; 55];
    out[..27].copy_from_slice(&spectral(&psd));

    out[27] = wavelet_energy(x);
    out[28] = (1..x.len()).map(|i| (x[i] - x[i - 1]).abs()).sum();
    out[29] = (1..x.len() - 1)
        .filter(|&i| (x[i] - x[i - 1]) * (x[i + 1] - x[i]) < 0.0)
        .count() as f64;
    out[30] = (x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt();

    let (act, mob, comp) = hjorth(x);
    out[31] = act;
    out[32] = mob;
    out[33] = comp;

    let d1 = delta(x);
    let d2 = delta(&d1);
    out[34] = zero_crossings(x);
    out[35] = zero_crossings(&d1);
    out[36] = zero_crossings(&d2);

    out[37..46].copy_from_slice(&ar_errors(x));

    let v0 = var(x);
    if v0 > 0.0 {
        let m = x.iter().sum::<f64>() / x.len() as f64;
        let m3 = x.iter().map(|v| (v - m).powi(3)).sum::<f64>() / x.len() as f64;
        let m4 = x.iter().map(|v| (v - m).powi(4)).sum::<f64>() / x.len() as f64;
        out[46] = m3 / v0.powf(1.5);
        out[47] = m4 / (v0 * v0);
    }
    out[48] = (1..x.len() - 1)
        .map(|i| x[i] * x[i] - x[i - 1] * x[i + 1])
        .sum::<f64>()
        / (x.len() - 2) as f64;
    out[49] = var(&d1);
    out[50] = var(&d2);

    if v0 > 0.0 {
        out[51] = shannon_entropy(x);
        let sigma = embedding_singular_values(x);
        let total: f64 = sigma.iter().sum();
        let norm: Vec<f64> = sigma.iter().map(|s| s / total).collect();
        out[52] = -norm
            .iter()
            .filter(|&&s| s > 0.0)
            .map(|&s| s * s.ln())
            .sum::<f64>();
        out[53] = norm
            .windows(2)
            .filter(|w| w[0] > 1e-300)
            .map(|w| (w[1] - w[0]) * (w[1] - w[0]) / w[0])
            .sum();
        out[54] = spectral_entropy(&psd);
    }
    out
}

// ---------------------------------------------------------------------------
// network layers
// ---------------------------------------------------------------------------

/// Plain quadruple-loop valid cross-correlation.
pub fn conv_naive(
    x: &[f64],
    c_in: usize,
    l: usize,
    w: &[f64],
    bias: &[f64],
    k_out: usize,
) -> Vec<f64> {
    let l_out = l - 3;
    let mut y = vec![0.0f64; k_out * l_out];
    for k in 0..k_out {
        for i in 0..l_out {
            let mut acc = bias[k];
            for c in 0..c_in {
                for j in 0..4 {
                    acc += w[(k * c_in + c) * 4 + j] * x[c * l + i + j];
                }
            }
            y[k * l_out + i] = acc;
        }
    }
    y
}

pub fn pool_naive(x: &[f64], maps: usize, l: usize, width: usize, stride: usize) -> Vec<f64> {
    let l_out = (l - width) / stride + 1;
    let mut y = vec![0.0f64; maps * l_out];
    for m in 0..maps {
        for i in 0..l_out {
            let mut acc = 0.0;
            for t in 0..width {
                acc += x[m * l + i * stride + t];
            }
            y[m * l_out + i] = acc / width as f64;
        }
    }
    y
}
