//! The 55-element feature vector computed from one 256-sample epoch, plus
//! train-set z-score normalization.
//!
//! Index layout (frozen; a golden test pins it):
//!
//! | idx   | feature                                          |
//! |-------|--------------------------------------------------|
//! | 0     | total power (0-12 Hz]                            |
//! | 1     | peak frequency of spectrum (0.5-12.8 Hz]         |
//! | 2-4   | spectral edge frequency 80/90/95%                |
//! | 5-15  | power in 2 Hz sub-bands (0-2, 1-3, ..., 10-12)   |
//! | 16-26 | the same sub-bands normalized by total power     |
//! | 27    | wavelet energy (db4 details, levels 1-5)         |
//! | 28    | curve length                                     |
//! | 29    | number of maxima and minima                      |
//! | 30    | RMS amplitude                                    |
//! | 31-33 | Hjorth activity / mobility / complexity          |
//! | 34-36 | zero crossings of raw / delta / delta-delta      |
//! | 37-45 | autoregressive modelling error, orders 1-9       |
//! | 46    | skewness                                         |
//! | 47    | kurtosis (non-excess)                            |
//! | 48    | nonlinear (Teager) energy                        |
//! | 49-50 | variance of delta / delta-delta                  |
//! | 51    | Shannon entropy (64-bin amplitude histogram)     |
//! | 52    | SVD entropy (embedding dim 20, delay 1)          |
//! | 53    | Fisher information (same singular spectrum)      |
//! | 54    | spectral entropy over (0-12.8 Hz], in [0,1]      |

use crate::error::{Error, Result};

pub const N_FEATURES: usize = 55;
pub const EPOCH_LEN: usize = 256;
const FS: f64 = 32.0;
const N_PSD: usize = EPOCH_LEN / 2 + 1;

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub values: [f64; N_FEATURES],
}

/// Per-feature z-score parameters fitted on training rows only.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureNormalizer {
    pub mean: [f64; N_FEATURES],
    /// Population std, floored at 1e-12.
    pub std: [f64; N_FEATURES],
}

// ---------------------------------------------------------------------------
// Periodogram
// ---------------------------------------------------------------------------

/// In-place iterative radix-2 FFT (decimation in time).
fn fft(re: &mut [f64], im: &mut [f64]) {
    let n = re.len();
    debug_assert!(n.is_power_of_two());
    // bit reversal
    let mut j = 0usize;
    for i in 1..n {
        let mut bit = n >> 1;
        while j & bit != 0 {
            j ^= bit;
            bit >>= 1;
        }
        j |= bit;
        if i < j {
            re.swap(i, j);
            im.swap(i, j);
        }
    }
    let mut len = 2;
    while len <= n {
        let ang = -2.0 * std::f64::consts::PI / len as f64;
        let (wr, wi) = (ang.cos(), ang.sin());
        let mut i = 0;
        while i < n {
            let (mut cr, mut ci) = (1.0f64, 0.0f64);
            for k in 0..len / 2 {
                let (ur, ui) = (re[i + k], im[i + k]);
                let (vr, vi) = (
                    re[i + k + len / 2] * cr - im[i + k + len / 2] * ci,
                    re[i + k + len / 2] * ci + im[i + k + len / 2] * cr,
                );
                re[i + k] = ur + vr;
                im[i + k] = ui + vi;
                re[i + k + len / 2] = ur - vr;
                im[i + k + len / 2] = ui - vi;
                let ncr = cr * wr - ci * wi;
                ci = cr * wi + ci * wr;
                cr = ncr;
            }
            i += len;
        }
        len <<= 1;
    }
}

/// Hann-windowed single-sided periodogram of a 256-sample epoch at 32 Hz.
/// Returns (frequencies, power spectral density), 129 bins at 0.125 Hz.
pub fn periodogram(x: &[f64]) -> (Vec<f64>, Vec<f64>) {
    assert_eq!(x.len(), EPOCH_LEN, "periodogram expects a 256-sample epoch");
    let n = EPOCH_LEN;
    let mut window_norm = 0.0;
    let mut re = vec![0.0f64; n];
    let mut im = vec![0.0f64; n];
    for i in 0..n {
        let w = 0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / (n - 1) as f64).cos();
        window_norm += w * w;
        re[i] = x[i] * w;
    }
    fft(&mut re, &mut im);
    let scale = 1.0 / (FS * window_norm);
    let freqs: Vec<f64> = (0..N_PSD).map(|k| k as f64 * FS / n as f64).collect();
    let psd: Vec<f64> = (0..N_PSD)
        .map(|k| {
            let p = (re[k] * re[k] + im[k] * im[k]) * scale;
            if k == 0 || k == n / 2 {
                p
            } else {
                2.0 * p
            }
        })
        .collect();
    (freqs, psd)
}

// ---------------------------------------------------------------------------
// Frequency-domain features (indices 0-26)
// ---------------------------------------------------------------------------

const DELTA_F: f64 = FS / EPOCH_LEN as f64; // 0.125 Hz

/// Bin range (lo, hi]: k such that lo < k*0.125 <= hi.
fn bins_in(lo: f64, hi: f64) -> std::ops::RangeInclusive<usize> {
    let first = (lo / DELTA_F).floor() as usize + 1;
    let last = (hi / DELTA_F + 1e-9).floor() as usize;
    first..=last.min(N_PSD - 1)
}

/// Indices 0-26: total power, peak frequency, spectral edges, sub-band
/// powers, normalized sub-band powers. A zero spectrum yields all zeros.
pub fn spectral_feature_set(freqs: &[f64], psd: &[f64]) -> [f64; 27] {
    let mut out = [0.0f64; 27];
    let total_band = bins_in(0.0, 12.0);
    let total: f64 = psd[total_band.clone()].iter().sum::<f64>() * DELTA_F;
    if total <= 0.0 {
        return out;
    }
    out[0] = total;

    // peak frequency over (0.5, 12.8]
    let peak_bins = bins_in(0.5, 12.8);
    let mut best = (*peak_bins.start(), f64::MIN);
    for k in peak_bins {
        if psd[k] > best.1 {
            best = (k, psd[k]);
        }
    }
    out[1] = freqs[best.0];

    // spectral edge frequencies over the same (0, 12] support as the total
    let mut cum = 0.0;
    let edges = [0.8 * total, 0.9 * total, 0.95 * total];
    let mut edge_idx = 0;
    for k in total_band {
        cum += psd[k] * DELTA_F;
        while edge_idx < 3 && cum >= edges[edge_idx] - 1e-15 {
            out[2 + edge_idx] = freqs[k];
            edge_idx += 1;
        }
        if edge_idx == 3 {
            break;
        }
    }
    // floating-point slack: any edge not reached takes the last bin
    while edge_idx < 3 {
        out[2 + edge_idx] = 12.0;
        edge_idx += 1;
    }

    // eleven 2 Hz-wide bands at 1 Hz step
    for (i, lo) in (0..11).enumerate() {
        let band: f64 = psd[bins_in(lo as f64, lo as f64 + 2.0)].iter().sum::<f64>() * DELTA_F;
        out[5 + i] = band;
        out[16 + i] = band / total;
    }
    out
}

// ---------------------------------------------------------------------------
// Time-domain features
// ---------------------------------------------------------------------------

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

fn population_var(x: &[f64]) -> f64 {
    let m = mean(x);
    x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / x.len() as f64
}

fn diff(x: &[f64]) -> Vec<f64> {
    x.windows(2).map(|w| w[1] - w[0]).collect()
}

/// Hjorth activity, mobility, complexity. Zero-variance input gives (0,0,0).
pub fn hjorth(x: &[f64]) -> (f64, f64, f64) {
    let var0 = population_var(x);
    if var0 <= 0.0 {
        return (0.0, 0.0, 0.0);
    }
    let d1 = diff(x);
    let var1 = population_var(&d1);
    let mobility = (var1 / var0).sqrt();
    if var1 <= 0.0 {
        return (var0, mobility, 0.0);
    }
    let d2 = diff(&d1);
    let var2 = population_var(&d2);
    let mobility_d = (var2 / var1).sqrt();
    (var0, mobility, mobility_d / mobility)
}

/// Final prediction-error variance of AR(p) fits for p = 1..9, by
/// Levinson-Durbin on the biased autocorrelation. Non-increasing in p.
pub fn ar_errors(x: &[f64]) -> [f64; 9] {
    let n = x.len();
    let mut r = [0.0f64; 10];
    for k in 0..10 {
        let mut acc = 0.0;
        for i in 0..n - k {
            acc += x[i] * x[i + k];
        }
        r[k] = acc / n as f64;
    }
    let mut out = [0.0f64; 9];
    if r[0] <= 0.0 {
        return out;
    }
    let mut a = [0.0f64; 10];
    let mut err = r[0];
    for p in 1..=9 {
        let mut acc = r[p];
        for j in 1..p {
            acc -= a[j] * r[p - j];
        }
        let k = if err > 0.0 { acc / err } else { 0.0 };
        let mut new_a = a;
        new_a[p] = k;
        for j in 1..p {
            new_a[j] = a[j] - k * a[p - j];
        }
        a = new_a;
        err *= 1.0 - k * k;
        err = err.max(0.0);
        out[p - 1] = err;
    }
    out
}

/// Sign-change count; exact zeros inherit the previous established sign.
pub fn zero_crossings(x: &[f64]) -> usize {
    let mut prev = 0i8;
    let mut count = 0;
    for &v in x {
        let s = if v > 0.0 {
            1
        } else if v < 0.0 {
            -1
        } else {
            prev
        };
        if s != 0 && prev != 0 && s != prev {
            count += 1;
        }
        if s != 0 {
            prev = s;
        }
    }
    count
}

/// Daubechies 8-tap (4 vanishing moments) low-pass decomposition filter.
const DB4_LO: [f64; 8] = [
    0.230_377_813_308_855_23,
    0.714_846_570_552_541_5,
    0.630_880_767_929_590_4,
    -0.027_983_769_416_983_85,
    -0.187_034_811_718_881_14,
    0.030_841_381_835_986_965,
    0.032_883_011_666_982_945,
    -0.010_597_401_784_997_278,
];

fn db4_hi() -> [f64; 8] {
    let mut g = [0.0f64; 8];
    for (k, g_k) in g.iter_mut().enumerate() {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        *g_k = sign * DB4_LO[7 - k];
    }
    g
}

/// One periodized DWT level: approximation and detail at half length.
fn dwt_level(x: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = x.len();
    let hi = db4_hi();
    let half = n / 2;
    let mut approx = Vec::with_capacity(half);
    let mut detail = Vec::with_capacity(half);
    for k in 0..half {
        let (mut a, mut d) = (0.0, 0.0);
        for j in 0..8 {
            let v = x[(2 * k + j) % n];
            a += DB4_LO[j] * v;
            d += hi[j] * v;
        }
        approx.push(a);
        detail.push(d);
    }
    (approx, detail)
}

/// Total energy of detail coefficients over decomposition levels 1-5.
pub fn wavelet_energy(x: &[f64]) -> f64 {
    let mut approx = x.to_vec();
    let mut energy = 0.0;
    for _ in 0..5 {
        let (a, d) = dwt_level(&approx);
        energy += d.iter().map(|v| v * v).sum::<f64>();
        approx = a;
    }
    energy
}

/// Indices 27-30 and 46-50: wavelet energy, curve length, extrema count,
/// RMS, skewness, kurtosis, Teager energy, variance of the first and second
/// differences.
pub fn misc_time_set(x: &[f64]) -> [f64; 9] {
    let n = x.len();
    let curve_length: f64 = x.windows(2).map(|w| (w[1] - w[0]).abs()).sum();
    let extrema = x
        .windows(3)
        .filter(|w| (w[1] - w[0]) * (w[2] - w[1]) < 0.0)
        .count() as f64;
    let rms = (x.iter().map(|v| v * v).sum::<f64>() / n as f64).sqrt();

    let m = mean(x);
    let var = population_var(x);
    let (skew, kurt) = if var > 0.0 {
        let m3 = x.iter().map(|v| (v - m).powi(3)).sum::<f64>() / n as f64;
        let m4 = x.iter().map(|v| (v - m).powi(4)).sum::<f64>() / n as f64;
        (m3 / var.powf(1.5), m4 / (var * var))
    } else {
        (0.0, 0.0)
    };

    let teager = if n >= 3 {
        x.windows(3).map(|w| w[1] * w[1] - w[0] * w[2]).sum::<f64>() / (n - 2) as f64
    } else {
        0.0
    };

    let d1 = diff(x);
    let d2 = diff(&d1);
    [
        wavelet_energy(x),
        curve_length,
        extrema,
        rms,
        skew,
        kurt,
        teager,
        population_var(&d1),
        population_var(&d2),
    ]
}

// ---------------------------------------------------------------------------
// Information-theory features (indices 51-54)
// ---------------------------------------------------------------------------

const EMBED_DIM: usize = 20;
const HIST_BINS: usize = 64;

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations.
fn jacobi_eigenvalues(mut a: Vec<Vec<f64>>) -> Vec<f64> {
    let n = a.len();
    for _sweep in 0..50 {
        let mut off = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                off += a[i][j] * a[i][j];
            }
        }
        if off < 1e-24 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    (0..n).map(|i| a[i][i]).collect()
}

/// Normalized singular values (descending) of the delay-embedding matrix
/// with dimension 20 and delay 1.
fn embedding_singular_spectrum(x: &[f64]) -> Vec<f64> {
    let rows = x.len() - EMBED_DIM + 1;
    // Gram matrix G = A^T A, singular values are sqrt(eig(G))
    let mut gram = vec![vec![0.0f64; EMBED_DIM]; EMBED_DIM];
    for (i, row) in gram.iter_mut().enumerate() {
        for j in i..EMBED_DIM {
            let mut acc = 0.0;
            for r in 0..rows {
                acc += x[r + i] * x[r + j];
            }
            row[j] = acc;
        }
    }
    for i in 0..EMBED_DIM {
        for j in 0..i {
            gram[i][j] = gram[j][i];
        }
    }
    let mut sigma: Vec<f64> = jacobi_eigenvalues(gram)
        .into_iter()
        .map(|l| l.max(0.0).sqrt())
        .collect();
    sigma.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let s: f64 = sigma.iter().sum();
    if s > 0.0 {
        for v in &mut sigma {
            *v /= s;
        }
    }
    sigma
}

/// Indices 51-54: Shannon entropy of the 64-bin amplitude histogram, SVD
/// entropy, Fisher information, normalized spectral entropy. Zero-variance
/// input gives four zeros.
pub fn info_theory_set(x: &[f64], psd: &[f64]) -> [f64; 4] {
    let mut out = [0.0f64; 4];
    if population_var(x) <= 0.0 {
        return out;
    }

    // Shannon entropy over the amplitude histogram
    let lo = x.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let width = hi - lo;
    let mut counts = [0usize; HIST_BINS];
    for &v in x {
        let b = (((v - lo) / width) * HIST_BINS as f64).floor() as usize;
        counts[b.min(HIST_BINS - 1)] += 1;
    }
    let n = x.len() as f64;
    out[0] = -counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            p * p.ln()
        })
        .sum::<f64>();

    // SVD entropy and Fisher information from the embedding spectrum
    let sigma = embedding_singular_spectrum(x);
    out[1] = -sigma
        .iter()
        .filter(|&&s| s > 0.0)
        .map(|&s| s * s.ln())
        .sum::<f64>();
    out[2] = sigma
        .windows(2)
        .filter(|w| w[0] > 1e-300)
        .map(|w| (w[1] - w[0]) * (w[1] - w[0]) / w[0])
        .sum::<f64>();

    // normalized spectral entropy over (0, 12.8]
    let band = bins_in(0.0, 12.8);
    let n_bins = band.end() - band.start() + 1;
    let total: f64 = psd[band.clone()].iter().sum();
    if total > 0.0 {
        let h: f64 = -psd[band]
            .iter()
            .filter(|&&p| p > 0.0)
            .map(|&p| {
                let q = p / total;
                q * q.ln()
            })
            .sum::<f64>();
        out[3] = h / (n_bins as f64).ln();
    }
    out
}

// ---------------------------------------------------------------------------
// Assembly and normalization
// ---------------------------------------------------------------------------

/// Computes the full 55-feature vector for a 256-sample epoch.
pub fn extract_features(x: &[f64]) -> Result<FeatureVector> {
    if x.len() != EPOCH_LEN {
        return Err(Error::invalid(format!(
            "feature extraction expects {EPOCH_LEN} samples, got {}",
            x.len()
        )));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("non-finite sample in epoch"));
    }
    let (freqs, psd) = periodogram(x);
    let spectral = spectral_feature_set(&freqs, &psd);
    let misc = misc_time_set(x);
    let (activity, mobility, complexity) = hjorth(x);
    let d1 = diff(x);
    let d2 = diff(&d1);
    let ar = ar_errors(x);
    let info = info_theory_set(x, &psd);

    let mut v = [0.0f64; N_FEATURES];
    v[..27].copy_from_slice(&spectral);
    v[27..31].copy_from_slice(&misc[..4]);
    v[31] = activity;
    v[32] = mobility;
    v[33] = complexity;
    v[34] = zero_crossings(x) as f64;
    v[35] = zero_crossings(&d1) as f64;
    v[36] = zero_crossings(&d2) as f64;
    v[37..46].copy_from_slice(&ar);
    v[46..51].copy_from_slice(&misc[4..]);
    v[51..55].copy_from_slice(&info);

    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::numeric("non-finite feature value"));
    }
    Ok(FeatureVector { values: v })
}

/// Fits per-column z-score parameters (population std, floored at 1e-12).
pub fn fit_normalizer(rows: &[FeatureVector]) -> Result<FeatureNormalizer> {
    if rows.len() < 2 {
        return Err(Error::invalid("normalizer needs at least 2 training rows"));
    }
    let n = rows.len() as f64;
    let mut mean = [0.0f64; N_FEATURES];
    for row in rows {
        for (m, v) in mean.iter_mut().zip(&row.values) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= n;
    }
    let mut std = [0.0f64; N_FEATURES];
    for row in rows {
        for ((s, v), m) in std.iter_mut().zip(&row.values).zip(&mean) {
            *s += (v - m) * (v - m);
        }
    }
    for s in &mut std {
        *s = (*s / n).sqrt().max(1e-12);
    }
    Ok(FeatureNormalizer { mean, std })
}

pub fn apply_normalizer(fv: &FeatureVector, norm: &FeatureNormalizer) -> FeatureVector {
    let mut values = [0.0f64; N_FEATURES];
    for i in 0..N_FEATURES {
        values[i] = (fv.values[i] - norm.mean[i]) / norm.std[i];
    }
    FeatureVector { values }
}
