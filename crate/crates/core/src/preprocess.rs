//! Shared signal conditioning: zero-phase band-pass filtering, decimation to
//! 32 Hz, epoching, epoch labeling, and per-epoch standardization.

use crate::eeg::{AnnotationSet, Recording};
use crate::error::{Error, Result};

pub const BAND_LO_HZ: f64 = 0.5;
pub const BAND_HI_HZ: f64 = 12.8;
pub const TARGET_RATE_HZ: f64 = 32.0;
pub const EPOCH_SAMPLES: usize = 256;
/// Band-pass order (two biquad sections).
const FILTER_ORDER: usize = 4;

// ---------------------------------------------------------------------------
// Butterworth band-pass design
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy)]
struct Complex {
    re: f64,
    im: f64,
}

impl Complex {
    fn new(re: f64, im: f64) -> Self {
        Complex { re, im }
    }

    fn add(self, o: Complex) -> Complex {
        Complex::new(self.re + o.re, self.im + o.im)
    }

    fn sub(self, o: Complex) -> Complex {
        Complex::new(self.re - o.re, self.im - o.im)
    }

    fn mul(self, o: Complex) -> Complex {
        Complex::new(
            self.re * o.re - self.im * o.im,
            self.re * o.im + self.im * o.re,
        )
    }

    fn div(self, o: Complex) -> Complex {
        let d = o.re * o.re + o.im * o.im;
        Complex::new(
            (self.re * o.re + self.im * o.im) / d,
            (self.im * o.re - self.re * o.im) / d,
        )
    }

    fn scale(self, k: f64) -> Complex {
        Complex::new(self.re * k, self.im * k)
    }

    fn sqrt(self) -> Complex {
        let r = (self.re * self.re + self.im * self.im).sqrt();
        let re = ((r + self.re) / 2.0).max(0.0).sqrt();
        let im = ((r - self.re) / 2.0).max(0.0).sqrt();
        Complex::new(re, if self.im < 0.0 { -im } else { im })
    }

    fn norm_sq(self) -> f64 {
        self.re * self.re + self.im * self.im
    }
}

/// One second-order section, direct form II transposed.
#[derive(Debug, Clone, Copy)]
pub struct Biquad {
    pub b: [f64; 3],
    /// a[0] is normalized to 1 and omitted.
    pub a: [f64; 2],
}

impl Biquad {
    /// Squared magnitude response at digital frequency `w` (rad/sample).
    fn mag_sq(&self, w: f64) -> f64 {
        let z1 = Complex::new(w.cos(), -w.sin());
        let z2 = z1.mul(z1);
        let num = Complex::new(self.b[0], 0.0)
            .add(z1.scale(self.b[1]))
            .add(z2.scale(self.b[2]));
        let den = Complex::new(1.0, 0.0)
            .add(z1.scale(self.a[0]))
            .add(z2.scale(self.a[1]));
        num.norm_sq() / den.norm_sq()
    }
}

/// Designs the 4th-order Butterworth band-pass as two biquads via the analog
/// prototype, low-pass-to-band-pass transform, and bilinear mapping with
/// frequency prewarping. Gain is normalized to 1 at the geometric center.
pub fn design_bandpass(f_lo: f64, f_hi: f64, fs: f64) -> Vec<Biquad> {
    assert!(0.0 < f_lo && f_lo < f_hi && f_hi < fs / 2.0);
    let w_lo = 2.0 * fs * (std::f64::consts::PI * f_lo / fs).tan();
    let w_hi = 2.0 * fs * (std::f64::consts::PI * f_hi / fs).tan();
    let bw = w_hi - w_lo;
    let w0_sq = w_lo * w_hi;

    // 2nd-order Butterworth prototype pole (upper half plane).
    let proto = Complex::new(-(0.5f64).sqrt(), (0.5f64).sqrt());

    // Each prototype pole maps to two band-pass poles; with the conjugate
    // prototype pole these form two conjugate pairs, one per biquad.
    let bp = proto.scale(bw / 2.0);
    let disc = bp.mul(bp).sub(Complex::new(w0_sq, 0.0)).sqrt();
    let poles_upper = [bp.add(disc), bp.sub(disc)];

    let two_fs = Complex::new(2.0 * fs, 0.0);
    let mut sections: Vec<Biquad> = poles_upper
        .iter()
        .map(|&s| {
            let zp = two_fs.add(s).div(two_fs.sub(s));
            // numerator (z-1)(z+1): one zero from s=0, one from s=infinity
            Biquad {
                b: [1.0, 0.0, -1.0],
                a: [-2.0 * zp.re, zp.norm_sq()],
            }
        })
        .collect();

    // Normalize to unit gain at the (warped) center frequency.
    let f_center = (f_lo * f_hi).sqrt();
    let wc = 2.0 * std::f64::consts::PI * f_center / fs;
    let total: f64 = sections.iter().map(|s| s.mag_sq(wc)).product();
    let per_section = (1.0 / total).sqrt().sqrt(); // amplitude gain per biquad
    for s in &mut sections {
        for b in &mut s.b {
            *b *= per_section;
        }
    }
    sections
}

/// Single pass of one biquad with the given initial state (DF2T).
fn biquad_filter(sec: &Biquad, x: &[f64], zi: [f64; 2], out: &mut Vec<f64>) {
    out.clear();
    out.reserve(x.len());
    let (b0, b1, b2) = (sec.b[0], sec.b[1], sec.b[2]);
    let (a1, a2) = (sec.a[0], sec.a[1]);
    let (mut z1, mut z2) = (zi[0], zi[1]);
    for &v in x {
        let y = b0 * v + z1;
        z1 = b1 * v - a1 * y + z2;
        z2 = b2 * v - a2 * y;
        out.push(y);
    }
}

/// Steady-state unit-step state for a biquad, as used to suppress start-up
/// transients in forward-backward filtering.
fn biquad_zi(sec: &Biquad) -> [f64; 2] {
    let h1 = (sec.b[0] + sec.b[1] + sec.b[2]) / (1.0 + sec.a[0] + sec.a[1]);
    let z2 = sec.b[2] - sec.a[1] * h1;
    let z1 = sec.b[1] - sec.a[0] * h1 + z2;
    [z1, z2]
}

fn cascade_filter(sections: &[Biquad], x: &mut Vec<f64>, scratch: &mut Vec<f64>) {
    for sec in sections {
        let zi = biquad_zi(sec);
        let x0 = x[0];
        biquad_filter(sec, x, [zi[0] * x0, zi[1] * x0], scratch);
        std::mem::swap(x, scratch);
    }
}

/// Forward-backward (zero-phase) application of a biquad cascade with odd
/// reflection padding of `pad` samples on each side.
pub fn filtfilt(sections: &[Biquad], x: &[f64], pad: usize) -> Result<Vec<f64>> {
    let n = x.len();
    if n <= pad {
        return Err(Error::invalid("signal too short"));
    }
    let mut ext = Vec::with_capacity(n + 2 * pad);
    for i in (1..=pad).rev() {
        ext.push(2.0 * x[0] - x[i]);
    }
    ext.extend_from_slice(x);
    for i in (1..=pad).rev() {
        ext.push(2.0 * x[n - 1] - x[n - 1 - i]);
    }

    let mut scratch = Vec::new();
    cascade_filter(sections, &mut ext, &mut scratch);
    ext.reverse();
    cascade_filter(sections, &mut ext, &mut scratch);
    ext.reverse();

    Ok(ext[pad..pad + n].to_vec())
}

/// Zero-phase 0.5-12.8 Hz band-pass at sampling rate `fs`.
pub fn bandpass_filter(x: &[f64], fs: f64) -> Result<Vec<f64>> {
    if !(fs > 2.0 * BAND_HI_HZ) {
        return Err(Error::invalid(format!(
            "sampling rate {fs} Hz too low for a {BAND_HI_HZ} Hz cutoff"
        )));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("non-finite sample in filter input"));
    }
    let sections = design_bandpass(BAND_LO_HZ, BAND_HI_HZ, fs);
    filtfilt(&sections, x, 3 * FILTER_ORDER)
}

// ---------------------------------------------------------------------------
// Decimation and epoching
// ---------------------------------------------------------------------------

/// Keep-every-`fs_in/fs_out`-th decimator. The input must already be
/// band-limited below `fs_out/2` (the 12.8 Hz band-pass guarantees it).
pub fn decimate(x: &[f64], fs_in: f64, fs_out: f64) -> Result<Vec<f64>> {
    let ratio = fs_in / fs_out;
    if (ratio - ratio.round()).abs() > 1e-9 || ratio < 1.0 {
        return Err(Error::invalid(format!(
            "decimation ratio {fs_in}/{fs_out} is not a positive integer"
        )));
    }
    let ratio = ratio.round() as usize;
    let n_out = x.len() / ratio;
    Ok((0..n_out).map(|k| x[k * ratio]).collect())
}

/// One 8 s analysis window of a single channel.
#[derive(Debug, Clone, PartialEq)]
pub struct Epoch {
    pub channel_index: usize,
    pub start_time_s: f64,
    /// Exactly 256 samples (8 s at 32 Hz).
    pub samples: Vec<f64>,
    pub label: Option<bool>,
}

/// Windowing policy: 8 s windows, stride 4 s for the feature/SVM path and
/// 1 s for the network path.
#[derive(Debug, Clone, Copy)]
pub struct EpochingPolicy {
    pub window_s: f64,
    pub stride_s: f64,
    /// An epoch is seizure iff the seizure fraction of its seconds exceeds
    /// this threshold (strictly).
    pub label_threshold: f64,
}

impl EpochingPolicy {
    pub fn svm() -> Self {
        EpochingPolicy {
            window_s: 8.0,
            stride_s: 4.0,
            label_threshold: 0.5,
        }
    }

    pub fn fcnn() -> Self {
        EpochingPolicy {
            window_s: 8.0,
            stride_s: 1.0,
            label_threshold: 0.5,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.stride_s > 0.0 && self.stride_s <= self.window_s) {
            return Err(Error::invalid("stride must be in (0, window]"));
        }
        if (self.window_s - 8.0).abs() > 1e-12 {
            return Err(Error::invalid("window must be 8 s"));
        }
        Ok(())
    }
}

/// Cuts every channel of a 32 Hz recording into full windows starting at
/// 0, stride, 2*stride, ... Yields nothing (not an error) below 8 s.
pub fn make_epochs(rec: &Recording, policy: &EpochingPolicy) -> Result<Vec<Epoch>> {
    policy.validate()?;
    if (rec.sample_rate_hz - TARGET_RATE_HZ).abs() > 1e-9 {
        return Err(Error::invalid(format!(
            "epoching expects a {TARGET_RATE_HZ} Hz recording, got {}",
            rec.sample_rate_hz
        )));
    }
    let n = rec.n_samples();
    let window = EPOCH_SAMPLES;
    if n < window {
        return Ok(Vec::new());
    }
    let stride = (policy.stride_s * TARGET_RATE_HZ).round() as usize;
    let count = (n - window) / stride + 1;
    let mut epochs = Vec::with_capacity(count * rec.n_channels());
    for (c, channel) in rec.samples.iter().enumerate() {
        for k in 0..count {
            let start = k * stride;
            epochs.push(Epoch {
                channel_index: c,
                start_time_s: start as f64 / TARGET_RATE_HZ,
                samples: channel[start..start + window].to_vec(),
                label: None,
            });
        }
    }
    Ok(epochs)
}

/// Labels one epoch from the per-channel annotations: seizure iff the
/// seizure-marked fraction of its time span exceeds the policy threshold.
pub fn label_epoch(epoch: &Epoch, ann: &AnnotationSet, threshold: f64) -> Result<bool> {
    let start = epoch.start_time_s;
    let end = start + epoch.samples.len() as f64 / TARGET_RATE_HZ;
    if end > ann.n_seconds() as f64 + 1e-9 {
        return Err(Error::invalid(format!(
            "epoch [{start}, {end}) extends past annotation end ({} s)",
            ann.n_seconds()
        )));
    }
    let channel = ann
        .per_channel
        .get(epoch.channel_index)
        .ok_or_else(|| Error::invalid("epoch channel missing from annotations"))?;
    let first = start.floor() as usize;
    let last = (end.ceil() as usize).min(ann.n_seconds());
    let mut seizure = 0.0;
    for (t, &bit) in channel.iter().enumerate().take(last).skip(first) {
        if bit != 0 {
            let lo = (t as f64).max(start);
            let hi = ((t + 1) as f64).min(end);
            seizure += (hi - lo).max(0.0);
        }
    }
    Ok(seizure / (end - start) > threshold)
}

/// Zero-mean, unit-population-std copy of the epoch. Degenerate epochs
/// (std < 1e-8) come back as all zeros.
pub fn standardize_epoch(epoch: &Epoch) -> Epoch {
    let n = epoch.samples.len() as f64;
    let mean = epoch.samples.iter().sum::<f64>() / n;
    let var = epoch
        .samples
        .iter()
        .map(|v| (v - mean) * (v - mean))
        .sum::<f64>()
        / n;
    let std = var.sqrt();
    let samples = if std < 1e-8 {
        vec![0.0; epoch.samples.len()]
    } else {
        epoch.samples.iter().map(|v| (v - mean) / std).collect()
    };
    Epoch {
        samples,
        ..epoch.clone()
    }
}

/// Band-pass + decimate a raw recording down to the 32 Hz working rate.
pub fn preprocess_recording(rec: &Recording) -> Result<Recording> {
    rec.validate()?;
    let mut out = Vec::with_capacity(rec.n_channels());
    for ch in &rec.samples {
        let filtered = bandpass_filter(ch, rec.sample_rate_hz)?;
        out.push(decimate(&filtered, rec.sample_rate_hz, TARGET_RATE_HZ)?);
    }
    Ok(Recording {
        subject_id: rec.subject_id.clone(),
        sample_rate_hz: TARGET_RATE_HZ,
        channel_names: rec.channel_names.clone(),
        samples: out,
    })
}
