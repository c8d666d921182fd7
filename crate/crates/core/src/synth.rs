//! Deterministic synthetic EEG corpus generator.
//!
//! Stands in for a clinical dataset at desk scale: pink-noise background plus
//! injected rhythmic spike-and-wave bursts with exact per-second, per-channel
//! annotations. Generation is a pure function of `(config, subject_index)`.

use crate::eeg::{AnnotationSet, Recording};
use crate::error::{Error, Result};
use crate::rng::Rng;

pub const RAW_SAMPLE_RATE_HZ: f64 = 256.0;

/// The 8-channel bipolar montage used throughout.
pub const BIPOLAR_CHANNELS: [&str; 8] = [
    "F4-C4", "C4-O2", "F3-C3", "C3-O1", "T4-C4", "C4-Cz", "Cz-C3", "C3-T3",
];

/// Generator parameters. All ranges are inclusive.
#[derive(Debug, Clone)]
pub struct SynthConfig {
    pub n_subjects: usize,
    pub duration_s: usize,
    pub seizure_events: (usize, usize),
    pub seizure_duration_s: (usize, usize),
    /// Burst fundamental, constrained to [1, 3] Hz.
    pub seizure_fundamental_hz: (f64, f64),
    pub background_amplitude_uv: f64,
    pub rng_seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_subjects: 6,
            duration_s: 1800,
            seizure_events: (2, 3),
            seizure_duration_s: (40, 70),
            seizure_fundamental_hz: (1.0, 3.0),
            background_amplitude_uv: 30.0,
            rng_seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_subjects == 0 {
            return Err(Error::config("n_subjects must be at least 1"));
        }
        if self.duration_s < 8 {
            return Err(Error::config("duration must be at least 8 s"));
        }
        if self.seizure_events.0 > self.seizure_events.1 {
            return Err(Error::config("empty seizure_events range"));
        }
        if self.seizure_duration_s.0 > self.seizure_duration_s.1 || self.seizure_duration_s.0 == 0 {
            return Err(Error::config("bad seizure_duration_s range"));
        }
        let (f_lo, f_hi) = self.seizure_fundamental_hz;
        if !(f_lo <= f_hi && f_lo >= 1.0 && f_hi <= 3.0) {
            return Err(Error::config(
                "seizure fundamental range must lie within [1, 3] Hz",
            ));
        }
        if !(self.background_amplitude_uv > 0.0) {
            return Err(Error::config("background amplitude must be positive"));
        }
        let worst_case = self.seizure_events.1 * self.seizure_duration_s.1;
        if worst_case * 2 > self.duration_s {
            return Err(Error::config(format!(
                "requested up to {worst_case} s of seizure in a {} s recording (> 50%)",
                self.duration_s
            )));
        }
        Ok(())
    }
}

/// One injected seizure event, exposed for tests and localization ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct SeizureEvent {
    pub start_s: usize,
    pub duration_s: usize,
    pub fundamental_hz: f64,
    /// Contiguous affected channel range `[first, last]`.
    pub channels: (usize, usize),
}

/// Pink-noise shaping: cascade of three one-pole/one-zero sections whose
/// corners sit near 0.17, 2.1 and 19 Hz at fs = 256, approximating a
/// -10 dB/decade magnitude slope across the EEG band.
const PINK_POLES: [f64; 3] = [0.995_727_54, 0.947_906_49, 0.535_675_05];
const PINK_ZEROS: [f64; 3] = [0.984_436_04, 0.833_923_34, 0.075_683_59];

fn pink_noise(rng: &mut Rng, n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n);
    let mut prev_in = [0.0f64; 3];
    let mut prev_out = [0.0f64; 3];
    for _ in 0..n {
        let mut v = rng.normal();
        for s in 0..3 {
            let y = v - PINK_ZEROS[s] * prev_in[s] + PINK_POLES[s] * prev_out[s];
            prev_in[s] = v;
            prev_out[s] = y;
            v = y;
        }
        out.push(v);
    }
    out
}

/// Rescales a channel in place to an exact target RMS.
fn set_rms(x: &mut [f64], target: f64) {
    let ms = x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64;
    if ms > 0.0 {
        let g = target / ms.sqrt();
        for v in x.iter_mut() {
            *v *= g;
        }
    }
}

/// Spike-and-wave burst value at `t` seconds past event onset: a 3-harmonic
/// sawtooth-like sum with 5 s raised-cosine onset and offset ramps.
fn burst_value(t: f64, duration_s: f64, f0: f64) -> f64 {
    let mut s = 0.0;
    for h in 1..=3u32 {
        let h = f64::from(h);
        s += (1.0 / h) * (2.0 * std::f64::consts::PI * h * f0 * t).sin();
    }
    let ramp = 5.0f64.min(duration_s / 2.0);
    let w = if t < ramp {
        0.5 - 0.5 * (std::f64::consts::PI * t / ramp).cos()
    } else if t > duration_s - ramp {
        0.5 - 0.5 * (std::f64::consts::PI * (duration_s - t) / ramp).cos()
    } else {
        1.0
    };
    s * w
}

/// Places `durations` as non-overlapping integer-second intervals, separated
/// by at least `gap` seconds, by distributing the slack between them.
fn place_events(
    rng: &mut Rng,
    duration_s: usize,
    durations: &[usize],
    gap: usize,
) -> Result<Vec<usize>> {
    let total: usize = durations.iter().sum();
    let needed = total + gap * (durations.len() + 1);
    if needed > duration_s {
        return Err(Error::config(format!(
            "cannot place {} s of seizure plus gaps in {} s",
            total, duration_s
        )));
    }
    let slack = duration_s - needed;
    // n+1 random weights -> slack split before, between and after events
    let mut weights: Vec<f64> = (0..=durations.len()).map(|_| rng.next_f64()).collect();
    let wsum: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= wsum.max(1e-12);
    }
    let mut starts = Vec::with_capacity(durations.len());
    let mut cursor = 0usize;
    let mut spent = 0usize;
    let mut acc = 0.0;
    for (i, &d) in durations.iter().enumerate() {
        acc += weights[i];
        let target = (acc * slack as f64).floor() as usize;
        let pad = target.saturating_sub(spent);
        spent += pad;
        cursor += gap + pad;
        starts.push(cursor);
        cursor += d;
    }
    Ok(starts)
}

/// Generates one subject's recording and annotations. Deterministic in
/// `(cfg.rng_seed, subject_index)`; channels carry the standard 8-lead
/// bipolar montage at 256 Hz.
pub fn generate_synthetic_subject(
    cfg: &SynthConfig,
    subject_index: usize,
) -> Result<(Recording, AnnotationSet, Vec<SeizureEvent>)> {
    cfg.validate()?;
    let mut rng = Rng::stream(cfg.rng_seed, subject_index as u64);
    let n_ch = BIPOLAR_CHANNELS.len();
    let fs = RAW_SAMPLE_RATE_HZ;
    let n_samples = cfg.duration_s * fs as usize;

    // Per-subject variability: background gain, burst fundamental, channel run.
    let subject_gain = rng.uniform(0.8, 1.3);
    let f_lo = cfg.seizure_fundamental_hz.0;
    let f_hi = cfg.seizure_fundamental_hz.1;
    let subject_f0 = rng.uniform(f_lo, f_hi);
    // seizures are usually focal: favor short channel runs, allow up to all 8
    let run_weights: [usize; 8] = [4, 3, 2, 1, 1, 1, 1, 1];
    let total_w: usize = run_weights.iter().sum();
    let mut draw = rng.below(total_w);
    let mut run_len = 1;
    for (k, &w) in run_weights.iter().enumerate() {
        if draw < w {
            run_len = k + 1;
            break;
        }
        draw -= w;
    }
    let run_len = run_len.min(n_ch);
    let run_start = rng.below(n_ch - run_len + 1);
    let affected = (run_start, run_start + run_len - 1);

    let bg_rms = cfg.background_amplitude_uv * subject_gain;
    let mut samples: Vec<Vec<f64>> = (0..n_ch)
        .map(|_| {
            let mut ch = pink_noise(&mut rng, n_samples);
            set_rms(&mut ch, bg_rms);
            ch
        })
        .collect();

    // Events: integer-second starts and durations, non-overlapping.
    let n_events = rng.int_in(cfg.seizure_events.0, cfg.seizure_events.1);
    let durations: Vec<usize> = (0..n_events)
        .map(|_| rng.int_in(cfg.seizure_duration_s.0, cfg.seizure_duration_s.1))
        .collect();
    let actual: usize = durations.iter().sum();
    if actual * 2 > cfg.duration_s {
        return Err(Error::config("drawn seizure time exceeds 50% of duration"));
    }
    let starts = place_events(&mut rng, cfg.duration_s, &durations, 2)?;

    let mut events = Vec::with_capacity(n_events);
    let mut per_channel: Vec<Vec<u8>> = vec![vec![0u8; cfg.duration_s]; n_ch];
    for (&start_s, &dur_s) in starts.iter().zip(&durations) {
        let jitter = rng.uniform(-0.1, 0.1);
        let f0 = (subject_f0 * (1.0 + jitter)).clamp(f_lo, f_hi);
        let amp = bg_rms * rng.uniform(2.5, 4.0);
        let channel_gains: Vec<f64> = (affected.0..=affected.1)
            .map(|_| rng.uniform(0.85, 1.15))
            .collect();
        for (gi, c) in (affected.0..=affected.1).enumerate() {
            let g = amp * channel_gains[gi];
            let s0 = start_s * fs as usize;
            for k in 0..dur_s * fs as usize {
                let t = k as f64 / fs;
                samples[c][s0 + k] += g * burst_value(t, dur_s as f64, f0);
            }
            per_channel[c][start_s..start_s + dur_s].fill(1);
        }
        events.push(SeizureEvent {
            start_s,
            duration_s: dur_s,
            fundamental_hz: f0,
            channels: affected,
        });
    }

    let subject_id = format!("subject_{}", subject_index);
    let rec = Recording {
        subject_id: subject_id.clone(),
        sample_rate_hz: fs,
        channel_names: BIPOLAR_CHANNELS.iter().map(|s| s.to_string()).collect(),
        samples,
    };
    rec.validate()?;
    let ann = AnnotationSet::new(subject_id, rec.channel_names.clone(), per_channel);
    Ok((rec, ann, events))
}
