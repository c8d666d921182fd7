//! Decision post-processing: epoch probabilities to a 1 Hz trace, 61 s
//! moving-average smoothing, channel-max fusion, and threshold + collar.

use crate::error::{Error, Result};

/// Per-second seizure probabilities for one channel (or fused).
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityTrace {
    pub values: Vec<f64>,
    pub start_time_s: f64,
}

impl ProbabilityTrace {
    pub fn validate(&self) -> Result<()> {
        if self.values.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::invalid("trace probability outside [0, 1]"));
        }
        Ok(())
    }
}

/// Binary per-second decisions after threshold and collar.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionMask {
    pub values: Vec<bool>,
}

/// Spreads per-epoch probabilities onto a 1 Hz grid: second `t` takes the
/// probability of the epoch whose center is nearest to `t + 0.5` (ties go to
/// the earlier epoch). Epochs must be sorted by start time.
pub fn trace_from_epoch_probs(
    epoch_probs: &[(f64, f64)],
    duration_s: usize,
) -> Result<ProbabilityTrace> {
    if epoch_probs.is_empty() {
        return Err(Error::invalid("no epoch probabilities to trace"));
    }
    if epoch_probs.windows(2).any(|w| w[1].0 < w[0].0) {
        return Err(Error::invalid(
            "epoch probabilities must be sorted by start",
        ));
    }
    let centers: Vec<f64> = epoch_probs.iter().map(|&(start, _)| start + 4.0).collect();
    let mut values = Vec::with_capacity(duration_s);
    let mut cursor = 0usize;
    for t in 0..duration_s {
        let target = t as f64 + 0.5;
        while cursor + 1 < centers.len() {
            // advance while the next center is strictly nearer
            let d_here = (centers[cursor] - target).abs();
            let d_next = (centers[cursor + 1] - target).abs();
            if d_next < d_here {
                cursor += 1;
            } else {
                break;
            }
        }
        values.push(epoch_probs[cursor].1);
    }
    let trace = ProbabilityTrace {
        values,
        start_time_s: 0.0,
    };
    trace.validate()?;
    Ok(trace)
}

/// Centered moving average with a shrinking window at the edges.
pub fn moving_average(trace: &ProbabilityTrace, window_s: usize) -> Result<ProbabilityTrace> {
    if window_s % 2 == 0 {
        return Err(Error::invalid("smoothing window must be odd"));
    }
    let half = window_s / 2;
    let n = trace.values.len();
    // prefix sums for O(1) window means
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(0.0);
    for &v in &trace.values {
        prefix.push(prefix.last().unwrap() + v);
    }
    let values = (0..n)
        .map(|t| {
            let lo = t.saturating_sub(half);
            let hi = (t + half + 1).min(n);
            (prefix[hi] - prefix[lo]) / (hi - lo) as f64
        })
        .collect();
    Ok(ProbabilityTrace {
        values,
        start_time_s: trace.start_time_s,
    })
}

/// Elementwise maximum across channels.
pub fn fuse_channels(traces: &[ProbabilityTrace]) -> Result<ProbabilityTrace> {
    let first = traces
        .first()
        .ok_or_else(|| Error::invalid("no traces to fuse"))?;
    let n = first.values.len();
    if traces.iter().any(|t| t.values.len() != n) {
        return Err(Error::invalid("trace length mismatch in fusion"));
    }
    let values = (0..n)
        .map(|t| {
            traces
                .iter()
                .map(|tr| tr.values[t])
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect();
    Ok(ProbabilityTrace {
        values,
        start_time_s: first.start_time_s,
    })
}

/// Thresholds the trace and expands every positive run by `collar_s` seconds
/// on each side; overlapping expanded runs merge.
pub fn threshold_and_collar(
    trace: &ProbabilityTrace,
    threshold: f64,
    collar_s: usize,
) -> DetectionMask {
    let n = trace.values.len();
    let mut mask = vec![false; n];
    let mut t = 0usize;
    while t < n {
        if trace.values[t] > threshold {
            // maximal positive run [t, end)
            let mut end = t + 1;
            while end < n && trace.values[end] > threshold {
                end += 1;
            }
            let lo = t.saturating_sub(collar_s);
            let hi = (end + collar_s).min(n);
            mask[lo..hi].fill(true);
            t = end;
        } else {
            t += 1;
        }
    }
    DetectionMask { values: mask }
}
