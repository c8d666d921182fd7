//! Applying a trained model to a recording: per-channel probability traces,
//! smoothing, fusion, and the final thresholded mask.

use std::io::Read;
use std::path::Path;

use crate::eeg::Recording;
use crate::error::{Error, Result};
use crate::fcnn::{self, FcnnModel, ForwardTrace};
use crate::features::extract_features;
use crate::postproc::{
    fuse_channels, moving_average, threshold_and_collar, trace_from_epoch_probs, DetectionMask,
    ProbabilityTrace,
};
use crate::preprocess::{
    make_epochs, preprocess_recording, standardize_epoch, EpochingPolicy, TARGET_RATE_HZ,
};
use crate::svm::{self, SvmModel};

/// Either trained classifier, dispatched by model-file magic.
#[derive(Debug, Clone)]
pub enum Detector {
    Fcnn(FcnnModel<f32>),
    Svm(SvmModel),
}

impl Detector {
    pub fn kind(&self) -> &'static str {
        match self {
            Detector::Fcnn(_) => "fcnn",
            Detector::Svm(_) => "svm",
        }
    }

    /// Epoch stride of this model's pipeline (1 s for the network, 4 s for
    /// the feature classifier).
    pub fn policy(&self) -> EpochingPolicy {
        match self {
            Detector::Fcnn(_) => EpochingPolicy::fcnn(),
            Detector::Svm(_) => EpochingPolicy::svm(),
        }
    }
}

/// Loads a model file of either kind by inspecting its magic bytes.
pub fn load_detector(path: impl AsRef<Path>) -> Result<Detector> {
    let path = path.as_ref();
    let mut file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut magic = [0u8; 4];
    file.read_exact(&mut magic)
        .map_err(|_| Error::format(path, 0, "file too short for a model magic"))?;
    drop(file);
    match &magic {
        b"FCN1" => Ok(Detector::Fcnn(fcnn::load_model(path)?)),
        b"SVM1" => Ok(Detector::Svm(svm::load_model(path)?)),
        _ => Err(Error::format(path, 0, "unrecognized model magic")),
    }
}

/// Per-channel raw (unsmoothed) probability traces for a 32 Hz recording.
pub fn channel_traces_32hz(
    detector: &Detector,
    rec32: &Recording,
) -> Result<Vec<ProbabilityTrace>> {
    if (rec32.sample_rate_hz - TARGET_RATE_HZ).abs() > 1e-9 {
        return Err(Error::invalid(format!(
            "detection expects a {TARGET_RATE_HZ} Hz recording; preprocess first (got {} Hz)",
            rec32.sample_rate_hz
        )));
    }
    let duration_s = (rec32.n_samples() as f64 / TARGET_RATE_HZ).floor() as usize;
    let epochs = make_epochs(rec32, &detector.policy())?;
    if epochs.is_empty() {
        return Err(Error::invalid("recording shorter than one 8 s epoch"));
    }

    let mut traces = Vec::with_capacity(rec32.n_channels());
    match detector {
        Detector::Fcnn(model) => {
            let mut trace = ForwardTrace::new();
            for c in 0..rec32.n_channels() {
                let channel: Vec<&crate::preprocess::Epoch> =
                    epochs.iter().filter(|e| e.channel_index == c).collect();
                let samples: Vec<Vec<f32>> = channel
                    .iter()
                    .map(|e| {
                        standardize_epoch(e)
                            .samples
                            .iter()
                            .map(|&v| v as f32)
                            .collect()
                    })
                    .collect();
                let probs = fcnn::predict_probs(model, &samples, 512, &mut trace)?;
                let pairs: Vec<(f64, f64)> = channel
                    .iter()
                    .zip(&probs)
                    .map(|(e, &p)| (e.start_time_s, p))
                    .collect();
                traces.push(trace_from_epoch_probs(&pairs, duration_s)?);
            }
        }
        Detector::Svm(model) => {
            for c in 0..rec32.n_channels() {
                let mut pairs = Vec::new();
                for e in epochs.iter().filter(|e| e.channel_index == c) {
                    let fv = extract_features(&e.samples)?;
                    let x = model.normalize(&fv);
                    pairs.push((e.start_time_s, svm::predict_probability(model, &x)?));
                }
                traces.push(trace_from_epoch_probs(&pairs, duration_s)?);
            }
        }
    }
    Ok(traces)
}

/// Full detection output for one recording.
#[derive(Debug, Clone)]
pub struct Detection {
    /// Per-channel traces after the 61 s smoothing.
    pub channel_traces: Vec<ProbabilityTrace>,
    /// Channel maximum of the smoothed traces.
    pub fused: ProbabilityTrace,
    pub mask: DetectionMask,
}

/// Runs the §-style post-processing chain on a raw (256 Hz) recording:
/// band-pass, decimate, per-channel probabilities, smoothing, channel-max
/// fusion, threshold, collar.
pub fn detect(
    detector: &Detector,
    raw: &Recording,
    threshold: f64,
    collar_s: usize,
    smoothing_s: usize,
) -> Result<Detection> {
    let rec32 = preprocess_recording(raw)?;
    detect_preprocessed(detector, &rec32, threshold, collar_s, smoothing_s)
}

/// Same as [`detect`] for an already-preprocessed 32 Hz recording.
pub fn detect_preprocessed(
    detector: &Detector,
    rec32: &Recording,
    threshold: f64,
    collar_s: usize,
    smoothing_s: usize,
) -> Result<Detection> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(Error::invalid("threshold must be in [0, 1]"));
    }
    let raw_traces = channel_traces_32hz(detector, rec32)?;
    let channel_traces: Vec<ProbabilityTrace> = raw_traces
        .iter()
        .map(|t| moving_average(t, smoothing_s))
        .collect::<Result<_>>()?;
    let fused = fuse_channels(&channel_traces)?;
    let mask = threshold_and_collar(&fused, threshold, collar_s);
    Ok(Detection {
        channel_traces,
        fused,
        mask,
    })
}
