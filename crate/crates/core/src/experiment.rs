//! Leave-one-subject-out experiment harness shared by both pipelines.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::detect::{detect_preprocessed, Detector};
use crate::eeg::{read_annotations, read_recording, AnnotationSet, Recording};
use crate::error::{Error, Result};
use crate::features::{apply_normalizer, extract_features, fit_normalizer, FeatureVector};
use crate::metrics::evaluate_subject;
use crate::preprocess::{
    label_epoch, make_epochs, preprocess_recording, standardize_epoch, EpochingPolicy,
};
use crate::rng::Rng;
use crate::svm::{SvmModel, SvmTrainConfig};
use crate::synth::{generate_synthetic_subject, SynthConfig};
use crate::training::{loo_split, train_fcnn, LabeledEpochs, TrainConfig, TrainHistory};

pub const SMOOTHING_S: usize = 61;
pub const COLLAR_S: usize = 30;
pub const THRESHOLD: f64 = 0.5;

/// One subject, preprocessed once and shared across folds.
#[derive(Debug, Clone)]
pub struct Subject {
    pub id: String,
    /// 32 Hz recording after band-pass and decimation.
    pub rec32: Recording,
    pub annotations: AnnotationSet,
}

#[derive(Debug, Clone, Default)]
pub struct Corpus {
    pub subjects: Vec<Subject>,
}

impl Corpus {
    pub fn subject_ids(&self) -> Vec<String> {
        self.subjects.iter().map(|s| s.id.clone()).collect()
    }

    pub fn get(&self, id: &str) -> Result<&Subject> {
        self.subjects
            .iter()
            .find(|s| s.id == id)
            .ok_or_else(|| Error::invalid(format!("unknown subject '{id}'")))
    }

    /// Reads `subject_*.rec.csv` / `subject_*.ann.csv` pairs from a corpus
    /// directory and preprocesses each recording to 32 Hz.
    pub fn load(dir: impl AsRef<Path>) -> Result<Corpus> {
        let dir = dir.as_ref();
        let mut rec_paths: Vec<PathBuf> = std::fs::read_dir(dir)
            .map_err(|e| Error::io(dir, e))?
            .filter_map(|entry| entry.ok().map(|e| e.path()))
            .filter(|p| {
                p.file_name()
                    .is_some_and(|n| n.to_string_lossy().ends_with(".rec.csv"))
            })
            .collect();
        rec_paths.sort();
        if rec_paths.is_empty() {
            return Err(Error::invalid(format!(
                "no *.rec.csv recordings found in {}",
                dir.display()
            )));
        }
        let subjects: Vec<Subject> = rec_paths
            .par_iter()
            .map(|rec_path| -> Result<Subject> {
                let raw = read_recording(rec_path)?;
                let ann_path = rec_path.to_string_lossy().replace(".rec.csv", ".ann.csv");
                let annotations = read_annotations(&ann_path)?;
                if annotations.subject_id != raw.subject_id {
                    return Err(Error::invalid(format!(
                        "subject mismatch: {} vs {}",
                        raw.subject_id, annotations.subject_id
                    )));
                }
                Ok(Subject {
                    id: raw.subject_id.clone(),
                    rec32: preprocess_recording(&raw)?,
                    annotations,
                })
            })
            .collect::<Result<_>>()?;
        Ok(Corpus { subjects })
    }

    /// Generates a synthetic corpus in memory (preprocessed).
    pub fn synthesize(cfg: &SynthConfig) -> Result<Corpus> {
        let subjects: Vec<Subject> = (0..cfg.n_subjects)
            .into_par_iter()
            .map(|idx| -> Result<Subject> {
                let (raw, annotations, _) = generate_synthetic_subject(cfg, idx)?;
                Ok(Subject {
                    id: raw.subject_id.clone(),
                    rec32: preprocess_recording(&raw)?,
                    annotations,
                })
            })
            .collect::<Result<_>>()?;
        Ok(Corpus { subjects })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pipeline {
    Fcnn,
    Svm,
}

impl std::fmt::Display for Pipeline {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Pipeline::Fcnn => "fcnn",
            Pipeline::Svm => "svm",
        })
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub train: TrainConfig,
    pub svm: SvmTrainConfig,
    /// Balanced row cap for the SVM grid search and final fit; the kernel
    /// matrix is dense, so this bounds memory and time at desk scale.
    pub svm_row_cap: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            train: TrainConfig::default(),
            svm: SvmTrainConfig::default(),
            svm_row_cap: 2400,
        }
    }
}

/// Labeled stride-1 epochs of every channel of the given subjects,
/// standardized for the network.
pub fn network_epoch_set(corpus: &Corpus, subject_ids: &[String]) -> Result<LabeledEpochs> {
    let policy = EpochingPolicy::fcnn();
    let mut set = LabeledEpochs::default();
    for id in subject_ids {
        let subject = corpus.get(id)?;
        for epoch in make_epochs(&subject.rec32, &policy)? {
            let label = label_epoch(&epoch, &subject.annotations, policy.label_threshold)?;
            let standardized = standardize_epoch(&epoch);
            set.push(
                standardized.samples.iter().map(|&v| v as f32).collect(),
                label,
            );
        }
    }
    Ok(set)
}

/// Stride-4 feature vectors with labels for one subject (all channels).
pub fn subject_feature_rows(subject: &Subject) -> Result<(Vec<FeatureVector>, Vec<bool>)> {
    let policy = EpochingPolicy::svm();
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for epoch in make_epochs(&subject.rec32, &policy)? {
        rows.push(extract_features(&epoch.samples)?);
        labels.push(label_epoch(
            &epoch,
            &subject.annotations,
            policy.label_threshold,
        )?);
    }
    Ok((rows, labels))
}

/// Trains the network for one fold.
pub fn train_fold_fcnn(
    corpus: &Corpus,
    held_out: &str,
    cfg: &ExperimentConfig,
) -> Result<(crate::fcnn::FcnnModel<f32>, TrainHistory)> {
    let split = loo_split(&corpus.subject_ids(), held_out)?;
    let train_set = network_epoch_set(corpus, &split.train)?;
    let val_set = network_epoch_set(corpus, &[split.validation.clone()])?;
    train_fcnn(&train_set, &val_set, &cfg.train)
}

/// Per-subject feature rows computed once and shared across folds.
pub struct FeatureCache {
    rows: Vec<(String, Vec<FeatureVector>, Vec<bool>)>,
}

impl FeatureCache {
    pub fn build(corpus: &Corpus) -> Result<FeatureCache> {
        let rows = corpus
            .subjects
            .par_iter()
            .map(|s| subject_feature_rows(s).map(|(r, l)| (s.id.clone(), r, l)))
            .collect::<Result<_>>()?;
        Ok(FeatureCache { rows })
    }

    fn get(&self, id: &str) -> Result<(&[FeatureVector], &[bool])> {
        self.rows
            .iter()
            .find(|(sid, ..)| sid == id)
            .map(|(_, r, l)| (r.as_slice(), l.as_slice()))
            .ok_or_else(|| Error::invalid(format!("no cached features for '{id}'")))
    }
}

/// Trains the calibrated feature classifier for one fold: z-score normalizer
/// on the full fold-train rows, then grid search + SMO + Platt on a
/// class-balanced row subsample.
pub fn train_fold_svm(corpus: &Corpus, held_out: &str, cfg: &ExperimentConfig) -> Result<SvmModel> {
    let cache = FeatureCache::build(corpus)?;
    train_fold_svm_cached(corpus, &cache, held_out, cfg)
}

/// [`train_fold_svm`] against a prebuilt feature cache.
pub fn train_fold_svm_cached(
    corpus: &Corpus,
    cache: &FeatureCache,
    held_out: &str,
    cfg: &ExperimentConfig,
) -> Result<SvmModel> {
    let split = loo_split(&corpus.subject_ids(), held_out)?;
    let mut rows: Vec<FeatureVector> = Vec::new();
    let mut labels: Vec<bool> = Vec::new();
    for id in &split.train {
        let (r, l) = cache.get(id)?;
        rows.extend_from_slice(r);
        labels.extend_from_slice(l);
    }
    let normalizer = fit_normalizer(&rows)?;

    // balanced cap, deterministic per fold
    let pos: Vec<usize> = (0..rows.len()).filter(|&i| labels[i]).collect();
    let neg: Vec<usize> = (0..rows.len()).filter(|&i| !labels[i]).collect();
    if pos.is_empty() || neg.is_empty() {
        return Err(Error::numeric("fold training data has a single class"));
    }
    let mut rng = Rng::stream(cfg.svm.seed, fold_stream_id(held_out));
    let per_class = (cfg.svm_row_cap / 2).min(neg.len()).max(1);
    let take_pos = per_class.min(pos.len());
    let take_neg = per_class;
    let mut picked: Vec<usize> = rng
        .sample_indices(pos.len(), take_pos)
        .into_iter()
        .map(|i| pos[i])
        .collect();
    picked.extend(
        rng.sample_indices(neg.len(), take_neg)
            .into_iter()
            .map(|i| neg[i]),
    );
    picked.sort_unstable();

    let x: Vec<Vec<f64>> = picked
        .iter()
        .map(|&i| apply_normalizer(&rows[i], &normalizer).values.to_vec())
        .collect();
    let y: Vec<f64> = picked
        .iter()
        .map(|&i| if labels[i] { 1.0 } else { -1.0 })
        .collect();

    let mut model = crate::svm::train_calibrated(&x, &y, &cfg.svm)?;
    model.set_normalizer(&normalizer);
    Ok(model)
}

fn fold_stream_id(held_out: &str) -> u64 {
    // stable small hash of the subject id
    held_out.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x1000_0000_01b3)
    })
}

/// One evaluated row of the results table.
#[derive(Debug, Clone)]
pub struct SubjectScore {
    pub subject: String,
    /// `(auc_pct, auc90_pct)`; `None` when the annotation is single-class.
    pub scores: Option<(f64, f64)>,
}

#[derive(Debug, Clone)]
pub struct MetricsTable {
    pub pipeline: Pipeline,
    pub rows: Vec<SubjectScore>,
    /// Mean over the defined rows.
    pub mean: Option<(f64, f64)>,
}

impl MetricsTable {
    fn from_rows(pipeline: Pipeline, rows: Vec<SubjectScore>) -> Self {
        let defined: Vec<(f64, f64)> = rows.iter().filter_map(|r| r.scores).collect();
        let mean = if defined.is_empty() {
            None
        } else {
            let n = defined.len() as f64;
            Some((
                defined.iter().map(|s| s.0).sum::<f64>() / n,
                defined.iter().map(|s| s.1).sum::<f64>() / n,
            ))
        };
        MetricsTable {
            pipeline,
            rows,
            mean,
        }
    }
}

/// Scores one trained detector on its held-out subject.
pub fn evaluate_fold(detector: &Detector, subject: &Subject) -> Result<SubjectScore> {
    let detection =
        detect_preprocessed(detector, &subject.rec32, THRESHOLD, COLLAR_S, SMOOTHING_S)?;
    let n = detection
        .fused
        .values
        .len()
        .min(subject.annotations.fused.len());
    let fused_trace = crate::postproc::ProbabilityTrace {
        values: detection.fused.values[..n].to_vec(),
        start_time_s: 0.0,
    };
    let scores = evaluate_subject(&fused_trace, &subject.annotations.fused[..n])?;
    Ok(SubjectScore {
        subject: subject.id.clone(),
        scores,
    })
}

/// Full leave-one-out experiment for one pipeline: train a fold per subject,
/// score it on the held-out subject, and assemble the per-subject table in
/// corpus order plus the mean row.
pub fn run_loo_experiment(
    corpus: &Corpus,
    pipeline: Pipeline,
    cfg: &ExperimentConfig,
) -> Result<MetricsTable> {
    let ids = corpus.subject_ids();
    if ids.len() < 3 {
        return Err(Error::invalid("leave-one-out needs at least 3 subjects"));
    }
    let feature_cache = match pipeline {
        Pipeline::Svm => Some(FeatureCache::build(corpus)?),
        Pipeline::Fcnn => None,
    };
    let rows: Vec<SubjectScore> = ids
        .iter()
        .map(|held_out| -> Result<SubjectScore> {
            let detector = match pipeline {
                Pipeline::Fcnn => Detector::Fcnn(train_fold_fcnn(corpus, held_out, cfg)?.0),
                Pipeline::Svm => Detector::Svm(train_fold_svm_cached(
                    corpus,
                    feature_cache.as_ref().expect("cache built for svm"),
                    held_out,
                    cfg,
                )?),
            };
            evaluate_fold(&detector, corpus.get(held_out)?)
        })
        .collect::<Result<_>>()?;
    Ok(MetricsTable::from_rows(pipeline, rows))
}

/// Renders the combined results CSV:
/// `subject,auc_svm,auc_fcnn,auc90_svm,auc90_fcnn` plus the average row.
/// Undefined rows print `undefined`.
pub fn results_csv(svm: &MetricsTable, fcnn: &MetricsTable) -> Result<String> {
    if svm.rows.len() != fcnn.rows.len()
        || svm
            .rows
            .iter()
            .zip(&fcnn.rows)
            .any(|(a, b)| a.subject != b.subject)
    {
        return Err(Error::invalid("pipeline tables must share row ordering"));
    }
    let mut out = String::from("subject,auc_svm,auc_fcnn,auc90_svm,auc90_fcnn\n");
    let cell =
        |v: Option<f64>| -> String { v.map_or_else(|| "undefined".into(), |x| format!("{x:.2}")) };
    for (s, f) in svm.rows.iter().zip(&fcnn.rows) {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            s.subject,
            cell(s.scores.map(|x| x.0)),
            cell(f.scores.map(|x| x.0)),
            cell(s.scores.map(|x| x.1)),
            cell(f.scores.map(|x| x.1)),
        );
    }
    let _ = writeln!(
        out,
        "average,{},{},{},{}",
        cell(svm.mean.map(|x| x.0)),
        cell(fcnn.mean.map(|x| x.0)),
        cell(svm.mean.map(|x| x.1)),
        cell(fcnn.mean.map(|x| x.1)),
    );
    Ok(out)
}
