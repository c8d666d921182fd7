//! Command implementations. Every command prints its resolved configuration
//! to stderr and emits deterministic files for a given seed.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::Args;
use rayon::prelude::*;

use nsd_core::detect::{detect, load_detector, Detector};
use nsd_core::eeg::{read_annotations, read_recording, write_annotations, write_recording};
use nsd_core::error::{Error, Result};
use nsd_core::experiment::{
    evaluate_fold, results_csv, subject_feature_rows, train_fold_fcnn, train_fold_svm, Corpus,
    ExperimentConfig, MetricsTable, Pipeline, Subject, COLLAR_S, SMOOTHING_S,
};
use nsd_core::fcnn::{self, count_params, localize, receptive_field, ForwardTrace, Mode};
use nsd_core::preprocess::{preprocess_recording, standardize_epoch, Epoch, TARGET_RATE_HZ};
use nsd_core::synth::{generate_synthetic_subject, SynthConfig};
use nsd_core::training::loo_split;

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

// ---------------------------------------------------------------------------
// synth
// ---------------------------------------------------------------------------

#[derive(Args, Debug)]
pub struct SynthArgs {
    /// Number of subjects to generate.
    #[arg(long)]
    pub subjects: usize,

    /// Recording length per subject, in hours.
    #[arg(long, default_value_t = 0.5)]
    pub hours: f64,

    /// Seizure events per subject: one count or an inclusive MIN-MAX range.
    #[arg(long, default_value = "2-3")]
    pub seizures_per_subject: String,

    /// Output corpus directory.
    #[arg(short = 'o', long = "out")]
    pub out: PathBuf,

    /// Allow writing into an existing non-empty directory.
    #[arg(long, default_value_t = false)]
    pub force: bool,
}

fn parse_range(text: &str) -> Result<(usize, usize)> {
    let parse = |s: &str| -> Result<usize> {
        s.trim()
            .parse()
            .map_err(|_| Error::config(format!("bad count '{s}'")))
    };
    match text.split_once('-') {
        Some((lo, hi)) => Ok((parse(lo)?, parse(hi)?)),
        None => {
            let v = parse(text)?;
            Ok((v, v))
        }
    }
}

pub fn run_synth(args: SynthArgs, seed: u64) -> Result<()> {
    if args.subjects == 0 {
        return Err(Error::config("--subjects must be at least 1"));
    }
    if !(args.hours > 0.0) {
        return Err(Error::config("--hours must be positive"));
    }
    let events = parse_range(&args.seizures_per_subject)?;
    let cfg = SynthConfig {
        n_subjects: args.subjects,
        duration_s: (args.hours * 3600.0).round() as usize,
        seizure_events: events,
        rng_seed: seed,
        ..SynthConfig::default()
    };
    cfg.validate()?;

    if args.out.exists() {
        let non_empty = std::fs::read_dir(&args.out)
            .map_err(|e| Error::io(&args.out, e))?
            .next()
            .is_some();
        if non_empty && !args.force {
            return Err(Error::config(format!(
                "output directory {} is not empty (use --force)",
                args.out.display()
            )));
        }
    } else {
        std::fs::create_dir_all(&args.out).map_err(|e| Error::io(&args.out, e))?;
    }

    eprintln!(
        "synth: subjects={} duration_s={} seizures={}-{} seizure_s={}-{} f0={}-{} Hz bg={} uV seed={} out={}",
        cfg.n_subjects,
        cfg.duration_s,
        cfg.seizure_events.0,
        cfg.seizure_events.1,
        cfg.seizure_duration_s.0,
        cfg.seizure_duration_s.1,
        cfg.seizure_fundamental_hz.0,
        cfg.seizure_fundamental_hz.1,
        cfg.background_amplitude_uv,
        seed,
        args.out.display()
    );

    let results: Vec<Result<String>> = (1..=cfg.n_subjects)
        .into_par_iter()
        .map(|k| -> Result<String> {
            let (rec, ann, _) = generate_synthetic_subject(&cfg, k)?;
            write_recording(&rec, args.out.join(format!("subject_{k}.rec.csv")))?;
            write_annotations(&ann, args.out.join(format!("subject_{k}.ann.csv")))?;
            Ok(rec.subject_id)
        })
        .collect();
    for r in results {
        r?;
    }

    let mut manifest = String::from("command=synth\n");
    let _ = writeln!(manifest, "subjects={}", cfg.n_subjects);
    let _ = writeln!(manifest, "duration_s={}", cfg.duration_s);
    let _ = writeln!(manifest, "seizures_per_subject={}-{}", events.0, events.1);
    let _ = writeln!(
        manifest,
        "seizure_duration_s={}-{}",
        cfg.seizure_duration_s.0, cfg.seizure_duration_s.1
    );
    let _ = writeln!(
        manifest,
        "seizure_fundamental_hz={}-{}",
        cfg.seizure_fundamental_hz.0, cfg.seizure_fundamental_hz.1
    );
    let _ = writeln!(
        manifest,
        "background_amplitude_uv={}",
        cfg.background_amplitude_uv
    );
    let _ = writeln!(manifest, "seed={seed}");
    write_text(&args.out.join("manifest.txt"), &manifest)
}

// ---------------------------------------------------------------------------
// train-fcnn / train-svm
// ---------------------------------------------------------------------------

#[derive(Args, Debug)]
pub struct TrainArgs {
    /// Corpus directory produced by `synth` (or hand-assembled CSVs).
    #[arg(long)]
    pub corpus: PathBuf,

    /// Subject to hold out; omit to train every fold.
    #[arg(long)]
    pub held_out: Option<String>,

    /// Training iterations (network path).
    #[arg(long, default_value_t = 60)]
    pub iterations: usize,

    /// Batch size, clipped to the balanced set (network path).
    #[arg(long, default_value_t = 2048)]
    pub batch_size: usize,

    /// Initial learning rate (network path).
    #[arg(long, default_value_t = 0.003)]
    pub lr: f64,

    /// Output experiment directory.
    #[arg(short = 'o', long = "out")]
    pub out: PathBuf,
}

pub fn run_train(args: TrainArgs, seed: u64, pipeline: Pipeline) -> Result<()> {
    let corpus = Corpus::load(&args.corpus)?;
    let ids = corpus.subject_ids();
    let folds: Vec<String> = match &args.held_out {
        Some(id) => {
            loo_split(&ids, id)?; // validates the subject exists and n >= 3
            vec![id.clone()]
        }
        None => ids.clone(),
    };

    let mut cfg = ExperimentConfig::default();
    cfg.train.total_iterations = args.iterations;
    cfg.train.batch_size = args.batch_size;
    cfg.train.initial_lr = args.lr;
    cfg.train.rng_seed = seed;
    cfg.svm.seed = seed;

    eprintln!(
        "train-{pipeline}: corpus={} folds={} iterations={} batch={} lr={} momentum={} seed={} out={}{}",
        args.corpus.display(),
        folds.len(),
        cfg.train.total_iterations,
        cfg.train.batch_size,
        cfg.train.initial_lr,
        cfg.train.nesterov_momentum,
        seed,
        args.out.display(),
        if pipeline == Pipeline::Svm {
            " (iterations/batch/lr apply to the network path only)"
        } else {
            ""
        }
    );

    std::fs::create_dir_all(&args.out).map_err(|e| Error::io(&args.out, e))?;
    for held_out in &folds {
        match pipeline {
            Pipeline::Fcnn => {
                let (model, history) = train_fold_fcnn(&corpus, held_out, &cfg)?;
                fcnn::save_model(&model, args.out.join(format!("fold_{held_out}.fcn")))?;
                history.write_csv(args.out.join(format!("fold_{held_out}.history.csv")))?;
            }
            Pipeline::Svm => {
                let model = train_fold_svm(&corpus, held_out, &cfg)?;
                nsd_core::svm::save_model(&model, args.out.join(format!("fold_{held_out}.svm")))?;
            }
        }
        eprintln!("trained fold {held_out}");
    }

    let mut manifest = format!("command=train-{pipeline}\n");
    let _ = writeln!(manifest, "corpus={}", args.corpus.display());
    let _ = writeln!(manifest, "folds={}", folds.join(";"));
    let _ = writeln!(manifest, "iterations={}", cfg.train.total_iterations);
    let _ = writeln!(manifest, "batch_size={}", cfg.train.batch_size);
    let _ = writeln!(manifest, "initial_lr={}", cfg.train.initial_lr);
    let _ = writeln!(
        manifest,
        "nesterov_momentum={}",
        cfg.train.nesterov_momentum
    );
    let _ = writeln!(manifest, "seed={seed}");
    write_text(
        &args.out.join(format!("manifest-{pipeline}.txt")),
        &manifest,
    )
}

// ---------------------------------------------------------------------------
// detect
// ---------------------------------------------------------------------------

#[derive(Args, Debug)]
pub struct DetectArgs {
    /// Trained model file (.fcn or .svm, dispatched by magic).
    #[arg(long)]
    pub model: PathBuf,

    /// Raw 256 Hz recording CSV.
    #[arg(long)]
    pub recording: PathBuf,

    /// Decision threshold on the fused probability.
    #[arg(long, default_value_t = 0.5)]
    pub threshold: f64,

    /// Collar expansion in seconds on each side of a positive run.
    #[arg(long, default_value_t = COLLAR_S)]
    pub collar: usize,

    /// Output prefix; writes <out>.trace.csv and <out>.mask.csv.
    #[arg(short = 'o', long = "out")]
    pub out: PathBuf,
}

pub fn run_detect(args: DetectArgs) -> Result<()> {
    if !(0.0..=1.0).contains(&args.threshold) {
        return Err(Error::config("--threshold must be in [0, 1]"));
    }
    let detector = load_detector(&args.model)?;
    let raw = read_recording(&args.recording)?;
    eprintln!(
        "detect: model={} ({}) recording={} threshold={} collar={} smoothing={}",
        args.model.display(),
        detector.kind(),
        args.recording.display(),
        args.threshold,
        args.collar,
        SMOOTHING_S
    );
    let detection = detect(&detector, &raw, args.threshold, args.collar, SMOOTHING_S)?;

    let mut trace_csv = String::from("t");
    for name in &raw.channel_names {
        let _ = write!(trace_csv, ",{name}");
    }
    trace_csv.push_str(",fused\n");
    for t in 0..detection.fused.values.len() {
        let _ = write!(trace_csv, "{t}");
        for tr in &detection.channel_traces {
            let _ = write!(trace_csv, ",{:.6}", tr.values[t]);
        }
        let _ = writeln!(trace_csv, ",{:.6}", detection.fused.values[t]);
    }
    let trace_path = args.out.with_extension("trace.csv");
    write_text(&trace_path, &trace_csv)?;

    let mut mask_csv = String::from("t,mask\n");
    for (t, &m) in detection.mask.values.iter().enumerate() {
        let _ = writeln!(mask_csv, "{t},{}", u8::from(m));
    }
    let mask_path = args.out.with_extension("mask.csv");
    write_text(&mask_path, &mask_csv)?;
    eprintln!("wrote {} and {}", trace_path.display(), mask_path.display());
    Ok(())
}

// ---------------------------------------------------------------------------
// evaluate
// ---------------------------------------------------------------------------

#[derive(Args, Debug)]
pub struct EvaluateArgs {
    /// Corpus directory.
    #[arg(long)]
    pub corpus: PathBuf,

    /// Directory holding fold_<subject>.fcn and fold_<subject>.svm models.
    #[arg(long)]
    pub experiment_dir: PathBuf,

    /// Evaluate folds in parallel.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,

    /// Output results CSV.
    #[arg(short = 'o', long = "out")]
    pub out: PathBuf,
}

pub fn run_evaluate(args: EvaluateArgs) -> Result<()> {
    let corpus = Corpus::load(&args.corpus)?;
    eprintln!(
        "evaluate: corpus={} experiment={} jobs={} subjects={}",
        args.corpus.display(),
        args.experiment_dir.display(),
        args.jobs,
        corpus.subjects.len()
    );

    let score_subject = |subject: &Subject| -> Result<(
        nsd_core::experiment::SubjectScore,
        nsd_core::experiment::SubjectScore,
    )> {
        let mut scores = Vec::with_capacity(2);
        for ext in ["svm", "fcn"] {
            let path = args
                .experiment_dir
                .join(format!("fold_{}.{ext}", subject.id));
            if !path.exists() {
                return Err(Error::invalid(format!(
                    "missing fold model for subject '{}': {}",
                    subject.id,
                    path.display()
                )));
            }
            let detector = load_detector(&path)?;
            scores.push(evaluate_fold(&detector, subject)?);
        }
        let fcnn_score = scores.pop().expect("two scores");
        let svm_score = scores.pop().expect("two scores");
        Ok((svm_score, fcnn_score))
    };

    let pairs: Vec<_> = if args.jobs > 1 {
        corpus
            .subjects
            .par_iter()
            .map(score_subject)
            .collect::<Result<_>>()?
    } else {
        corpus
            .subjects
            .iter()
            .map(score_subject)
            .collect::<Result<_>>()?
    };

    let (svm_rows, fcnn_rows): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
    let svm_table = table_from(Pipeline::Svm, svm_rows);
    let fcnn_table = table_from(Pipeline::Fcnn, fcnn_rows);
    let csv = results_csv(&svm_table, &fcnn_table)?;
    write_text(&args.out, &csv)?;
    print!("{csv}");
    Ok(())
}

fn table_from(pipeline: Pipeline, rows: Vec<nsd_core::experiment::SubjectScore>) -> MetricsTable {
    // reuse the library's mean logic by rebuilding through the public surface
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

// ---------------------------------------------------------------------------
// features
// ---------------------------------------------------------------------------

#[derive(Args, Debug)]
pub struct FeaturesArgs {
    /// Raw 256 Hz recording CSV.
    #[arg(long)]
    pub recording: PathBuf,

    /// Matching annotation CSV (for the label column).
    #[arg(long)]
    pub annotations: PathBuf,

    /// Output CSV path.
    #[arg(short = 'o', long = "out")]
    pub out: PathBuf,
}

pub fn run_features(args: FeaturesArgs) -> Result<()> {
    let raw = read_recording(&args.recording)?;
    let annotations = read_annotations(&args.annotations)?;
    eprintln!(
        "features: recording={} annotations={} out={}",
        args.recording.display(),
        args.annotations.display(),
        args.out.display()
    );
    let subject = Subject {
        id: raw.subject_id.clone(),
        rec32: preprocess_recording(&raw)?,
        annotations,
    };
    let policy = nsd_core::preprocess::EpochingPolicy::svm();
    let epochs = nsd_core::preprocess::make_epochs(&subject.rec32, &policy)?;
    let (rows, labels) = subject_feature_rows(&subject)?;

    let mut csv = String::from("subject,channel,start_s");
    csv.push_str(",label");
    for i in 0..nsd_core::features::N_FEATURES {
        let _ = write!(csv, ",f{i}");
    }
    csv.push('\n');
    for ((epoch, row), label) in epochs.iter().zip(&rows).zip(&labels) {
        let _ = write!(
            csv,
            "{},{},{}",
            subject.id, epoch.channel_index, epoch.start_time_s
        );
        let _ = write!(csv, ",{}", u8::from(*label));
        for v in row.values {
            let _ = write!(csv, ",{v:.10e}");
        }
        csv.push('\n');
    }
    write_text(&args.out, &csv)
}

// ---------------------------------------------------------------------------
// localize
// ---------------------------------------------------------------------------

#[derive(Args, Debug)]
pub struct LocalizeArgs {
    /// Trained network model (.fcn).
    #[arg(long)]
    pub model: PathBuf,

    /// Raw 256 Hz recording CSV.
    #[arg(long)]
    pub recording: PathBuf,

    /// Channel index (0-based).
    #[arg(long)]
    pub channel: usize,

    /// Epoch start time in seconds (working 32 Hz timeline).
    #[arg(long)]
    pub epoch_start: f64,

    /// Number of top activations to report.
    #[arg(long, default_value_t = 1)]
    pub top_n: usize,

    /// Output CSV path.
    #[arg(short = 'o', long = "out")]
    pub out: PathBuf,
}

pub fn run_localize(args: LocalizeArgs) -> Result<()> {
    let detector = load_detector(&args.model)?;
    let Detector::Fcnn(model) = detector else {
        return Err(Error::config(
            "localization requires a network model (.fcn); feature models have no feature maps",
        ));
    };
    let raw = read_recording(&args.recording)?;
    let rec32 = preprocess_recording(&raw)?;
    if args.channel >= rec32.n_channels() {
        return Err(Error::config(format!(
            "channel {} out of range (recording has {})",
            args.channel,
            rec32.n_channels()
        )));
    }
    let start_sample = (args.epoch_start * TARGET_RATE_HZ).round() as usize;
    let n = rec32.n_samples();
    if args.epoch_start < 0.0 || start_sample + fcnn::INPUT_LEN > n {
        return Err(Error::config(format!(
            "epoch at {} s is out of range (recording spans {:.1} s)",
            args.epoch_start,
            n as f64 / TARGET_RATE_HZ
        )));
    }
    eprintln!(
        "localize: model={} recording={} channel={} epoch_start={} top_n={}",
        args.model.display(),
        args.recording.display(),
        args.channel,
        args.epoch_start,
        args.top_n
    );

    let epoch = Epoch {
        channel_index: args.channel,
        start_time_s: args.epoch_start,
        samples: rec32.samples[args.channel][start_sample..start_sample + fcnn::INPUT_LEN].to_vec(),
        label: None,
    };
    let standardized = standardize_epoch(&epoch);
    let samples: Vec<Vec<f32>> = vec![standardized.samples.iter().map(|&v| v as f32).collect()];
    let mut trace = ForwardTrace::new();
    let mut input = fcnn::Batch::zeros(1, 1, fcnn::INPUT_LEN);
    input.data.copy_from_slice(&samples[0]);
    fcnn::forward(&model, &input, Mode::Infer, &mut trace)?;
    let windows = localize(&trace, 0, args.top_n);

    let mut csv = String::from("channel,start_s,end_s,score\n");
    for w in &windows {
        let _ = writeln!(
            csv,
            "{},{:.6},{:.6},{:.6}",
            args.channel,
            args.epoch_start + w.start_sample as f64 / TARGET_RATE_HZ,
            args.epoch_start + w.end_sample as f64 / TARGET_RATE_HZ,
            w.score
        );
    }
    write_text(&args.out, &csv)?;
    eprintln!(
        "seizure probability of the epoch: {:.4}",
        trace.seizure_probability(0)
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// inspect-model
// ---------------------------------------------------------------------------

#[derive(Args, Debug)]
pub struct InspectArgs {
    /// Model file (.fcn or .svm).
    #[arg(long)]
    pub model: PathBuf,
}

pub fn run_inspect(args: InspectArgs) -> Result<()> {
    match load_detector(&args.model)? {
        Detector::Fcnn(model) => {
            let (per_layer, without_bn, with_bn) = count_params(&model);
            println!("network model: {}", args.model.display());
            println!();
            println!("layer            output shape   parameters");
            println!("input            256x1          0");
            let rows = [
                ("conv1 32f k4 s1", "32x253x1", per_layer[0]),
                ("conv2 32f k4 s1", "32x250x1", per_layer[1]),
                ("conv3 32f k4 s1", "32x247x1", per_layer[2]),
                ("batch norm     ", "32x247x1", per_layer[3]),
                ("avg pool w8 s2 ", "32x120x1", 0),
                ("conv4 32f k4 s1", "32x117x1", per_layer[4]),
                ("conv5 32f k4 s1", "32x114x1", per_layer[5]),
                ("avg pool w4 s2 ", "32x56x1 ", 0),
                ("conv6 2f k4 s1 ", "2x53x1  ", per_layer[6]),
                ("GAP            ", "2x1     ", 0),
                ("softmax        ", "2       ", 0),
            ];
            for (name, shape, params) in rows {
                println!("{name}  {shape}       {params}");
            }
            println!();
            println!("total parameters excluding batch norm: {without_bn}");
            println!("total parameters including batch norm: {with_bn}");
            println!();
            println!("receptive fields (conv layer: size samples, jump):");
            for layer in 1..=6 {
                let (size, jump) = receptive_field(layer)?;
                println!("  layer {layer}: {size} samples, jump {jump}");
            }
        }
        Detector::Svm(model) => {
            println!("feature-classifier model: {}", args.model.display());
            println!("support vectors: {}", model.support_vectors.len());
            println!("feature dimension: {}", model.dim);
            println!("gamma: {}", model.gamma);
            println!("bias: {}", model.bias);
            println!(
                "sigmoid calibration: a={} b={}",
                model.platt_a, model.platt_b
            );
            println!("converged: {}", model.converged);
        }
    }
    Ok(())
}
