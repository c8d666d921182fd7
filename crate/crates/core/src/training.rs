//! Network optimization: cross-entropy loss, SGD with Nesterov momentum, the
//! stepped learning-rate schedule, class-balanced batching, and the
//! leave-one-subject-out split.

use std::path::Path;

use crate::error::{Error, Result};
use crate::fcnn::{
    self, forward, init_model, loss_and_gradients, update_running_stats, Batch, FcnnModel,
    ForwardTrace, Gradients, Mode, Real, INPUT_LEN,
};
use crate::metrics::{auc, roc_curve};
use crate::rng::Rng;

#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub initial_lr: f64,
    /// Multiplicative decay applied every `decay_every` iterations.
    pub lr_decay: f64,
    pub decay_every: usize,
    pub nesterov_momentum: f64,
    /// Clipped to the balanced set size at desk scale.
    pub batch_size: usize,
    pub total_iterations: usize,
    pub rng_seed: u64,
    /// Cap on the epochs scored for the per-iteration history metrics.
    pub metric_cap: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            initial_lr: 0.003,
            lr_decay: 0.9,
            decay_every: 20,
            nesterov_momentum: 0.9,
            batch_size: 2048,
            total_iterations: 60,
            rng_seed: 0,
            metric_cap: 512,
        }
    }
}

/// Learning rate at a given iteration: reduced by 10% every 20 iterations,
/// compounding.
pub fn lr_at(iteration: usize, cfg: &TrainConfig) -> f64 {
    cfg.initial_lr * cfg.lr_decay.powi((iteration / cfg.decay_every) as i32)
}

/// Cross-entropy of a probability pair: `-ln p[target]`, clamped so exact
/// zeros stay finite. Training itself computes the loss from logits via
/// log-sum-exp; this form is the probability-space contract.
pub fn cross_entropy(probs: &[f64; 2], target: usize) -> f64 {
    -probs[target].max(1e-38).ln()
}

/// One Nesterov step: `v <- mu*v - lr*grad(theta + mu*v); theta <- theta + v`.
pub fn nesterov_step<T: Real>(
    params: &mut [T],
    velocities: &mut [T],
    grad_fn: impl FnOnce(&[T]) -> Vec<T>,
    lr: f64,
    mu: f64,
) {
    let lookahead: Vec<T> = params
        .iter()
        .zip(velocities.iter())
        .map(|(&p, &v)| p + T::from_f64(mu) * v)
        .collect();
    let grad = grad_fn(&lookahead);
    assert_eq!(grad.len(), params.len());
    for ((p, v), g) in params.iter_mut().zip(velocities.iter_mut()).zip(&grad) {
        *v = T::from_f64(mu) * *v - T::from_f64(lr) * *g;
        *p += *v;
    }
}

/// Standardized 256-sample epochs with binary labels, ready for the network.
#[derive(Debug, Clone, Default)]
pub struct LabeledEpochs {
    pub samples: Vec<Vec<f32>>,
    pub labels: Vec<bool>,
}

impl LabeledEpochs {
    pub fn push(&mut self, samples: Vec<f32>, label: bool) {
        assert_eq!(samples.len(), INPUT_LEN);
        self.samples.push(samples);
        self.labels.push(label);
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn n_seizure(&self) -> usize {
        self.labels.iter().filter(|&&l| l).count()
    }

    /// Stratified subsample of at most `cap` epochs, deterministic in `rng`.
    pub fn subsample(&self, cap: usize, rng: &mut Rng) -> LabeledEpochs {
        if self.len() <= cap {
            return self.clone();
        }
        let pos: Vec<usize> = (0..self.len()).filter(|&i| self.labels[i]).collect();
        let neg: Vec<usize> = (0..self.len()).filter(|&i| !self.labels[i]).collect();
        let take_neg = (cap - (cap / 2).min(pos.len())).min(neg.len());
        let take_pos = (cap - take_neg).min(pos.len());
        let mut picked: Vec<usize> = Vec::with_capacity(take_pos + take_neg);
        let pos_sel = rng.sample_indices(pos.len(), take_pos);
        let neg_sel = rng.sample_indices(neg.len(), take_neg);
        picked.extend(pos_sel.into_iter().map(|i| pos[i]));
        picked.extend(neg_sel.into_iter().map(|i| neg[i]));
        picked.sort_unstable();
        let mut out = LabeledEpochs::default();
        for i in picked {
            out.push(self.samples[i].clone(), self.labels[i]);
        }
        out
    }
}

#[derive(Debug, Clone, Copy)]
pub struct IterationRecord {
    pub iteration: usize,
    pub lr: f64,
    pub train_loss: f64,
    pub train_auc: f64,
    pub val_auc: f64,
}

/// Per-iteration training curve.
#[derive(Debug, Clone, Default)]
pub struct TrainHistory {
    pub records: Vec<IterationRecord>,
}

impl TrainHistory {
    /// CSV with the pinned `iteration,train_loss,train_auc,val_auc` columns.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut out = String::from("iteration,train_loss,train_auc,val_auc\n");
        for r in &self.records {
            out.push_str(&format!(
                "{},{:.8},{:.6},{:.6}\n",
                r.iteration, r.train_loss, r.train_auc, r.val_auc
            ));
        }
        std::fs::write(path, out).map_err(|e| Error::io(path, e))
    }
}

/// AUC of the model over a labeled set (inference mode); 0.5 when the set is
/// single-class and carries no ranking signal.
fn model_auc(
    model: &FcnnModel<f32>,
    set: &LabeledEpochs,
    batch: usize,
    trace: &mut ForwardTrace<f32>,
) -> Result<f64> {
    if set.is_empty() {
        return Ok(0.5);
    }
    let probs = fcnn::predict_probs(model, &set.samples, batch, trace)?;
    if set.labels.iter().all(|&l| l) || set.labels.iter().all(|&l| !l) {
        return Ok(0.5);
    }
    Ok(auc(&roc_curve(&probs, &set.labels)?))
}

/// Trains the network: one iteration is a full shuffled pass over the
/// balanced multiset (every seizure epoch plus an equal-count background
/// subsample redrawn per iteration), in batches of `batch_size` (clipped).
/// No early stopping; runs exactly `total_iterations` iterations.
pub fn train_fcnn(
    train: &LabeledEpochs,
    val: &LabeledEpochs,
    cfg: &TrainConfig,
) -> Result<(FcnnModel<f32>, TrainHistory)> {
    let n_pos = train.n_seizure();
    let n_neg = train.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::numeric("training data must contain both classes"));
    }

    let mut model = init_model::<f32>(cfg.rng_seed);
    let mut params: Vec<f32> = model.flatten_params();
    let mut velocities = vec![0.0f32; params.len()];
    let mut grads = Gradients::zeros_like(&model);
    let mut trace = ForwardTrace::new();
    let mut input = Batch::<f32>::zeros(0, 0, 0);

    let pos_idx: Vec<usize> = (0..train.len()).filter(|&i| train.labels[i]).collect();
    let neg_idx: Vec<usize> = (0..train.len()).filter(|&i| !train.labels[i]).collect();
    let (minority, majority) = if pos_idx.len() <= neg_idx.len() {
        (&pos_idx, &neg_idx)
    } else {
        (&neg_idx, &pos_idx)
    };

    // fixed capped metric sets
    let mut metric_rng = Rng::stream(cfg.rng_seed, 777);
    let val_metric = val.subsample(cfg.metric_cap, &mut metric_rng);
    let train_metric = train.subsample(cfg.metric_cap, &mut metric_rng);

    let mut history = TrainHistory::default();
    for iteration in 0..cfg.total_iterations {
        let lr = lr_at(iteration, cfg);
        let mu = cfg.nesterov_momentum;

        // balanced multiset for this iteration
        let mut sampler = Rng::stream(cfg.rng_seed, 1000 + iteration as u64);
        let mut indices: Vec<usize> = Vec::with_capacity(2 * minority.len());
        indices.extend_from_slice(minority);
        let picks = sampler.sample_indices(majority.len(), minority.len().min(majority.len()));
        indices.extend(picks.into_iter().map(|i| majority[i]));
        sampler.shuffle(&mut indices);

        let batch_size = cfg.batch_size.min(indices.len()).max(1);
        let mut loss_sum = 0.0;
        let mut n_batches = 0usize;
        for chunk in indices.chunks(batch_size) {
            input.reset(chunk.len(), 1, INPUT_LEN);
            for (bi, &idx) in chunk.iter().enumerate() {
                input.data[bi * INPUT_LEN..(bi + 1) * INPUT_LEN]
                    .copy_from_slice(&train.samples[idx]);
            }
            let targets: Vec<usize> = chunk
                .iter()
                .map(|&i| usize::from(train.labels[i]))
                .collect();

            let mut batch_loss_val = 0.0;
            nesterov_step(
                &mut params,
                &mut velocities,
                |lookahead| {
                    model.unflatten_params(lookahead);
                    forward(&model, &input, Mode::Train, &mut trace).expect("valid batch");
                    batch_loss_val = loss_and_gradients(&model, &mut trace, &targets, &mut grads);
                    update_running_stats(&mut model, &trace);
                    grads.flatten()
                },
                lr,
                mu,
            );
            loss_sum += batch_loss_val;
            n_batches += 1;
        }

        model.unflatten_params(&params);
        let train_auc = model_auc(&model, &train_metric, cfg.batch_size.min(512), &mut trace)?;
        let val_auc = model_auc(&model, &val_metric, cfg.batch_size.min(512), &mut trace)?;
        history.records.push(IterationRecord {
            iteration,
            lr,
            train_loss: loss_sum / n_batches as f64,
            train_auc,
            val_auc,
        });
    }

    model.unflatten_params(&params);
    Ok((model, history))
}

/// Leave-one-subject-out split: test is the held-out subject, validation is
/// the subject cyclically following it, the rest train.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LooSplit {
    pub train: Vec<String>,
    pub validation: String,
    pub test: String,
}

pub fn loo_split(subjects: &[String], held_out: &str) -> Result<LooSplit> {
    if subjects.len() < 3 {
        return Err(Error::invalid("leave-one-out needs at least 3 subjects"));
    }
    let pos = subjects
        .iter()
        .position(|s| s == held_out)
        .ok_or_else(|| Error::invalid(format!("unknown subject '{held_out}'")))?;
    let validation = subjects[(pos + 1) % subjects.len()].clone();
    let train: Vec<String> = subjects
        .iter()
        .filter(|s| s.as_str() != held_out && **s != validation)
        .cloned()
        .collect();
    Ok(LooSplit {
        train,
        validation,
        test: held_out.to_string(),
    })
}
