//! Whole-network forward and backward passes over reusable buffers.

use super::ops::*;
use super::real::Real;
use super::{
    FcnnModel, BN_MOMENTUM, INPUT_LEN, MAPS, N_CLASSES, POOL1, POOL2, SEIZURE_CLASS,
    TEMPORAL_LENGTHS,
};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Infer,
}

/// Per-layer outputs of one forward pass, plus reusable backward scratch.
/// Buffers are recycled across calls; sizes follow the input batch.
#[derive(Debug)]
pub struct ForwardTrace<T> {
    pub input: Batch<T>,
    /// Post-ReLU conv outputs 1..3.
    pub a1: Batch<T>,
    pub a2: Batch<T>,
    pub a3: Batch<T>,
    /// Batch-norm internals: normalized values and output.
    pub bn_xhat: Batch<T>,
    pub bn_out: Batch<T>,
    /// Train-mode batch statistics (per map), for running-stat updates.
    pub bn_batch_mean: Vec<f64>,
    pub bn_batch_var: Vec<f64>,
    pub p1: Batch<T>,
    pub a4: Batch<T>,
    pub a5: Batch<T>,
    pub p2: Batch<T>,
    /// Final 2-map activations (post-ReLU), temporal length 53.
    pub a6: Batch<T>,
    /// GAP outputs, `[b * 2]`.
    pub logits: Vec<f64>,
    /// Softmax probabilities, `[b * 2]`.
    pub probs: Vec<f64>,

    // backward scratch
    g6: Batch<T>,
    gp2: Batch<T>,
    g5: Batch<T>,
    g4: Batch<T>,
    gp1: Batch<T>,
    g3: Batch<T>,
    g2: Batch<T>,
    g1: Batch<T>,
}

impl<T: Real> Default for ForwardTrace<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Real> ForwardTrace<T> {
    pub fn new() -> Self {
        let empty = || Batch::zeros(0, 0, 0);
        ForwardTrace {
            input: empty(),
            a1: empty(),
            a2: empty(),
            a3: empty(),
            bn_xhat: empty(),
            bn_out: empty(),
            bn_batch_mean: Vec::new(),
            bn_batch_var: Vec::new(),
            p1: empty(),
            a4: empty(),
            a5: empty(),
            p2: empty(),
            a6: empty(),
            logits: Vec::new(),
            probs: Vec::new(),
            g6: empty(),
            gp2: empty(),
            g5: empty(),
            g4: empty(),
            gp1: empty(),
            g3: empty(),
            g2: empty(),
            g1: empty(),
        }
    }

    pub fn batch_size(&self) -> usize {
        self.input.b
    }

    pub fn final_maps(&self) -> &Batch<T> {
        &self.a6
    }

    /// Temporal lengths of the eight staged outputs, for shape assertions.
    pub fn temporal_lengths(&self) -> [usize; 8] {
        [
            self.a1.len,
            self.a2.len,
            self.a3.len,
            self.p1.len,
            self.a4.len,
            self.a5.len,
            self.p2.len,
            self.a6.len,
        ]
    }

    pub fn seizure_probability(&self, example: usize) -> f64 {
        self.probs[example * N_CLASSES + SEIZURE_CLASS]
    }
}

/// Alias used by the optimizer; the trace doubles as the working buffer set.
pub type Workspace<T> = ForwardTrace<T>;

/// Runs the full network on a `[b, 1, 256]` batch. Train mode normalizes
/// with batch statistics and records them in the trace (running statistics
/// are NOT updated here; the trainer owns that step).
pub fn forward<T: Real>(
    model: &FcnnModel<T>,
    input: &Batch<T>,
    mode: Mode,
    trace: &mut ForwardTrace<T>,
) -> Result<()> {
    if input.maps != 1 || input.len != INPUT_LEN {
        return Err(Error::invalid(format!(
            "network input must be [b, 1, {INPUT_LEN}], got [{}, {}, {}]",
            input.b, input.maps, input.len
        )));
    }
    if mode == Mode::Train && input.b * TEMPORAL_LENGTHS[2] < 2 {
        return Err(Error::invalid(
            "train-mode batch norm needs at least 2 values",
        ));
    }
    trace.input.reset(input.b, input.maps, input.len);
    trace.input.data.copy_from_slice(&input.data);

    conv_forward(
        input,
        &model.conv[0].weights,
        &model.conv[0].bias,
        &mut trace.a1,
    );
    relu_inplace(&mut trace.a1);
    conv_forward(
        &trace.a1,
        &model.conv[1].weights,
        &model.conv[1].bias,
        &mut trace.a2,
    );
    relu_inplace(&mut trace.a2);
    conv_forward(
        &trace.a2,
        &model.conv[2].weights,
        &model.conv[2].bias,
        &mut trace.a3,
    );
    relu_inplace(&mut trace.a3);

    match mode {
        Mode::Train => {
            let (mean, var) = batch_stats(&trace.a3);
            batchnorm_apply(
                &trace.a3,
                &mean,
                &var,
                &model.bn.gamma,
                &model.bn.beta,
                &mut trace.bn_xhat,
                &mut trace.bn_out,
            );
            trace.bn_batch_mean = mean;
            trace.bn_batch_var = var;
        }
        Mode::Infer => {
            batchnorm_infer(
                &trace.a3,
                &model.bn.running_mean,
                &model.bn.running_var,
                &model.bn.gamma,
                &model.bn.beta,
                &mut trace.bn_out,
            );
            trace.bn_batch_mean.clear();
            trace.bn_batch_var.clear();
        }
    }

    avgpool_forward(&trace.bn_out, POOL1.0, POOL1.1, &mut trace.p1);
    conv_forward(
        &trace.p1,
        &model.conv[3].weights,
        &model.conv[3].bias,
        &mut trace.a4,
    );
    relu_inplace(&mut trace.a4);
    conv_forward(
        &trace.a4,
        &model.conv[4].weights,
        &model.conv[4].bias,
        &mut trace.a5,
    );
    relu_inplace(&mut trace.a5);
    avgpool_forward(&trace.a5, POOL2.0, POOL2.1, &mut trace.p2);
    conv_forward(
        &trace.p2,
        &model.conv[5].weights,
        &model.conv[5].bias,
        &mut trace.a6,
    );
    relu_inplace(&mut trace.a6);

    debug_assert_eq!(trace.temporal_lengths(), TEMPORAL_LENGTHS);
    gap(&trace.a6, &mut trace.logits);
    softmax2(&trace.logits, &mut trace.probs);
    Ok(())
}

/// Parameter gradients, mirroring the model's trainable tensors.
#[derive(Debug, Clone)]
pub struct Gradients<T> {
    pub conv_w: [Vec<T>; 6],
    pub conv_b: [Vec<T>; 6],
    pub bn_gamma: Vec<T>,
    pub bn_beta: Vec<T>,
}

impl<T: Real> Gradients<T> {
    pub fn zeros_like(model: &FcnnModel<T>) -> Self {
        Gradients {
            conv_w: std::array::from_fn(|i| vec![T::ZERO; model.conv[i].weights.len()]),
            conv_b: std::array::from_fn(|i| vec![T::ZERO; model.conv[i].bias.len()]),
            bn_gamma: vec![T::ZERO; MAPS],
            bn_beta: vec![T::ZERO; MAPS],
        }
    }

    /// Same ordering as `FcnnModel::flatten_params`.
    pub fn flatten(&self) -> Vec<T> {
        let mut out = Vec::new();
        for i in 0..6 {
            out.extend_from_slice(&self.conv_w[i]);
            out.extend_from_slice(&self.conv_b[i]);
            if i == 2 {
                out.extend_from_slice(&self.bn_gamma);
                out.extend_from_slice(&self.bn_beta);
            }
        }
        out
    }
}

/// Mean cross-entropy over the batch (stable log-sum-exp form).
pub fn batch_loss(logits: &[f64], targets: &[usize]) -> f64 {
    let mut loss = 0.0;
    for (pair, &t) in logits.chunks_exact(N_CLASSES).zip(targets) {
        let m = pair[0].max(pair[1]);
        let lse = m + ((pair[0] - m).exp() + (pair[1] - m).exp()).ln();
        loss += lse - pair[t];
    }
    loss / targets.len() as f64
}

/// Backward pass for the mean cross-entropy of a train-mode forward trace.
/// Returns the loss; fills `grads` with exact gradients for every W, b,
/// gamma, beta.
pub fn loss_and_gradients<T: Real>(
    model: &FcnnModel<T>,
    trace: &mut ForwardTrace<T>,
    targets: &[usize],
    grads: &mut Gradients<T>,
) -> f64 {
    let b = trace.batch_size();
    assert_eq!(targets.len(), b, "one target per batch example");
    let loss = batch_loss(&trace.logits, targets);

    // d(mean CE)/d logits = (softmax - onehot) / b
    let inv_b = 1.0 / b as f64;
    let len6 = trace.a6.len;
    let gap_scale = 1.0 / len6 as f64;
    trace.g6.reset(b, N_CLASSES, len6);
    for bi in 0..b {
        for k in 0..N_CLASSES {
            let dlogit = (trace.probs[bi * N_CLASSES + k]
                - if targets[bi] == k { 1.0 } else { 0.0 })
                * inv_b;
            let dmap = T::from_f64(dlogit * gap_scale);
            let start = bi * N_CLASSES * len6 + k * len6;
            for v in &mut trace.g6.data[start..start + len6] {
                *v = dmap;
            }
        }
    }
    relu_backward_inplace(&mut trace.g6, &trace.a6);

    // conv6
    conv_backward_params(
        &trace.p2,
        &trace.g6,
        &mut grads.conv_w[5],
        &mut grads.conv_b[5],
    );
    conv_backward_input(&model.conv[5].weights, &trace.g6, MAPS, &mut trace.gp2);

    // pool2
    avgpool_backward(&trace.gp2, POOL2.0, POOL2.1, trace.a5.len, &mut trace.g5);
    relu_backward_inplace(&mut trace.g5, &trace.a5);

    // conv5
    conv_backward_params(
        &trace.a4,
        &trace.g5,
        &mut grads.conv_w[4],
        &mut grads.conv_b[4],
    );
    conv_backward_input(&model.conv[4].weights, &trace.g5, MAPS, &mut trace.g4);
    relu_backward_inplace(&mut trace.g4, &trace.a4);

    // conv4
    conv_backward_params(
        &trace.p1,
        &trace.g4,
        &mut grads.conv_w[3],
        &mut grads.conv_b[3],
    );
    conv_backward_input(&model.conv[3].weights, &trace.g4, MAPS, &mut trace.gp1);

    // pool1, then batch norm (through the batch statistics)
    avgpool_backward(
        &trace.gp1,
        POOL1.0,
        POOL1.1,
        trace.bn_out.len,
        &mut trace.g3,
    );
    batchnorm_backward(
        &mut trace.g3,
        &trace.bn_xhat,
        &trace.bn_batch_var,
        &model.bn.gamma,
        &mut grads.bn_gamma,
        &mut grads.bn_beta,
    );
    relu_backward_inplace(&mut trace.g3, &trace.a3);

    // conv3
    conv_backward_params(
        &trace.a2,
        &trace.g3,
        &mut grads.conv_w[2],
        &mut grads.conv_b[2],
    );
    conv_backward_input(&model.conv[2].weights, &trace.g3, MAPS, &mut trace.g2);
    relu_backward_inplace(&mut trace.g2, &trace.a2);

    // conv2
    conv_backward_params(
        &trace.a1,
        &trace.g2,
        &mut grads.conv_w[1],
        &mut grads.conv_b[1],
    );
    conv_backward_input(&model.conv[1].weights, &trace.g2, MAPS, &mut trace.g1);
    relu_backward_inplace(&mut trace.g1, &trace.a1);

    // conv1 (input gradient not needed)
    conv_backward_params(
        &trace.input,
        &trace.g1,
        &mut grads.conv_w[0],
        &mut grads.conv_b[0],
    );

    loss
}

/// Updates running batch-norm statistics from a train-mode trace.
pub fn update_running_stats<T: Real>(model: &mut FcnnModel<T>, trace: &ForwardTrace<T>) {
    for m in 0..MAPS {
        let rm = model.bn.running_mean[m].to_f64();
        let rv = model.bn.running_var[m].to_f64();
        model.bn.running_mean[m] =
            T::from_f64(BN_MOMENTUM * rm + (1.0 - BN_MOMENTUM) * trace.bn_batch_mean[m]);
        model.bn.running_var[m] =
            T::from_f64(BN_MOMENTUM * rv + (1.0 - BN_MOMENTUM) * trace.bn_batch_var[m]);
    }
}

/// Seizure probability for each standardized 256-sample epoch, in chunks of
/// `batch` examples (inference mode).
pub fn predict_probs<T: Real>(
    model: &FcnnModel<T>,
    epochs: &[Vec<T>],
    batch: usize,
    trace: &mut ForwardTrace<T>,
) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(epochs.len());
    let mut input = Batch::zeros(0, 0, 0);
    for chunk in epochs.chunks(batch.max(1)) {
        input.reset(chunk.len(), 1, INPUT_LEN);
        for (bi, e) in chunk.iter().enumerate() {
            if e.len() != INPUT_LEN {
                return Err(Error::invalid("epoch length must be 256"));
            }
            input.data[bi * INPUT_LEN..(bi + 1) * INPUT_LEN].copy_from_slice(e);
        }
        forward(model, &input, Mode::Infer, trace)?;
        for bi in 0..chunk.len() {
            out.push(trace.seizure_probability(bi));
        }
    }
    Ok(out)
}
