//! The raw-waveform fully convolutional network: six kernel-4 conv layers
//! with ReLU, one batch-norm layer, two average-pooling stages, and global
//! average pooling into a two-class softmax.
//!
//! Architecture (temporal lengths for the 256-sample input):
//!
//! ```text
//! input 256
//!   conv1  1->32  k4 s1   253
//!   conv2 32->32  k4 s1   250
//!   conv3 32->32  k4 s1   247
//!   batch norm             247
//!   avg pool w8 s2         120
//!   conv4 32->32  k4 s1   117
//!   conv5 32->32  k4 s1   114
//!   avg pool w4 s2          56
//!   conv6 32->2   k4 s1     53
//!   GAP -> softmax           2
//! ```

mod net;
mod ops;
mod real;

pub use net::{
    batch_loss, forward, loss_and_gradients, predict_probs, update_running_stats, ForwardTrace,
    Gradients, Mode, Workspace,
};
pub use ops::{
    avgpool_backward, avgpool_forward, batch_stats, batchnorm_apply, batchnorm_backward,
    batchnorm_infer, conv_backward_input, conv_backward_params, conv_forward, gap, relu_inplace,
    softmax2, Batch, BN_EPSILON, KERNEL,
};
pub use real::Real;

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::rng::Rng;

pub const INPUT_LEN: usize = 256;
pub const MAPS: usize = 32;
pub const N_CLASSES: usize = 2;
/// Class index of the seizure map.
pub const SEIZURE_CLASS: usize = 1;

/// (width, stride) of the two pooling stages.
pub const POOL1: (usize, usize) = (8, 2);
pub const POOL2: (usize, usize) = (4, 2);

/// Temporal lengths after each parameterized or pooling stage.
pub const TEMPORAL_LENGTHS: [usize; 8] = [253, 250, 247, 120, 117, 114, 56, 53];

pub const BN_MOMENTUM: f64 = 0.9;

/// (in_maps, out_maps) per conv layer.
pub const CONV_DIMS: [(usize, usize); 6] = [
    (1, MAPS),
    (MAPS, MAPS),
    (MAPS, MAPS),
    (MAPS, MAPS),
    (MAPS, MAPS),
    (MAPS, N_CLASSES),
];

#[derive(Debug, Clone, PartialEq)]
pub struct ConvLayer<T> {
    pub in_maps: usize,
    pub out_maps: usize,
    /// `weights[(k * in_maps + c) * 4 + j]`
    pub weights: Vec<T>,
    pub bias: Vec<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchNormLayer<T> {
    pub gamma: Vec<T>,
    pub beta: Vec<T>,
    pub running_mean: Vec<T>,
    pub running_var: Vec<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FcnnModel<T> {
    pub conv: [ConvLayer<T>; 6],
    pub bn: BatchNormLayer<T>,
}

impl<T: Real> ConvLayer<T> {
    fn zeros(in_maps: usize, out_maps: usize) -> Self {
        ConvLayer {
            in_maps,
            out_maps,
            weights: vec![T::ZERO; out_maps * in_maps * KERNEL],
            bias: vec![T::ZERO; out_maps],
        }
    }

    pub fn n_params(&self) -> usize {
        self.weights.len() + self.bias.len()
    }
}

impl<T: Real> FcnnModel<T> {
    /// Converts parameter precision (f32 storage vs f64 gradient checking).
    pub fn convert<U: Real>(&self) -> FcnnModel<U> {
        let conv = std::array::from_fn(|i| ConvLayer {
            in_maps: self.conv[i].in_maps,
            out_maps: self.conv[i].out_maps,
            weights: self.conv[i]
                .weights
                .iter()
                .map(|v| U::from_f64(v.to_f64()))
                .collect(),
            bias: self.conv[i]
                .bias
                .iter()
                .map(|v| U::from_f64(v.to_f64()))
                .collect(),
        });
        let cv = |v: &[T]| -> Vec<U> { v.iter().map(|x| U::from_f64(x.to_f64())).collect() };
        FcnnModel {
            conv,
            bn: BatchNormLayer {
                gamma: cv(&self.bn.gamma),
                beta: cv(&self.bn.beta),
                running_mean: cv(&self.bn.running_mean),
                running_var: cv(&self.bn.running_var),
            },
        }
    }

    /// Trainable parameters in Table order (conv1..3, bn gamma/beta,
    /// conv4..6), flattened for the optimizer and gradient checks.
    pub fn flatten_params(&self) -> Vec<T> {
        let mut out = Vec::with_capacity(count_params_static().2);
        for (i, layer) in self.conv.iter().enumerate() {
            out.extend_from_slice(&layer.weights);
            out.extend_from_slice(&layer.bias);
            if i == 2 {
                out.extend_from_slice(&self.bn.gamma);
                out.extend_from_slice(&self.bn.beta);
            }
        }
        out
    }

    pub fn unflatten_params(&mut self, flat: &[T]) {
        let mut pos = 0;
        fn take<T: Real>(flat: &[T], dst: &mut [T], pos: &mut usize) {
            dst.copy_from_slice(&flat[*pos..*pos + dst.len()]);
            *pos += dst.len();
        }
        for i in 0..6 {
            take(flat, &mut self.conv[i].weights, &mut pos);
            take(flat, &mut self.conv[i].bias, &mut pos);
            if i == 2 {
                take(flat, &mut self.bn.gamma, &mut pos);
                take(flat, &mut self.bn.beta, &mut pos);
            }
        }
        assert_eq!(pos, flat.len());
    }
}

/// Glorot-uniform weights, zero biases, identity batch norm. Deterministic
/// per seed; the draw sequence is fixed layer by layer.
pub fn init_model<T: Real>(seed: u64) -> FcnnModel<T> {
    let mut rng = Rng::new(seed);
    let conv = std::array::from_fn(|i| {
        let (in_maps, out_maps) = CONV_DIMS[i];
        let mut layer = ConvLayer::<T>::zeros(in_maps, out_maps);
        let bound = (6.0 / ((in_maps * KERNEL + out_maps * KERNEL) as f64)).sqrt();
        for w in &mut layer.weights {
            *w = T::from_f64(rng.uniform(-bound, bound));
        }
        layer
    });
    FcnnModel {
        conv,
        bn: BatchNormLayer {
            gamma: vec![T::ONE; MAPS],
            beta: vec![T::ZERO; MAPS],
            running_mean: vec![T::ZERO; MAPS],
            running_var: vec![T::ONE; MAPS],
        },
    }
}

fn count_params_static() -> ([usize; 7], usize, usize) {
    let mut per_layer = [0usize; 7];
    let mut idx = 0;
    for (i, &(in_maps, out_maps)) in CONV_DIMS.iter().enumerate() {
        per_layer[idx] = out_maps * in_maps * KERNEL + out_maps;
        idx += 1;
        if i == 2 {
            per_layer[idx] = 2 * MAPS; // gamma + beta
            idx += 1;
        }
    }
    let with_bn: usize = per_layer.iter().sum();
    (per_layer, with_bn - 2 * MAPS, with_bn)
}

/// Per-layer parameter counts in Table order plus both totals
/// (without and with the batch-norm parameters).
pub fn count_params<T: Real>(model: &FcnnModel<T>) -> ([usize; 7], usize, usize) {
    let mut per_layer = [0usize; 7];
    let mut idx = 0;
    for (i, layer) in model.conv.iter().enumerate() {
        per_layer[idx] = layer.n_params();
        idx += 1;
        if i == 2 {
            per_layer[idx] = model.bn.gamma.len() + model.bn.beta.len();
            idx += 1;
        }
    }
    let with_bn: usize = per_layer.iter().sum();
    let bn = per_layer[3];
    (per_layer, with_bn - bn, with_bn)
}

/// Receptive-field size and jump (input samples per unit step) after conv
/// layer `layer_index` in 1..=6.
pub fn receptive_field(layer_index: usize) -> Result<(usize, usize)> {
    if !(1..=6).contains(&layer_index) {
        return Err(Error::invalid(format!(
            "conv layer index {layer_index} out of range 1..=6"
        )));
    }
    let mut size = 1usize;
    let mut jump = 1usize;
    let mut conv_seen = 0usize;
    // the layer sequence with (kernel, stride)
    let stages: [(usize, usize, bool); 8] = [
        (KERNEL, 1, true),
        (KERNEL, 1, true),
        (KERNEL, 1, true),
        (POOL1.0, POOL1.1, false),
        (KERNEL, 1, true),
        (KERNEL, 1, true),
        (POOL2.0, POOL2.1, false),
        (KERNEL, 1, true),
    ];
    for (k, s, is_conv) in stages {
        size += (k - 1) * jump;
        jump *= s;
        if is_conv {
            conv_seen += 1;
            if conv_seen == layer_index {
                return Ok((size, jump));
            }
        }
    }
    unreachable!()
}

/// One localized input window traced back from a final-layer unit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalizedWindow {
    /// First input sample covered (inclusive).
    pub start_sample: usize,
    /// One past the last input sample covered (exclusive).
    pub end_sample: usize,
    pub score: f64,
}

/// Maps the seizure feature map of a forward trace back to input windows and
/// returns the `top_n` highest activations (ties to the earlier unit).
pub fn localize<T: Real>(
    trace: &ForwardTrace<T>,
    example: usize,
    top_n: usize,
) -> Vec<LocalizedWindow> {
    let (rf, jump) = receptive_field(6).expect("layer 6 exists");
    let maps = trace.final_maps();
    let seizure = maps.map(example, SEIZURE_CLASS);
    let mut indexed: Vec<(usize, f64)> = seizure.iter().map(|v| v.to_f64()).enumerate().collect();
    indexed.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    indexed
        .into_iter()
        .take(top_n.min(seizure.len()))
        .map(|(i, score)| LocalizedWindow {
            start_sample: i * jump,
            end_sample: (i * jump + rf).min(INPUT_LEN),
            score,
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Model file format
// ---------------------------------------------------------------------------

const FCN_MAGIC: &[u8; 4] = b"FCN1";
const FCN_VERSION: u16 = 1;
const TAG_CONV: u8 = 1;
const TAG_BN: u8 = 2;
const TAG_POOL: u8 = 3;

/// Writes the model as little-endian f32 arrays with explicit dimension
/// headers, layers in Table order (pools included for self-description).
pub fn save_model(model: &FcnnModel<f32>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io = |e| Error::io(path, e);
    w.write_all(FCN_MAGIC).map_err(io)?;
    w.write_all(&FCN_VERSION.to_le_bytes()).map_err(io)?;

    fn write_f32s(path: &Path, w: &mut BufWriter<File>, vs: &[f32]) -> Result<()> {
        for v in vs {
            w.write_all(&v.to_le_bytes())
                .map_err(|e| Error::io(path, e))?;
        }
        Ok(())
    }
    fn write_conv(path: &Path, w: &mut BufWriter<File>, layer: &ConvLayer<f32>) -> Result<()> {
        w.write_all(&[TAG_CONV]).map_err(|e| Error::io(path, e))?;
        for dim in [layer.out_maps as u32, layer.in_maps as u32, KERNEL as u32] {
            w.write_all(&dim.to_le_bytes())
                .map_err(|e| Error::io(path, e))?;
        }
        write_f32s(path, w, &layer.weights)?;
        write_f32s(path, w, &layer.bias)
    }
    fn write_pool(path: &Path, w: &mut BufWriter<File>, pool: (usize, usize)) -> Result<()> {
        w.write_all(&[TAG_POOL]).map_err(|e| Error::io(path, e))?;
        w.write_all(&(pool.0 as u32).to_le_bytes())
            .map_err(|e| Error::io(path, e))?;
        w.write_all(&(pool.1 as u32).to_le_bytes())
            .map_err(|e| Error::io(path, e))
    }

    write_conv(path, &mut w, &model.conv[0])?;
    write_conv(path, &mut w, &model.conv[1])?;
    write_conv(path, &mut w, &model.conv[2])?;
    w.write_all(&[TAG_BN]).map_err(io)?;
    w.write_all(&(MAPS as u32).to_le_bytes()).map_err(io)?;
    write_f32s(path, &mut w, &model.bn.gamma)?;
    write_f32s(path, &mut w, &model.bn.beta)?;
    write_f32s(path, &mut w, &model.bn.running_mean)?;
    write_f32s(path, &mut w, &model.bn.running_var)?;
    write_pool(path, &mut w, POOL1)?;
    write_conv(path, &mut w, &model.conv[3])?;
    write_conv(path, &mut w, &model.conv[4])?;
    write_pool(path, &mut w, POOL2)?;
    write_conv(path, &mut w, &model.conv[5])?;
    w.flush().map_err(io)
}

pub fn load_model(path: impl AsRef<Path>) -> Result<FcnnModel<f32>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = BufReader::new(file);

    fn read_exact_or(path: &Path, r: &mut BufReader<File>, buf: &mut [u8]) -> Result<()> {
        r.read_exact(buf)
            .map_err(|_| Error::format(path, 0, "truncated model file"))
    }
    let mut b4 = [0u8; 4];
    read_exact_or(path, &mut r, &mut b4)?;
    if &b4 != FCN_MAGIC {
        return Err(Error::format(path, 0, "bad magic, not an FCNN model file"));
    }
    let mut b2 = [0u8; 2];
    read_exact_or(path, &mut r, &mut b2)?;
    if u16::from_le_bytes(b2) != FCN_VERSION {
        return Err(Error::format(path, 0, "unsupported model format version"));
    }

    fn read_u32(path: &Path, r: &mut BufReader<File>) -> Result<u32> {
        let mut b = [0u8; 4];
        read_exact_or(path, r, &mut b)?;
        Ok(u32::from_le_bytes(b))
    }
    fn read_f32s(path: &Path, r: &mut BufReader<File>, n: usize) -> Result<Vec<f32>> {
        let mut out = Vec::with_capacity(n);
        let mut b = [0u8; 4];
        for _ in 0..n {
            read_exact_or(path, r, &mut b)?;
            out.push(f32::from_le_bytes(b));
        }
        Ok(out)
    }
    fn read_tag(path: &Path, r: &mut BufReader<File>, expect: u8) -> Result<()> {
        let mut b = [0u8; 1];
        read_exact_or(path, r, &mut b)?;
        if b[0] != expect {
            return Err(Error::format(
                path,
                0,
                format!("unexpected layer tag {}", b[0]),
            ));
        }
        Ok(())
    }
    fn read_conv(
        path: &Path,
        r: &mut BufReader<File>,
        expect: (usize, usize),
    ) -> Result<ConvLayer<f32>> {
        read_tag(path, r, TAG_CONV)?;
        let out_maps = read_u32(path, r)? as usize;
        let in_maps = read_u32(path, r)? as usize;
        let k = read_u32(path, r)? as usize;
        if (in_maps, out_maps) != expect || k != KERNEL {
            return Err(Error::format(
                path,
                0,
                "conv dimensions do not match the architecture",
            ));
        }
        Ok(ConvLayer {
            in_maps,
            out_maps,
            weights: read_f32s(path, r, out_maps * in_maps * KERNEL)?,
            bias: read_f32s(path, r, out_maps)?,
        })
    }
    fn read_pool(path: &Path, r: &mut BufReader<File>, expect: (usize, usize)) -> Result<()> {
        read_tag(path, r, TAG_POOL)?;
        let w = read_u32(path, r)? as usize;
        let s = read_u32(path, r)? as usize;
        if (w, s) != expect {
            return Err(Error::format(
                path,
                0,
                "pool dimensions do not match the architecture",
            ));
        }
        Ok(())
    }

    let conv1 = read_conv(path, &mut r, CONV_DIMS[0])?;
    let conv2 = read_conv(path, &mut r, CONV_DIMS[1])?;
    let conv3 = read_conv(path, &mut r, CONV_DIMS[2])?;
    read_tag(path, &mut r, TAG_BN)?;
    let maps = read_u32(path, &mut r)? as usize;
    if maps != MAPS {
        return Err(Error::format(path, 0, "batch-norm width mismatch"));
    }
    let gamma = read_f32s(path, &mut r, MAPS)?;
    let beta = read_f32s(path, &mut r, MAPS)?;
    let running_mean = read_f32s(path, &mut r, MAPS)?;
    let running_var = read_f32s(path, &mut r, MAPS)?;
    read_pool(path, &mut r, POOL1)?;
    let conv4 = read_conv(path, &mut r, CONV_DIMS[3])?;
    let conv5 = read_conv(path, &mut r, CONV_DIMS[4])?;
    read_pool(path, &mut r, POOL2)?;
    let conv6 = read_conv(path, &mut r, CONV_DIMS[5])?;

    let mut tail = [0u8; 1];
    if r.read(&mut tail).map_err(|e| Error::io(path, e))? != 0 {
        return Err(Error::format(path, 0, "trailing bytes after model data"));
    }

    Ok(FcnnModel {
        conv: [conv1, conv2, conv3, conv4, conv5, conv6],
        bn: BatchNormLayer {
            gamma,
            beta,
            running_mean,
            running_var,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parameter_counts_match_architecture_table() {
        let model = init_model::<f32>(0);
        let (per_layer, without_bn, with_bn) = count_params(&model);
        assert_eq!(per_layer, [160, 4128, 4128, 64, 4128, 4128, 258]);
        assert_eq!(without_bn, 16_930);
        assert_eq!(with_bn, 16_994);
    }

    #[test]
    fn init_is_deterministic_and_bounded() {
        let a = init_model::<f32>(42);
        let b = init_model::<f32>(42);
        assert_eq!(a, b);
        let c = init_model::<f32>(43);
        assert_ne!(a, c);

        let bound = (6.0f64 / (4.0 + 128.0)).sqrt() as f32;
        assert!(a.conv[0].weights.iter().all(|w| w.abs() <= bound));
        // the maximum draw sits near the bound over 128 samples
        let max = a.conv[0].weights.iter().fold(0.0f32, |m, w| m.max(w.abs()));
        assert!(max > bound * 0.9);
        assert!(a.conv[0].bias.iter().all(|&b| b == 0.0));
        assert!(a.bn.gamma.iter().all(|&g| g == 1.0));
        assert!(a.bn.running_var.iter().all(|&v| v == 1.0));
    }

    #[test]
    fn receptive_fields_follow_the_recursion() {
        assert_eq!(receptive_field(1).unwrap(), (4, 1));
        assert_eq!(receptive_field(2).unwrap(), (7, 1));
        assert_eq!(receptive_field(3).unwrap(), (10, 1));
        assert_eq!(receptive_field(4).unwrap(), (23, 2));
        assert_eq!(receptive_field(5).unwrap(), (29, 2));
        assert_eq!(receptive_field(6).unwrap(), (47, 4));
        assert!(receptive_field(0).is_err());
        assert!(receptive_field(7).is_err());
    }

    #[test]
    fn flatten_round_trip() {
        let model = init_model::<f64>(7);
        let flat = model.flatten_params();
        assert_eq!(flat.len(), 16_994);
        let mut other = init_model::<f64>(8);
        other.unflatten_params(&flat);
        assert_eq!(other.conv, model.conv);
        assert_eq!(other.bn.gamma, model.bn.gamma);
        assert_eq!(other.bn.beta, model.bn.beta);
    }

    #[test]
    fn model_file_round_trip_is_exact() {
        let model = init_model::<f32>(3);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.fcn");
        save_model(&model, &path).unwrap();
        let back = load_model(&path).unwrap();
        assert_eq!(model, back);
    }

    #[test]
    fn truncated_and_corrupt_files_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.fcn");
        let model = init_model::<f32>(3);
        save_model(&model, &path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() / 2]).unwrap();
        assert!(load_model(&path).is_err());

        std::fs::write(&path, b"XXXX").unwrap();
        assert!(load_model(&path).is_err());
    }
}
