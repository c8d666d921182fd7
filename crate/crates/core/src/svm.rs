//! Gaussian-kernel SVM trained with sequential minimal optimization, with
//! sigmoid probability calibration and stratified 5-fold hyperparameter
//! search. Applied per EEG channel at test time.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::features::{FeatureNormalizer, FeatureVector, N_FEATURES};
use crate::metrics::{auc, roc_curve};
use crate::rng::Rng;

/// Trained classifier state. `alphas_signed[i]` is `alpha_i * y_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct SvmModel {
    pub dim: usize,
    pub support_vectors: Vec<Vec<f64>>,
    pub alphas_signed: Vec<f64>,
    pub bias: f64,
    pub gamma: f64,
    /// Sigmoid calibration: p = 1 / (1 + exp(a*f + b)).
    pub platt_a: f64,
    pub platt_b: f64,
    /// Feature z-score parameters; identity until the pipeline fits one.
    pub norm_mean: Vec<f64>,
    pub norm_std: Vec<f64>,
    /// False when SMO hit the pass limit before reaching the KKT tolerance.
    pub converged: bool,
}

impl SvmModel {
    pub fn set_normalizer(&mut self, norm: &FeatureNormalizer) {
        assert_eq!(self.dim, N_FEATURES);
        self.norm_mean = norm.mean.to_vec();
        self.norm_std = norm.std.to_vec();
    }

    pub fn normalize(&self, fv: &FeatureVector) -> Vec<f64> {
        fv.values
            .iter()
            .zip(&self.norm_mean)
            .zip(&self.norm_std)
            .map(|((v, m), s)| (v - m) / s)
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct SvmTrainConfig {
    pub c_grid: Vec<f64>,
    pub gamma_grid: Vec<f64>,
    pub folds: usize,
    pub smo_tolerance: f64,
    pub max_passes: usize,
    pub seed: u64,
}

impl Default for SvmTrainConfig {
    fn default() -> Self {
        // gamma grid scaled around 1/dim = 1/55
        SvmTrainConfig {
            c_grid: vec![0.5, 1.0, 2.0, 4.0, 8.0],
            gamma_grid: vec![1.0 / 220.0, 1.0 / 55.0, 4.0 / 55.0, 16.0 / 55.0],
            folds: 5,
            smo_tolerance: 1e-3,
            max_passes: 200,
            seed: 0,
        }
    }
}

fn rbf(a: &[f64], b: &[f64], gamma: f64) -> f64 {
    let mut d = 0.0;
    for (x, z) in a.iter().zip(b) {
        let t = x - z;
        d += t * t;
    }
    (-gamma * d).exp()
}

fn kernel_matrix(x: &[Vec<f64>], gamma: f64) -> Vec<f64> {
    let n = x.len();
    let mut k = vec![0.0f64; n * n];
    for i in 0..n {
        k[i * n + i] = 1.0;
        for j in 0..i {
            let v = rbf(&x[i], &x[j], gamma);
            k[i * n + j] = v;
            k[j * n + i] = v;
        }
    }
    k
}

/// Simplified SMO with random second-index selection. Returns the
/// uncalibrated model (identity normalizer, identity-ish sigmoid).
pub fn smo_train(
    x: &[Vec<f64>],
    y: &[f64],
    c: f64,
    gamma: f64,
    tol: f64,
    max_passes: usize,
    seed: u64,
) -> Result<SvmModel> {
    let n = x.len();
    if n == 0 || y.len() != n {
        return Err(Error::invalid("empty training set or label mismatch"));
    }
    let dim = x[0].len();
    if x.iter().any(|r| r.len() != dim) {
        return Err(Error::invalid("ragged feature rows"));
    }
    if y.iter().any(|&l| l != 1.0 && l != -1.0) {
        return Err(Error::invalid("labels must be +1 or -1"));
    }
    if !y.iter().any(|&l| l > 0.0) || !y.iter().any(|&l| l < 0.0) {
        return Err(Error::numeric("SMO needs both classes present"));
    }

    let k = kernel_matrix(x, gamma);
    // alphas within this slack of a bound count as being at the bound
    let eps_a = 1e-8 * c;
    let mut alpha = vec![0.0f64; n];
    let mut b = 0.0f64;
    // cached decision values f(i) for all training points
    let mut f = vec![0.0f64; n];
    let mut rng = Rng::new(seed);

    // One pairwise step; returns false when (i, j) makes no progress.
    #[allow(clippy::too_many_arguments)]
    fn smo_step(
        i: usize,
        j: usize,
        n: usize,
        c: f64,
        k: &[f64],
        y: &[f64],
        alpha: &mut [f64],
        f: &mut [f64],
        b: &mut f64,
    ) -> bool {
        let e_i = f[i] + *b - y[i];
        let e_j = f[j] + *b - y[j];
        let (a_i_old, a_j_old) = (alpha[i], alpha[j]);
        let (lo, hi) = if y[i] != y[j] {
            ((a_j_old - a_i_old).max(0.0), (c + a_j_old - a_i_old).min(c))
        } else {
            ((a_i_old + a_j_old - c).max(0.0), (a_i_old + a_j_old).min(c))
        };
        if lo >= hi {
            return false;
        }
        let eta = 2.0 * k[i * n + j] - k[i * n + i] - k[j * n + j];
        if eta >= 0.0 {
            return false;
        }
        let a_j = (a_j_old - y[j] * (e_i - e_j) / eta).clamp(lo, hi);
        if (a_j - a_j_old).abs() < 1e-9 {
            return false;
        }
        let a_i = a_i_old + y[i] * y[j] * (a_j_old - a_j);

        // bias update (Platt's rules)
        let b1 = *b
            - e_i
            - y[i] * (a_i - a_i_old) * k[i * n + i]
            - y[j] * (a_j - a_j_old) * k[i * n + j];
        let b2 = *b
            - e_j
            - y[i] * (a_i - a_i_old) * k[i * n + j]
            - y[j] * (a_j - a_j_old) * k[j * n + j];
        *b = if 0.0 < a_i && a_i < c {
            b1
        } else if 0.0 < a_j && a_j < c {
            b2
        } else {
            (b1 + b2) / 2.0
        };

        // incremental update of the cached (bias-free) decision values
        let d_i = y[i] * (a_i - a_i_old);
        let d_j = y[j] * (a_j - a_j_old);
        for (t, ft) in f.iter_mut().enumerate() {
            *ft += d_i * k[i * n + t] + d_j * k[j * n + t];
        }
        alpha[i] = a_i;
        alpha[j] = a_j;
        true
    }

    // Tightest bias consistent with the current alphas: every point imposes
    // a one-sided constraint on b (free points pin it); the midpoint of the
    // feasible interval spreads any residual violation evenly.
    let best_bias = |alpha: &[f64], f: &[f64]| -> f64 {
        let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
        for i in 0..n {
            let g = y[i] - f[i];
            let at_zero = alpha[i] <= eps_a;
            let at_c = alpha[i] >= c - eps_a;
            if !at_zero && !at_c {
                lo = lo.max(g);
                hi = hi.min(g);
            } else if (at_zero && y[i] > 0.0) || (at_c && y[i] < 0.0) {
                lo = lo.max(g);
            } else {
                hi = hi.min(g);
            }
        }
        match (lo.is_finite(), hi.is_finite()) {
            (true, true) => (lo + hi) / 2.0,
            (true, false) => lo,
            (false, true) => hi,
            (false, false) => 0.0,
        }
    };
    let count_violations = |alpha: &[f64], f: &[f64], b: f64| -> usize {
        (0..n)
            .filter(|&i| {
                let e_i = f[i] + b - y[i];
                (y[i] * e_i < -tol && alpha[i] < c - eps_a)
                    || (y[i] * e_i > tol && alpha[i] > eps_a)
            })
            .count()
    };

    let mut converged = false;
    for _sweep in 0..max_passes {
        let mut violations = 0usize;
        let mut changed = 0usize;
        for i in 0..n {
            let e_i = f[i] + b - y[i];
            let violates = (y[i] * e_i < -tol && alpha[i] < c - eps_a)
                || (y[i] * e_i > tol && alpha[i] > eps_a);
            if !violates {
                continue;
            }
            violations += 1;
            // second choice: largest |E_i - E_j| first, then seeded random
            // draws; pure random pairing stalls near the optimum
            let mut best_j = usize::MAX;
            let mut best_gap = -1.0;
            for j in 0..n {
                if j == i {
                    continue;
                }
                let gap = (e_i - (f[j] + b - y[j])).abs();
                if gap > best_gap {
                    best_gap = gap;
                    best_j = j;
                }
            }
            if smo_step(i, best_j, n, c, &k, y, &mut alpha, &mut f, &mut b) {
                changed += 1;
                continue;
            }
            for _attempt in 0..8 {
                let mut j = rng.below(n - 1);
                if j >= i {
                    j += 1;
                }
                if smo_step(i, j, n, c, &k, y, &mut alpha, &mut f, &mut b) {
                    changed += 1;
                    break;
                }
            }
        }
        // the pairwise b1/b2 rule oscillates near the optimum; re-anchoring
        // the bias at the feasible-interval midpoint keeps the violation
        // measure honest (single-threshold form of the KKT check)
        b = best_bias(&alpha, &f);
        if violations == 0 {
            converged = true;
            break;
        }
        if changed == 0 {
            // random draws exhausted: deterministic partner scan
            for i in 0..n {
                let e_i = f[i] + b - y[i];
                let violates = (y[i] * e_i < -tol && alpha[i] < c - eps_a)
                    || (y[i] * e_i > tol && alpha[i] > eps_a);
                if !violates {
                    continue;
                }
                for j in 0..n {
                    if j != i && smo_step(i, j, n, c, &k, y, &mut alpha, &mut f, &mut b) {
                        changed += 1;
                        break;
                    }
                }
            }
            if changed == 0 {
                // no pair can move: remaining violations are a bias artifact
                // of the pairwise updates, or we are at the tolerance floor
                b = best_bias(&alpha, &f);
                converged = count_violations(&alpha, &f, b) == 0;
                break;
            }
        }
    }
    b = best_bias(&alpha, &f);
    if !converged {
        converged = count_violations(&alpha, &f, b) == 0;
    }

    let mut support_vectors = Vec::new();
    let mut alphas_signed = Vec::new();
    for i in 0..n {
        if alpha[i] > eps_a {
            support_vectors.push(x[i].clone());
            alphas_signed.push(alpha[i] * y[i]);
        }
    }
    if support_vectors.is_empty() {
        return Err(Error::numeric("SMO produced no support vectors"));
    }
    Ok(SvmModel {
        dim,
        support_vectors,
        alphas_signed,
        bias: b,
        gamma,
        platt_a: -1.0,
        platt_b: 0.0,
        norm_mean: vec![0.0; dim],
        norm_std: vec![1.0; dim],
        converged,
    })
}

/// Kernel expansion margin for an already-normalized input.
pub fn decision_function(model: &SvmModel, x: &[f64]) -> Result<f64> {
    if x.len() != model.dim {
        return Err(Error::invalid(format!(
            "feature dimension {} != model dimension {}",
            x.len(),
            model.dim
        )));
    }
    let mut f = model.bias;
    for (sv, a) in model.support_vectors.iter().zip(&model.alphas_signed) {
        f += a * rbf(sv, x, model.gamma);
    }
    Ok(f)
}

/// Fits the sigmoid calibration on held-out margins by Newton iterations on
/// the cross-entropy against Platt's smoothed targets.
pub fn fit_platt(margins: &[f64], labels: &[bool]) -> Result<(f64, f64)> {
    if margins.len() != labels.len() || margins.is_empty() {
        return Err(Error::invalid("margin/label size mismatch"));
    }
    let n_pos = labels.iter().filter(|&&l| l).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::numeric("calibration needs both classes"));
    }
    let t_pos = (n_pos as f64 + 1.0) / (n_pos as f64 + 2.0);
    let t_neg = 1.0 / (n_neg as f64 + 2.0);
    let targets: Vec<f64> = labels
        .iter()
        .map(|&l| if l { t_pos } else { t_neg })
        .collect();

    // objective F(a,b) = -sum t*ln(p) + (1-t)*ln(1-p), p = sigma(-(a f + b))
    let eval = |a: f64, b: f64| -> (f64, [f64; 2], [f64; 3]) {
        let mut loss = 0.0;
        let mut grad = [0.0f64; 2];
        let mut hess = [0.0f64; 3]; // [daa, dab, dbb]
        for (&f, &t) in margins.iter().zip(&targets) {
            let z = a * f + b;
            // p = 1/(1+e^z); stable log terms
            let (log_p, log_1p) = if z >= 0.0 {
                (-z - (1.0 + (-z).exp()).ln(), -(1.0 + (-z).exp()).ln())
            } else {
                (-(1.0 + z.exp()).ln(), z - (1.0 + z.exp()).ln())
            };
            loss -= t * log_p + (1.0 - t) * log_1p;
            let p = if z >= 0.0 {
                let e = (-z).exp();
                e / (1.0 + e)
            } else {
                1.0 / (1.0 + z.exp())
            };
            // p decreases in z, so dF/dz = t - p
            let resid = t - p;
            grad[0] += resid * f;
            grad[1] += resid;
            let w = p * (1.0 - p);
            hess[0] += w * f * f;
            hess[1] += w * f;
            hess[2] += w;
        }
        (loss, grad, hess)
    };

    let (mut a, mut b) = (0.0f64, ((n_neg as f64 + 1.0) / (n_pos as f64 + 1.0)).ln());
    let (mut loss, mut grad, mut hess) = eval(a, b);
    for _ in 0..200 {
        if (grad[0] * grad[0] + grad[1] * grad[1]).sqrt() < 1e-8 {
            break;
        }
        // Newton direction with a tiny ridge for safety
        let (h11, h12, h22) = (hess[0] + 1e-12, hess[1], hess[2] + 1e-12);
        let det = h11 * h22 - h12 * h12;
        if det.abs() < 1e-300 {
            break;
        }
        let da = -(h22 * grad[0] - h12 * grad[1]) / det;
        let db = -(-h12 * grad[0] + h11 * grad[1]) / det;
        // backtracking line search
        let mut step = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let (l2, g2, h2) = eval(a + step * da, b + step * db);
            if l2 <= loss + 1e-12 {
                a += step * da;
                b += step * db;
                loss = l2;
                grad = g2;
                hess = h2;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
    }

    // sign check is deferred to the derivative: dp/df = -a p(1-p)
    let dz = grad[0] * grad[0] + grad[1] * grad[1];
    if !dz.is_finite() {
        return Err(Error::numeric("Platt fit diverged"));
    }
    Ok((a, b))
}

/// Calibrated seizure probability for an already-normalized input.
pub fn predict_probability(model: &SvmModel, x: &[f64]) -> Result<f64> {
    let f = decision_function(model, x)?;
    Ok(sigmoid_platt(model.platt_a, model.platt_b, f))
}

pub fn sigmoid_platt(a: f64, b: f64, margin: f64) -> f64 {
    let z = a * margin + b;
    if z >= 0.0 {
        let e = (-z).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + z.exp())
    }
}

/// Deterministic stratified fold assignment that depends only on the multiset
/// of rows, not on their order: rows are sorted by content within each class
/// before the seeded shuffle.
fn stratified_folds(x: &[Vec<f64>], y: &[f64], folds: usize, seed: u64) -> Vec<usize> {
    let mut assignment = vec![0usize; x.len()];
    for (class_id, class_sign) in [1.0f64, -1.0].iter().enumerate() {
        let mut idx: Vec<usize> = (0..x.len()).filter(|&i| y[i] == *class_sign).collect();
        idx.sort_by(|&a, &b| {
            x[a].iter()
                .zip(&x[b])
                .find_map(|(p, q)| p.partial_cmp(q).filter(|o| o.is_ne()))
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        let mut rng = Rng::stream(seed, class_id as u64);
        // seeded permutation of fold slots, assigned round-robin in content order
        let mut slots: Vec<usize> = (0..idx.len()).collect();
        rng.shuffle(&mut slots);
        for (pos, &i) in idx.iter().enumerate() {
            assignment[i] = slots[pos] % folds;
        }
    }
    assignment
}

/// Stratified k-fold grid search maximizing mean held-out AUC. Ties break
/// toward smaller C, then smaller gamma.
pub fn grid_search_cv(
    x: &[Vec<f64>],
    y: &[f64],
    cfg: &SvmTrainConfig,
) -> Result<(f64, f64, Vec<f64>)> {
    if cfg.c_grid.is_empty() || cfg.gamma_grid.is_empty() {
        return Err(Error::invalid("empty hyperparameter grid"));
    }
    let folds = cfg.folds;
    for class_sign in [1.0, -1.0] {
        let count = y.iter().filter(|&&l| l == class_sign).count();
        if count < folds {
            return Err(Error::invalid(format!(
                "need at least {folds} examples per class, got {count}"
            )));
        }
    }
    let assignment = stratified_folds(x, y, folds, cfg.seed);

    let mut c_sorted = cfg.c_grid.clone();
    c_sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut g_sorted = cfg.gamma_grid.clone();
    g_sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let mut best: Option<(f64, f64, f64, Vec<f64>)> = None; // (mean, c, gamma, fold aucs)
    for &c in &c_sorted {
        for &gamma in &g_sorted {
            let mut fold_aucs = Vec::with_capacity(folds);
            for fold in 0..folds {
                let mut train_x = Vec::new();
                let mut train_y = Vec::new();
                let mut test_idx = Vec::new();
                for i in 0..x.len() {
                    if assignment[i] == fold {
                        test_idx.push(i);
                    } else {
                        train_x.push(x[i].clone());
                        train_y.push(y[i]);
                    }
                }
                let model = smo_train(
                    &train_x,
                    &train_y,
                    c,
                    gamma,
                    cfg.smo_tolerance,
                    cfg.max_passes,
                    cfg.seed ^ fold as u64,
                )?;
                let margins: Vec<f64> = test_idx
                    .iter()
                    .map(|&i| decision_function(&model, &x[i]))
                    .collect::<Result<_>>()?;
                let labels: Vec<bool> = test_idx.iter().map(|&i| y[i] > 0.0).collect();
                let fold_auc = if labels.iter().all(|&l| l) || labels.iter().all(|&l| !l) {
                    0.5 // degenerate fold carries no signal
                } else {
                    auc(&roc_curve(&margins, &labels)?)
                };
                fold_aucs.push(fold_auc);
            }
            let mean = fold_aucs.iter().sum::<f64>() / folds as f64;
            let better = match &best {
                None => true,
                Some((best_mean, ..)) => mean > best_mean + 1e-12,
            };
            if better {
                best = Some((mean, c, gamma, fold_aucs));
            }
        }
    }
    let (_, c, gamma, fold_aucs) = best.unwrap();
    Ok((c, gamma, fold_aucs))
}

/// Full training pipeline on normalized rows: grid search, final SMO on all
/// rows at the chosen point, then Platt calibration on pooled out-of-fold
/// margins at that same point.
pub fn train_calibrated(
    x_normalized: &[Vec<f64>],
    y: &[f64],
    cfg: &SvmTrainConfig,
) -> Result<SvmModel> {
    let (c, gamma, _) = grid_search_cv(x_normalized, y, cfg)?;

    // pooled out-of-fold margins for calibration
    let assignment = stratified_folds(x_normalized, y, cfg.folds, cfg.seed);
    let mut margins = Vec::with_capacity(x_normalized.len());
    let mut labels = Vec::with_capacity(x_normalized.len());
    for fold in 0..cfg.folds {
        let mut train_x = Vec::new();
        let mut train_y = Vec::new();
        let mut test_idx = Vec::new();
        for i in 0..x_normalized.len() {
            if assignment[i] == fold {
                test_idx.push(i);
            } else {
                train_x.push(x_normalized[i].clone());
                train_y.push(y[i]);
            }
        }
        let fold_model = smo_train(
            &train_x,
            &train_y,
            c,
            gamma,
            cfg.smo_tolerance,
            cfg.max_passes,
            cfg.seed ^ fold as u64,
        )?;
        for &i in &test_idx {
            margins.push(decision_function(&fold_model, &x_normalized[i])?);
            labels.push(y[i] > 0.0);
        }
    }
    let (a, b) = fit_platt(&margins, &labels)?;

    let mut model = smo_train(
        x_normalized,
        y,
        c,
        gamma,
        cfg.smo_tolerance,
        cfg.max_passes,
        cfg.seed,
    )?;
    model.platt_a = a;
    model.platt_b = b;
    Ok(model)
}

// ---------------------------------------------------------------------------
// Model file format
// ---------------------------------------------------------------------------

const SVM_MAGIC: &[u8; 4] = b"SVM1";

/// Writes the versioned binary model: magic, m, dim, gamma, bias, platt a/b,
/// normalizer means/stds, then m rows of (signed alpha, vector), all
/// little-endian f64.
pub fn save_model(model: &SvmModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io = |e| Error::io(path, e);
    w.write_all(SVM_MAGIC).map_err(io)?;
    w.write_all(&(model.support_vectors.len() as u32).to_le_bytes())
        .map_err(io)?;
    w.write_all(&(model.dim as u32).to_le_bytes()).map_err(io)?;
    for v in [model.gamma, model.bias, model.platt_a, model.platt_b] {
        w.write_all(&v.to_le_bytes()).map_err(io)?;
    }
    for v in model.norm_mean.iter().chain(&model.norm_std) {
        w.write_all(&v.to_le_bytes()).map_err(io)?;
    }
    for (sv, a) in model.support_vectors.iter().zip(&model.alphas_signed) {
        w.write_all(&a.to_le_bytes()).map_err(io)?;
        for v in sv {
            w.write_all(&v.to_le_bytes()).map_err(io)?;
        }
    }
    w.flush().map_err(io)
}

pub fn load_model(path: impl AsRef<Path>) -> Result<SvmModel> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = BufReader::new(file);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic).map_err(|e| Error::io(path, e))?;
    if &magic != SVM_MAGIC {
        return Err(Error::format(path, 1, "bad magic, not an SVM model file"));
    }
    let mut u32buf = [0u8; 4];
    let mut f64buf = [0u8; 8];
    let mut read_u32 = |r: &mut BufReader<File>| -> Result<u32> {
        r.read_exact(&mut u32buf).map_err(|e| Error::io(path, e))?;
        Ok(u32::from_le_bytes(u32buf))
    };
    let m = read_u32(&mut r)? as usize;
    let dim = read_u32(&mut r)? as usize;
    if m == 0 || dim == 0 || m > 10_000_000 || dim > 1_000_000 {
        return Err(Error::format(path, 1, "implausible model dimensions"));
    }
    let mut read_f64 = move |r: &mut BufReader<File>| -> Result<f64> {
        r.read_exact(&mut f64buf).map_err(|e| Error::io(path, e))?;
        Ok(f64::from_le_bytes(f64buf))
    };
    let gamma = read_f64(&mut r)?;
    let bias = read_f64(&mut r)?;
    let platt_a = read_f64(&mut r)?;
    let platt_b = read_f64(&mut r)?;
    let mut norm_mean = Vec::with_capacity(dim);
    let mut norm_std = Vec::with_capacity(dim);
    for _ in 0..dim {
        norm_mean.push(read_f64(&mut r)?);
    }
    for _ in 0..dim {
        norm_std.push(read_f64(&mut r)?);
    }
    let mut support_vectors = Vec::with_capacity(m);
    let mut alphas_signed = Vec::with_capacity(m);
    for _ in 0..m {
        alphas_signed.push(read_f64(&mut r)?);
        let mut sv = Vec::with_capacity(dim);
        for _ in 0..dim {
            sv.push(read_f64(&mut r)?);
        }
        support_vectors.push(sv);
    }
    Ok(SvmModel {
        dim,
        support_vectors,
        alphas_signed,
        bias,
        gamma,
        platt_a,
        platt_b,
        norm_mean,
        norm_std,
        converged: true,
    })
}
