//! ROC analysis: full AUC and the partial AUC restricted to specificity
//! above 90%, normalized so a perfect detector scores 1.

use crate::error::{Error, Result};
use crate::postproc::ProbabilityTrace;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RocPoint {
    pub sensitivity: f64,
    pub specificity: f64,
    pub threshold: f64,
}

/// Operating points swept over the unique score values, ordered from the
/// all-positive end (sensitivity 1, specificity 0) to the all-negative end.
#[derive(Debug, Clone, PartialEq)]
pub struct RocCurve {
    pub points: Vec<RocPoint>,
}

/// Builds the ROC curve for binary `labels` under decision rule
/// `score > threshold`.
pub fn roc_curve(scores: &[f64], labels: &[bool]) -> Result<RocCurve> {
    if scores.len() != labels.len() {
        return Err(Error::invalid("scores and labels length mismatch"));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::invalid("non-finite score"));
    }
    let n_pos = labels.iter().filter(|&&l| l).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::numeric("ROC needs both classes present"));
    }

    // sweep thresholds through the unique score values, ascending; threshold
    // -inf marks everything positive, threshold max(score) nothing
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).unwrap());

    let mut points = Vec::with_capacity(scores.len() + 1);
    points.push(RocPoint {
        sensitivity: 1.0,
        specificity: 0.0,
        threshold: f64::NEG_INFINITY,
    });
    // tp/fp = counts classified positive under rule `score > v`
    let (mut tp, mut fp) = (n_pos, n_neg);
    let mut i = 0;
    while i < order.len() {
        let v = scores[order[i]];
        while i < order.len() && scores[order[i]] == v {
            if labels[order[i]] {
                tp -= 1;
            } else {
                fp -= 1;
            }
            i += 1;
        }
        points.push(RocPoint {
            sensitivity: tp as f64 / n_pos as f64,
            specificity: 1.0 - fp as f64 / n_neg as f64,
            threshold: v,
        });
    }
    Ok(RocCurve { points })
}

/// Area under the curve by the trapezoid rule over (1 - specificity,
/// sensitivity); equals the Mann-Whitney statistic with ties counting 1/2.
pub fn auc(curve: &RocCurve) -> f64 {
    let mut area = 0.0;
    for w in curve.points.windows(2) {
        let x0 = 1.0 - w[0].specificity;
        let x1 = 1.0 - w[1].specificity;
        area += (x0 - x1) * (w[0].sensitivity + w[1].sensitivity) / 2.0;
    }
    area
}

/// Partial AUC over specificity in [0.9, 1.0], normalized by the 0.1 span.
/// The boundary sensitivity at specificity 0.9 is linearly interpolated.
pub fn auc90(curve: &RocCurve) -> f64 {
    // integrate sensitivity d(specificity) along the curve; vertical
    // segments (several sensitivities at one specificity) contribute nothing
    let mut area = 0.0;
    for w in curve.points.windows(2) {
        let (s0, y0) = (w[0].specificity, w[0].sensitivity);
        let (s1, y1) = (w[1].specificity, w[1].sensitivity);
        if s1 <= 0.9 || s1 == s0 {
            continue;
        }
        let (lo, lo_y) = if s0 < 0.9 {
            let t = (0.9 - s0) / (s1 - s0);
            (0.9, y0 + t * (y1 - y0))
        } else {
            (s0, y0)
        };
        area += (s1 - lo) * (lo_y + y1) / 2.0;
    }
    area / 0.1
}

/// Scores one subject: smoothed fused trace against the fused annotation.
/// Returns `(auc, auc90)` as percentages, or `None` when the annotation has
/// a single class (the metric row is undefined for that subject).
pub fn evaluate_subject(
    fused_trace: &ProbabilityTrace,
    fused_annotation: &[u8],
) -> Result<Option<(f64, f64)>> {
    if fused_trace.values.len() != fused_annotation.len() {
        return Err(Error::invalid(format!(
            "trace length {} != annotation length {}",
            fused_trace.values.len(),
            fused_annotation.len()
        )));
    }
    let labels: Vec<bool> = fused_annotation.iter().map(|&b| b != 0).collect();
    let any_pos = labels.iter().any(|&l| l);
    let any_neg = labels.iter().any(|&l| !l);
    if !any_pos || !any_neg {
        return Ok(None);
    }
    let curve = roc_curve(&fused_trace.values, &labels)?;
    Ok(Some((100.0 * auc(&curve), 100.0 * auc90(&curve))))
}
