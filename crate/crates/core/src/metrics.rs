//! Overlap scores, losses and one-vs-rest classification metrics.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{BinaryMask, ProbGrid};

pub const DEFAULT_DICE_EPS: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("size mismatch: {0:?} vs {1:?}")]
    BadSize((usize, usize), (usize, usize)),
    #[error("length mismatch: {0} predictions vs {1} labels")]
    BadLength(usize, usize),
    #[error("true-class probability is zero; loss is infinite")]
    InfiniteLoss,
    #[error("bad input: {0}")]
    BadInput(String),
}

fn same_size(a: (usize, usize), b: (usize, usize)) -> Result<(), MetricsError> {
    if a == b {
        Ok(())
    } else {
        Err(MetricsError::BadSize(a, b))
    }
}

/// `(|A ∩ B|, |A|, |B|)`.
fn overlap_counts(a: &BinaryMask, b: &BinaryMask) -> Result<(usize, usize, usize), MetricsError> {
    same_size(a.size(), b.size())?;
    let (mut both, mut na, mut nb) = (0, 0, 0);
    for (&x, &y) in a.as_slice().iter().zip(b.as_slice()) {
        both += (x && y) as usize;
        na += x as usize;
        nb += y as usize;
    }
    Ok((both, na, nb))
}

/// Jaccard index. Two empty masks score 1.
pub fn iou(a: &BinaryMask, b: &BinaryMask) -> Result<f64, MetricsError> {
    let (both, na, nb) = overlap_counts(a, b)?;
    let union = na + nb - both;
    Ok(if union == 0 { 1.0 } else { both as f64 / union as f64 })
}

/// Sørensen-Dice coefficient. Two empty masks score 1.
pub fn dice(a: &BinaryMask, b: &BinaryMask) -> Result<f64, MetricsError> {
    let (both, na, nb) = overlap_counts(a, b)?;
    Ok(if na + nb == 0 {
        1.0
    } else {
        2.0 * both as f64 / (na + nb) as f64
    })
}

/// Soft dice loss `1 - (2 Σ p g + ε) / (Σ p² + Σ g² + ε)`.
pub fn dice_loss(pred: &ProbGrid, gt: &BinaryMask, eps: f64) -> Result<f64, MetricsError> {
    same_size(pred.size(), gt.size())?;
    if !(eps > 0.0) {
        return Err(MetricsError::BadInput(format!("eps must be > 0, got {eps}")));
    }
    let (mut pg, mut pp, mut gg) = (0.0, 0.0, 0.0);
    for (&p, &g) in pred.as_slice().iter().zip(gt.as_slice()) {
        let g = if g { 1.0 } else { 0.0 };
        pg += p * g;
        pp += p * p;
        gg += g;
    }
    Ok(1.0 - (2.0 * pg + eps) / (pp + gg + eps))
}

/// Cross-entropy of a probability vector against a one-hot label.
pub fn ce_loss(probs: &[f64], true_class: usize) -> Result<f64, MetricsError> {
    let p = *probs
        .get(true_class)
        .ok_or_else(|| MetricsError::BadInput(format!("class {true_class} out of range")))?;
    if !(0.0..=1.0).contains(&p) {
        return Err(MetricsError::BadInput(format!("probability {p} outside [0, 1]")));
    }
    if p == 0.0 {
        return Err(MetricsError::InfiniteLoss);
    }
    Ok(-p.ln())
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionTally {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    pub fn_: u64,
}

impl ConfusionTally {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassScores {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl ClassScores {
    /// Scores from a one-vs-rest tally; 0/0 ratios are 0.
    pub fn from_tally(t: &ConfusionTally) -> Self {
        let ratio = |n: u64, d: u64| if d == 0 { 0.0 } else { n as f64 / d as f64 };
        let precision = ratio(t.tp, t.tp + t.fp);
        let recall = ratio(t.tp, t.tp + t.fn_);
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        Self {
            accuracy: ratio(t.tp + t.tn, t.total()),
            precision,
            recall,
            f1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub tallies: Vec<ConfusionTally>,
    pub per_class: Vec<ClassScores>,
    /// Unweighted mean over classes.
    pub macro_avg: ClassScores,
}

/// One-vs-rest metrics for labels in `0..n_classes`.
pub fn classification_report(
    preds: &[usize],
    labels: &[usize],
    n_classes: usize,
) -> Result<ClassificationReport, MetricsError> {
    if preds.len() != labels.len() {
        return Err(MetricsError::BadLength(preds.len(), labels.len()));
    }
    if n_classes == 0 {
        return Err(MetricsError::BadInput("need at least one class".into()));
    }
    if let Some(&bad) = preds.iter().chain(labels).find(|&&c| c >= n_classes) {
        return Err(MetricsError::BadInput(format!(
            "class {bad} out of range 0..{n_classes}"
        )));
    }
    let mut tallies = vec![ConfusionTally::default(); n_classes];
    for (&p, &l) in preds.iter().zip(labels) {
        for (c, t) in tallies.iter_mut().enumerate() {
            match (p == c, l == c) {
                (true, true) => t.tp += 1,
                (true, false) => t.fp += 1,
                (false, true) => t.fn_ += 1,
                (false, false) => t.tn += 1,
            }
        }
    }
    let per_class: Vec<ClassScores> = tallies.iter().map(ClassScores::from_tally).collect();
    let k = n_classes as f64;
    let mean = |f: fn(&ClassScores) -> f64| per_class.iter().map(f).sum::<f64>() / k;
    let macro_avg = ClassScores {
        accuracy: mean(|s| s.accuracy),
        precision: mean(|s| s.precision),
        recall: mean(|s| s.recall),
        f1: mean(|s| s.f1),
    };
    Ok(ClassificationReport {
        tallies,
        per_class,
        macro_avg,
    })
}
