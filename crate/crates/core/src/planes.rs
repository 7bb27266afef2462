//! Standard-plane gating and best-frame selection.
//!
//! A frame becomes a candidate for a part when that part's class probability
//! is strictly above the gate. Each candidate gets a composite score mixing
//! the class probability, its measurement normalised by the largest
//! measurement of the same part in the video, and (for head and abdomen) the
//! IoU between the fitted ellipse and the raw segmentation. The winner per
//! part maximises the composite; ties go to the lowest frame index.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::biometry::{measure_part, BodyPart, MeasureOptions, Measurement};
use crate::geometry::EllipseParams;
use crate::grid::BinaryMask;
use crate::ingest::PixelSpacing;

pub const DEFAULT_GATE_THRESHOLD: f64 = 0.9;
/// Allowed deviation of a class-probability vector's sum from 1.
pub const SIMPLEX_TOLERANCE: f64 = 1e-6;
const WEIGHT_SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlanesError {
    #[error("bad config: {0}")]
    BadConfig(String),
    #[error("bad frame score: {0}")]
    BadScore(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameScore {
    pub frame_index: usize,
    /// Probabilities for head, abdomen, femur, background.
    pub class_probs: [f64; 4],
}

impl FrameScore {
    pub fn new(frame_index: usize, class_probs: [f64; 4]) -> Result<Self, PlanesError> {
        if let Some(p) = class_probs.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(PlanesError::BadScore(format!(
                "frame {frame_index}: probability {p} outside [0, 1]"
            )));
        }
        let sum: f64 = class_probs.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_TOLERANCE {
            return Err(PlanesError::BadScore(format!(
                "frame {frame_index}: probabilities sum to {sum}"
            )));
        }
        Ok(Self {
            frame_index,
            class_probs,
        })
    }

    pub fn prob(&self, part: BodyPart) -> f64 {
        self.class_probs[part.index()]
    }

    /// Most probable class; ties go to the earlier class.
    pub fn part(&self) -> BodyPart {
        let mut best = 0;
        for i in 1..4 {
            if self.class_probs[i] > self.class_probs[best] {
                best = i;
            }
        }
        BodyPart::ALL[best]
    }
}

/// The measurable part whose probability is strictly above `threshold`.
/// With a threshold below 0.5 several parts may pass; the most probable wins.
pub fn gate_frame_at(score: &FrameScore, threshold: f64) -> Option<BodyPart> {
    let mut best: Option<BodyPart> = None;
    for part in BodyPart::MEASURED {
        let p = score.prob(part);
        if p > threshold && best.is_none_or(|b| p > score.prob(b)) {
            best = Some(part);
        }
    }
    best
}

pub fn gate_frame(score: &FrameScore) -> Option<BodyPart> {
    gate_frame_at(score, DEFAULT_GATE_THRESHOLD)
}

/// IoU between the filled ellipse and `mask`, where the ellipse lives in the
/// coordinates produced by `to_plane` from pixel `(x = col, y = row)`
/// centres. The ellipse is rasterised only over its bounding box.
fn similarity_with(
    mask: &BinaryMask,
    e: &EllipseParams,
    to_plane: impl Fn(f64, f64) -> (f64, f64),
    px_per_unit: (f64, f64),
) -> f64 {
    let mask_count = mask.count_ones();
    if mask_count == 0 || mask.is_empty() {
        return 0.0;
    }
    let (h, w) = mask.size();
    let (s, c) = e.theta.sin_cos();
    let ex = (e.a * c).hypot(e.b * s);
    let ey = (e.a * s).hypot(e.b * c);
    let range = |lo: f64, hi: f64, n: usize| -> (usize, usize) {
        let lo = lo.floor().max(0.0);
        let hi = (hi.ceil() + 1.0).min(n as f64);
        if hi <= lo {
            (0, 0)
        } else {
            (lo as usize, hi as usize)
        }
    };
    let (c0, c1) = range((e.cx - ex) * px_per_unit.0, (e.cx + ex) * px_per_unit.0, w);
    let (r0, r1) = range((e.cy - ey) * px_per_unit.1, (e.cy + ey) * px_per_unit.1, h);
    let (mut ellipse_count, mut both) = (0usize, 0usize);
    for r in r0..r1 {
        for col in c0..c1 {
            let (x, y) = to_plane(col as f64, r as f64);
            if e.contains(x, y) {
                ellipse_count += 1;
                both += *mask.get(r, col) as usize;
            }
        }
    }
    let union = mask_count + ellipse_count - both;
    both as f64 / union as f64
}

/// IoU between the filled ellipse (pixel coordinates) and the mask; 0 for an
/// empty mask.
pub fn ellipse_similarity(mask: &BinaryMask, e: &EllipseParams) -> f64 {
    similarity_with(mask, e, |x, y| (x, y), (1.0, 1.0))
}

/// As [`ellipse_similarity`] for an ellipse in millimetres.
pub fn ellipse_similarity_mm(mask: &BinaryMask, e: &EllipseParams, spacing: PixelSpacing) -> f64 {
    similarity_with(
        mask,
        e,
        |x, y| spacing.to_mm((x, y)),
        (1.0 / spacing.col_mm, 1.0 / spacing.row_mm),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompositeWeights {
    /// (class score, normalised measurement).
    pub femur: [f64; 2],
    /// (class score, normalised measurement, ellipse similarity).
    pub ellipse_parts: [f64; 3],
}

impl Default for CompositeWeights {
    fn default() -> Self {
        Self {
            femur: [0.5, 0.5],
            ellipse_parts: [0.4, 0.3, 0.3],
        }
    }
}

impl CompositeWeights {
    pub fn validate(&self) -> Result<(), PlanesError> {
        let check = |name: &str, ws: &[f64]| {
            if ws.iter().any(|w| !w.is_finite() || *w < 0.0) {
                return Err(PlanesError::BadConfig(format!(
                    "weights.{name} must be non-negative: {ws:?}"
                )));
            }
            let sum: f64 = ws.iter().sum();
            if (sum - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
                return Err(PlanesError::BadConfig(format!(
                    "weights.{name} sum to {sum}, expected 1"
                )));
            }
            Ok(())
        };
        check("femur", &self.femur)?;
        check("ellipse_parts", &self.ellipse_parts)
    }
}

/// Weighted average of class score, normalised measurement and (for head and
/// abdomen) ellipse similarity.
pub fn composite_score(
    class_score: f64,
    norm_measurement: f64,
    similarity: Option<f64>,
    part: BodyPart,
    weights: &CompositeWeights,
) -> Result<f64, PlanesError> {
    weights.validate()?;
    match (part, similarity) {
        (BodyPart::Femur, None) => Ok(weights.femur[0] * class_score + weights.femur[1] * norm_measurement),
        (BodyPart::Head | BodyPart::Abdomen, Some(sim)) => {
            let [w1, w2, w3] = weights.ellipse_parts;
            Ok(w1 * class_score + w2 * norm_measurement + w3 * sim)
        }
        (BodyPart::Background, _) => Err(PlanesError::BadScore("background frames are never candidates".into())),
        (p, s) => Err(PlanesError::BadScore(format!(
            "{p} candidates {} an ellipse similarity",
            if s.is_some() { "must not have" } else { "need" }
        ))),
    }
}

/// A gated and measured frame before video-level normalisation.
#[derive(Debug, Clone, PartialEq)]
pub struct RawCandidate {
    pub frame_index: usize,
    pub part: BodyPart,
    pub class_score: f64,
    /// HC, AC or FL; drives the composite.
    pub measurement: Measurement,
    /// Further measurements of the same fit (BPD for the head).
    pub companions: Vec<Measurement>,
    pub ellipse_similarity: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateFrame {
    pub frame_index: usize,
    pub part: BodyPart,
    pub class_score: f64,
    pub measurement: Measurement,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub companions: Vec<Measurement>,
    pub ellipse_similarity: Option<f64>,
    pub composite: f64,
}

/// Normalises each measurement by the per-part maximum and attaches the
/// composite. Output order follows input order.
pub fn score_candidates(raw: &[RawCandidate], weights: &CompositeWeights) -> Result<Vec<CandidateFrame>, PlanesError> {
    weights.validate()?;
    let mut max_by_part = [0.0f64; 4];
    for c in raw {
        let m = &mut max_by_part[c.part.index()];
        *m = m.max(c.measurement.value_cm);
    }
    raw.iter()
        .map(|c| {
            let max = max_by_part[c.part.index()];
            let norm = if max > 0.0 { c.measurement.value_cm / max } else { 0.0 };
            Ok(CandidateFrame {
                frame_index: c.frame_index,
                part: c.part,
                class_score: c.class_score,
                measurement: c.measurement.clone(),
                companions: c.companions.clone(),
                ellipse_similarity: c.ellipse_similarity,
                composite: composite_score(c.class_score, norm, c.ellipse_similarity, c.part, weights)?,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PlaneSelection {
    pub head: Option<CandidateFrame>,
    pub abdomen: Option<CandidateFrame>,
    pub femur: Option<CandidateFrame>,
}

impl PlaneSelection {
    pub fn get(&self, part: BodyPart) -> Option<&CandidateFrame> {
        match part {
            BodyPart::Head => self.head.as_ref(),
            BodyPart::Abdomen => self.abdomen.as_ref(),
            BodyPart::Femur => self.femur.as_ref(),
            BodyPart::Background => None,
        }
    }

    fn slot(&mut self, part: BodyPart) -> Option<&mut Option<CandidateFrame>> {
        match part {
            BodyPart::Head => Some(&mut self.head),
            BodyPart::Abdomen => Some(&mut self.abdomen),
            BodyPart::Femur => Some(&mut self.femur),
            BodyPart::Background => None,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.head.is_none() && self.abdomen.is_none() && self.femur.is_none()
    }

    pub fn winners(&self) -> impl Iterator<Item = &CandidateFrame> {
        [&self.head, &self.abdomen, &self.femur].into_iter().flatten()
    }
}

/// Total order used for winners: higher composite, then lower frame index.
fn beats(a: &CandidateFrame, b: &CandidateFrame) -> bool {
    a.composite > b.composite || (a.composite == b.composite && a.frame_index < b.frame_index)
}

/// Winner per part. Independent of candidate order.
pub fn pick_winners(candidates: &[CandidateFrame]) -> PlaneSelection {
    let mut sel = PlaneSelection::default();
    for c in candidates {
        if let Some(slot) = sel.slot(c.part) {
            if slot.as_ref().is_none_or(|cur| beats(c, cur)) {
                *slot = Some(c.clone());
            }
        }
    }
    sel
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelectionConfig {
    pub gate_threshold: f64,
    pub weights: CompositeWeights,
    pub measure: MeasureOptions,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        Self {
            gate_threshold: DEFAULT_GATE_THRESHOLD,
            weights: CompositeWeights::default(),
            measure: MeasureOptions::default(),
        }
    }
}

/// Gate, measure and rank frames whose masks are already cleaned at native
/// resolution. The same mask serves as the raw segmentation for the
/// similarity term. Frames whose mask cannot be measured are not candidates.
pub fn select_best(
    frames: &[(FrameScore, BinaryMask)],
    spacing: PixelSpacing,
    cfg: &SelectionConfig,
) -> Result<PlaneSelection, PlanesError> {
    let mut raw = Vec::new();
    for (score, mask) in frames {
        let Some(part) = gate_frame_at(score, cfg.gate_threshold) else {
            continue;
        };
        let Ok(mut ms) = measure_part(part, mask, spacing, &cfg.measure) else {
            continue;
        };
        let measurement = ms.remove(0).at_frame(score.frame_index);
        let similarity = part
            .is_elliptical()
            .then(|| ellipse_similarity_mm(mask, measurement.ellipse.as_ref().expect("ellipse fit"), spacing));
        raw.push(RawCandidate {
            frame_index: score.frame_index,
            part,
            class_score: score.prob(part),
            measurement,
            companions: ms.into_iter().map(|m| m.at_frame(score.frame_index)).collect(),
            ellipse_similarity: similarity,
        });
    }
    Ok(pick_winners(&score_candidates(&raw, &cfg.weights)?))
}
