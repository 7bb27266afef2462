//! Scores a backend against frames with known segmentation, class and
//! measurements.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backend::{check_output, mask_file_name, FrameScorer, GroundTruth, GROUND_TRUTH_FILE, TRUTH_PREFIX};
use crate::biometry::{measure_part, BiometrySet, BodyPart, MeasureKind, Measurement};
use crate::config::AnalysisConfig;
use crate::grid::{BinaryMask, Grid, ProbGrid};
use crate::imageio::read_gray8;
use crate::ingest::{load_study, resize_to_model, PixelSpacing, STUDY_FILE};
use crate::metrics::{ce_loss, classification_report, dice, dice_loss, iou, ClassificationReport};
use crate::morphology::{postprocess, threshold, upsample_mask};
use crate::par::{map_indexed, Exec};
use crate::planes::FrameScore;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("bad truth: {0}")]
    BadTruth(String),
    #[error("frame mismatch: {0}")]
    FrameMismatch(String),
    #[error("frame {frame}: {reason}")]
    Score { frame: usize, reason: String },
    #[error(transparent)]
    BadConfig(#[from] crate::config::ConfigError),
}

/// One frame with its reference segmentation and measurements.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalFrame {
    pub frame_index: usize,
    pub part: BodyPart,
    /// Reference segmentation at native resolution.
    pub truth_mask: BinaryMask,
    pub truth: BiometrySet,
    /// Frame pixels fed to the scorer.
    pub input: ProbGrid,
}

/// Reads `ground_truth.json` and `truth_NNNNNN.png` from `dir`. Frame pixels
/// come from the study in the same directory when `study.json` is present;
/// otherwise the scorer sees blank frames.
pub fn load_truth_dir(dir: &Path) -> Result<(PixelSpacing, Vec<EvalFrame>), EvalError> {
    let gt_path = dir.join(GROUND_TRUTH_FILE);
    let text = fs::read_to_string(&gt_path).map_err(|e| EvalError::BadTruth(format!("{}: {e}", gt_path.display())))?;
    let gt: GroundTruth =
        serde_json::from_str(&text).map_err(|e| EvalError::BadTruth(format!("{}: {e}", gt_path.display())))?;
    let study = if dir.join(STUDY_FILE).is_file() {
        Some(load_study(dir).map_err(|e| EvalError::BadTruth(e.to_string()))?)
    } else {
        None
    };
    let mut frames = Vec::with_capacity(gt.frames.len());
    for t in &gt.frames {
        let path = dir.join(mask_file_name(TRUTH_PREFIX, t.frame_index));
        let raw = read_gray8(&path).map_err(|e| EvalError::BadTruth(format!("{}: {e}", path.display())))?;
        let truth_mask = raw.map(|&v| v >= 128);
        let input = match &study {
            Some(s) => s
                .frames
                .iter()
                .find(|f| f.index == t.frame_index)
                .map(|f| f.pixels.clone())
                .ok_or_else(|| EvalError::FrameMismatch(format!("study has no frame {}", t.frame_index)))?,
            None => Grid::filled(truth_mask.height(), truth_mask.width(), 0.0),
        };
        frames.push(EvalFrame {
            frame_index: t.frame_index,
            part: t.part,
            truth_mask,
            truth: t.biometry.clone(),
            input,
        });
    }
    Ok((gt.pixel_spacing_mm, frames))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassSegmentation {
    pub class: BodyPart,
    pub frames: usize,
    pub mean_iou: Option<f64>,
    pub mean_dice: Option<f64>,
    pub mean_dice_loss: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KindError {
    pub kind: MeasureKind,
    /// Frames where both the prediction and the reference were measurable.
    pub frames: usize,
    /// Mean |prediction − reference-mask measurement|, mm.
    pub mean_abs_error_mm: Option<f64>,
    /// Mean |prediction − analytic value|, mm.
    pub mean_abs_analytic_error_mm: Option<f64>,
    /// Frames whose reference was measurable but the prediction was not.
    pub unmeasured: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub schema: u32,
    pub frame_count: usize,
    pub segmentation: Vec<ClassSegmentation>,
    pub mean_iou: f64,
    pub mean_dice: f64,
    pub classification: ClassificationReport,
    /// Mean cross-entropy over frames with a non-zero true-class probability.
    pub mean_ce_loss: Option<f64>,
    pub infinite_ce_frames: usize,
    pub measurement_errors: Vec<KindError>,
}

struct FrameEval {
    part: BodyPart,
    predicted: usize,
    iou: f64,
    dice: f64,
    dice_loss: f64,
    ce: Option<f64>,
    /// `(kind, predicted, reference-mask, analytic)`; `None` prediction when
    /// the predicted mask could not be measured.
    measurements: Vec<(MeasureKind, Option<f64>, f64, Option<f64>)>,
}

fn measure_map(
    part: BodyPart,
    prob: &ProbGrid,
    spacing: PixelSpacing,
    cfg: &AnalysisConfig,
) -> Option<Vec<Measurement>> {
    let masks = postprocess(prob, prob.size(), cfg.mask_threshold).ok()?;
    measure_part(part, &masks.clean, spacing, &cfg.measure_options()).ok()
}

fn eval_frame(
    f: &EvalFrame,
    scorer: &dyn FrameScorer,
    spacing: PixelSpacing,
    cfg: &AnalysisConfig,
) -> Result<FrameEval, EvalError> {
    let err = |reason: String| EvalError::Score {
        frame: f.frame_index,
        reason,
    };
    let input = resize_to_model(&f.input).map_err(|e| err(e.to_string()))?;
    let out = scorer.score(f.frame_index, &input).map_err(|e| err(e.to_string()))?;
    check_output(&scorer.descriptor(), f.frame_index, &out).map_err(|e| err(e.to_string()))?;
    let score = FrameScore::new(f.frame_index, out.class_probs).map_err(|e| err(e.to_string()))?;
    let native = f.truth_mask.size();
    let up = upsample_mask(&out.mask, native).map_err(|e| err(e.to_string()))?;
    let pred = threshold(&up, cfg.mask_threshold).map_err(|e| err(e.to_string()))?;
    let metric = |r: Result<f64, crate::metrics::MetricsError>| r.map_err(|e| err(e.to_string()));

    let mut measurements = Vec::new();
    if f.part != BodyPart::Background {
        let truth_prob = f.truth_mask.map(|&t| if t { 1.0 } else { 0.0 });
        if let Some(reference) = measure_map(f.part, &truth_prob, spacing, cfg) {
            let predicted = measure_map(f.part, &up, spacing, cfg);
            for (i, r) in reference.iter().enumerate() {
                let p = predicted.as_ref().map(|ms| ms[i].value_cm);
                measurements.push((r.kind, p, r.value_cm, f.truth.get(r.kind)));
            }
        }
    }
    Ok(FrameEval {
        part: f.part,
        predicted: score.part().index(),
        iou: metric(iou(&pred, &f.truth_mask))?,
        dice: metric(dice(&pred, &f.truth_mask))?,
        dice_loss: metric(dice_loss(&up, &f.truth_mask, cfg.dice_eps))?,
        ce: ce_loss(&out.class_probs, f.part.index()).ok(),
        measurements,
    })
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

/// IoU/Dice per class, classification metrics and measurement errors of
/// `scorer` on `frames`.
pub fn evaluate_backend(
    scorer: &dyn FrameScorer,
    frames: &[EvalFrame],
    spacing: PixelSpacing,
    cfg: &AnalysisConfig,
    exec: Exec,
) -> Result<EvaluationReport, EvalError> {
    cfg.validate()?;
    if frames.is_empty() {
        return Err(EvalError::BadTruth("no frames".into()));
    }
    if let Some(mut available) = scorer.frames() {
        available.sort_unstable();
        let mut wanted: Vec<usize> = frames.iter().map(|f| f.frame_index).collect();
        wanted.sort_unstable();
        if available != wanted {
            return Err(EvalError::FrameMismatch(format!(
                "backend has {} frames, truth has {}",
                available.len(),
                wanted.len()
            )));
        }
    }
    let exec = if scorer.descriptor().concurrent {
        exec
    } else {
        Exec::Sequential
    };
    let evals: Vec<FrameEval> = map_indexed(exec, frames, |_, f| eval_frame(f, scorer, spacing, cfg))
        .into_iter()
        .collect::<Result<_, _>>()?;

    let segmentation = BodyPart::ALL
        .into_iter()
        .map(|class| {
            let of = || evals.iter().filter(move |e| e.part == class);
            ClassSegmentation {
                class,
                frames: of().count(),
                mean_iou: mean(of().map(|e| e.iou)),
                mean_dice: mean(of().map(|e| e.dice)),
                mean_dice_loss: mean(of().map(|e| e.dice_loss)),
            }
        })
        .collect();
    let preds: Vec<usize> = evals.iter().map(|e| e.predicted).collect();
    let labels: Vec<usize> = evals.iter().map(|e| e.part.index()).collect();
    let classification =
        classification_report(&preds, &labels, BodyPart::ALL.len()).map_err(|e| EvalError::BadTruth(e.to_string()))?;

    let measurement_errors = [MeasureKind::HC, MeasureKind::BPD, MeasureKind::AC, MeasureKind::FL]
        .into_iter()
        .map(|kind| {
            let rows: Vec<_> = evals
                .iter()
                .flat_map(|e| &e.measurements)
                .filter(|m| m.0 == kind)
                .collect();
            let measured = || rows.iter().filter_map(|&&(_, p, r, a)| p.map(|p| (p, r, a)));
            KindError {
                kind,
                frames: measured().count(),
                mean_abs_error_mm: mean(measured().map(|(p, r, _)| (p - r).abs() * 10.0)),
                mean_abs_analytic_error_mm: mean(measured().filter_map(|(p, _, a)| a.map(|a| (p - a).abs() * 10.0))),
                unmeasured: rows.iter().filter(|m| m.1.is_none()).count(),
            }
        })
        .collect();

    Ok(EvaluationReport {
        schema: super::REPORT_SCHEMA,
        frame_count: evals.len(),
        segmentation,
        mean_iou: mean(evals.iter().map(|e| e.iou)).expect("non-empty"),
        mean_dice: mean(evals.iter().map(|e| e.dice)).expect("non-empty"),
        classification,
        mean_ce_loss: mean(evals.iter().filter_map(|e| e.ce)),
        infinite_ce_frames: evals.iter().filter(|e| e.ce.is_none()).count(),
        measurement_errors,
    })
}
