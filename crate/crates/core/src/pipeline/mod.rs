//! Study analysis: score every frame, gate, post-process and measure the
//! candidates, pick the best frame per part and estimate GA and EFW.

mod evaluate;
mod report;

pub use evaluate::{
    evaluate_backend, load_truth_dir, ClassSegmentation, EvalError, EvalFrame, EvaluationReport, KindError,
};
pub use report::{frames_csv, FrameRow, StudyReport, FRAMES_CSV_HEADER, REPORT_SCHEMA};

use std::time::Instant;

use thiserror::Error;

use crate::backend::{check_output, FrameScorer};
use crate::biometry::{measure_part, BiometrySet, BodyPart, MeasureKind};
use crate::config::{AnalysisConfig, ConfigError};
use crate::estimation::complete_or_skip;
use crate::ingest::{resize_to_model, Frame, FrameSequence};
use crate::morphology::postprocess;
use crate::par::{map_indexed, Exec};
use crate::planes::{
    ellipse_similarity_mm, gate_frame_at, pick_winners, score_candidates, FrameScore, PlaneSelection, RawCandidate,
};

/// GA below this many weeks together with BPD above [`IMPLAUSIBLE_GA_BPD_CM`]
/// triggers a report warning.
pub const IMPLAUSIBLE_GA_WEEKS: f64 = 14.0;
pub const IMPLAUSIBLE_GA_BPD_CM: f64 = 4.0;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    BadConfig(#[from] ConfigError),
    #[error("all {0} frames failed to score")]
    AllFramesFailed(usize),
}

/// What happened to one frame.
#[derive(Debug, Clone, PartialEq)]
pub enum FrameOutcome {
    Failed {
        frame_index: usize,
        reason: String,
    },
    Scored {
        score: FrameScore,
        gated: Option<BodyPart>,
        candidate: Option<RawCandidate>,
        /// Why a gated frame produced no candidate.
        unmeasured: Option<String>,
    },
}

impl FrameOutcome {
    pub fn frame_index(&self) -> usize {
        match self {
            FrameOutcome::Failed { frame_index, .. } => *frame_index,
            FrameOutcome::Scored { score, .. } => score.frame_index,
        }
    }
}

/// A report plus the per-frame detail behind it.
#[derive(Debug, Clone)]
pub struct StudyAnalysis {
    pub report: StudyReport,
    pub frames: Vec<FrameOutcome>,
    pub selection_candidates: Vec<crate::planes::CandidateFrame>,
}

fn process_frame(frame: &Frame, seq: &FrameSequence, scorer: &dyn FrameScorer, cfg: &AnalysisConfig) -> FrameOutcome {
    let frame_index = frame.index;
    let fail = |reason: String| FrameOutcome::Failed { frame_index, reason };
    let model_input = match resize_to_model(&frame.pixels) {
        Ok(g) => g,
        Err(e) => return fail(e.to_string()),
    };
    let desc = scorer.descriptor();
    let out = match scorer.score(frame_index, &model_input) {
        Ok(o) => o,
        Err(e) => return fail(e.to_string()),
    };
    if let Err(e) = check_output(&desc, frame_index, &out) {
        return fail(e.to_string());
    }
    let score = match FrameScore::new(frame_index, out.class_probs) {
        Ok(s) => s,
        Err(e) => return fail(e.to_string()),
    };
    let Some(part) = gate_frame_at(&score, cfg.gate_threshold) else {
        return FrameOutcome::Scored {
            score,
            gated: None,
            candidate: None,
            unmeasured: None,
        };
    };
    let masks = match postprocess(&out.mask, seq.meta.native_size, cfg.mask_threshold) {
        Ok(m) => m,
        Err(e) => return fail(e.to_string()),
    };
    let spacing = seq.meta.pixel_spacing_mm;
    let (candidate, unmeasured) = match measure_part(part, &masks.clean, spacing, &cfg.measure_options()) {
        Ok(mut ms) => {
            let measurement = ms.remove(0).at_frame(frame_index);
            let ellipse_similarity = measurement
                .ellipse
                .as_ref()
                .filter(|_| part.is_elliptical())
                .map(|e| ellipse_similarity_mm(&masks.raw, e, spacing));
            let candidate = RawCandidate {
                frame_index,
                part,
                class_score: score.prob(part),
                measurement,
                companions: ms.into_iter().map(|m| m.at_frame(frame_index)).collect(),
                ellipse_similarity,
            };
            (Some(candidate), None)
        }
        Err(e) => (None, Some(e.to_string())),
    };
    FrameOutcome::Scored {
        score,
        gated: Some(part),
        candidate,
        unmeasured,
    }
}

/// Biometrics carried by the winning frames.
pub fn biometry_from_selection(sel: &PlaneSelection) -> BiometrySet {
    let mut b = BiometrySet::default();
    for w in sel.winners() {
        for m in std::iter::once(&w.measurement).chain(&w.companions) {
            b.set(m.kind, m.value_cm);
        }
    }
    complete_or_skip(b)
}

fn warnings_for(frames: &[FrameOutcome], sel: &PlaneSelection, biometry: &BiometrySet) -> Vec<String> {
    let mut warnings = Vec::new();
    for f in frames {
        match f {
            FrameOutcome::Failed { frame_index, reason } => {
                warnings.push(format!("frame {frame_index} skipped: {reason}"));
            }
            FrameOutcome::Scored {
                score,
                gated: Some(part),
                unmeasured: Some(reason),
                ..
            } => warnings.push(format!(
                "frame {}: {part} could not be measured: {reason}",
                score.frame_index
            )),
            _ => {}
        }
    }
    if sel.is_empty() {
        warnings.push("no frame passed the standard-plane gate; no measurements were taken".into());
    } else {
        let missing: Vec<&str> = BodyPart::MEASURED
            .into_iter()
            .filter(|p| sel.get(*p).is_none())
            .map(BodyPart::name)
            .collect();
        if !missing.is_empty() {
            warnings.push(format!(
                "no standard plane found for {}; GA and EFW not estimated",
                missing.join(", ")
            ));
        }
    }
    if let (Some(ga), Some(bpd)) = (biometry.ga_weeks, biometry.get(MeasureKind::BPD)) {
        if ga < IMPLAUSIBLE_GA_WEEKS && bpd > IMPLAUSIBLE_GA_BPD_CM {
            warnings.push(format!(
                "gestational age {ga:.1} weeks is implausibly low for BPD {bpd:.2} cm; the dating formula is applied as published"
            ));
        }
    }
    warnings
}

/// Runs the whole study. Frames are processed with `exec` unless the scorer
/// declares itself single-threaded; the result does not depend on the mode.
pub fn analyze_study_with(
    seq: &FrameSequence,
    scorer: &dyn FrameScorer,
    cfg: &AnalysisConfig,
    exec: Exec,
) -> Result<StudyAnalysis, PipelineError> {
    cfg.validate()?;
    let start = Instant::now();
    let exec = if scorer.descriptor().concurrent {
        exec
    } else {
        Exec::Sequential
    };
    let frames = map_indexed(exec, &seq.frames, |_, f| process_frame(f, seq, scorer, cfg));
    if frames.iter().all(|f| matches!(f, FrameOutcome::Failed { .. })) {
        return Err(PipelineError::AllFramesFailed(frames.len()));
    }
    let raw: Vec<RawCandidate> = frames
        .iter()
        .filter_map(|f| match f {
            FrameOutcome::Scored { candidate, .. } => candidate.clone(),
            FrameOutcome::Failed { .. } => None,
        })
        .collect();
    let candidates = score_candidates(&raw, &cfg.weights).map_err(|e| ConfigError(e.to_string()))?;
    let selection = pick_winners(&candidates);
    let biometry = biometry_from_selection(&selection);
    let warnings = warnings_for(&frames, &selection, &biometry);
    let report = StudyReport {
        schema: REPORT_SCHEMA,
        study_id: seq.meta.study_id.clone(),
        frame_count: seq.frames.len(),
        frames_failed: frames
            .iter()
            .filter(|f| matches!(f, FrameOutcome::Failed { .. }))
            .count(),
        candidates: candidates.len(),
        selection,
        biometry,
        warnings,
        timing_ms: start.elapsed().as_secs_f64() * 1e3,
        config: *cfg,
    };
    Ok(StudyAnalysis {
        report,
        frames,
        selection_candidates: candidates,
    })
}

pub fn analyze_study(
    seq: &FrameSequence,
    scorer: &dyn FrameScorer,
    cfg: &AnalysisConfig,
) -> Result<StudyReport, PipelineError> {
    analyze_study_with(seq, scorer, cfg, Exec::default()).map(|a| a.report)
}
