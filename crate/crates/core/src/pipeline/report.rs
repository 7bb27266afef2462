//! Study report JSON and the per-frame CSV dump.

use serde::{Deserialize, Serialize};

use super::{FrameOutcome, StudyAnalysis};
use crate::biometry::BiometrySet;
use crate::config::AnalysisConfig;
use crate::planes::{CandidateFrame, PlaneSelection};

/// Version of the report layout.
pub const REPORT_SCHEMA: u32 = 1;

pub const FRAMES_CSV_HEADER: &str = "frame,part,p_head,p_abd,p_fem,p_bg,gated,measurement_cm,composite";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyReport {
    pub schema: u32,
    pub study_id: String,
    pub frame_count: usize,
    pub frames_failed: usize,
    /// Gated frames that produced a measurement.
    pub candidates: usize,
    /// Winning frame per part with its measurements and composite score.
    pub selection: PlaneSelection,
    pub biometry: BiometrySet,
    pub warnings: Vec<String>,
    /// Wall-clock analysis time; informational only.
    pub timing_ms: f64,
    pub config: AnalysisConfig,
}

impl StudyReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    /// The report with timing zeroed, for comparisons across runs.
    pub fn without_timing(&self) -> Self {
        Self {
            timing_ms: 0.0,
            ..self.clone()
        }
    }
}

/// One line of the per-frame CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameRow {
    pub frame: usize,
    /// Most probable class; empty for failed frames.
    pub part: String,
    pub probs: Option<[f64; 4]>,
    pub gated: bool,
    pub measurement_cm: Option<f64>,
    pub composite: Option<f64>,
}

fn rows(analysis: &StudyAnalysis) -> Vec<FrameRow> {
    let find =
        |i: usize| -> Option<&CandidateFrame> { analysis.selection_candidates.iter().find(|c| c.frame_index == i) };
    analysis
        .frames
        .iter()
        .map(|f| match f {
            FrameOutcome::Failed { frame_index, .. } => FrameRow {
                frame: *frame_index,
                part: String::new(),
                probs: None,
                gated: false,
                measurement_cm: None,
                composite: None,
            },
            FrameOutcome::Scored { score, gated, .. } => {
                let cand = find(score.frame_index);
                FrameRow {
                    frame: score.frame_index,
                    part: score.part().name().to_string(),
                    probs: Some(score.class_probs),
                    gated: gated.is_some(),
                    measurement_cm: cand.map(|c| c.measurement.value_cm),
                    composite: cand.map(|c| c.composite),
                }
            }
        })
        .collect()
}

/// Per-frame CSV with [`FRAMES_CSV_HEADER`]; absent values are empty fields.
pub fn frames_csv(analysis: &StudyAnalysis) -> String {
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    let mut out = String::from(FRAMES_CSV_HEADER);
    out.push('\n');
    for r in rows(analysis) {
        let probs = match r.probs {
            Some(p) => p.map(|x| x.to_string()).join(","),
            None => ",,,".to_string(),
        };
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.frame,
            r.part,
            probs,
            r.gated,
            opt(r.measurement_cm),
            opt(r.composite)
        ));
    }
    out
}
