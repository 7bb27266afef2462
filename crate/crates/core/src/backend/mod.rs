//! The scorer boundary: anything that maps a frame to class probabilities and
//! a segmentation probability grid.

mod fixture;
mod phantom;

pub use fixture::{mask_file_name, FixtureScorer, MASK_PREFIX, SCORES_FILE};
pub use phantom::{
    default_phantom_spec, rasterize_shape, FrameTruth, GroundTruth, PhantomFrame, PhantomScorer, PhantomSpec, Shape,
    GROUND_TRUTH_FILE, TRUTH_PREFIX,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::biometry::BodyPart;
use crate::grid::ProbGrid;
use crate::planes::SIMPLEX_TOLERANCE;

#[derive(Debug, Error)]
pub enum BackendError {
    #[error("bad fixture: {0}")]
    BadFixture(String),
    #[error("bad phantom spec: {0}")]
    BadSpec(String),
    #[error("frame {frame}: {reason}")]
    ScoreFailed { frame: usize, reason: String },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Raw output of a scorer for one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredFrame {
    /// Probabilities for head, abdomen, femur, background.
    pub class_probs: [f64; 4],
    pub mask: ProbGrid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScorerDescriptor {
    pub name: String,
    /// Class order of `class_probs`.
    pub classes: [BodyPart; 4],
    /// `(height, width)` of every returned mask.
    pub mask_size: (usize, usize),
    /// Whether `score` may be called from several threads at once.
    pub concurrent: bool,
}

pub trait FrameScorer: Send + Sync {
    fn descriptor(&self) -> ScorerDescriptor;

    /// Scores one frame. `frame` is the model-size input; `frame_index` is the
    /// frame's position in the recording.
    fn score(&self, frame_index: usize, frame: &ProbGrid) -> Result<ScoredFrame, BackendError>;

    /// Frame indices the scorer can answer for, when it knows them up front.
    fn frames(&self) -> Option<Vec<usize>> {
        None
    }
}

/// Checks a scorer's output against its descriptor instead of trusting it.
pub fn check_output(desc: &ScorerDescriptor, frame: usize, out: &ScoredFrame) -> Result<(), BackendError> {
    let fail = |reason: String| Err(BackendError::ScoreFailed { frame, reason });
    if out.class_probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
        return fail(format!("class probabilities {:?} outside [0, 1]", out.class_probs));
    }
    let sum: f64 = out.class_probs.iter().sum();
    if (sum - 1.0).abs() > SIMPLEX_TOLERANCE {
        return fail(format!("class probabilities sum to {sum}"));
    }
    if out.mask.size() != desc.mask_size {
        return fail(format!(
            "mask size {:?}, descriptor declares {:?}",
            out.mask.size(),
            desc.mask_size
        ));
    }
    if out.mask.as_slice().iter().any(|v| !(0.0..=1.0).contains(v)) {
        return fail("mask values outside [0, 1]".into());
    }
    Ok(())
}
