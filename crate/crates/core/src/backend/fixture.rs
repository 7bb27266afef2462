//! Replays stored scorer outputs: `scores.csv` plus `mask_NNNNNN.png`.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use super::{BackendError, FrameScorer, ScoredFrame, ScorerDescriptor};
use crate::biometry::BodyPart;
use crate::grid::ProbGrid;
use crate::imageio;
use crate::planes::SIMPLEX_TOLERANCE;

pub const SCORES_FILE: &str = "scores.csv";
pub const MASK_PREFIX: &str = "mask_";
/// Rows whose probabilities sum within this of 1 are renormalised.
const RENORMALIZE_TOLERANCE: f64 = 1e-3;

#[derive(Debug, Deserialize)]
struct ScoreRow {
    frame_index: usize,
    p_head: f64,
    p_abdomen: f64,
    p_femur: f64,
    p_background: f64,
}

#[derive(Debug, Clone)]
pub struct FixtureScorer {
    dir: PathBuf,
    probs: BTreeMap<usize, [f64; 4]>,
    mask_size: (usize, usize),
}

pub fn mask_file_name(prefix: &str, index: usize) -> String {
    format!("{prefix}{index:06}.png")
}

fn bad(msg: impl Into<String>) -> BackendError {
    BackendError::BadFixture(msg.into())
}

fn count_prefixed_pngs(dir: &Path, prefix: &str) -> Result<usize, BackendError> {
    let entries = fs::read_dir(dir).map_err(|e| BackendError::Io {
        path: dir.display().to_string(),
        source: e,
    })?;
    let mut n = 0;
    for e in entries.flatten() {
        let name = e.file_name();
        let name = name.to_string_lossy();
        if name.starts_with(prefix) && name.ends_with(".png") {
            n += 1;
        }
    }
    Ok(n)
}

impl FixtureScorer {
    /// Reads `scores.csv` and checks that each row has a mask. Masks are
    /// decoded on demand.
    pub fn open(dir: impl AsRef<Path>) -> Result<Self, BackendError> {
        let dir = dir.as_ref().to_path_buf();
        let path = dir.join(SCORES_FILE);
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_path(&path)
            .map_err(|e| bad(format!("{}: {e}", path.display())))?;
        let header: Vec<String> = rdr
            .headers()
            .map_err(|e| bad(format!("{}: {e}", path.display())))?
            .iter()
            .map(str::to_string)
            .collect();
        let expected = ["frame_index", "p_head", "p_abdomen", "p_femur", "p_background"];
        if header != expected {
            return Err(bad(format!(
                "{}: header must be {}",
                path.display(),
                expected.join(",")
            )));
        }
        let mut probs = BTreeMap::new();
        for (i, row) in rdr.deserialize::<ScoreRow>().enumerate() {
            let row = row.map_err(|e| bad(format!("{} row {}: {e}", path.display(), i + 2)))?;
            let p = [row.p_head, row.p_abdomen, row.p_femur, row.p_background];
            if p.iter().any(|v| !(0.0..=1.0).contains(v)) {
                return Err(bad(format!(
                    "frame {}: probabilities {p:?} outside [0, 1]",
                    row.frame_index
                )));
            }
            let sum: f64 = p.iter().sum();
            if (sum - 1.0).abs() > RENORMALIZE_TOLERANCE {
                return Err(bad(format!("frame {}: probabilities sum to {sum}", row.frame_index)));
            }
            // Rows already on the simplex are kept bit-exact so boundary
            // values such as 0.9 are not nudged across the gate.
            let p = if (sum - 1.0).abs() > SIMPLEX_TOLERANCE {
                p.map(|v| v / sum)
            } else {
                p
            };
            if probs.insert(row.frame_index, p).is_some() {
                return Err(bad(format!("frame {} listed twice", row.frame_index)));
            }
        }
        let Some(&first) = probs.keys().next() else {
            return Err(bad(format!("{} has no rows", path.display())));
        };
        for &idx in probs.keys() {
            let m = dir.join(mask_file_name(MASK_PREFIX, idx));
            if !m.is_file() {
                return Err(bad(format!("missing mask {}", m.display())));
            }
        }
        let masks = count_prefixed_pngs(&dir, MASK_PREFIX)?;
        if masks != probs.len() {
            return Err(bad(format!("{} score rows but {masks} mask files", probs.len())));
        }
        let first_path = dir.join(mask_file_name(MASK_PREFIX, first));
        let (w, h) = image::image_dimensions(&first_path).map_err(|e| bad(format!("{}: {e}", first_path.display())))?;
        Ok(Self {
            dir,
            probs,
            mask_size: (h as usize, w as usize),
        })
    }

    pub fn frame_indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.probs.keys().copied()
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn probs(&self, frame_index: usize) -> Option<[f64; 4]> {
        self.probs.get(&frame_index).copied()
    }

    /// Decodes one stored mask as probabilities (`value / 255`).
    pub fn load_mask(&self, frame_index: usize) -> Result<ProbGrid, BackendError> {
        let path = self.dir.join(mask_file_name(MASK_PREFIX, frame_index));
        let raw = imageio::read_gray8(&path).map_err(|e| bad(format!("{}: {e}", path.display())))?;
        Ok(raw.map(|&v| f64::from(v) / 255.0))
    }
}

impl FrameScorer for FixtureScorer {
    fn descriptor(&self) -> ScorerDescriptor {
        ScorerDescriptor {
            name: format!("fixture:{}", self.dir.display()),
            classes: BodyPart::ALL,
            mask_size: self.mask_size,
            concurrent: true,
        }
    }

    fn score(&self, frame_index: usize, _frame: &ProbGrid) -> Result<ScoredFrame, BackendError> {
        let class_probs = self.probs(frame_index).ok_or_else(|| BackendError::ScoreFailed {
            frame: frame_index,
            reason: "frame not present in fixture".into(),
        })?;
        let mask = self.load_mask(frame_index).map_err(|e| BackendError::ScoreFailed {
            frame: frame_index,
            reason: e.to_string(),
        })?;
        Ok(ScoredFrame { class_probs, mask })
    }

    fn frames(&self) -> Option<Vec<usize>> {
        Some(self.frame_indices().collect())
    }
}
