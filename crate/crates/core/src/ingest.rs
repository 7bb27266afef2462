//! Study loading: sidecar metadata, frame PNGs, privacy masking and
//! resizing to the backend input size.
//!
//! A study directory holds `study.json` plus `frame_000000.png`,
//! `frame_000001.png`, ... (8-bit single channel). Pixel values are scaled to
//! `[0, 1]` and every `mask_regions` rectangle is blanked to zero on load.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{Grid, ProbGrid};
use crate::imageio;

/// Side length of the square input the scoring backends consume.
pub const MODEL_SIZE: usize = 224;

pub const STUDY_FILE: &str = "study.json";

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("missing or unexpected frame: {0}")]
    MissingFrame(String),
    #[error("bad study metadata: {0}")]
    BadMetadata(String),
    #[error("bad image {path}: {reason}")]
    BadImage { path: String, reason: String },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Axis-aligned rectangle `[x, y, w, h]` in native pixels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "[usize; 4]", into = "[usize; 4]")]
pub struct Rect {
    pub x: usize,
    pub y: usize,
    pub w: usize,
    pub h: usize,
}

impl From<[usize; 4]> for Rect {
    fn from([x, y, w, h]: [usize; 4]) -> Self {
        Self { x, y, w, h }
    }
}

impl From<Rect> for [usize; 4] {
    fn from(r: Rect) -> Self {
        [r.x, r.y, r.w, r.h]
    }
}

/// Physical pixel size in millimetres, per axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct PixelSpacing {
    /// Millimetres between vertically adjacent pixel centres.
    pub row_mm: f64,
    /// Millimetres between horizontally adjacent pixel centres.
    pub col_mm: f64,
}

impl PixelSpacing {
    pub fn isotropic(mm: f64) -> Self {
        Self { row_mm: mm, col_mm: mm }
    }

    pub fn is_valid(&self) -> bool {
        self.row_mm.is_finite() && self.col_mm.is_finite() && self.row_mm > 0.0 && self.col_mm > 0.0
    }

    /// Maps a pixel-centre coordinate `(x = col, y = row)` to millimetres.
    #[inline]
    pub fn to_mm(&self, (x, y): (f64, f64)) -> (f64, f64) {
        (x * self.col_mm, y * self.row_mm)
    }
}

impl From<[f64; 2]> for PixelSpacing {
    fn from([row_mm, col_mm]: [f64; 2]) -> Self {
        Self { row_mm, col_mm }
    }
}

impl From<PixelSpacing> for [f64; 2] {
    fn from(s: PixelSpacing) -> Self {
        [s.row_mm, s.col_mm]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyMeta {
    pub study_id: String,
    pub pixel_spacing_mm: PixelSpacing,
    /// `(height, width)` in native pixels.
    pub native_size: (usize, usize),
    pub frame_count: usize,
    #[serde(default)]
    pub mask_regions: Vec<Rect>,
}

impl StudyMeta {
    pub fn validate(&self) -> Result<(), IngestError> {
        let bad = |m: String| Err(IngestError::BadMetadata(m));
        if !self.pixel_spacing_mm.is_valid() {
            return bad(format!(
                "pixel_spacing_mm must be positive, got {:?}",
                self.pixel_spacing_mm
            ));
        }
        let (h, w) = self.native_size;
        if h == 0 || w == 0 {
            return bad(format!("native_size must be positive, got {h}x{w}"));
        }
        if self.frame_count == 0 {
            return bad("frame_count must be positive".into());
        }
        for r in &self.mask_regions {
            if r.x + r.w > w || r.y + r.h > h {
                return bad(format!("mask region {r:?} exceeds native size {h}x{w}"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    /// Position of the frame in the original recording.
    pub index: usize,
    pub pixels: ProbGrid,
}

/// One study: metadata plus frames in recording order.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameSequence {
    pub meta: StudyMeta,
    pub frames: Vec<Frame>,
}

impl FrameSequence {
    /// Builds a sequence from in-memory frames, checking the invariants that
    /// [`load_study`] guarantees.
    pub fn new(meta: StudyMeta, frames: Vec<Frame>) -> Result<Self, IngestError> {
        meta.validate()?;
        if frames.len() != meta.frame_count {
            return Err(IngestError::BadMetadata(format!(
                "frame_count is {} but {} frames given",
                meta.frame_count,
                frames.len()
            )));
        }
        for f in &frames {
            if f.pixels.size() != meta.native_size {
                return Err(IngestError::BadImage {
                    path: format!("frame {}", f.index),
                    reason: format!("size {:?} != native size {:?}", f.pixels.size(), meta.native_size),
                });
            }
            if f.pixels.as_slice().iter().any(|v| !(0.0..=1.0).contains(v)) {
                return Err(IngestError::BadImage {
                    path: format!("frame {}", f.index),
                    reason: "values outside [0, 1]".into(),
                });
            }
        }
        Ok(Self { meta, frames })
    }

    /// Keeps only frames whose original index satisfies `keep`.
    pub fn retain(&mut self, mut keep: impl FnMut(usize) -> bool) {
        self.frames.retain(|f| keep(f.index));
        self.meta.frame_count = self.frames.len();
    }
}

pub fn frame_file_name(index: usize) -> String {
    format!("frame_{index:06}.png")
}

pub fn read_meta(dir: &Path) -> Result<StudyMeta, IngestError> {
    let path = dir.join(STUDY_FILE);
    let text = fs::read_to_string(&path).map_err(|e| {
        if e.kind() == std::io::ErrorKind::NotFound {
            IngestError::BadMetadata(format!("{} not found", path.display()))
        } else {
            IngestError::Io {
                path: path.display().to_string(),
                source: e,
            }
        }
    })?;
    let meta: StudyMeta =
        serde_json::from_str(&text).map_err(|e| IngestError::BadMetadata(format!("{}: {e}", path.display())))?;
    meta.validate()?;
    Ok(meta)
}

/// Parses `frame_NNNNNN.png` into its index.
fn parse_frame_index(name: &str) -> Option<usize> {
    let digits = name.strip_prefix("frame_")?.strip_suffix(".png")?;
    if digits.len() != 6 || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    digits.parse().ok()
}

/// Loads a study directory.
pub fn load_study(dir: impl AsRef<Path>) -> Result<FrameSequence, IngestError> {
    let dir = dir.as_ref();
    let meta = read_meta(dir)?;

    let entries = fs::read_dir(dir).map_err(|e| IngestError::Io {
        path: dir.display().to_string(),
        source: e,
    })?;
    let mut present = BTreeSet::new();
    for entry in entries {
        let entry = entry.map_err(|e| IngestError::Io {
            path: dir.display().to_string(),
            source: e,
        })?;
        if let Some(idx) = entry.file_name().to_str().and_then(parse_frame_index) {
            present.insert(idx);
        }
    }
    if let Some(missing) = (0..meta.frame_count).find(|i| !present.contains(i)) {
        return Err(IngestError::MissingFrame(frame_file_name(missing)));
    }
    if let Some(&extra) = present.iter().find(|&&i| i >= meta.frame_count) {
        return Err(IngestError::MissingFrame(format!(
            "{} beyond frame_count {}",
            frame_file_name(extra),
            meta.frame_count
        )));
    }

    let mut frames = Vec::with_capacity(meta.frame_count);
    for index in 0..meta.frame_count {
        let path: PathBuf = dir.join(frame_file_name(index));
        let raw = imageio::read_gray8(&path).map_err(|reason| IngestError::BadImage {
            path: path.display().to_string(),
            reason,
        })?;
        if raw.size() != meta.native_size {
            return Err(IngestError::BadImage {
                path: path.display().to_string(),
                reason: format!("size {:?} != native_size {:?}", raw.size(), meta.native_size),
            });
        }
        let mut pixels = raw.map(|&v| f64::from(v) / 255.0);
        blank_regions(&mut pixels, &meta.mask_regions);
        frames.push(Frame { index, pixels });
    }
    Ok(FrameSequence { meta, frames })
}

/// Sets every pixel inside the given rectangles to zero.
pub fn blank_regions(grid: &mut ProbGrid, regions: &[Rect]) {
    let (h, w) = grid.size();
    for r in regions {
        for row in r.y..(r.y + r.h).min(h) {
            for col in r.x..(r.x + r.w).min(w) {
                grid.set(row, col, 0.0);
            }
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("cannot resize an empty frame")]
pub struct EmptyFrame;

/// Resamples a frame to `MODEL_SIZE x MODEL_SIZE` without preserving aspect
/// ratio.
pub fn resize_to_model(frame: &ProbGrid) -> Result<ProbGrid, EmptyFrame> {
    if frame.is_empty() {
        return Err(EmptyFrame);
    }
    Ok(frame.resize_bilinear(MODEL_SIZE, MODEL_SIZE))
}

/// Writes `study.json` for `meta` into `dir`.
pub fn write_meta(dir: &Path, meta: &StudyMeta) -> std::io::Result<()> {
    let text = serde_json::to_string_pretty(meta).expect("StudyMeta serializes");
    fs::write(dir.join(STUDY_FILE), text + "\n")
}

/// Quantizes a `[0, 1]` grid to 8 bits.
pub fn to_gray8(grid: &ProbGrid) -> Grid<u8> {
    grid.map(|&v| (v.clamp(0.0, 1.0) * 255.0).round() as u8)
}
