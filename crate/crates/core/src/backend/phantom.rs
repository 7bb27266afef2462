//! Synthetic studies with analytically known geometry.
//!
//! Each frame carries an optional shape (an ellipse for head and abdomen, a
//! bar for the femur) in native pixel coordinates, a class-probability
//! profile and a mask noise level. The scorer rasterises the shape (pixel
//! centre inside gives 1, else 0), adds clipped Gaussian noise, and replays
//! the profile. Ground truth comes from the shape parameters, not the pixels.

use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::fixture::mask_file_name;
use super::{BackendError, FrameScorer, ScoredFrame, ScorerDescriptor, MASK_PREFIX, SCORES_FILE};
use crate::biometry::{px_to_cm, BiometrySet, BodyPart};
use crate::geometry::EllipseParams;
use crate::grid::{BinaryMask, Grid, ProbGrid};
use crate::imageio::write_gray8;
use crate::ingest::{
    blank_regions, frame_file_name, to_gray8, write_meta, Frame, FrameSequence, PixelSpacing, Rect, StudyMeta,
};
use crate::planes::SIMPLEX_TOLERANCE;

pub const GROUND_TRUTH_FILE: &str = "ground_truth.json";
pub const TRUTH_PREFIX: &str = "truth_";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum Shape {
    /// Semi-axes `a`, `b` and rotation `theta` (radians from +x), pixels.
    Ellipse {
        cx: f64,
        cy: f64,
        a: f64,
        b: f64,
        theta: f64,
    },
    /// Rectangle of `length` along `theta` and `width` across it, pixels.
    Bar {
        cx: f64,
        cy: f64,
        length: f64,
        width: f64,
        theta: f64,
    },
}

impl Shape {
    pub fn contains(&self, x: f64, y: f64) -> bool {
        match *self {
            Shape::Ellipse { cx, cy, a, b, theta } => EllipseParams { cx, cy, a, b, theta }.contains(x, y),
            Shape::Bar {
                cx,
                cy,
                length,
                width,
                theta,
            } => {
                let (s, c) = theta.sin_cos();
                let (dx, dy) = (x - cx, y - cy);
                let u = dx * c + dy * s;
                let v = -dx * s + dy * c;
                u.abs() <= length / 2.0 && v.abs() <= width / 2.0
            }
        }
    }

    /// `(x_min, x_max, y_min, y_max)`.
    pub fn bounds(&self) -> (f64, f64, f64, f64) {
        let (cx, cy, ex, ey) = match *self {
            Shape::Ellipse { cx, cy, a, b, theta } => {
                let (s, c) = theta.sin_cos();
                (cx, cy, (a * c).hypot(b * s), (a * s).hypot(b * c))
            }
            Shape::Bar {
                cx,
                cy,
                length,
                width,
                theta,
            } => {
                let (s, c) = theta.sin_cos();
                let (hl, hw) = (length / 2.0, width / 2.0);
                (cx, cy, (hl * c).abs() + (hw * s).abs(), (hl * s).abs() + (hw * c).abs())
            }
        };
        (cx - ex, cx + ex, cy - ey, cy + ey)
    }

    fn dims_valid(&self) -> bool {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        match *self {
            Shape::Ellipse { cx, cy, a, b, theta } => {
                ok(a) && ok(b) && cx.is_finite() && cy.is_finite() && theta.is_finite()
            }
            Shape::Bar {
                cx,
                cy,
                length,
                width,
                theta,
            } => ok(length) && ok(width) && cx.is_finite() && cy.is_finite() && theta.is_finite(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhantomFrame {
    /// True class of the frame.
    pub part: BodyPart,
    #[serde(default)]
    pub shape: Option<Shape>,
    /// Scores replayed for head, abdomen, femur, background.
    pub probs: [f64; 4],
    /// Standard deviation of the additive mask noise, in `[0, 0.5)`.
    #[serde(default)]
    pub noise_sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhantomSpec {
    pub study_id: String,
    /// `(height, width)` of the frames.
    pub native_size: (usize, usize),
    pub pixel_spacing_mm: PixelSpacing,
    /// Mask resolution; native when absent.
    #[serde(default)]
    pub mask_size: Option<(usize, usize)>,
    #[serde(default)]
    pub mask_regions: Vec<Rect>,
    pub frames: Vec<PhantomFrame>,
}

/// Measurements one frame's shape implies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameTruth {
    pub frame_index: usize,
    pub part: BodyPart,
    pub biometry: BiometrySet,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub study_id: String,
    pub seed: u64,
    pub pixel_spacing_mm: PixelSpacing,
    pub frames: Vec<FrameTruth>,
}

impl GroundTruth {
    pub fn frame(&self, index: usize) -> Option<&FrameTruth> {
        self.frames.iter().find(|f| f.frame_index == index)
    }
}

fn spec_err(msg: impl Into<String>) -> BackendError {
    BackendError::BadSpec(msg.into())
}

impl PhantomSpec {
    pub fn mask_size(&self) -> (usize, usize) {
        self.mask_size.unwrap_or(self.native_size)
    }

    /// Sets the noise level of every frame.
    pub fn with_noise(mut self, sigma: f64) -> Self {
        for f in &mut self.frames {
            f.noise_sigma = sigma;
        }
        self
    }

    pub fn validate(&self) -> Result<(), BackendError> {
        let (h, w) = self.native_size;
        if h == 0 || w == 0 {
            return Err(spec_err("native_size must be positive"));
        }
        if let Some((mh, mw)) = self.mask_size {
            if mh == 0 || mw == 0 {
                return Err(spec_err("mask_size must be positive"));
            }
        }
        if !self.pixel_spacing_mm.is_valid() {
            return Err(spec_err("pixel spacing must be positive"));
        }
        if self.frames.is_empty() {
            return Err(spec_err("no frames"));
        }
        for (i, f) in self.frames.iter().enumerate() {
            let sum: f64 = f.probs.iter().sum();
            if f.probs.iter().any(|p| !(0.0..=1.0).contains(p)) || (sum - 1.0).abs() > SIMPLEX_TOLERANCE {
                return Err(spec_err(format!(
                    "frame {i}: probs {:?} are not a probability vector",
                    f.probs
                )));
            }
            if !(0.0..0.5).contains(&f.noise_sigma) {
                return Err(spec_err(format!(
                    "frame {i}: noise_sigma {} outside [0, 0.5)",
                    f.noise_sigma
                )));
            }
            let Some(shape) = &f.shape else { continue };
            let kind_ok = matches!(
                (f.part, shape),
                (BodyPart::Head | BodyPart::Abdomen, Shape::Ellipse { .. }) | (BodyPart::Femur, Shape::Bar { .. })
            );
            if !kind_ok {
                return Err(spec_err(format!(
                    "frame {i}: {} frames cannot carry this shape",
                    f.part
                )));
            }
            if !shape.dims_valid() {
                return Err(spec_err(format!(
                    "frame {i}: shape dimensions must be positive and finite"
                )));
            }
            let (x0, x1, y0, y1) = shape.bounds();
            if x0 < 0.0 || y0 < 0.0 || x1 > (w - 1) as f64 || y1 > (h - 1) as f64 {
                return Err(spec_err(format!(
                    "frame {i}: shape spans x {x0:.1}..{x1:.1}, y {y0:.1}..{y1:.1}, outside the {w}x{h} frame"
                )));
            }
        }
        Ok(())
    }

    /// Analytic measurements per frame, in centimetres.
    pub fn ground_truth(&self) -> Vec<FrameTruth> {
        let sp = self.pixel_spacing_mm;
        self.frames
            .iter()
            .enumerate()
            .map(|(i, f)| {
                let mut b = BiometrySet::default();
                match (f.part, f.shape) {
                    (
                        BodyPart::Head,
                        Some(Shape::Ellipse {
                            cx,
                            cy,
                            a,
                            b: sb,
                            theta,
                        }),
                    ) => {
                        let mm = EllipseParams::new(cx, cy, a, sb, theta).scaled(sp.col_mm, sp.row_mm);
                        b.hc_cm = Some(mm.perimeter() / 10.0);
                        b.bpd_cm = Some(2.0 * mm.b / 10.0);
                    }
                    (
                        BodyPart::Abdomen,
                        Some(Shape::Ellipse {
                            cx,
                            cy,
                            a,
                            b: sb,
                            theta,
                        }),
                    ) => {
                        let mm = EllipseParams::new(cx, cy, a, sb, theta).scaled(sp.col_mm, sp.row_mm);
                        b.ac_cm = Some(mm.perimeter() / 10.0);
                    }
                    (BodyPart::Femur, Some(Shape::Bar { length, theta, .. })) => {
                        b.fl_cm = Some(px_to_cm(length, sp, theta).expect("validated length"));
                    }
                    _ => {}
                }
                FrameTruth {
                    frame_index: i,
                    part: f.part,
                    biometry: b,
                }
            })
            .collect()
    }
}

/// Rasterises `shape` (native pixel coordinates) onto an `out` grid covering
/// the same field of view as a `native` frame: 1 where the pixel centre is
/// inside, 0 elsewhere.
pub fn rasterize_shape(shape: &Shape, out: (usize, usize), native: (usize, usize)) -> ProbGrid {
    let (h, w) = out;
    let (sy, sx) = (native.0 as f64 / h as f64, native.1 as f64 / w as f64);
    let to_native = |r: usize, c: usize| ((c as f64 + 0.5) * sx - 0.5, (r as f64 + 0.5) * sy - 0.5);
    let (x0, x1, y0, y1) = shape.bounds();
    // Inverse of `to_native`, widened by one pixel.
    let col_range = (
        ((x0 + 0.5) / sx - 1.5).floor().max(0.0) as usize,
        (((x1 + 0.5) / sx + 1.0).ceil().max(0.0) as usize).min(w),
    );
    let row_range = (
        ((y0 + 0.5) / sy - 1.5).floor().max(0.0) as usize,
        (((y1 + 0.5) / sy + 1.0).ceil().max(0.0) as usize).min(h),
    );
    let mut g = Grid::filled(h, w, 0.0);
    for r in row_range.0..row_range.1 {
        for c in col_range.0..col_range.1 {
            let (x, y) = to_native(r, c);
            if shape.contains(x, y) {
                g.set(r, c, 1.0);
            }
        }
    }
    g
}

/// Replays a [`PhantomSpec`]; masks are generated on demand.
#[derive(Debug, Clone)]
pub struct PhantomScorer {
    spec: PhantomSpec,
    seed: u64,
}

/// Per-frame random streams, independent of evaluation order.
fn frame_rng(seed: u64, frame: usize, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(frame as u64 * 2 + stream);
    rng
}

impl PhantomScorer {
    /// Validates the spec and returns the scorer plus the per-frame ground truth.
    pub fn new(spec: PhantomSpec, seed: u64) -> Result<(Self, Vec<FrameTruth>), BackendError> {
        spec.validate()?;
        let truth = spec.ground_truth();
        Ok((Self { spec, seed }, truth))
    }

    pub fn spec(&self) -> &PhantomSpec {
        &self.spec
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    fn frame(&self, index: usize) -> Result<&PhantomFrame, BackendError> {
        self.spec.frames.get(index).ok_or_else(|| BackendError::ScoreFailed {
            frame: index,
            reason: format!("phantom has {} frames", self.spec.frames.len()),
        })
    }

    fn clean_grid(&self, f: &PhantomFrame, size: (usize, usize)) -> ProbGrid {
        match &f.shape {
            Some(s) => rasterize_shape(s, size, self.spec.native_size),
            None => Grid::filled(size.0, size.1, 0.0),
        }
    }

    /// Noisy probability mask at mask resolution.
    pub fn mask(&self, index: usize) -> Result<ProbGrid, BackendError> {
        let f = self.frame(index)?;
        let mut g = self.clean_grid(f, self.spec.mask_size());
        if f.noise_sigma > 0.0 {
            let normal = Normal::new(0.0, f.noise_sigma).expect("validated sigma");
            let mut rng = frame_rng(self.seed, index, 0);
            for v in g.as_mut_slice() {
                *v = (*v + normal.sample(&mut rng)).clamp(0.0, 1.0);
            }
        }
        Ok(g)
    }

    /// Noiseless segmentation at native resolution.
    pub fn truth_mask(&self, index: usize) -> Result<BinaryMask, BackendError> {
        let f = self.frame(index)?;
        Ok(self.clean_grid(f, self.spec.native_size).map(|&v| v > 0.5))
    }

    /// A plausible grayscale frame: speckled background, brighter structure.
    pub fn frame_image(&self, index: usize) -> Result<ProbGrid, BackendError> {
        let f = self.frame(index)?;
        let shape = self.clean_grid(f, self.spec.native_size);
        let mut rng = frame_rng(self.seed, index, 1);
        let mut g = shape.map(|&inside| 0.1 + 0.55 * inside);
        for v in g.as_mut_slice() {
            *v += rng.random_range(0.0..0.25);
        }
        blank_regions(&mut g, &self.spec.mask_regions);
        Ok(g)
    }

    pub fn study_meta(&self) -> StudyMeta {
        StudyMeta {
            study_id: self.spec.study_id.clone(),
            pixel_spacing_mm: self.spec.pixel_spacing_mm,
            native_size: self.spec.native_size,
            frame_count: self.spec.frames.len(),
            mask_regions: self.spec.mask_regions.clone(),
        }
    }

    /// The study as it would load from disk after [`PhantomScorer::write_study`].
    pub fn frame_sequence(&self) -> Result<FrameSequence, BackendError> {
        let frames = (0..self.spec.frames.len())
            .map(|i| {
                let q = to_gray8(&self.frame_image(i)?);
                Ok(Frame {
                    index: i,
                    pixels: q.map(|&v| f64::from(v) / 255.0),
                })
            })
            .collect::<Result<Vec<_>, BackendError>>()?;
        FrameSequence::new(self.study_meta(), frames).map_err(|e| spec_err(e.to_string()))
    }

    pub fn ground_truth(&self) -> GroundTruth {
        GroundTruth {
            study_id: self.spec.study_id.clone(),
            seed: self.seed,
            pixel_spacing_mm: self.spec.pixel_spacing_mm,
            frames: self.spec.ground_truth(),
        }
    }

    /// Writes frames, `study.json`, `scores.csv`, score masks, truth masks
    /// and `ground_truth.json` into `dir`, which must exist.
    pub fn write_study(&self, dir: &Path) -> Result<(), BackendError> {
        let io = |path: &Path, e: std::io::Error| BackendError::Io {
            path: path.display().to_string(),
            source: e,
        };
        let png = |path: &Path, g: &Grid<u8>| write_gray8(path, g).map_err(|e| io(path, std::io::Error::other(e)));
        write_meta(dir, &self.study_meta()).map_err(|e| io(dir, e))?;
        let mut scores = String::from("frame_index,p_head,p_abdomen,p_femur,p_background\n");
        for (i, f) in self.spec.frames.iter().enumerate() {
            let [a, b, c, d] = f.probs;
            scores.push_str(&format!("{i},{a},{b},{c},{d}\n"));
            png(&dir.join(frame_file_name(i)), &to_gray8(&self.frame_image(i)?))?;
            png(&dir.join(mask_file_name(MASK_PREFIX, i)), &to_gray8(&self.mask(i)?))?;
            let truth = self.truth_mask(i)?.map(|&t| if t { 255u8 } else { 0 });
            png(&dir.join(mask_file_name(TRUTH_PREFIX, i)), &truth)?;
        }
        let scores_path = dir.join(SCORES_FILE);
        fs::write(&scores_path, scores).map_err(|e| io(&scores_path, e))?;
        let gt_path = dir.join(GROUND_TRUTH_FILE);
        let text = serde_json::to_string_pretty(&self.ground_truth()).expect("ground truth serializes");
        fs::write(&gt_path, text + "\n").map_err(|e| io(&gt_path, e))?;
        Ok(())
    }
}

impl FrameScorer for PhantomScorer {
    fn descriptor(&self) -> ScorerDescriptor {
        ScorerDescriptor {
            name: format!("phantom:{}", self.spec.study_id),
            classes: BodyPart::ALL,
            mask_size: self.spec.mask_size(),
            concurrent: true,
        }
    }

    fn score(&self, frame_index: usize, _frame: &ProbGrid) -> Result<ScoredFrame, BackendError> {
        Ok(ScoredFrame {
            class_probs: self.frame(frame_index)?.probs,
            mask: self.mask(frame_index)?,
        })
    }

    fn frames(&self) -> Option<Vec<usize>> {
        Some((0..self.spec.frames.len()).collect())
    }
}

const BG: [f64; 4] = [0.02, 0.02, 0.01, 0.95];

fn head(a: f64, b: f64, theta: f64, p: f64) -> PhantomFrame {
    PhantomFrame {
        part: BodyPart::Head,
        shape: Some(Shape::Ellipse {
            cx: 487.0,
            cy: 380.0,
            a,
            b,
            theta,
        }),
        probs: [p, (1.0 - p) / 2.0, (1.0 - p) / 4.0, (1.0 - p) / 4.0],
        noise_sigma: 0.0,
    }
}

fn abdomen(a: f64, b: f64, theta: f64, p: f64) -> PhantomFrame {
    PhantomFrame {
        part: BodyPart::Abdomen,
        shape: Some(Shape::Ellipse {
            cx: 470.0,
            cy: 390.0,
            a,
            b,
            theta,
        }),
        probs: [(1.0 - p) / 2.0, p, (1.0 - p) / 4.0, (1.0 - p) / 4.0],
        noise_sigma: 0.0,
    }
}

fn femur(length: f64, width: f64, theta: f64, p: f64) -> PhantomFrame {
    PhantomFrame {
        part: BodyPart::Femur,
        shape: Some(Shape::Bar {
            cx: 480.0,
            cy: 400.0,
            length,
            width,
            theta,
        }),
        probs: [(1.0 - p) / 4.0, (1.0 - p) / 4.0, p, (1.0 - p) / 2.0],
        noise_sigma: 0.0,
    }
}

fn background() -> PhantomFrame {
    PhantomFrame {
        part: BodyPart::Background,
        shape: None,
        probs: BG,
        noise_sigma: 0.0,
    }
}

/// A 30-frame noiseless study at 975x742 px, 0.3 mm/px, with one ideal
/// frame per part (head 7, abdomen 13, femur 19) among weaker candidates,
/// sub-gate decoys and background.
pub fn default_phantom_spec() -> PhantomSpec {
    let mut frames: Vec<PhantomFrame> = (0..30).map(|_| background()).collect();
    frames[4] = head(120.0, 100.0, 0.3, 0.85);
    frames[5] = head(130.0, 106.0, 0.2, 0.93);
    frames[6] = head(136.0, 111.0, 0.3, 0.95);
    frames[7] = head(140.0, 115.0, 0.35, 0.97);
    frames[8] = head(134.0, 110.0, 0.4, 0.94);
    // Exactly at the gate: never a candidate despite the largest head.
    frames[9] = head(150.0, 125.0, 0.35, 0.90);
    frames[12] = abdomen(125.0, 112.0, 2.9, 0.92);
    frames[13] = abdomen(135.0, 120.0, 2.8, 0.96);
    frames[14] = abdomen(128.0, 115.0, 2.7, 0.93);
    frames[15] = abdomen(140.0, 128.0, 2.8, 0.60);
    frames[18] = femur(150.0, 14.0, 0.5, 0.92);
    frames[19] = femur(170.0, 16.0, 0.4, 0.95);
    frames[20] = femur(160.0, 15.0, 0.45, 0.91);
    frames[21] = femur(175.0, 16.0, 0.4, 0.70);
    PhantomSpec {
        study_id: "phantom-default".into(),
        native_size: (742, 975),
        pixel_spacing_mm: PixelSpacing::isotropic(0.3),
        mask_size: None,
        mask_regions: vec![Rect {
            x: 0,
            y: 0,
            w: 975,
            h: 24,
        }],
        frames,
    }
}
