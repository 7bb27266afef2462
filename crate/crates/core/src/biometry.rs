//! Physical measurements from a clean mask of one body part.
//!
//! Contour points are mapped to millimetres (`x * col_spacing`,
//! `y * row_spacing`) before any fitting, so anisotropic pixels are handled by
//! fitting in physical space. Fitted ellipses and rectangles attached to a
//! [`Measurement`] are therefore in millimetres, with the origin at the centre
//! of pixel `(0, 0)`.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{
    extract_contours, fit_ellipse_lsq, min_area_rect, rdp_simplify, Contour, EllipseParams, GeometryError, RotRect,
};
use crate::grid::BinaryMask;
use crate::ingest::PixelSpacing;

/// Default RDP tolerance as a fraction of the contour perimeter.
pub const DEFAULT_RDP_EPS_REL: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BodyPart {
    Head,
    Abdomen,
    Femur,
    Background,
}

impl BodyPart {
    /// Class order of backend probability vectors.
    pub const ALL: [BodyPart; 4] = [BodyPart::Head, BodyPart::Abdomen, BodyPart::Femur, BodyPart::Background];
    /// Parts that can be measured.
    pub const MEASURED: [BodyPart; 3] = [BodyPart::Head, BodyPart::Abdomen, BodyPart::Femur];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<BodyPart> {
        Self::ALL.get(i).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            BodyPart::Head => "head",
            BodyPart::Abdomen => "abdomen",
            BodyPart::Femur => "femur",
            BodyPart::Background => "background",
        }
    }

    pub fn parse(s: &str) -> Option<BodyPart> {
        Self::ALL.into_iter().find(|p| p.name().eq_ignore_ascii_case(s.trim()))
    }

    /// Whether frame selection uses the ellipse-similarity term for this part.
    pub fn is_elliptical(self) -> bool {
        matches!(self, BodyPart::Head | BodyPart::Abdomen)
    }
}

impl fmt::Display for BodyPart {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MeasureKind {
    HC,
    BPD,
    AC,
    FL,
}

impl MeasureKind {
    pub fn part(self) -> BodyPart {
        match self {
            MeasureKind::HC | MeasureKind::BPD => BodyPart::Head,
            MeasureKind::AC => BodyPart::Abdomen,
            MeasureKind::FL => BodyPart::Femur,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    pub part: BodyPart,
    pub kind: MeasureKind,
    pub value_cm: f64,
    pub frame_index: usize,
    /// Fitted ellipse in millimetres (HC, BPD, AC).
    pub ellipse: Option<EllipseParams>,
    /// Fitted rectangle in millimetres (FL).
    pub rect: Option<RotRect>,
}

impl Measurement {
    pub fn at_frame(mut self, frame_index: usize) -> Self {
        self.frame_index = frame_index;
        self
    }
}

/// The four biometrics plus the estimates derived from them.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BiometrySet {
    pub hc_cm: Option<f64>,
    pub bpd_cm: Option<f64>,
    pub ac_cm: Option<f64>,
    pub fl_cm: Option<f64>,
    pub ga_weeks: Option<f64>,
    pub efw_g: Option<f64>,
}

impl BiometrySet {
    pub fn is_complete(&self) -> bool {
        self.hc_cm.is_some() && self.bpd_cm.is_some() && self.ac_cm.is_some() && self.fl_cm.is_some()
    }

    pub fn set(&mut self, kind: MeasureKind, value_cm: f64) {
        let slot = match kind {
            MeasureKind::HC => &mut self.hc_cm,
            MeasureKind::BPD => &mut self.bpd_cm,
            MeasureKind::AC => &mut self.ac_cm,
            MeasureKind::FL => &mut self.fl_cm,
        };
        *slot = Some(value_cm);
    }

    pub fn get(&self, kind: MeasureKind) -> Option<f64> {
        match kind {
            MeasureKind::HC => self.hc_cm,
            MeasureKind::BPD => self.bpd_cm,
            MeasureKind::AC => self.ac_cm,
            MeasureKind::FL => self.fl_cm,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BiometryError {
    #[error("unmeasurable: {0}")]
    Unmeasurable(String),
    #[error("bad input: {0}")]
    BadInput(String),
}

impl From<GeometryError> for BiometryError {
    fn from(e: GeometryError) -> Self {
        BiometryError::Unmeasurable(e.to_string())
    }
}

/// Tunables shared by the measurement routines.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasureOptions {
    /// RDP tolerance relative to the contour perimeter; 0 disables
    /// simplification.
    pub rdp_eps_rel: f64,
}

impl Default for MeasureOptions {
    fn default() -> Self {
        Self {
            rdp_eps_rel: DEFAULT_RDP_EPS_REL,
        }
    }
}

/// `px` pixels along a segment at `direction` radians from +x, in
/// centimetres. Isotropic spacing makes the direction irrelevant.
pub fn px_to_cm(px: f64, spacing: PixelSpacing, direction: f64) -> Result<f64, BiometryError> {
    if !(px >= 0.0) || !px.is_finite() {
        return Err(BiometryError::BadInput(format!("pixel length must be >= 0, got {px}")));
    }
    let (s, c) = direction.sin_cos();
    let mm_per_px = (c * spacing.col_mm).hypot(s * spacing.row_mm);
    Ok(px * mm_per_px / 10.0)
}

/// Largest outer contour of the mask, in millimetres.
fn largest_contour_mm(mask: &BinaryMask, spacing: PixelSpacing) -> Result<Contour, BiometryError> {
    let contour = extract_contours(mask)
        .into_iter()
        .next()
        .ok_or_else(|| BiometryError::Unmeasurable("empty mask".into()))?;
    Ok(contour.map_points(|p| spacing.to_mm(p)))
}

/// Largest contour -> RDP -> direct least-squares ellipse, all in mm.
/// When simplification leaves fewer than six vertices the full contour is fitted.
pub fn fit_mask_ellipse(
    mask: &BinaryMask,
    spacing: PixelSpacing,
    opts: &MeasureOptions,
) -> Result<EllipseParams, BiometryError> {
    let contour = largest_contour_mm(mask, spacing)?;
    let eps = opts.rdp_eps_rel * contour.perimeter();
    let simplified = rdp_simplify(&contour, eps);
    let points = if simplified.len() >= 6 {
        &simplified.points
    } else {
        &contour.points
    };
    Ok(fit_ellipse_lsq(points)?)
}

/// HC (ellipse perimeter) and BPD (outer-outer: the fitted minor axis 2b).
pub fn measure_head(
    mask: &BinaryMask,
    spacing: PixelSpacing,
    opts: &MeasureOptions,
) -> Result<(Measurement, Measurement), BiometryError> {
    let e = fit_mask_ellipse(mask, spacing, opts)?;
    let hc = Measurement {
        part: BodyPart::Head,
        kind: MeasureKind::HC,
        value_cm: e.perimeter() / 10.0,
        frame_index: 0,
        ellipse: Some(e),
        rect: None,
    };
    let bpd = Measurement {
        kind: MeasureKind::BPD,
        value_cm: 2.0 * e.b / 10.0,
        ..hc.clone()
    };
    Ok((hc, bpd))
}

pub fn measure_abdomen(
    mask: &BinaryMask,
    spacing: PixelSpacing,
    opts: &MeasureOptions,
) -> Result<Measurement, BiometryError> {
    let e = fit_mask_ellipse(mask, spacing, opts)?;
    Ok(Measurement {
        part: BodyPart::Abdomen,
        kind: MeasureKind::AC,
        value_cm: e.perimeter() / 10.0,
        frame_index: 0,
        ellipse: Some(e),
        rect: None,
    })
}

/// FL: long side of the minimum-area rectangle around the largest contour.
pub fn measure_femur(mask: &BinaryMask, spacing: PixelSpacing) -> Result<Measurement, BiometryError> {
    let contour = largest_contour_mm(mask, spacing)?;
    let rect = min_area_rect(&contour.points)?;
    Ok(Measurement {
        part: BodyPart::Femur,
        kind: MeasureKind::FL,
        value_cm: rect.length / 10.0,
        frame_index: 0,
        ellipse: None,
        rect: Some(rect),
    })
}

/// All measurements of `part`: HC and BPD for the head, AC, or FL. The first
/// element drives frame selection.
pub fn measure_part(
    part: BodyPart,
    mask: &BinaryMask,
    spacing: PixelSpacing,
    opts: &MeasureOptions,
) -> Result<Vec<Measurement>, BiometryError> {
    match part {
        BodyPart::Head => measure_head(mask, spacing, opts).map(|(hc, bpd)| vec![hc, bpd]),
        BodyPart::Abdomen => measure_abdomen(mask, spacing, opts).map(|m| vec![m]),
        BodyPart::Femur => measure_femur(mask, spacing).map(|m| vec![m]),
        BodyPart::Background => Err(BiometryError::BadInput("background is never measured".into())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;

    #[test]
    fn px_to_cm_examples() {
        let iso = PixelSpacing::isotropic(0.25);
        assert_eq!(px_to_cm(0.0, iso, 0.0).unwrap(), 0.0);
        assert_eq!(px_to_cm(100.0, iso, 0.0).unwrap(), 2.5);
        assert!(px_to_cm(-1.0, iso, 0.0).is_err());
    }

    #[test]
    fn px_to_cm_anisotropic_matches_endpoint_oracle() {
        // Segment from (0, 0) to (L cos 45°, L sin 45°) in pixels; map both
        // endpoints to mm and take the Euclidean distance.
        let sp = PixelSpacing::from([0.2, 0.3]);
        let l = 100.0_f64;
        let dir = std::f64::consts::FRAC_PI_4;
        let (x1, y1) = (l * dir.cos(), l * dir.sin());
        let (mx, my) = (x1 * sp.col_mm, y1 * sp.row_mm);
        let oracle_cm = mx.hypot(my) / 10.0;
        assert!((px_to_cm(l, sp, dir).unwrap() - oracle_cm).abs() < 1e-12);
    }

    #[test]
    fn empty_mask_is_unmeasurable() {
        let m = Grid::filled(20, 20, false);
        let sp = PixelSpacing::isotropic(0.1);
        assert!(matches!(
            measure_head(&m, sp, &MeasureOptions::default()),
            Err(BiometryError::Unmeasurable(_))
        ));
        assert!(matches!(measure_femur(&m, sp), Err(BiometryError::Unmeasurable(_))));
        assert!(measure_part(BodyPart::Background, &m, sp, &MeasureOptions::default()).is_err());
    }

    #[test]
    fn body_part_names() {
        for p in BodyPart::ALL {
            assert_eq!(BodyPart::parse(p.name()), Some(p));
            assert_eq!(BodyPart::from_index(p.index()), Some(p));
        }
        assert_eq!(BodyPart::parse("HEAD"), Some(BodyPart::Head));
        assert_eq!(BodyPart::parse("liver"), None);
    }
}
