//! Contours and the geometric fits measurements are read from.

mod contour;
mod ellipse;
mod rdp;
mod rect;

use thiserror::Error;

pub use contour::{closed_length, extract_contours, label_components, signed_area, Contour, Point};
pub use ellipse::{conic_to_ellipse, ellipse_perimeter, fit_ellipse_lsq, normalize_half_turn, Conic, EllipseParams};
pub use rdp::{point_segment_distance, rdp_open, rdp_simplify};
pub use rect::{convex_hull, min_area_rect, RotRect};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("degenerate fit: {0}")]
    DegenerateFit(String),
}
