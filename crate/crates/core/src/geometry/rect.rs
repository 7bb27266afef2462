//! Convex hull and minimum-area enclosing rectangle (rotating calipers).

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::contour::Point;
use super::ellipse::normalize_half_turn;
use super::GeometryError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RotRect {
    pub cx: f64,
    pub cy: f64,
    /// Longer side.
    pub length: f64,
    /// Shorter side.
    pub width: f64,
    /// Direction of the long side from +x, radians in `[0, π)`.
    pub rotation: f64,
}

impl RotRect {
    pub fn area(&self) -> f64 {
        self.length * self.width
    }
}

fn cross(o: Point, a: Point, b: Point) -> f64 {
    (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
}

/// Andrew's monotone chain. Counter-clockwise in a y-up frame, without
/// collinear points; duplicates removed.
pub fn convex_hull(points: &[Point]) -> Vec<Point> {
    let mut pts: Vec<Point> = points.to_vec();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut hull: Vec<Point> = Vec::with_capacity(2 * pts.len());
    for &p in &pts {
        while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(p);
    }
    let lower = hull.len() + 1;
    for &p in pts.iter().rev().skip(1) {
        while hull.len() >= lower && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(p);
    }
    hull.pop();
    hull
}

/// Rectangle with sides along `angle` (unit `(c, s)`) and its normal.
fn rect_from_extents(c: f64, s: f64, lo_u: f64, hi_u: f64, lo_v: f64, hi_v: f64) -> RotRect {
    let (len_u, len_v) = (hi_u - lo_u, hi_v - lo_v);
    let (mu, mv) = ((lo_u + hi_u) / 2.0, (lo_v + hi_v) / 2.0);
    let cx = mu * c - mv * s;
    let cy = mu * s + mv * c;
    let angle = s.atan2(c);
    let (length, width, rotation) = if len_u >= len_v {
        (len_u, len_v, angle)
    } else {
        (len_v, len_u, angle + PI / 2.0)
    };
    RotRect {
        cx,
        cy,
        length,
        width,
        rotation: normalize_half_turn(rotation),
    }
}

/// Keeps `cand` over `best` when it has strictly smaller area, or equal area
/// (relative 1e-12) and a smaller rotation.
fn better(cand: &RotRect, best: &RotRect) -> bool {
    let tol = 1e-12 * best.area().max(cand.area()).max(f64::MIN_POSITIVE);
    if cand.area() < best.area() - tol {
        return true;
    }
    (cand.area() - best.area()).abs() <= tol && cand.rotation < best.rotation
}

fn hull_or_degenerate(points: &[Point]) -> Result<Vec<Point>, GeometryError> {
    if points.len() < 3 {
        return Err(GeometryError::DegenerateFit(format!(
            "rectangle fit needs at least 3 points, got {}",
            points.len()
        )));
    }
    let hull = convex_hull(points);
    if hull.len() < 3 {
        return Err(GeometryError::DegenerateFit("collinear points".into()));
    }
    Ok(hull)
}

/// Smallest-area rotated rectangle enclosing `points`.
///
/// One side of the optimum is collinear with a hull edge. For each edge,
/// three calipers track the extreme vertices (min and max along the edge,
/// max along its inward normal); they advance monotonically around the hull,
/// so the sweep is linear in hull size.
pub fn min_area_rect(points: &[Point]) -> Result<RotRect, GeometryError> {
    let hull = hull_or_degenerate(points)?;
    let n = hull.len();
    let dot = |p: Point, c: f64, s: f64| p.0 * c + p.1 * s;
    let edge_dir = |i: usize| {
        let (a, b) = (hull[i], hull[(i + 1) % n]);
        let (dx, dy) = (b.0 - a.0, b.1 - a.1);
        let len = dx.hypot(dy);
        (dx / len, dy / len)
    };
    // Projections along a direction are unimodal around a convex hull, so a
    // caliper only ever moves forward.
    let advance = |mut k: usize, score: &dyn Fn(Point) -> f64| {
        for _ in 0..n {
            let next = (k + 1) % n;
            if score(hull[next]) > score(hull[k]) {
                k = next;
            } else {
                break;
            }
        }
        k
    };

    let (mut i_umax, mut i_vmax, mut i_umin) = (0usize, 0usize, 0usize);
    let mut best: Option<RotRect> = None;
    for i in 0..n {
        let (c, s) = edge_dir(i);
        // Normal pointing into the hull for a counter-clockwise hull.
        let (nc, ns) = (-s, c);
        if i == 0 {
            let arg = |f: &dyn Fn(Point) -> f64, maximize: bool| {
                (0..n)
                    .max_by(|&a, &b| {
                        let (fa, fb) = (f(hull[a]), f(hull[b]));
                        if maximize {
                            fa.total_cmp(&fb)
                        } else {
                            fb.total_cmp(&fa)
                        }
                    })
                    .expect("non-empty hull")
            };
            i_umax = arg(&|p| dot(p, c, s), true);
            i_vmax = arg(&|p| dot(p, nc, ns), true);
            i_umin = arg(&|p| dot(p, c, s), false);
        } else {
            i_umax = advance(i_umax, &|p| dot(p, c, s));
            i_vmax = advance(i_vmax, &|p| dot(p, nc, ns));
            i_umin = advance(i_umin, &|p| -dot(p, c, s));
        }
        let lo_v = dot(hull[i], nc, ns);
        let rect = rect_from_extents(
            c,
            s,
            dot(hull[i_umin], c, s),
            dot(hull[i_umax], c, s),
            lo_v,
            dot(hull[i_vmax], nc, ns),
        );
        if best.as_ref().is_none_or(|b| better(&rect, b)) {
            best = Some(rect);
        }
    }
    let best = best.expect("hull has edges");
    if !(best.width > 0.0) {
        return Err(GeometryError::DegenerateFit("zero-width rectangle".into()));
    }
    Ok(best)
}
