//! Outer contours of 8-connected foreground components.
//!
//! The outer border of each component is followed through the centres of
//! its boundary pixels (pixel `(row, col)` is the point `x = col, y = row`),
//! the same polygon OpenCV's external contour retrieval produces. Because the
//! polygon runs through pixel centres it encloses roughly half a pixel less
//! than the foreground region.

use serde::{Deserialize, Serialize};

use crate::grid::{BinaryMask, Grid};

pub type Point = (f64, f64);
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Contour {
    /// Closed polyline; the closing edge from last to first is implied.
    pub points: Vec<Point>,
    /// Shoelace area in image coordinates (y down).
    pub area_px: f64,
}

impl Contour {
    pub fn new(points: Vec<Point>) -> Self {
        let area_px = signed_area(&points);
        Self { points, area_px }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Length of the closed polyline.
    pub fn perimeter(&self) -> f64 {
        closed_length(&self.points)
    }

    pub fn map_points(&self, f: impl Fn(Point) -> Point) -> Contour {
        Contour::new(self.points.iter().map(|&p| f(p)).collect())
    }
}

pub fn signed_area(points: &[Point]) -> f64 {
    let n = points.len();
    if n < 3 {
        return 0.0;
    }
    let mut twice = 0.0;
    for i in 0..n {
        let (x0, y0) = points[i];
        let (x1, y1) = points[(i + 1) % n];
        twice += x0 * y1 - x1 * y0;
    }
    twice / 2.0
}

pub fn closed_length(points: &[Point]) -> f64 {
    let n = points.len();
    if n < 2 {
        return 0.0;
    }
    (0..n)
        .map(|i| {
            let (x0, y0) = points[i];
            let (x1, y1) = points[(i + 1) % n];
            (x1 - x0).hypot(y1 - y0)
        })
        .sum()
}

/// Neighbour offsets `(drow, dcol)`, clockwise on screen starting east.
const NEIGHBOURS: [(i64, i64); 8] = [(0, 1), (1, 1), (1, 0), (1, -1), (0, -1), (-1, -1), (-1, 0), (-1, 1)];

/// Labels 8-connected foreground components in raster order of their first
/// pixel. Label 0 is background; components are numbered from 1.
pub fn label_components(mask: &BinaryMask) -> (Grid<u32>, u32) {
    let (h, w) = mask.size();
    let mut labels = Grid::filled(h, w, 0u32);
    let mut next = 0u32;
    let mut stack = Vec::new();
    for r in 0..h {
        for c in 0..w {
            if !*mask.get(r, c) || *labels.get(r, c) != 0 {
                continue;
            }
            next += 1;
            labels.set(r, c, next);
            stack.push((r, c));
            while let Some((pr, pc)) = stack.pop() {
                for (dr, dc) in NEIGHBOURS {
                    let (nr, nc) = (pr as i64 + dr, pc as i64 + dc);
                    if nr < 0 || nc < 0 || nr as usize >= h || nc as usize >= w {
                        continue;
                    }
                    let (nr, nc) = (nr as usize, nc as usize);
                    if *mask.get(nr, nc) && *labels.get(nr, nc) == 0 {
                        labels.set(nr, nc, next);
                        stack.push((nr, nc));
                    }
                }
            }
        }
    }
    (labels, next)
}

/// Follows the outer border of the component containing `start`, which must
/// be the component's first pixel in raster order (so its west neighbour is
/// background).
fn trace_outer(labels: &Grid<u32>, label: u32, start: (usize, usize)) -> Vec<Point> {
    let (h, w) = labels.size();
    let inside = |(r, c): (i64, i64)| -> bool {
        r >= 0 && c >= 0 && (r as usize) < h && (c as usize) < w && *labels.get(r as usize, c as usize) == label
    };
    let step = |p: (i64, i64), d: usize| (p.0 + NEIGHBOURS[d].0, p.1 + NEIGHBOURS[d].1);
    let dir_to = |from: (i64, i64), to: (i64, i64)| {
        NEIGHBOURS
            .iter()
            .position(|&(dr, dc)| (from.0 + dr, from.1 + dc) == to)
            .expect("adjacent pixels")
    };
    let p0 = (start.0 as i64, start.1 as i64);
    let to_point = |p: (i64, i64)| (p.1 as f64, p.0 as f64);

    // Clockwise from the west neighbour for the first foreground pixel.
    let Some(d1) = (0..8).map(|k| (4 + k) % 8).find(|&d| inside(step(p0, d))) else {
        return vec![to_point(p0)];
    };
    let p1 = step(p0, d1);
    let (mut prev, mut cur) = (p1, p0);
    let mut points = Vec::new();
    loop {
        // Counter-clockwise around `cur`, starting just after `prev`.
        let back = dir_to(cur, prev);
        let next = (1..=8)
            .map(|k| step(cur, (back + 8 - k) % 8))
            .find(|&p| inside(p))
            .expect("component has at least two pixels");
        points.push(to_point(cur));
        if next == p0 && cur == p1 {
            break;
        }
        prev = cur;
        cur = next;
    }
    points
}

/// One outer contour per 8-connected component, largest enclosed area first.
/// Equal areas keep raster order of the components' first pixels.
pub fn extract_contours(mask: &BinaryMask) -> Vec<Contour> {
    let (labels, count) = label_components(mask);
    if count == 0 {
        return Vec::new();
    }
    let mut starts = vec![None; count as usize];
    let (h, w) = mask.size();
    for r in 0..h {
        for c in 0..w {
            let l = *labels.get(r, c);
            if l != 0 && starts[(l - 1) as usize].is_none() {
                starts[(l - 1) as usize] = Some((r, c));
            }
        }
    }
    let mut contours: Vec<Contour> = starts
        .into_iter()
        .enumerate()
        .map(|(i, s)| Contour::new(trace_outer(&labels, i as u32 + 1, s.expect("every label has a pixel"))))
        .collect();
    contours.sort_by(|a, b| b.area_px.abs().total_cmp(&a.area_px.abs()));
    contours
}
