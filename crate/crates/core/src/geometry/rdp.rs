//! Ramer-Douglas-Peucker polyline simplification.
//!
//! A point is kept when its distance to the current chord is `>= eps`, so
//! `eps = 0` keeps everything and every discarded point lies strictly within
//! `eps` of the simplified polyline.

use super::contour::{Contour, Point};

/// Distance from `p` to the segment `a`-`b`.
pub fn point_segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len2 = dx * dx + dy * dy;
    if len2 == 0.0 {
        return (p.0 - a.0).hypot(p.1 - a.1);
    }
    let t = (((p.0 - a.0) * dx + (p.1 - a.1) * dy) / len2).clamp(0.0, 1.0);
    (p.0 - (a.0 + t * dx)).hypot(p.1 - (a.1 + t * dy))
}

/// Marks the points of `pts[first..=last]` that survive simplification.
/// Iterative to keep deep recursions off the stack on long contours.
fn mark(pts: &[Point], first: usize, last: usize, eps: f64, keep: &mut [bool]) {
    let mut stack = vec![(first, last)];
    while let Some((lo, hi)) = stack.pop() {
        if hi <= lo + 1 {
            continue;
        }
        let (mut best, mut best_d) = (lo, -1.0);
        for i in lo + 1..hi {
            let d = point_segment_distance(pts[i], pts[lo], pts[hi]);
            if d > best_d {
                best = i;
                best_d = d;
            }
        }
        if best_d >= eps {
            keep[best] = true;
            stack.push((best, hi));
            stack.push((lo, best));
        }
    }
}

/// Simplifies an open polyline; both endpoints are always kept.
pub fn rdp_open(points: &[Point], eps: f64) -> Vec<Point> {
    assert!(eps >= 0.0, "eps must be non-negative");
    let n = points.len();
    if n <= 2 {
        return points.to_vec();
    }
    let mut keep = vec![false; n];
    keep[0] = true;
    keep[n - 1] = true;
    mark(points, 0, n - 1, eps, &mut keep);
    points.iter().zip(&keep).filter_map(|(p, &k)| k.then_some(*p)).collect()
}

/// Simplifies a closed contour. The first point and the point farthest from
/// it are always kept; the two chains between them are simplified as open
/// polylines (the second one wrapping back to the first point).
pub fn rdp_simplify(contour: &Contour, eps: f64) -> Contour {
    assert!(eps >= 0.0, "eps must be non-negative");
    let pts = &contour.points;
    let n = pts.len();
    if n <= 3 {
        return contour.clone();
    }
    let origin = pts[0];
    let far = (1..n)
        .max_by(|&i, &j| {
            let di = (pts[i].0 - origin.0).hypot(pts[i].1 - origin.1);
            let dj = (pts[j].0 - origin.0).hypot(pts[j].1 - origin.1);
            // Ties resolve to the lowest index.
            di.total_cmp(&dj).then(j.cmp(&i))
        })
        .expect("n > 3");

    // Work on pts followed by pts[0] again so the closing chain is contiguous.
    let mut ring: Vec<Point> = pts.clone();
    ring.push(origin);
    let mut keep = vec![false; n + 1];
    keep[0] = true;
    keep[far] = true;
    mark(&ring, 0, far, eps, &mut keep);
    mark(&ring, far, n, eps, &mut keep);
    let simplified: Vec<Point> = (0..n).filter(|&i| keep[i]).map(|i| pts[i]).collect();
    Contour::new(simplified)
}
