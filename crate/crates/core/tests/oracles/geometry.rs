//! Quadrature and brute-force references for conic and rectangle geometry.

use std::f64::consts::{FRAC_PI_2, PI};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use sonobiometry::geometry::{EllipseParams, Point};

pub fn angle_gap(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(PI);
    d.min(PI - d)
}

pub fn random_ellipse(rng: &mut ChaCha8Rng) -> EllipseParams {
    let a = rng.random_range(2.0..400.0);
    let ratio = if rng.random_bool(0.05) {
        1.0
    } else {
        rng.random_range(0.2..=1.0)
    };
    EllipseParams {
        cx: rng.random_range(-800.0..800.0),
        cy: rng.random_range(-800.0..800.0),
        a,
        b: a * ratio,
        theta: rng.random_range(0.0..PI),
    }
}

/// Adaptive Simpson on `f` over `[a, b]`.
pub fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn step(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
            return left + right + (left + right - whole) / 15.0;
        }
        step(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + step(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    step(f, a, b, fa, fm, fb, (b - a) / 6.0 * (fa + 4.0 * fm + fb), tol, 50)
}

pub fn perimeter_by_quadrature(a: f64, b: f64) -> f64 {
    let e2 = 1.0 - (b / a).powi(2);
    4.0 * a * simpson(&|t: f64| (1.0 - e2 * t.sin().powi(2)).sqrt(), 0.0, FRAC_PI_2, 1e-13)
}

/// Every pair of input points proposes a side direction; the optimum has a
/// side along a hull edge, whose endpoints are input points.
pub fn brute_force_rect_area(pts: &[Point]) -> f64 {
    let mut best = f64::INFINITY;
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            let (dx, dy) = (pts[j].0 - pts[i].0, pts[j].1 - pts[i].1);
            let len = dx.hypot(dy);
            if len == 0.0 {
                continue;
            }
            let (c, s) = (dx / len, dy / len);
            let (mut u0, mut u1, mut v0, mut v1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
            for p in pts {
                let u = p.0 * c + p.1 * s;
                let v = -p.0 * s + p.1 * c;
                u0 = u0.min(u);
                u1 = u1.max(u);
                v0 = v0.min(v);
                v1 = v1.max(v);
            }
            best = best.min((u1 - u0) * (v1 - v0));
        }
    }
    best
}
