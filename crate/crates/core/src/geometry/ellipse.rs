//! Direct least-squares ellipse fitting and ellipse utilities.
//!
//! The fit minimises the algebraic distance of the conic
//! `A x² + B xy + C y² + D x + E y + F = 0` under the ellipse-specific
//! constraint `4AC - B² = 1`, using the partitioned scatter-matrix form of the
//! problem: the linear part `(D, E, F)` is eliminated in closed form and the
//! quadratic part is the eigenvector of a 3x3 system whose constraint value is
//! positive. Points are centred and scaled before the fit, and the geometric
//! parameters are mapped back afterwards, which keeps the scatter matrices well
//! conditioned for nearly circular data and makes the fit translation- and
//! scale-equivariant.

use std::f64::consts::PI;

use nalgebra::{Matrix2, Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use super::contour::Point;
use super::GeometryError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EllipseParams {
    pub cx: f64,
    pub cy: f64,
    /// Semi-major axis.
    pub a: f64,
    /// Semi-minor axis, `0 < b <= a`.
    pub b: f64,
    /// Direction of the major axis from +x, radians in `[0, π)`.
    pub theta: f64,
}

/// Wraps an angle into `[0, π)`.
pub fn normalize_half_turn(theta: f64) -> f64 {
    let t = theta.rem_euclid(PI);
    // rem_euclid can return exactly π after rounding.
    if t >= PI {
        0.0
    } else {
        t
    }
}

impl EllipseParams {
    /// Builds a canonical ellipse: swaps axes so `a >= b` and wraps `theta`.
    pub fn new(cx: f64, cy: f64, a: f64, b: f64, theta: f64) -> Self {
        let (a, b, theta) = if b > a { (b, a, theta + PI / 2.0) } else { (a, b, theta) };
        Self {
            cx,
            cy,
            a,
            b,
            theta: normalize_half_turn(theta),
        }
    }

    pub fn is_valid(&self) -> bool {
        [self.cx, self.cy, self.a, self.b, self.theta]
            .iter()
            .all(|v| v.is_finite())
            && self.b > 0.0
            && self.a >= self.b
    }

    /// Boundary point at parameter `t`.
    pub fn point_at(&self, t: f64) -> Point {
        let (s, c) = self.theta.sin_cos();
        let (px, py) = (self.a * t.cos(), self.b * t.sin());
        (self.cx + c * px - s * py, self.cy + s * px + c * py)
    }

    /// `n` boundary points at equally spaced parameters starting at `t0`.
    pub fn sample(&self, n: usize, t0: f64) -> Vec<Point> {
        (0..n)
            .map(|i| self.point_at(t0 + 2.0 * PI * i as f64 / n as f64))
            .collect()
    }

    /// True when `(x, y)` lies inside or on the boundary.
    pub fn contains(&self, x: f64, y: f64) -> bool {
        let (s, c) = self.theta.sin_cos();
        let (dx, dy) = (x - self.cx, y - self.cy);
        let u = c * dx + s * dy;
        let v = -s * dx + c * dy;
        (u / self.a).powi(2) + (v / self.b).powi(2) <= 1.0
    }

    pub fn area(&self) -> f64 {
        PI * self.a * self.b
    }

    /// Ramanujan's second perimeter approximation.
    pub fn perimeter(&self) -> f64 {
        ellipse_perimeter(self)
    }

    /// Image of the ellipse under `(x, y) -> (sx * x, sy * y)`.
    pub fn scaled(&self, sx: f64, sy: f64) -> EllipseParams {
        let (s, c) = self.theta.sin_cos();
        // Columns are the images of the semi-axis vectors.
        let m = Matrix2::new(sx * c * self.a, -sx * s * self.b, sy * s * self.a, sy * c * self.b);
        let svd = m.svd(true, false);
        let u = svd.u.expect("requested");
        let (i_max, i_min) = if svd.singular_values[0] >= svd.singular_values[1] {
            (0, 1)
        } else {
            (1, 0)
        };
        EllipseParams::new(
            sx * self.cx,
            sy * self.cy,
            svd.singular_values[i_max],
            svd.singular_values[i_min],
            u[(1, i_max)].atan2(u[(0, i_max)]),
        )
    }
}

/// Ramanujan II: `π(a+b)(1 + 3h / (10 + sqrt(4 - 3h)))`, `h = ((a-b)/(a+b))²`.
pub fn ellipse_perimeter(e: &EllipseParams) -> f64 {
    let (a, b) = (e.a, e.b);
    let h = ((a - b) / (a + b)).powi(2);
    PI * (a + b) * (1.0 + 3.0 * h / (10.0 + (4.0 - 3.0 * h).sqrt()))
}

/// Conic coefficients `[A, B, C, D, E, F]`.
pub type Conic = [f64; 6];

/// Geometric parameters of an ellipse conic, or `None` for any other conic.
pub fn conic_to_ellipse(conic: &Conic) -> Option<EllipseParams> {
    let [mut a, mut b, mut c, mut d, mut e, mut f] = *conic;
    if a + c < 0.0 {
        for v in [&mut a, &mut b, &mut c, &mut d, &mut e, &mut f] {
            *v = -*v;
        }
    }
    let den = b * b - 4.0 * a * c;
    if !(den < 0.0) {
        return None;
    }
    let x0 = (2.0 * c * d - b * e) / den;
    let y0 = (2.0 * a * e - b * d) / den;
    let f0 = f + (d * x0 + e * y0) / 2.0;
    let mean = (a + c) / 2.0;
    let r = (((a - c) / 2.0).powi(2) + (b / 2.0).powi(2)).sqrt();
    let (lam_small, lam_large) = (mean - r, mean + r);
    if !(lam_small > 0.0) || !(f0 < 0.0) {
        return None;
    }
    let semi_major = (-f0 / lam_small).sqrt();
    let semi_minor = (-f0 / lam_large).sqrt();
    // 0.5 * atan2(B, A - C) points along the larger eigenvalue (minor axis).
    let theta = if r <= 1e-14 * mean.abs() {
        0.0
    } else {
        0.5 * b.atan2(a - c) + PI / 2.0
    };
    let out = EllipseParams::new(x0, y0, semi_major, semi_minor, theta);
    out.is_valid().then_some(out)
}

/// Direct least-squares ellipse fit.
pub fn fit_ellipse_lsq(points: &[Point]) -> Result<EllipseParams, GeometryError> {
    if points.len() < 6 {
        return Err(GeometryError::DegenerateFit(format!(
            "ellipse fit needs at least 6 points, got {}",
            points.len()
        )));
    }
    if points.iter().any(|p| !p.0.is_finite() || !p.1.is_finite()) {
        return Err(GeometryError::DegenerateFit("non-finite point".into()));
    }
    let n = points.len() as f64;
    let (mx, my) = points.iter().fold((0.0, 0.0), |(sx, sy), p| (sx + p.0, sy + p.1));
    let (mx, my) = (mx / n, my / n);
    let ms = points
        .iter()
        .map(|p| (p.0 - mx).powi(2) + (p.1 - my).powi(2))
        .sum::<f64>()
        / n;
    if !(ms > 0.0) {
        return Err(GeometryError::DegenerateFit("all points coincide".into()));
    }
    let scale = (ms / 2.0).sqrt();

    let mut s1 = Matrix3::<f64>::zeros();
    let mut s2 = Matrix3::<f64>::zeros();
    let mut s3 = Matrix3::<f64>::zeros();
    for p in points {
        let (x, y) = ((p.0 - mx) / scale, (p.1 - my) / scale);
        let q = Vector3::new(x * x, x * y, y * y);
        let l = Vector3::new(x, y, 1.0);
        s1 += q * q.transpose();
        s2 += q * l.transpose();
        s3 += l * l.transpose();
    }
    let s3_inv =
        invert_checked(&s3).ok_or_else(|| GeometryError::DegenerateFit("collinear or coincident points".into()))?;
    let t = -s3_inv * s2.transpose();
    let reduced = s1 + s2 * t;
    // Premultiply by the inverse of the constraint matrix [[0,0,2],[0,-1,0],[2,0,0]].
    let m = Matrix3::from_rows(&[reduced.row(2) / 2.0, -reduced.row(1), reduced.row(0) / 2.0]);

    let quad = constrained_eigenvector(&m)
        .ok_or_else(|| GeometryError::DegenerateFit("no ellipse-constrained solution".into()))?;
    let lin = t * quad;
    let conic = [quad[0], quad[1], quad[2], lin[0], lin[1], lin[2]];
    let unit = conic_to_ellipse(&conic)
        .ok_or_else(|| GeometryError::DegenerateFit("fitted conic is not an ellipse".into()))?;
    Ok(EllipseParams::new(
        mx + scale * unit.cx,
        my + scale * unit.cy,
        scale * unit.a,
        scale * unit.b,
        unit.theta,
    ))
}

/// Inverse of a symmetric positive semi-definite 3x3 matrix, refusing
/// numerically singular input.
fn invert_checked(m: &Matrix3<f64>) -> Option<Matrix3<f64>> {
    let eig = m.symmetric_eigen();
    let max = eig.eigenvalues.max();
    let min = eig.eigenvalues.min();
    if !(max > 0.0) || min <= max * 1e-12 {
        return None;
    }
    m.try_inverse()
}

/// Eigenvector of `m` (real eigenvalue) with `4 v0 v2 - v1² > 0`. When several
/// qualify numerically, the one with the smallest eigenvalue wins: that is
/// the smallest algebraic error.
fn constrained_eigenvector(m: &Matrix3<f64>) -> Option<Vector3<f64>> {
    let scale = m.norm();
    if !(scale > 0.0) || !scale.is_finite() {
        return None;
    }
    let mut best: Option<(f64, Vector3<f64>)> = None;
    for lam in m.complex_eigenvalues().iter() {
        if lam.im.abs() > 1e-9 * scale {
            continue;
        }
        let shifted = m - Matrix3::identity() * lam.re;
        let svd = shifted.svd(false, true);
        let v_t = svd.v_t?;
        let (k, _) = svd.singular_values.argmin();
        let v: Vector3<f64> = v_t.row(k).transpose();
        let cond = 4.0 * v[0] * v[2] - v[1] * v[1];
        if cond <= 0.0 {
            continue;
        }
        if best.as_ref().is_none_or(|(l, _)| lam.re < *l) {
            best = Some((lam.re, v / cond.sqrt()));
        }
    }
    best.map(|(_, v)| v)
}
