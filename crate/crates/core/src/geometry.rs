//! Polar coordinates at the singular corner and the boundary polygon of the
//! cut square domain.

use std::f64::consts::{FRAC_PI_4, PI, TAU};

use crate::error::{Error, Result};

pub type Point = [f64; 2];

/// Polar coordinates `(r, theta)` of `p` with respect to the origin,
/// `theta` in `[0, 2pi)`. At the origin `theta` is reported as 0.
pub fn polar_of(p: Point) -> (f64, f64) {
    let r = p[0].hypot(p[1]);
    if r == 0.0 {
        return (0.0, 0.0);
    }
    let mut theta = p[1].atan2(p[0]);
    if theta < 0.0 {
        theta += TAU;
    }
    if theta >= TAU {
        theta -= TAU;
    }
    (r, theta)
}

pub fn check_angle(omega: f64) -> Result<()> {
    if omega.is_finite() && omega > 0.0 && omega < TAU {
        Ok(())
    } else {
        Err(Error::InvalidAngle(omega))
    }
}

/// Point where the ray at angle `theta` leaves the square `(-1, 1)^2`.
/// Multiples of 45 degrees return exact square corners and midpoints.
pub fn square_point(theta: f64) -> Point {
    let k = theta / FRAC_PI_4;
    let kr = k.round();
    if (k - kr).abs() < 1e-12 {
        const EXACT: [Point; 8] = [
            [1.0, 0.0],
            [1.0, 1.0],
            [0.0, 1.0],
            [-1.0, 1.0],
            [-1.0, 0.0],
            [-1.0, -1.0],
            [0.0, -1.0],
            [1.0, -1.0],
        ];
        return EXACT[(kr as i64).rem_euclid(8) as usize];
    }
    let (s, c) = theta.sin_cos();
    let m = c.abs().max(s.abs());
    [c / m, s / m]
}

/// Corners of the domain boundary in counterclockwise order, starting at the
/// singular corner (the origin). Side `j` runs from corner `j` to corner
/// `j + 1` (cyclically); side 0 lies on the positive x-axis and the last side
/// on the ray `theta = omega`.
pub fn domain_polygon(omega: f64) -> Result<Vec<Point>> {
    check_angle(omega)?;
    let mut pts = vec![[0.0, 0.0], [1.0, 0.0]];
    let mut k = 1;
    while (k as f64) * FRAC_PI_4 < omega - 1e-12 {
        pts.push(square_point(k as f64 * FRAC_PI_4));
        k += 1;
    }
    let last = square_point(omega);
    if pts.last() != Some(&last) {
        pts.push(last);
    }
    Ok(pts)
}

/// Shoelace area of a simple polygon given counterclockwise.
pub fn polygon_area(pts: &[Point]) -> f64 {
    let n = pts.len();
    (0..n)
        .map(|i| {
            let a = pts[i];
            let b = pts[(i + 1) % n];
            a[0] * b[1] - a[1] * b[0]
        })
        .sum::<f64>()
        * 0.5
}

pub fn polygon_perimeter(pts: &[Point]) -> f64 {
    let n = pts.len();
    (0..n).map(|i| dist(pts[i], pts[(i + 1) % n])).sum()
}

#[inline]
pub fn dist(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

#[inline]
pub fn signed_area(a: Point, b: Point, c: Point) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

/// The triangle translated to `p[0]` and scaled to unit diameter, together
/// with the diameter. Shape quantities computed from it stay finite for
/// triangles whose area is below the floating point range.
pub fn normalized_triangle(p: &[Point; 3]) -> ([Point; 3], f64) {
    let d = dist(p[0], p[1]).max(dist(p[1], p[2])).max(dist(p[2], p[0]));
    let q = p.map(|x| [(x[0] - p[0][0]) / d, (x[1] - p[0][1]) / d]);
    (q, d)
}

/// Signed area of the triangle scaled to unit diameter.
pub fn shape_area(p: &[Point; 3]) -> f64 {
    let (q, _) = normalized_triangle(p);
    signed_area(q[0], q[1], q[2])
}

/// Area of the domain for interior angle `omega`.
pub fn domain_area(omega: f64) -> Result<f64> {
    Ok(polygon_area(&domain_polygon(omega)?))
}

pub fn degrees(deg: f64) -> f64 {
    deg * PI / 180.0
}
