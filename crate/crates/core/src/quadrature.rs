//! Quadrature rules: Gauss-Legendre on intervals, a degree-5 rule on
//! triangles, and graded rules for integrands with a power singularity at the
//! corner.

use std::sync::OnceLock;

use crate::geometry::{dist, Point};
use crate::mesh::Mesh;

/// Gauss-Legendre nodes and weights on `[0, 1]`.
pub fn gauss_legendre(n: usize) -> &'static [(f64, f64)] {
    const MAX: usize = 32;
    static CACHE: OnceLock<Vec<Vec<(f64, f64)>>> = OnceLock::new();
    assert!(
        (1..=MAX).contains(&n),
        "Gauss-Legendre order {n} not supported"
    );
    &CACHE.get_or_init(|| (0..=MAX).map(compute_gauss_legendre).collect())[n]
}

fn compute_gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    if n == 0 {
        return Vec::new();
    }
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        // Newton iteration on P_n starting from the Chebyshev-like guess
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 1 { x } else { p1 };
            let pm1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * p - pm1) / (x * x - 1.0);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        out.push((0.5 * (1.0 - x), 0.5 * w));
    }
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    out
}

/// Radon's 7-point rule on the reference triangle, exact for degree 5.
/// Barycentric coordinates and weights summing to one.
pub fn triangle_rule() -> &'static [([f64; 3], f64)] {
    static RULE: OnceLock<Vec<([f64; 3], f64)>> = OnceLock::new();
    RULE.get_or_init(|| {
        let r15 = 15f64.sqrt();
        let mut v = vec![([1.0 / 3.0; 3], 9.0 / 40.0)];
        for (a, b, w) in [
            (
                (6.0 - r15) / 21.0,
                (9.0 + 2.0 * r15) / 21.0,
                (155.0 - r15) / 1200.0,
            ),
            (
                (6.0 + r15) / 21.0,
                (9.0 - 2.0 * r15) / 21.0,
                (155.0 + r15) / 1200.0,
            ),
        ] {
            v.push(([b, a, a], w));
            v.push(([a, b, a], w));
            v.push(([a, a, b], w));
        }
        v
    })
}

/// A quadrature point inside a mesh triangle.
#[derive(Debug, Clone, Copy)]
pub struct QuadPoint {
    pub x: Point,
    pub weight: f64,
    /// Barycentric coordinates with respect to the triangle's stored vertex order.
    pub bary: [f64; 3],
}

/// Settings for volume integrals that may contain powers of `r` at the corner.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VolumeQuadrature {
    /// Number of geometric layers (ratio 1/2) on triangles touching the corner.
    pub depth: usize,
    /// Gauss-Legendre order per direction on corner triangles.
    pub order: usize,
}

impl Default for VolumeQuadrature {
    fn default() -> Self {
        VolumeQuadrature {
            depth: 48,
            order: 10,
        }
    }
}

impl VolumeQuadrature {
    pub fn with_depth(depth: usize) -> Self {
        VolumeQuadrature {
            depth,
            ..Default::default()
        }
    }

    /// Appends the quadrature points of triangle `t` to `out`.
    ///
    /// Corner triangles use the collapsed-square map with the collapsed edge at
    /// the corner, which absorbs one power of `r`; in the radial direction the
    /// layers `[2^-(k+1), 2^-k]` get Gauss-Legendre and the innermost piece
    /// `[0, 2^-depth]` is integrated after the substitution `u = eps s^3`.
    /// Triangles close to (but not touching) the corner are subdivided.
    pub fn points(&self, mesh: &Mesh, t: usize, out: &mut Vec<QuadPoint>) {
        let tri = mesh.triangles()[t];
        let p = mesh.corners_of(t);
        let area = mesh.area_of(t);
        if let Some(c) = tri.iter().position(|&v| v == mesh.corner()) {
            self.corner_points(p, area, c, out);
            return;
        }
        let ratio = mesh.corner_distance(t) / mesh.diameter(t);
        let levels = if ratio < 1.0 {
            3
        } else if ratio < 3.0 {
            2
        } else if ratio < 8.0 {
            1
        } else {
            0
        };
        subdivided_points(
            p,
            area,
            [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
            levels,
            out,
        );
    }

    fn corner_points(&self, p: [Point; 3], area: f64, c: usize, out: &mut Vec<QuadPoint>) {
        let (ia, ib) = ((c + 1) % 3, (c + 2) % 3);
        let (o, a, b) = (p[c], p[ia], p[ib]);
        let gl = gauss_legendre(self.order);
        let mut push = |u: f64, wu: f64| {
            for &(v, wv) in gl {
                let mut bary = [0.0; 3];
                bary[c] = 1.0 - u;
                bary[ia] = u * (1.0 - v);
                bary[ib] = u * v;
                out.push(QuadPoint {
                    x: [
                        o[0] + u * (a[0] - o[0]) + u * v * (b[0] - a[0]),
                        o[1] + u * (a[1] - o[1]) + u * v * (b[1] - a[1]),
                    ],
                    weight: 2.0 * area * u * wu * wv,
                    bary,
                });
            }
        };
        let mut hi = 1.0;
        for _ in 0..self.depth {
            let lo = 0.5 * hi;
            for &(s, w) in gl {
                push(lo + (hi - lo) * s, (hi - lo) * w);
            }
            hi = lo;
        }
        let eps = hi;
        for &(s, w) in gl {
            push(eps * s * s * s, 3.0 * eps * s * s * w);
        }
    }
}

fn subdivided_points(
    p: [Point; 3],
    area: f64,
    sub: [[f64; 3]; 3],
    levels: usize,
    out: &mut Vec<QuadPoint>,
) {
    if levels == 0 {
        let sub_area = area * sub_area_fraction(&sub);
        for &(l, w) in triangle_rule() {
            let mut bary = [0.0; 3];
            for (i, li) in l.iter().enumerate() {
                for k in 0..3 {
                    bary[k] += li * sub[i][k];
                }
            }
            let x = [
                bary[0] * p[0][0] + bary[1] * p[1][0] + bary[2] * p[2][0],
                bary[0] * p[0][1] + bary[1] * p[1][1] + bary[2] * p[2][1],
            ];
            out.push(QuadPoint {
                x,
                weight: w * sub_area,
                bary,
            });
        }
        return;
    }
    let mid = |i: usize, j: usize| -> [f64; 3] {
        let mut m = [0.0; 3];
        for k in 0..3 {
            m[k] = 0.5 * (sub[i][k] + sub[j][k]);
        }
        m
    };
    let (m01, m12, m20) = (mid(0, 1), mid(1, 2), mid(2, 0));
    for s in [
        [sub[0], m01, m20],
        [m01, sub[1], m12],
        [m20, m12, sub[2]],
        [m12, m20, m01],
    ] {
        subdivided_points(p, area, s, levels - 1, out);
    }
}

fn sub_area_fraction(sub: &[[f64; 3]; 3]) -> f64 {
    // determinant of the barycentric coordinates of the sub-triangle corners
    let d = sub[0][0] * (sub[1][1] * sub[2][2] - sub[1][2] * sub[2][1])
        - sub[0][1] * (sub[1][0] * sub[2][2] - sub[1][2] * sub[2][0])
        + sub[0][2] * (sub[1][0] * sub[2][1] - sub[1][1] * sub[2][0]);
    d.abs()
}

/// Settings for line integrals along boundary edges.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineQuadrature {
    pub order: usize,
    /// Geometric splitting levels toward an endpoint at the corner.
    pub levels: usize,
    pub ratio: f64,
}

impl Default for LineQuadrature {
    fn default() -> Self {
        LineQuadrature {
            order: 12,
            levels: 40,
            ratio: 0.25,
        }
    }
}

impl LineQuadrature {
    /// Nodes and weights on `[0, 1]`; with `singular_start` the rule is
    /// graded toward `t = 0`, where the integrand may blow up like a power of
    /// `t`. The innermost piece `[0, eps]` uses the substitution `t = eps s^3`.
    pub fn nodes(&self, singular_start: bool) -> Vec<(f64, f64)> {
        let gl = gauss_legendre(self.order);
        if !singular_start {
            return gl.to_vec();
        }
        let mut out = Vec::with_capacity((self.levels + 1) * gl.len());
        let mut hi = 1.0;
        for _ in 0..self.levels {
            let lo = self.ratio * hi;
            out.extend(gl.iter().map(|&(s, w)| (lo + (hi - lo) * s, (hi - lo) * w)));
            hi = lo;
        }
        let eps = hi;
        out.extend(
            gl.iter()
                .map(|&(s, w)| (eps * s * s * s, 3.0 * eps * s * s * w)),
        );
        out
    }

    pub fn integrate(&self, singular_start: bool, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.nodes(singular_start)
            .into_iter()
            .map(|(t, w)| w * f(t))
            .sum()
    }

    /// Integrates `f(x) * g(t)` along the segment `a -> b` (`t` the local
    /// coordinate), returning the integral with respect to arc length.
    pub fn segment(
        &self,
        a: Point,
        b: Point,
        singular_at_a: bool,
        mut f: impl FnMut(Point, f64) -> f64,
    ) -> f64 {
        let len = dist(a, b);
        len * self.integrate(singular_at_a, |t| {
            f([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])], t)
        })
    }
}
