//! The corner singular functions `r^lambda sin(lambda theta)` (primal) and
//! `r^-lambda sin(lambda theta)` (dual), and integrals involving them.

use crate::error::{Error, Result};
use crate::fem::NodalField;
use crate::geometry::{self, check_angle, dist, polar_of, Point};
use crate::mesh::Mesh;
use crate::quadrature::{QuadPoint, VolumeQuadrature};

/// Relative change allowed when the corner splitting depth grows by two.
pub const QUADRATURE_TARGET: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingularExponent {
    pub lambda: f64,
    pub omega: f64,
}

impl SingularExponent {
    pub fn new(omega: f64) -> Result<SingularExponent> {
        check_angle(omega)?;
        Ok(SingularExponent {
            lambda: std::f64::consts::PI / omega,
            omega,
        })
    }

    /// `r^lambda sin(lambda theta)`, zero at the corner.
    pub fn eval_primal(&self, p: Point) -> f64 {
        let (r, th) = polar_of(p);
        if r == 0.0 {
            return 0.0;
        }
        r.powf(self.lambda) * (self.lambda * th).sin()
    }

    /// `r^-lambda sin(lambda theta)`; undefined at the corner.
    pub fn eval_dual(&self, p: Point) -> Result<f64> {
        let (r, th) = polar_of(p);
        if r == 0.0 {
            return Err(Error::SingularPoint);
        }
        Ok(r.powf(-self.lambda) * (self.lambda * th).sin())
    }

    /// `eval_dual` for points known to differ from the corner.
    #[inline]
    pub(crate) fn dual(&self, p: Point) -> f64 {
        let (r, th) = polar_of(p);
        r.powf(-self.lambda) * (self.lambda * th).sin()
    }

    /// Gradient of the primal function,
    /// `lambda r^(lambda-1) (sin((lambda-1) theta), cos((lambda-1) theta))`.
    pub fn grad_primal(&self, p: Point) -> Result<[f64; 2]> {
        let (r, th) = polar_of(p);
        if r == 0.0 {
            return Err(Error::SingularPoint);
        }
        let c = self.lambda * r.powf(self.lambda - 1.0);
        let a = (self.lambda - 1.0) * th;
        Ok([c * a.sin(), c * a.cos()])
    }

    /// Outward normal derivative of the primal function at `p` on a boundary
    /// edge with outward unit normal `normal`.
    pub fn normal_derivative_primal(&self, normal: [f64; 2], p: Point) -> Result<f64> {
        let g = self.grad_primal(p)?;
        Ok(g[0] * normal[0] + g[1] * normal[1])
    }

    /// Grading exponent `2 pi / omega - 1` for the boundary pairing rule.
    pub fn recommended_boundary_grading(&self) -> f64 {
        (2.0 * std::f64::consts::PI / self.omega - 1.0).min(1.0)
    }
}

/// Integrates `g(t, point)` over the mesh, where `g` receives the triangle
/// index and the quadrature point. Corner triangles are evaluated at both
/// `quad.depth` and `quad.depth + 2`; the second total is returned alongside.
pub fn integrate_checked(
    mesh: &Mesh,
    quad: &VolumeQuadrature,
    g: impl FnMut(usize, &QuadPoint) -> f64,
) -> (f64, f64) {
    integrate_with_check_depth(mesh, quad, quad.depth + 2, g)
}

/// As `integrate_checked`, with the comparison depth given explicitly.
pub fn integrate_with_check_depth(
    mesh: &Mesh,
    quad: &VolumeQuadrature,
    check_depth: usize,
    mut g: impl FnMut(usize, &QuadPoint) -> f64,
) -> (f64, f64) {
    let deeper = VolumeQuadrature {
        depth: check_depth,
        ..*quad
    };
    let mut pts = Vec::with_capacity(64);
    let (mut total, mut total_deep) = (0.0, 0.0);
    for t in 0..mesh.num_triangles() {
        pts.clear();
        quad.points(mesh, t, &mut pts);
        let v: f64 = pts.iter().map(|q| q.weight * g(t, q)).sum();
        total += v;
        if mesh.touches_corner(t) {
            pts.clear();
            deeper.points(mesh, t, &mut pts);
            total_deep += pts.iter().map(|q| q.weight * g(t, q)).sum::<f64>();
        } else {
            total_deep += v;
        }
    }
    (total, total_deep)
}

pub fn check_settled(what: &'static str, a: f64, b: f64, scale: f64) -> Result<()> {
    let change = (a - b).abs() / scale.abs().max(f64::MIN_POSITIVE);
    if change > QUADRATURE_TARGET {
        return Err(Error::Quadrature {
            what,
            change,
            target: QUADRATURE_TARGET,
        });
    }
    Ok(())
}

/// `(r^-lambda sin(lambda theta), phi_x)` for every vertex hat `phi_x`.
pub fn dual_hat_moments(
    mesh: &Mesh,
    s: &SingularExponent,
    quad: &VolumeQuadrature,
) -> Result<Vec<f64>> {
    hat_moments(mesh, quad, |p| s.dual(p), "dual singular hat moments")
}

/// `(r^lambda sin(lambda theta), phi_x)` for every vertex hat `phi_x`.
pub fn primal_hat_moments(
    mesh: &Mesh,
    s: &SingularExponent,
    quad: &VolumeQuadrature,
) -> Result<Vec<f64>> {
    hat_moments(
        mesh,
        quad,
        |p| s.eval_primal(p),
        "primal singular hat moments",
    )
}

fn hat_moments(
    mesh: &Mesh,
    quad: &VolumeQuadrature,
    f: impl Fn(Point) -> f64,
    what: &'static str,
) -> Result<Vec<f64>> {
    let deeper = VolumeQuadrature {
        depth: quad.depth + 2,
        ..*quad
    };
    let mut b = vec![0.0; mesh.num_vertices()];
    let mut b_deep_corner = [0.0f64; 2];
    let mut pts = Vec::with_capacity(64);
    for (t, tri) in mesh.triangles().iter().enumerate() {
        pts.clear();
        quad.points(mesh, t, &mut pts);
        let mut local = [0.0; 3];
        for q in &pts {
            let v = q.weight * f(q.x);
            for i in 0..3 {
                local[i] += v * q.bary[i];
            }
        }
        for i in 0..3 {
            b[tri[i] as usize] += local[i];
        }
        if mesh.touches_corner(t) {
            pts.clear();
            deeper.points(mesh, t, &mut pts);
            let deep: f64 = pts.iter().map(|q| q.weight * f(q.x)).sum();
            b_deep_corner[0] += local.iter().sum::<f64>();
            b_deep_corner[1] += deep;
        }
    }
    let scale: f64 = b.iter().map(|v| v.abs()).sum();
    check_settled(what, b_deep_corner[0], b_deep_corner[1], scale)?;
    Ok(b)
}

/// `((field, r^-lambda sin), |r^-lambda sin|^2)` over the domain.
pub fn volume_inner_products(
    mesh: &Mesh,
    field: &NodalField,
    s: &SingularExponent,
    quad: &VolumeQuadrature,
) -> Result<(f64, f64)> {
    field.check(mesh)?;
    let (pair, pair_deep) = integrate_checked(mesh, quad, |t, q| {
        field.eval_bary(mesh, t, &q.bary) * s.dual(q.x)
    });
    let (norm2, norm2_deep) = integrate_checked(mesh, quad, |_, q| {
        let v = s.dual(q.x);
        v * v
    });
    check_settled("singular norm", norm2, norm2_deep, norm2)?;
    let field_scale = field.0.iter().map(|v| v.abs()).fold(0.0, f64::max)
        * norm2.sqrt()
        * mesh.total_area().sqrt();
    if field_scale > 0.0 {
        check_settled("singular pairing", pair, pair_deep, field_scale)?;
    }
    Ok((pair, norm2))
}

/// Settings of the composite one-point rule for the boundary pairing with the
/// normal derivative of the primal singular function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryPairingRule {
    /// Radius of the graded zone around the corner.
    pub radius: f64,
    /// Grading exponent inside the zone.
    pub mu: f64,
    /// Mesh parameter: element length away from the corner.
    pub h: f64,
}

impl BoundaryPairingRule {
    /// Radius 0.1 and grading `2 pi / omega - 1`.
    pub fn recommended(s: &SingularExponent, h: f64) -> BoundaryPairingRule {
        BoundaryPairingRule {
            radius: 0.1,
            mu: s.recommended_boundary_grading(),
            h,
        }
    }

    /// Breakpoints of the partition of `[0, len]` graded toward 0: the first
    /// element has length `h^(1/mu)`, then `h_E = h r_E^(1-mu)` up to the
    /// radius and `h` beyond it.
    pub fn graded_partition(&self, len: f64) -> Vec<f64> {
        let mut pts = vec![0.0];
        let mut r = self.h.powf(1.0 / self.mu).min(self.h).min(len);
        pts.push(r);
        while r < len {
            let step = if r < self.radius {
                self.h * r.powf(1.0 - self.mu)
            } else {
                self.h
            };
            r = (r + step).min(len);
            // avoid a sliver at the end
            if len - r < 1e-3 * step {
                r = len;
            }
            pts.push(r);
        }
        pts
    }

    pub fn uniform_partition(&self, len: f64) -> Vec<f64> {
        let n = (len / self.h).ceil().max(1.0) as usize;
        (0..=n).map(|k| len * k as f64 / n as f64).collect()
    }
}

/// `(u, d/dn (r^lambda sin(lambda theta)))_Gamma` by the composite one-point
/// Gauss rule on a boundary partition graded toward the corner.
pub fn boundary_singular_pairing(
    u: &dyn Fn(Point) -> f64,
    s: &SingularExponent,
    rule: &BoundaryPairingRule,
) -> Result<f64> {
    if !(rule.mu > 0.0 && rule.mu <= 1.0) || !(rule.radius > 0.0) || !(rule.h > 0.0) {
        return Err(Error::Invalid(format!(
            "bad boundary pairing rule {rule:?}"
        )));
    }
    let poly = geometry::domain_polygon(s.omega)?;
    let n = poly.len();
    let mut total = 0.0;
    for i in 0..n {
        let (a, b) = (poly[i], poly[(i + 1) % n]);
        let normal = crate::mesh::outward_normal(a, b);
        let len = dist(a, b);
        // parametrize from the corner end when the side touches it
        let (start, end, breaks) = if i == 0 {
            (a, b, rule.graded_partition(len))
        } else if i == n - 1 {
            (b, a, rule.graded_partition(len))
        } else {
            (a, b, rule.uniform_partition(len))
        };
        let dir = [(end[0] - start[0]) / len, (end[1] - start[1]) / len];
        for w in breaks.windows(2) {
            let m = 0.5 * (w[0] + w[1]);
            let x = [start[0] + m * dir[0], start[1] + m * dir[1]];
            total += (w[1] - w[0]) * u(x) * s.normal_derivative_primal(normal, x)?;
        }
    }
    Ok(total)
}
