use crate::error::{Error, Result};

use super::bisect::Refiner;
use super::Mesh;
use crate::geometry::dist;

/// Parameters of the grading condition
///
/// ```text
/// c1 h^(1/mu)        <= h_T <= c2 h^(1/mu)         if r_T = 0
/// c1 h r_T^(1 - mu)  <= h_T <= c2 h r_T^(1 - mu)   if r_T > 0
/// ```
///
/// where `h_T` is the diameter of `T` and `r_T` its distance to the corner.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradingParams {
    pub mu: f64,
    pub h: f64,
    pub c1: f64,
    pub c2: f64,
    /// Upper limit on the number of bisection generations `refine_to_graded`
    /// may add to any triangle of its input.
    pub max_generations: usize,
}

impl GradingParams {
    pub const DEFAULT_C1: f64 = 0.25;
    pub const DEFAULT_C2: f64 = 4.0;
    pub const DEFAULT_MAX_GENERATIONS: usize = 200;

    pub fn new(mu: f64, h: f64) -> GradingParams {
        GradingParams {
            mu,
            h,
            c1: Self::DEFAULT_C1,
            c2: Self::DEFAULT_C2,
            max_generations: Self::DEFAULT_MAX_GENERATIONS,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mu > 0.0 && self.mu <= 1.0) {
            return Err(Error::InvalidGrading(format!(
                "mu = {} not in (0, 1]",
                self.mu
            )));
        }
        if !(self.h > 0.0 && self.h.is_finite()) {
            return Err(Error::InvalidGrading(format!(
                "h = {} must be positive",
                self.h
            )));
        }
        if !(self.c1 > 0.0 && self.c1 <= self.c2 && self.c2.is_finite()) {
            return Err(Error::InvalidGrading(format!(
                "need 0 < c1 <= c2, got c1 = {}, c2 = {}",
                self.c1, self.c2
            )));
        }
        Ok(())
    }

    /// Target element size `h r^(1-mu)`, or `h^(1/mu)` at the corner.
    pub fn target_size(&self, r: f64) -> f64 {
        if r == 0.0 {
            self.h.powf(1.0 / self.mu)
        } else {
            self.h * r.powf(1.0 - self.mu)
        }
    }

    /// Number of bisection generations needed to bring a triangle of
    /// diameter `diam` at the corner down to the target size, with some slack
    /// for the closure.
    pub fn generations_needed(&self, diam: f64) -> usize {
        let target = self.c2 * self.target_size(0.0);
        let halvings = (diam / target).log2().max(0.0);
        (2.0 * halvings).ceil() as usize + 16
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradingReport {
    pub passed: bool,
    /// Triangles that are too large (upper bound violated).
    pub too_large: Vec<usize>,
    /// Triangles that are too small (lower bound violated).
    pub too_small: Vec<usize>,
}

impl GradingReport {
    pub fn violators(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self
            .too_large
            .iter()
            .chain(&self.too_small)
            .copied()
            .collect();
        v.sort_unstable();
        v.dedup();
        v
    }
}

pub fn verify_grading(mesh: &Mesh, params: &GradingParams) -> GradingReport {
    let mut too_large = Vec::new();
    let mut too_small = Vec::new();
    for t in 0..mesh.num_triangles() {
        let target = params.target_size(tri_radius(mesh, t));
        let h_t = mesh.diameter(t);
        if h_t > params.c2 * target {
            too_large.push(t);
        }
        if h_t < params.c1 * target {
            too_small.push(t);
        }
    }
    GradingReport {
        passed: too_large.is_empty() && too_small.is_empty(),
        too_large,
        too_small,
    }
}

fn tri_radius(mesh: &Mesh, t: usize) -> f64 {
    radius_of(&mesh.corners_of(t), mesh.touches_corner(t))
}

/// `r_T` as used by the grading condition: zero at the corner, otherwise
/// the smallest vertex radius.
fn radius_of(corners: &[[f64; 2]; 3], at_corner: bool) -> f64 {
    if at_corner {
        0.0
    } else {
        corners
            .iter()
            .map(|p| p[0].hypot(p[1]))
            .fold(f64::INFINITY, f64::min)
    }
}

fn diameter_of(c: &[[f64; 2]; 3]) -> f64 {
    dist(c[0], c[1]).max(dist(c[1], c[2])).max(dist(c[2], c[0]))
}

/// Bisects triangles violating the upper grading bound until none is left.
///
/// Work is proportional to the size of the output: after the first scan only
/// triangles created by a bisection are checked again, since every other
/// triangle keeps its diameter and its distance to the corner. The lower
/// bound is checked at the end; with the default constants the bisection
/// closure never produces triangles below it.
pub fn refine_to_graded(mesh: &Mesh, params: &GradingParams) -> Result<Mesh> {
    params.validate()?;
    let mut r = Refiner::new(mesh);
    let oversized = |r: &Refiner, t: usize| {
        let c = r.corners_of(t);
        diameter_of(&c) > params.c2 * params.target_size(radius_of(&c, r.touches_corner(t)))
    };
    let mut work: Vec<u32> = (0..r.num_triangles() as u32)
        .rev()
        .filter(|&t| oversized(&r, t as usize))
        .collect();
    let limit = params.max_generations as u32;
    while let Some(t) = work.pop() {
        if !oversized(&r, t as usize) {
            continue;
        }
        if r.generation(t as usize) >= limit {
            let left = (0..r.num_triangles()).filter(|&t| oversized(&r, t)).count();
            return Err(Error::GradingNotReached {
                generations: params.max_generations,
                violators: left,
            });
        }
        r.bisect(t);
        let touched = r.take_touched();
        work.extend(touched.into_iter().filter(|&c| oversized(&r, c as usize)));
    }
    let m = r.finish();
    let report = verify_grading(&m, params);
    if !report.passed {
        return Err(Error::InvalidGrading(format!(
            "{} triangles fall below the lower grading bound; c1 = {} is too large",
            report.too_small.len(),
            params.c1
        )));
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::degrees;
    use std::f64::consts::PI;

    #[test]
    fn validates_parameters() {
        assert!(GradingParams::new(0.0, 0.1).validate().is_err());
        assert!(GradingParams::new(1.2, 0.1).validate().is_err());
        assert!(GradingParams::new(0.5, -0.1).validate().is_err());
        let mut p = GradingParams::new(0.5, 0.1);
        p.c1 = 5.0;
        assert!(p.validate().is_err());
        assert!(GradingParams::new(1.0, 0.1).validate().is_ok());
    }

    #[test]
    fn single_corner_triangle_in_band() {
        // triangle at the corner with diameter exactly h^(1/mu)
        let (mu, h) = (0.5_f64, 0.1_f64);
        let s = h.powf(1.0 / mu);
        let base = Mesh::initial(PI / 2.0).unwrap();
        let scaled: Vec<[f64; 2]> = base
            .vertices()
            .iter()
            .map(|p| [p[0] * s, p[1] * s])
            .collect();
        let m = Mesh::assemble(
            scaled,
            base.triangles().to_vec(),
            base.boundary_edges().to_vec(),
            base.parents().to_vec(),
            PI / 2.0,
            0,
        )
        .unwrap();
        let mut p = GradingParams::new(mu, h);
        p.c1 = 0.5;
        p.c2 = 2.0;
        // diameters are s * sqrt(2), inside [s/2, 2s]
        assert!(verify_grading(&m, &p).passed);
    }

    #[test]
    fn quasi_uniform_mesh_fails_strong_grading() {
        let m = Mesh::initial(1.5 * PI).unwrap().refine_uniform(6);
        let h = m.max_diameter();
        let mut p = GradingParams::new(0.333, h);
        p.c1 = 0.9;
        p.c2 = 1.1;
        let report = verify_grading(&m, &p);
        assert!(!report.passed);
        // a triangle at the outer corner (1, 1) is far from the singular corner
        // and has h_T = h < c1 h r^(2/3) there
        let far = (0..m.num_triangles())
            .find(|&t| {
                m.triangles()[t]
                    .iter()
                    .any(|&v| m.vertices()[v as usize] == [1.0, 1.0])
            })
            .unwrap();
        let r = m.corner_distance(far);
        assert!(m.diameter(far) < p.c1 * h * r.powf(1.0 - p.mu));
        assert!(report.violators().contains(&far));
        // corner triangles are far too large
        assert!(report.too_large.iter().any(|&t| m.touches_corner(t)));
    }

    #[test]
    fn quasi_uniform_for_mu_one() {
        let m0 = Mesh::initial(1.5 * PI).unwrap();
        let p = GradingParams::new(1.0, 0.05);
        let m = refine_to_graded(&m0, &p).unwrap();
        m.check().unwrap();
        for t in 0..m.num_triangles() {
            let d = m.diameter(t);
            assert!(d >= p.c1 * p.h && d <= p.c2 * p.h);
        }
    }

    #[test]
    fn graded_outputs_verify() {
        for omega in [1.5 * PI, degrees(355.0)] {
            let m0 = Mesh::initial(omega).unwrap();
            for mu in [1.0, 0.666, 0.5, 0.333] {
                for h in [0.2, 0.1, 0.05] {
                    let p = GradingParams::new(mu, h);
                    let m = refine_to_graded(&m0, &p).unwrap();
                    m.check().unwrap();
                    assert!(verify_grading(&m, &p).passed, "omega {omega} mu {mu} h {h}");
                    assert!((m.total_area() - m0.total_area()).abs() < 1e-12 * m0.total_area());
                }
            }
        }
    }

    #[test]
    fn strong_grading_reaches_tiny_corner_elements() {
        let m0 = Mesh::initial(1.5 * PI).unwrap();
        let p = GradingParams::new(0.333, 0.1);
        let m = refine_to_graded(&m0, &p).unwrap();
        let corner_size = (0..m.num_triangles())
            .filter(|&t| m.touches_corner(t))
            .map(|t| m.diameter(t))
            .fold(0.0, f64::max);
        // h^(1/mu) ~ h^3
        assert!(corner_size <= 4.0 * 0.1f64.powf(1.0 / 0.333));
        assert!(corner_size >= 0.25 * 0.1f64.powf(1.0 / 0.333));
    }

    #[test]
    fn generation_limit_is_reported() {
        let m0 = Mesh::initial(1.5 * PI).unwrap();
        let mut p = GradingParams::new(0.1, 0.1);
        p.max_generations = 3;
        assert!(matches!(
            refine_to_graded(&m0, &p),
            Err(Error::GradingNotReached { generations: 3, .. })
        ));
    }
}
