//! Dual singular complement method: post-processing of the finite element
//! solution on a quasi-uniform mesh with the discrete dual singular function
//! `p_s^h = p~_h + r^-lambda sin(lambda theta)`.

use std::io::{BufRead, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::fem::{
    assemble_load, assemble_mass, lifting, DirichletSolver, LinearSolver, NodalField,
};
use crate::geometry::Point;
use crate::mesh::Mesh;
use crate::quadrature::{LineQuadrature, VolumeQuadrature};
use crate::singular::{
    boundary_singular_pairing, dual_hat_moments, integrate_checked, BoundaryPairingRule,
    SingularExponent,
};
use crate::sparse::{dot, SparseMatrix};
use crate::trace::{Regularization, TraceField};

/// Solver and quadrature settings shared by the pipeline stages.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DscmSettings {
    pub tol: f64,
    pub volume: VolumeQuadrature,
    pub line: LineQuadrature,
    /// Boundary pairing rule; `None` uses radius 0.1, grading
    /// `2 pi / omega - 1` and the mesh diameter as `h`.
    pub pairing: Option<BoundaryPairingRule>,
    pub regularization: Regularization,
    pub solver: LinearSolver,
}

impl Default for DscmSettings {
    fn default() -> Self {
        DscmSettings {
            tol: 1e-10,
            volume: VolumeQuadrature::default(),
            line: LineQuadrature::default(),
            pairing: None,
            regularization: Regularization::L2Projection,
            solver: LinearSolver::default(),
        }
    }
}

/// Mesh-level operators used by every stage.
#[derive(Debug, Clone)]
pub struct Operators {
    pub solver: DirichletSolver,
    pub mass: SparseMatrix,
    /// `(r^-lambda sin, phi_x)` for every vertex hat.
    pub dual_moments: Vec<f64>,
    /// `|r^-lambda sin|^2` over the domain.
    pub dual_norm_sq: f64,
}

impl Operators {
    pub fn new(
        mesh: &Mesh,
        s: &SingularExponent,
        quad: &VolumeQuadrature,
        method: LinearSolver,
    ) -> Result<Operators> {
        let solver = DirichletSolver::with_method(mesh, method)?;
        let mass = assemble_mass(mesh)?;
        let dual_moments = dual_hat_moments(mesh, s, quad)?;
        let (norm, norm_deep) = integrate_checked(mesh, quad, |_, q| {
            let v = s.dual(q.x);
            v * v
        });
        crate::singular::check_settled("singular norm", norm, norm_deep, norm)?;
        Ok(Operators {
            solver,
            mass,
            dual_moments,
            dual_norm_sq: norm,
        })
    }

    /// `(v, p_s^h)` for a finite element function `v`.
    pub fn pair_with_ps(&self, v: &NodalField, c: &DualSingularComplement) -> f64 {
        self.mass.bilinear(&v.0, &c.p_tilde.0) + dot(&v.0, &self.dual_moments)
    }
}

/// Discrete dual singular function `p_s^h = p*_h - r_h + r^-lambda sin`.
#[derive(Debug, Clone)]
pub struct DualSingularComplement {
    /// Lifting of `r^-lambda sin` (zero at the corner).
    pub r_h: NodalField,
    pub p_star: NodalField,
    /// `p*_h - r_h`
    pub p_tilde: NodalField,
    pub lambda: f64,
    /// `|p_s^h|^2`
    pub norm_ps_h_sq: f64,
    pub ops: Operators,
}

/// Boundary values of a function on the mesh, with the corner set to zero.
fn boundary_trace_zero_corner(mesh: &Mesh, f: impl Fn(Point) -> f64) -> TraceField {
    TraceField::from_values(
        mesh.boundary_vertices()
            .iter()
            .map(|&v| {
                if v == mesh.corner() {
                    0.0
                } else {
                    f(mesh.vertices()[v as usize])
                }
            })
            .collect(),
    )
}

pub fn build_complement(
    mesh: &Mesh,
    s: &SingularExponent,
    settings: &DscmSettings,
) -> Result<DualSingularComplement> {
    let ops = Operators::new(mesh, s, &settings.volume, settings.solver)?;
    build_complement_with(mesh, s, ops, settings.tol)
}

pub fn build_complement_with(
    mesh: &Mesh,
    s: &SingularExponent,
    ops: Operators,
    tol: f64,
) -> Result<DualSingularComplement> {
    let r_h = lifting(mesh, &boundary_trace_zero_corner(mesh, |p| s.dual(p)))?;
    // p~ has boundary values -r_h and is discrete harmonic
    let p_tilde = ops.solver.solve(None, &r_h.scale(-1.0), tol)?.total();
    let p_star = p_tilde.axpy(1.0, &r_h);
    let norm_ps_h_sq = ops.mass.bilinear(&p_tilde.0, &p_tilde.0)
        + 2.0 * dot(&p_tilde.0, &ops.dual_moments)
        + ops.dual_norm_sq;
    if !(norm_ps_h_sq > 0.0) {
        return Err(Error::Invalid(format!(
            "|p_s^h|^2 = {norm_ps_h_sq} is not positive"
        )));
    }
    Ok(DualSingularComplement {
        r_h,
        p_star,
        p_tilde,
        lambda: s.lambda,
        norm_ps_h_sq,
        ops,
    })
}

/// `beta_h = |p_s^h|^2 / pi`
pub fn compute_beta(c: &DualSingularComplement) -> f64 {
    c.norm_ps_h_sq / std::f64::consts::PI
}

/// `phi~_h = phi*_h - beta_h s_h`, where `phi*_h` has zero boundary values and
/// `(grad phi*_h, grad v) = (p_s^h, v) + beta_h (grad s_h, grad v)`.
pub fn build_phi(
    mesh: &Mesh,
    s: &SingularExponent,
    c: &DualSingularComplement,
    beta_h: f64,
    tol: f64,
) -> Result<NodalField> {
    let s_h = lifting(
        mesh,
        &boundary_trace_zero_corner(mesh, |p| s.eval_primal(p)),
    )?;
    let load = c.ps_load();
    Ok(c.ops
        .solver
        .solve(Some(&load), &s_h.scale(-beta_h), tol)?
        .total())
}

impl DualSingularComplement {
    /// `(p_s^h, v)` load vector over all vertex hats.
    pub fn ps_load(&self) -> Vec<f64> {
        self.ops
            .mass
            .mul_vec(&self.p_tilde.0)
            .iter()
            .zip(&self.ops.dual_moments)
            .map(|(a, b)| a + b)
            .collect()
    }
}

/// `gamma_h = (y_h, p_s^h) / |p_s^h|^2`
pub fn compute_gamma(y_h: &NodalField, c: &DualSingularComplement) -> f64 {
    c.ops.pair_with_ps(y_h, c) / c.norm_ps_h_sq
}

/// The same functional applied to `z~ + delta r^-lambda sin`.
pub fn gamma_of_singular_sum(z_tilde: &NodalField, delta: f64, c: &DualSingularComplement) -> f64 {
    let dual_with_ps = dot(&c.p_tilde.0, &c.ops.dual_moments) + c.ops.dual_norm_sq;
    (c.ops.pair_with_ps(z_tilde, c) + delta * dual_with_ps) / c.norm_ps_h_sq
}

pub type Source<'a> = Option<&'a dyn Fn(Point) -> f64>;

/// `alpha_h`: the approximate coefficient of `p_s` in the exact solution.
#[allow(clippy::too_many_arguments)]
pub fn compute_alpha(
    mesh: &Mesh,
    u: &dyn Fn(Point) -> f64,
    u_trace: &TraceField,
    f: Source,
    c: &DualSingularComplement,
    beta_h: f64,
    phi_tilde: &NodalField,
    s: &SingularExponent,
    settings: &DscmSettings,
) -> Result<f64> {
    let b = lifting(mesh, u_trace)?;
    let rule = settings
        .pairing
        .unwrap_or_else(|| BoundaryPairingRule::recommended(s, mesh.max_diameter()));
    let boundary = boundary_singular_pairing(u, s, &rule)?;
    let mut numerator = c.ops.pair_with_ps(&b, c)
        - c.ops.solver.stiffness.bilinear(&b.0, &phi_tilde.0)
        - beta_h * boundary;
    if let Some(f) = f {
        // (f, phi_s^h) = (f, phi~_h) + beta_h (f, r^lambda sin)
        let load = assemble_load(mesh, f);
        let (primal, primal_deep) =
            integrate_checked(mesh, &settings.volume, |_, q| f(q.x) * s.eval_primal(q.x));
        crate::singular::check_settled(
            "source pairing",
            primal,
            primal_deep,
            primal.abs().max(1e-300),
        )?;
        numerator += dot(&load, &phi_tilde.0) + beta_h * primal;
    }
    Ok(numerator / c.norm_ps_h_sq)
}

/// `z_h = z~_h + delta_h r^-lambda sin(lambda theta)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DscmSolution {
    pub z_tilde: NodalField,
    pub lambda: f64,
    pub delta: f64,
    pub alpha: f64,
    pub gamma: f64,
    pub beta: f64,
}

impl DscmSolution {
    /// Value of `z_h` at a point other than the corner, given the triangle
    /// and barycentric coordinates.
    pub fn eval(&self, mesh: &Mesh, t: usize, bary: &[f64; 3], x: Point) -> f64 {
        let s = SingularExponent {
            lambda: self.lambda,
            omega: mesh.omega(),
        };
        self.z_tilde.eval_bary(mesh, t, bary) + self.delta * s.dual(x)
    }

    /// Text format: a header line
    /// `dscm_solution vertices N lambda L delta D alpha A gamma G beta B mesh PATH`
    /// followed by the `N` coefficients of `z~_h`, one per line.
    pub fn write_text<W: Write>(&self, mut w: W, mesh_path: &Path) -> Result<()> {
        use crate::mesh::fmt_f64;
        writeln!(
            w,
            "dscm_solution vertices {} lambda {} delta {} alpha {} gamma {} beta {} mesh {}",
            self.z_tilde.len(),
            fmt_f64(self.lambda),
            fmt_f64(self.delta),
            fmt_f64(self.alpha),
            fmt_f64(self.gamma),
            fmt_f64(self.beta),
            mesh_path.display()
        )?;
        for v in &self.z_tilde.0 {
            writeln!(w, "{}", fmt_f64(*v))?;
        }
        Ok(())
    }

    /// Reads the text format, returning the solution and the mesh path.
    pub fn read_text<R: BufRead>(r: R) -> Result<(DscmSolution, String)> {
        let mut lines = r.lines();
        let header = lines.next().ok_or_else(|| Error::Parse {
            line: 1,
            msg: "empty file".into(),
        })??;
        let tok: Vec<&str> = header.splitn(15, ' ').collect();
        let keys = [
            "dscm_solution",
            "vertices",
            "lambda",
            "delta",
            "alpha",
            "gamma",
            "beta",
            "mesh",
        ];
        let at = [0, 1, 3, 5, 7, 9, 11, 13];
        if tok.len() != 15 || keys.iter().zip(at).any(|(k, i)| tok[i] != *k) {
            return Err(Error::Parse {
                line: 1,
                msg: format!("bad header {header:?}"),
            });
        }
        let num = |i: usize| -> Result<f64> {
            tok[i].parse().map_err(|_| Error::Parse {
                line: 1,
                msg: format!("cannot parse {:?}", tok[i]),
            })
        };
        let n: usize = tok[2].parse().map_err(|_| Error::Parse {
            line: 1,
            msg: "bad vertex count".into(),
        })?;
        let mut z = Vec::with_capacity(n);
        for (k, l) in lines.enumerate().take(n) {
            let l = l?;
            z.push(l.trim().parse().map_err(|_| Error::Parse {
                line: k + 2,
                msg: format!("cannot parse {l:?}"),
            })?);
        }
        if z.len() != n {
            return Err(Error::Parse {
                line: z.len() + 2,
                msg: "too few coefficients".into(),
            });
        }
        Ok((
            DscmSolution {
                z_tilde: NodalField(z),
                lambda: num(4)?,
                delta: num(6)?,
                alpha: num(8)?,
                gamma: num(10)?,
                beta: num(12)?,
            },
            tok[14].to_string(),
        ))
    }
}

/// Everything the pipeline computes on one mesh.
#[derive(Debug, Clone)]
pub struct DscmRun {
    pub solution: DscmSolution,
    /// Standard finite element solution with the regularized datum.
    pub y_h: NodalField,
    pub u_trace: TraceField,
    pub complement: DualSingularComplement,
    pub phi_tilde: NodalField,
}

/// Full pipeline: finite element solution, discrete singular functions,
/// coefficients and the corrected solution.
pub fn dscm_run(
    mesh: &Mesh,
    u: &dyn Fn(Point) -> f64,
    f: Source,
    s: &SingularExponent,
    settings: &DscmSettings,
) -> Result<DscmRun> {
    let u_trace = settings.regularization.apply(u, mesh, &settings.line)?;
    let c = build_complement(mesh, s, settings)?;
    let load = f.map(|f| assemble_load(mesh, f));
    let y_h = c
        .ops
        .solver
        .solve(load.as_deref(), &lifting(mesh, &u_trace)?, settings.tol)?
        .total();
    let beta = compute_beta(&c);
    let phi_tilde = build_phi(mesh, s, &c, beta, settings.tol)?;
    let gamma = compute_gamma(&y_h, &c);
    let alpha = compute_alpha(mesh, u, &u_trace, f, &c, beta, &phi_tilde, s, settings)?;
    let delta = alpha - gamma;
    let z_tilde = y_h.axpy(delta, &c.p_tilde);
    Ok(DscmRun {
        solution: DscmSolution {
            z_tilde,
            lambda: s.lambda,
            delta,
            alpha,
            gamma,
            beta,
        },
        y_h,
        u_trace,
        complement: c,
        phi_tilde,
    })
}

pub fn dscm_solve(
    mesh: &Mesh,
    u: &dyn Fn(Point) -> f64,
    f: Source,
    s: &SingularExponent,
    settings: &DscmSettings,
) -> Result<DscmSolution> {
    Ok(dscm_run(mesh, u, f, s, settings)?.solution)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{degrees, polar_of};
    use crate::sparse::norm;
    use std::f64::consts::PI;

    fn datum(p: Point) -> f64 {
        let (r, th) = polar_of(p);
        r.powf(-0.4999) * (-0.4999 * th).sin()
    }

    fn setup(omega: f64, rounds: usize) -> (Mesh, SingularExponent) {
        (
            Mesh::initial(omega).unwrap().refine_uniform(rounds),
            SingularExponent::new(omega).unwrap(),
        )
    }

    #[test]
    fn zero_data_give_zero_correction() {
        let (m, s) = setup(1.5 * PI, 4);
        let sol = dscm_solve(&m, &|_| 0.0, None, &s, &DscmSettings::default()).unwrap();
        assert_eq!(sol.delta, 0.0);
        assert_eq!(sol.alpha, 0.0);
        assert!(sol.z_tilde.0.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn complement_structure() {
        let (m, s) = setup(1.5 * PI, 6);
        let settings = DscmSettings::default();
        let c = build_complement(&m, &s, &settings).unwrap();
        for v in 0..m.num_vertices() as u32 {
            if !m.is_boundary(v) {
                assert_eq!(c.r_h.0[v as usize], 0.0);
            } else {
                assert_eq!(c.p_star.0[v as usize], 0.0);
                assert_eq!(c.p_tilde.0[v as usize], -c.r_h.0[v as usize]);
            }
        }
        assert_eq!(c.r_h.0[m.corner() as usize], 0.0);
        assert!(c.norm_ps_h_sq > 0.0);
        assert_eq!(compute_beta(&c), c.norm_ps_h_sq / PI);
        // Galerkin residual of p*: (grad p*, grad v) = (grad r_h, grad v)
        let a = &c.ops.solver.stiffness;
        let res: Vec<f64> = a
            .mul_vec(&c.p_star.0)
            .iter()
            .zip(a.mul_vec(&c.r_h.0))
            .map(|(x, y)| x - y)
            .collect();
        let interior: Vec<f64> = c.ops.solver.interior().iter().map(|&i| res[i]).collect();
        let rhs: Vec<f64> = {
            let ar = a.mul_vec(&c.r_h.0);
            c.ops.solver.interior().iter().map(|&i| ar[i]).collect()
        };
        assert!(norm(&interior) <= settings.tol * norm(&rhs));
    }

    #[test]
    fn phi_boundary_values_and_residual() {
        let (m, s) = setup(1.5 * PI, 5);
        let settings = DscmSettings::default();
        let c = build_complement(&m, &s, &settings).unwrap();
        let beta = compute_beta(&c);
        let phi = build_phi(&m, &s, &c, beta, settings.tol).unwrap();
        for &v in m.boundary_vertices() {
            let expect = if v == m.corner() {
                0.0
            } else {
                -beta * s.eval_primal(m.vertices()[v as usize])
            };
            assert!((phi.0[v as usize] - expect).abs() < 1e-14);
        }
        let load = c.ps_load();
        let res = c.ops.solver.galerkin_residual(&phi, Some(&load));
        let lhs_scale: f64 = norm(
            &c.ops
                .solver
                .interior()
                .iter()
                .map(|&i| load[i])
                .collect::<Vec<_>>(),
        );
        let s_h_part = norm(
            &c.ops.solver.stiffness.mul_vec(
                &lifting(&m, &boundary_trace_zero_corner(&m, |p| s.eval_primal(p)))
                    .unwrap()
                    .scale(beta)
                    .0,
            ),
        );
        assert!(norm(&res) <= settings.tol * (lhs_scale + s_h_part));
    }

    #[test]
    fn gamma_is_linear() {
        let (m, s) = setup(degrees(355.0), 5);
        let c = build_complement(&m, &s, &DscmSettings::default()).unwrap();
        let y1 = NodalField::interpolate(&m, |p| p[0] * p[1] + 1.0);
        let y2 = NodalField::interpolate(&m, |p| (3.0 * p[0]).sin());
        let combo = y1.scale(2.0).axpy(-0.7, &y2);
        let lhs = compute_gamma(&combo, &c);
        let rhs = 2.0 * compute_gamma(&y1, &c) - 0.7 * compute_gamma(&y2, &c);
        assert!((lhs - rhs).abs() < 1e-12 * lhs.abs().max(1.0));
        assert_eq!(compute_gamma(&NodalField::zeros(&m), &c), 0.0);
        let direct = (c.ops.mass.bilinear(&c.p_tilde.0, &c.p_tilde.0)
            + dot(&c.p_tilde.0, &c.ops.dual_moments))
            / c.norm_ps_h_sq;
        assert!((compute_gamma(&c.p_tilde, &c) - direct).abs() < 1e-14);
    }

    #[test]
    fn alpha_is_linear_in_the_datum() {
        let (m, s) = setup(1.5 * PI, 5);
        let settings = DscmSettings::default();
        let u1 = |p: Point| datum(p);
        let u2 = |p: Point| p[0] * p[0] - p[1];
        let u12 = |p: Point| u1(p) + u2(p);
        let run = |u: &dyn Fn(Point) -> f64| dscm_solve(&m, u, None, &s, &settings).unwrap().alpha;
        let (a1, a2, a12) = (run(&u1), run(&u2), run(&u12));
        assert!(
            (a12 - a1 - a2).abs() < 1e-10 * a12.abs().max(1.0),
            "{a12} vs {}",
            a1 + a2
        );
    }

    #[test]
    fn delta_and_projection_consistency() {
        for omega in [1.5 * PI, degrees(355.0)] {
            let (m, s) = setup(omega, 6);
            let run = dscm_run(&m, &datum, None, &s, &DscmSettings::default()).unwrap();
            let sol = &run.solution;
            assert_eq!(sol.delta, sol.alpha - sol.gamma);
            let g = gamma_of_singular_sum(&sol.z_tilde, sol.delta, &run.complement);
            assert!(
                (g - sol.alpha).abs() < 1e-10 * sol.alpha.abs().max(1.0),
                "{g} vs {}",
                sol.alpha
            );
        }
    }

    #[test]
    fn solution_text_round_trip() {
        let (m, s) = setup(1.5 * PI, 3);
        let sol = dscm_solve(&m, &datum, None, &s, &DscmSettings::default()).unwrap();
        let mut buf = Vec::new();
        sol.write_text(&mut buf, Path::new("mesh.txt")).unwrap();
        let (back, path) = DscmSolution::read_text(&buf[..]).unwrap();
        assert_eq!(back, sol);
        assert_eq!(path, "mesh.txt");
    }
}
