//! Discretization errors, experimental orders of convergence and the
//! experiment driver behind the command line tool.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use crate::dscm::{dscm_run, DscmSettings, DscmSolution};
use crate::error::{Error, Result};
use crate::fem::{assemble_load, lifting, DirichletSolver, LinearSolver, NodalField};
use crate::geometry::{degrees, polar_of, Point};
use crate::mesh::{refine_to_graded, GradingParams, Mesh};
use crate::quadrature::{LineQuadrature, VolumeQuadrature};
use crate::singular::{integrate_with_check_depth, SingularExponent};
use crate::trace::Regularization;

/// Relative change of the error allowed when the corner splitting depth is doubled.
pub const ERROR_QUADRATURE_TARGET: f64 = 1e-5;

/// A discrete solution whose error is measured.
#[derive(Debug, Clone, Copy)]
pub enum Approximation<'a> {
    Fem(&'a NodalField),
    Dscm(&'a DscmSolution),
}

/// `|exact - approx|_{L^2}` with the graded volume quadrature. The corner
/// triangles are integrated a second time at twice the depth and the two
/// results must agree to `ERROR_QUADRATURE_TARGET`.
pub fn l2_error(
    mesh: &Mesh,
    approx: Approximation,
    exact: &dyn Fn(Point) -> f64,
    quad: &VolumeQuadrature,
) -> Result<f64> {
    let s = SingularExponent::new(mesh.omega())?;
    let field = match approx {
        Approximation::Fem(f) => f,
        Approximation::Dscm(d) => &d.z_tilde,
    };
    field.check(mesh)?;
    let delta = match approx {
        Approximation::Fem(_) => 0.0,
        Approximation::Dscm(d) => d.delta,
    };
    let (e2, e2_deep) = integrate_with_check_depth(mesh, quad, 2 * quad.depth.max(1), |t, q| {
        let mut v = field.eval_bary(mesh, t, &q.bary);
        if delta != 0.0 {
            v += delta * s.dual(q.x);
        }
        let d = exact(q.x) - v;
        d * d
    });
    let (e, e_deep) = (e2.max(0.0).sqrt(), e2_deep.max(0.0).sqrt());
    let change = (e - e_deep).abs() / e.max(f64::MIN_POSITIVE);
    if e > 0.0 && change > ERROR_QUADRATURE_TARGET {
        return Err(Error::Quadrature {
            what: "L2 error",
            change,
            target: ERROR_QUADRATURE_TARGET,
        });
    }
    Ok(e)
}

/// Orders of convergence with respect to `h ~ N^(-1/2)`:
/// `eoc_i = ln(e_{i-1} / e_i) / ln(sqrt(N_i / N_{i-1}))`. The first entry is `None`.
pub fn eoc(errors: &[f64], unknowns: &[usize]) -> Result<Vec<Option<f64>>> {
    if errors.len() != unknowns.len() {
        return Err(Error::LengthMismatch {
            what: "errors vs unknowns",
            expected: unknowns.len(),
            got: errors.len(),
        });
    }
    if errors.len() < 2 {
        return Err(Error::Invalid(
            "need at least two levels for an order of convergence".into(),
        ));
    }
    if errors.iter().any(|&e| !(e > 0.0)) || unknowns.iter().any(|&n| n == 0) {
        return Err(Error::Invalid(
            "errors and unknown counts must be positive".into(),
        ));
    }
    let mut out = vec![None];
    for i in 1..errors.len() {
        let ratio = unknowns[i] as f64 / unknowns[i - 1] as f64;
        out.push(Some((errors[i - 1] / errors[i]).ln() / ratio.sqrt().ln()));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Standard,
    Graded,
    Dscm,
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "standard" => Ok(Method::Standard),
            "graded" => Ok(Method::Graded),
            "dscm" => Ok(Method::Dscm),
            _ => Err(Error::Invalid(format!(
                "unknown method {s:?} (standard|graded|dscm)"
            ))),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Standard => "standard",
            Method::Graded => "graded",
            Method::Dscm => "dscm",
        })
    }
}

/// Test problems with known solutions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Problem {
    /// `-Laplace y = 0`, `y = u = r^-a sin(-a theta)`.
    RoughDatum { exponent: f64 },
    /// `y = sin(pi x) sin(pi y)`, `f = 2 pi^2 y`, `u = y` on the boundary.
    Smooth,
}

impl Problem {
    pub fn exact(&self) -> Box<dyn Fn(Point) -> f64 + Send + Sync> {
        match *self {
            Problem::RoughDatum { exponent } => Box::new(move |p| {
                let (r, th) = polar_of(p);
                r.powf(-exponent) * (-exponent * th).sin()
            }),
            Problem::Smooth => Box::new(|p: Point| (PI * p[0]).sin() * (PI * p[1]).sin()),
        }
    }

    pub fn source(&self) -> Option<Box<dyn Fn(Point) -> f64 + Send + Sync>> {
        match self {
            Problem::RoughDatum { .. } => None,
            Problem::Smooth => Some(Box::new(|p: Point| {
                2.0 * PI * PI * (PI * p[0]).sin() * (PI * p[1]).sin()
            })),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub omega_degrees: f64,
    pub method: Method,
    /// Grading parameter; required for `Method::Graded`.
    pub mu: Option<f64>,
    pub levels: usize,
    pub regularization: Regularization,
    pub problem: Problem,
    /// Corner splitting depth of the volume quadrature.
    pub depth: usize,
    pub tol: f64,
    pub solver: LinearSolver,
    /// Uniform bisection rounds applied to the initial mesh for the first level.
    pub start_rounds: usize,
    pub c1: f64,
    pub c2: f64,
    pub output: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            omega_degrees: 270.0,
            method: Method::Standard,
            mu: None,
            levels: 6,
            regularization: Regularization::L2Projection,
            problem: Problem::RoughDatum { exponent: 0.4999 },
            depth: VolumeQuadrature::default().depth,
            tol: 1e-10,
            solver: LinearSolver::default(),
            start_rounds: 2,
            c1: GradingParams::DEFAULT_C1,
            c2: GradingParams::DEFAULT_C2,
            output: None,
        }
    }
}

impl ExperimentConfig {
    pub fn new(omega_degrees: f64, method: Method, levels: usize) -> ExperimentConfig {
        ExperimentConfig {
            omega_degrees,
            method,
            levels,
            ..Default::default()
        }
    }

    pub fn graded(omega_degrees: f64, mu: f64, levels: usize) -> ExperimentConfig {
        ExperimentConfig {
            mu: Some(mu),
            ..ExperimentConfig::new(omega_degrees, Method::Graded, levels)
        }
    }

    pub fn validate(&self) -> Result<()> {
        crate::geometry::check_angle(degrees(self.omega_degrees))?;
        if self.levels < 2 {
            return Err(Error::Invalid(format!(
                "levels = {} must be at least 2",
                self.levels
            )));
        }
        if self.method == Method::Graded {
            match self.mu {
                Some(mu) if mu > 0.0 && mu <= 1.0 => {}
                Some(mu) => return Err(Error::InvalidGrading(format!("mu = {mu} not in (0, 1]"))),
                None => return Err(Error::InvalidGrading("graded method needs mu".into())),
            }
        }
        if !(self.tol > 0.0) {
            return Err(Error::Invalid("tol must be positive".into()));
        }
        if let Problem::RoughDatum { exponent } = self.problem {
            if !(exponent > 0.0 && exponent < 0.5) {
                return Err(Error::Invalid(format!(
                    "datum exponent {exponent} must lie in (0, 1/2) for an L2 datum"
                )));
            }
        }
        Ok(())
    }

    /// Applies `key = value` settings (as in a config file).
    pub fn apply(&mut self, key: &str, value: &str) -> Result<()> {
        let num = |v: &str| -> Result<f64> {
            v.parse()
                .map_err(|_| Error::Invalid(format!("{key}: cannot parse {v:?}")))
        };
        let int = |v: &str| -> Result<usize> {
            v.parse()
                .map_err(|_| Error::Invalid(format!("{key}: cannot parse {v:?}")))
        };
        match key {
            "omega" => self.omega_degrees = num(value)?,
            "method" => self.method = value.parse()?,
            "mu" => self.mu = Some(num(value)?),
            "levels" => self.levels = int(value)?,
            "regularization" => self.regularization = value.parse()?,
            "datum-exponent" => {
                self.problem = Problem::RoughDatum {
                    exponent: num(value)?,
                }
            }
            "problem" => {
                self.problem = match value {
                    "rough" => Problem::RoughDatum { exponent: 0.4999 },
                    "smooth" => Problem::Smooth,
                    _ => {
                        return Err(Error::Invalid(format!(
                            "unknown problem {value:?} (rough|smooth)"
                        )))
                    }
                }
            }
            "depth" => self.depth = int(value)?,
            "tol" => self.tol = num(value)?,
            "solver" => self.solver = value.parse()?,
            "start-rounds" => self.start_rounds = int(value)?,
            "c1" => self.c1 = num(value)?,
            "c2" => self.c2 = num(value)?,
            "out" => self.output = Some(PathBuf::from(value)),
            _ => return Err(Error::Invalid(format!("unknown setting {key:?}"))),
        }
        Ok(())
    }
}

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_config_file(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
            line: i + 1,
            msg: format!("expected key = value, got {line:?}"),
        })?;
        out.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LevelRow {
    pub unknowns: usize,
    pub error: f64,
    pub eoc: Option<f64>,
    /// Error of the uncorrected finite element solution on the same mesh
    /// (DSCM runs only).
    pub standard_error: Option<f64>,
    pub seconds: f64,
}

#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub rows: Vec<LevelRow>,
    pub wall_time: f64,
}

impl ExperimentReport {
    pub fn errors(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.error).collect()
    }

    pub fn eocs(&self) -> Vec<Option<f64>> {
        self.rows.iter().map(|r| r.eoc).collect()
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "unknowns,error,eoc")?;
        for r in &self.rows {
            match r.eoc {
                Some(e) => writeln!(w, "{},{:.6e},{:.6}", r.unknowns, r.error, e)?,
                None => writeln!(w, "{},{:.6e},", r.unknowns, r.error)?,
            }
        }
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent() {
            if !dir.as_os_str().is_empty() {
                std::fs::create_dir_all(dir)?;
            }
        }
        let f = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(f))
    }
}

/// Mesh of ladder level `level`: uniform bisection for standard and DSCM
/// runs; graded refinement for `mu` with `h` halving from level to level.
pub fn ladder_mesh(config: &ExperimentConfig, level: usize) -> Result<Mesh> {
    let omega = degrees(config.omega_degrees);
    let base = Mesh::initial(omega)?.refine_uniform(config.start_rounds);
    match config.method {
        Method::Standard | Method::Dscm => Ok(base.refine_uniform(2 * level)),
        Method::Graded => refine_to_graded(&base, &grading_params(config, &base, level)?),
    }
}

fn grading_params(config: &ExperimentConfig, base: &Mesh, level: usize) -> Result<GradingParams> {
    let mu = config
        .mu
        .ok_or_else(|| Error::InvalidGrading("graded method needs mu".into()))?;
    // far from the corner the graded mesh matches the uniform ladder
    let h = base.max_diameter() / config.c2 * 0.5f64.powi(level as i32);
    let mut p = GradingParams::new(mu, h);
    p.c1 = config.c1;
    p.c2 = config.c2;
    p.max_generations = p
        .max_generations
        .max(p.generations_needed(base.max_diameter()));
    Ok(p)
}

/// Runs every level of the configured ladder and measures the errors. When
/// an output path is configured, the CSV is rewritten after every level.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    run_experiment_with(config, |_| {})
}

/// As `run_experiment`, calling `progress` after each level.
pub fn run_experiment_with(
    config: &ExperimentConfig,
    mut progress: impl FnMut(&LevelRow),
) -> Result<ExperimentReport> {
    config.validate()?;
    let start = Instant::now();
    let omega = degrees(config.omega_degrees);
    let s = SingularExponent::new(omega)?;
    let exact = config.problem.exact();
    let source = config.problem.source();
    let quad = VolumeQuadrature::with_depth(config.depth);
    let line = LineQuadrature::default();
    let mut report = ExperimentReport {
        config: config.clone(),
        rows: Vec::new(),
        wall_time: 0.0,
    };
    let base = Mesh::initial(omega)?.refine_uniform(config.start_rounds);
    let mut uniform = base.clone();
    for level in 0..config.levels {
        let t0 = Instant::now();
        let mesh = match config.method {
            Method::Standard | Method::Dscm => {
                if level > 0 {
                    uniform = uniform.refine_uniform(2);
                }
                uniform.clone()
            }
            Method::Graded => refine_to_graded(&base, &grading_params(config, &base, level)?)?,
        };
        let u: &dyn Fn(Point) -> f64 = &*exact;
        let f: Option<&dyn Fn(Point) -> f64> =
            source.as_deref().map(|f| f as &dyn Fn(Point) -> f64);
        let (error, standard_error) = match config.method {
            Method::Standard | Method::Graded => {
                let trace = config.regularization.apply(u, &mesh, &line)?;
                let solver = DirichletSolver::with_method(&mesh, config.solver)?;
                let load = f.map(|f| assemble_load(&mesh, f));
                let y = solver
                    .solve(load.as_deref(), &lifting(&mesh, &trace)?, config.tol)?
                    .total();
                (l2_error(&mesh, Approximation::Fem(&y), u, &quad)?, None)
            }
            Method::Dscm => {
                let settings = DscmSettings {
                    tol: config.tol,
                    volume: quad,
                    line,
                    pairing: None,
                    regularization: config.regularization,
                    solver: config.solver,
                };
                let run = dscm_run(&mesh, u, f, &s, &settings)?;
                (
                    l2_error(&mesh, Approximation::Dscm(&run.solution), u, &quad)?,
                    Some(l2_error(&mesh, Approximation::Fem(&run.y_h), u, &quad)?),
                )
            }
        };
        let eoc = report.rows.last().map(|prev: &LevelRow| {
            let ratio = mesh.num_vertices() as f64 / prev.unknowns as f64;
            (prev.error / error).ln() / ratio.sqrt().ln()
        });
        let row = LevelRow {
            unknowns: mesh.num_vertices(),
            error,
            eoc,
            standard_error,
            seconds: t0.elapsed().as_secs_f64(),
        };
        progress(&row);
        report.rows.push(row);
        report.wall_time = start.elapsed().as_secs_f64();
        if let Some(path) = &config.output {
            report.save_csv(path)?;
        }
    }
    Ok(report)
}

/// The experiment matrix behind the four tables: quasi-uniform standard and
/// DSCM runs plus graded runs, for 270 and 355 degrees.
pub fn paper_preset(levels: usize, out_dir: &Path) -> Vec<ExperimentConfig> {
    let mut v = Vec::new();
    for (omega, mus) in [(270.0, [0.666, 0.5, 0.333]), (355.0, [0.5, 0.3, 0.014085])] {
        for method in [Method::Standard, Method::Dscm] {
            let mut c = ExperimentConfig::new(omega, method, levels);
            c.output = Some(out_dir.join(format!("omega{omega}_{method}.csv")));
            v.push(c);
        }
        for mu in mus {
            let mut c = ExperimentConfig::graded(omega, mu, levels);
            c.output = Some(out_dir.join(format!("omega{omega}_graded_mu{mu}.csv")));
            v.push(c);
        }
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eoc_examples() {
        let e = eoc(&[0.736, 0.645], &[33, 113]).unwrap();
        assert!(e[0].is_none());
        assert!((e[1].unwrap() - 0.215).abs() < 1e-3);
        let e = eoc(&[1.0, 0.5], &[100, 400]).unwrap();
        assert!((e[1].unwrap() - 1.0).abs() < 1e-14);
        let e = eoc(&[0.590, 0.417], &[2265, 8881]).unwrap();
        assert!((e[1].unwrap() - 0.508).abs() < 1e-3);
        assert!(eoc(&[0.0, 1.0], &[1, 2]).is_err());
        assert!(eoc(&[1.0], &[1]).is_err());
        assert!(eoc(&[1.0, 2.0], &[1]).is_err());
    }

    #[test]
    fn affine_interpolant_has_no_error() {
        let m = Mesh::initial(1.5 * PI).unwrap().refine_uniform(4);
        let f = |p: Point| 1.0 + 2.0 * p[0] - p[1];
        let y = NodalField::interpolate(&m, f);
        let e = l2_error(&m, Approximation::Fem(&y), &f, &VolumeQuadrature::default()).unwrap();
        assert!(e <= 1e-12, "{e}");
    }

    /// Hybrid oracle for |y|: sector {r < 1} in closed form plus the rest of
    /// the square in polar coordinates.
    #[test]
    fn norm_of_rough_solution() {
        let a: f64 = 0.4999;
        let omega = 1.5 * PI;
        let m = Mesh::initial(omega).unwrap().refine_uniform(4);
        let exact = Problem::RoughDatum { exponent: a }.exact();
        let zero = NodalField::zeros(&m);
        let e = l2_error(
            &m,
            Approximation::Fem(&zero),
            &*exact,
            &VolumeQuadrature::default(),
        )
        .unwrap();
        let gl = crate::quadrature::gauss_legendre(32);
        let mut outside = 0.0;
        let mut angular = 0.0;
        for k in 0..6 {
            let (lo, hi) = (k as f64 * PI / 4.0, (k + 1) as f64 * PI / 4.0);
            for &(t, w) in gl {
                let th = lo + (hi - lo) * t;
                let sn = (-a * th).sin();
                let rmax = 1.0 / th.cos().abs().max(th.sin().abs());
                angular += (hi - lo) * w * sn * sn;
                // int_1^rmax r^(1-2a) dr
                outside +=
                    (hi - lo) * w * sn * sn * (rmax.powf(2.0 - 2.0 * a) - 1.0) / (2.0 - 2.0 * a);
            }
        }
        let sector = angular / (2.0 - 2.0 * a);
        let oracle = (sector + outside).sqrt();
        assert!((e - oracle).abs() < 1e-3 * oracle, "{e} vs {oracle}");
    }

    #[test]
    fn error_is_invariant_under_renumbering() {
        let m = Mesh::initial(1.5 * PI).unwrap().refine_uniform(3);
        let exact = Problem::RoughDatum { exponent: 0.4999 }.exact();
        let y = NodalField::interpolate(&m, |p| p[0] * p[1]);
        let q = VolumeQuadrature::default();
        let e = l2_error(&m, Approximation::Fem(&y), &*exact, &q).unwrap();
        // rotate the vertex order inside every triangle and reverse the list
        let mut text = Vec::new();
        m.write_text(&mut text).unwrap();
        let back = Mesh::read_text(&text[..]).unwrap();
        let tris: Vec<[u32; 3]> = back
            .triangles()
            .iter()
            .rev()
            .map(|t| [t[1], t[2], t[0]])
            .collect();
        let m2 = Mesh::assemble(
            back.vertices().to_vec(),
            tris,
            back.boundary_edges().to_vec(),
            vec![None; back.num_vertices()],
            back.omega(),
            back.corner(),
        )
        .unwrap();
        let e2 = l2_error(&m2, Approximation::Fem(&y), &*exact, &q).unwrap();
        assert!((e - e2).abs() < 1e-12 * e);
    }

    #[test]
    fn config_validation_and_parsing() {
        assert!(ExperimentConfig::new(270.0, Method::Standard, 1)
            .validate()
            .is_err());
        assert!(ExperimentConfig::new(270.0, Method::Graded, 3)
            .validate()
            .is_err());
        assert!(ExperimentConfig::graded(270.0, 1.5, 3).validate().is_err());
        assert!(ExperimentConfig::new(400.0, Method::Standard, 3)
            .validate()
            .is_err());
        let kv = parse_config_file("omega = 355\nmethod = dscm # comment\n\nlevels=4\n").unwrap();
        let mut c = ExperimentConfig::default();
        for (k, v) in &kv {
            c.apply(k, v).unwrap();
        }
        assert_eq!(c.omega_degrees, 355.0);
        assert_eq!(c.method, Method::Dscm);
        assert_eq!(c.levels, 4);
        assert!(c.apply("bogus", "1").is_err());
        assert!(parse_config_file("novalue\n").is_err());
    }

    #[test]
    fn report_csv_layout() {
        let c = ExperimentConfig::new(270.0, Method::Standard, 2);
        let r = ExperimentReport {
            config: c,
            rows: vec![
                LevelRow {
                    unknowns: 33,
                    error: 0.736,
                    eoc: None,
                    standard_error: None,
                    seconds: 0.0,
                },
                LevelRow {
                    unknowns: 113,
                    error: 0.645,
                    eoc: Some(0.215),
                    standard_error: None,
                    seconds: 0.0,
                },
            ],
            wall_time: 0.0,
        };
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines[0], "unknowns,error,eoc");
        assert!(lines[1].starts_with("33,") && lines[1].ends_with(','));
        assert!(lines[2].starts_with("113,") && lines[2].ends_with("0.215000"));
    }

    #[test]
    fn short_runs_decrease_monotonically() {
        for method in [Method::Standard, Method::Dscm] {
            let r = run_experiment(&ExperimentConfig::new(270.0, method, 3)).unwrap();
            assert_eq!(r.rows.len(), 3);
            assert!(r
                .rows
                .windows(2)
                .all(|w| w[1].unknowns > w[0].unknowns && w[1].error < w[0].error));
            assert!(r.rows[0].eoc.is_none() && r.rows[1].eoc.is_some());
        }
        let r = run_experiment(&ExperimentConfig::graded(270.0, 0.5, 3)).unwrap();
        assert!(r.rows.windows(2).all(|w| w[1].error < w[0].error));
    }

    #[test]
    fn reports_are_deterministic() {
        let c = ExperimentConfig::new(355.0, Method::Dscm, 2);
        let a = run_experiment(&c).unwrap();
        let b = run_experiment(&c).unwrap();
        assert_eq!(a.errors(), b.errors());
    }
}
