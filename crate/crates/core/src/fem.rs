//! P1 assembly and the homogenized Dirichlet solve.

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::mesh::Mesh;
use crate::sparse::{cg_solve, CholeskyFactor, SparseMatrix};
use crate::trace::TraceField;

/// A continuous piecewise linear function, one coefficient per mesh vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct NodalField(pub Vec<f64>);

impl NodalField {
    pub fn zeros(mesh: &Mesh) -> NodalField {
        NodalField(vec![0.0; mesh.num_vertices()])
    }

    pub fn interpolate(mesh: &Mesh, f: impl Fn(Point) -> f64) -> NodalField {
        NodalField(mesh.vertices().iter().map(|&p| f(p)).collect())
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn check(&self, mesh: &Mesh) -> Result<()> {
        if self.0.len() != mesh.num_vertices() {
            return Err(Error::LengthMismatch {
                what: "nodal field",
                expected: mesh.num_vertices(),
                got: self.0.len(),
            });
        }
        Ok(())
    }

    /// `self + a * other`
    pub fn axpy(&self, a: f64, other: &NodalField) -> NodalField {
        NodalField(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(x, y)| x + a * y)
                .collect(),
        )
    }

    pub fn scale(&self, a: f64) -> NodalField {
        NodalField(self.0.iter().map(|x| a * x).collect())
    }

    /// Value at a point given barycentric coordinates in triangle `t`.
    #[inline]
    pub fn eval_bary(&self, mesh: &Mesh, t: usize, bary: &[f64; 3]) -> f64 {
        let tri = mesh.triangles()[t];
        bary[0] * self.0[tri[0] as usize]
            + bary[1] * self.0[tri[1] as usize]
            + bary[2] * self.0[tri[2] as usize]
    }
}

/// Gradients of the barycentric coordinates, scaled by twice the area.
fn scaled_gradients(p: &[Point; 3]) -> [[f64; 2]; 3] {
    let mut g = [[0.0; 2]; 3];
    for i in 0..3 {
        let a = p[(i + 1) % 3];
        let b = p[(i + 2) % 3];
        g[i] = [a[1] - b[1], b[0] - a[0]];
    }
    g
}

/// Element stiffness matrix. It does not depend on the size of the
/// triangle, so it is computed on the copy scaled to unit diameter; this
/// keeps tiny corner elements of strongly graded meshes usable.
pub fn local_stiffness(p: &[Point; 3]) -> Result<[[f64; 3]; 3]> {
    let (q, _) = crate::geometry::normalized_triangle(p);
    let area = crate::geometry::signed_area(q[0], q[1], q[2]);
    if !(area > 0.0) {
        return Err(Error::DegenerateTriangle { triangle: 0, area });
    }
    let g = scaled_gradients(&q);
    let mut k = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            k[i][j] = (g[i][0] * g[j][0] + g[i][1] * g[j][1]) / (4.0 * area);
        }
    }
    Ok(k)
}

/// Element mass matrix; entries may underflow to zero for tiny elements.
pub fn local_mass(p: &[Point; 3]) -> Result<[[f64; 3]; 3]> {
    let (q, d) = crate::geometry::normalized_triangle(p);
    let shape = crate::geometry::signed_area(q[0], q[1], q[2]);
    if !(shape > 0.0) {
        return Err(Error::DegenerateTriangle {
            triangle: 0,
            area: shape,
        });
    }
    let area = shape * d * d;
    let mut m = [[area / 12.0; 3]; 3];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = area / 6.0;
    }
    Ok(m)
}

fn assemble(mesh: &Mesh, local: fn(&[Point; 3]) -> Result<[[f64; 3]; 3]>) -> Result<SparseMatrix> {
    let mut trip = Vec::with_capacity(9 * mesh.num_triangles());
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let k = local(&mesh.corners_of(t)).map_err(|e| match e {
            Error::DegenerateTriangle { area, .. } => {
                Error::DegenerateTriangle { triangle: t, area }
            }
            e => e,
        })?;
        for i in 0..3 {
            for j in 0..3 {
                trip.push((tri[i], tri[j], k[i][j]));
            }
        }
    }
    Ok(SparseMatrix::from_triplets(mesh.num_vertices(), trip))
}

/// Stiffness matrix of `(grad u, grad v)`.
pub fn assemble_stiffness(mesh: &Mesh) -> Result<SparseMatrix> {
    assemble(mesh, local_stiffness)
}

/// Consistent mass matrix of `(u, v)`.
pub fn assemble_mass(mesh: &Mesh) -> Result<SparseMatrix> {
    assemble(mesh, local_mass)
}

/// Load vector `(f, phi_i)` with the 3-point rule at `(2/3, 1/6, 1/6)`.
pub fn assemble_load(mesh: &Mesh, f: &dyn Fn(Point) -> f64) -> Vec<f64> {
    const RULE: [[f64; 3]; 3] = [
        [2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0],
        [1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0],
        [1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0],
    ];
    let mut b = vec![0.0; mesh.num_vertices()];
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let p = mesh.corners_of(t);
        let w = mesh.area_of(t) / 3.0;
        for l in RULE {
            let x = [
                l[0] * p[0][0] + l[1] * p[1][0] + l[2] * p[2][0],
                l[0] * p[0][1] + l[1] * p[1][1] + l[2] * p[2][1],
            ];
            let fx = f(x) * w;
            for i in 0..3 {
                b[tri[i] as usize] += fx * l[i];
            }
        }
    }
    b
}

/// Discrete extension of a boundary trace: trace values at boundary
/// vertices, zero at interior vertices.
pub fn lifting(mesh: &Mesh, trace: &TraceField) -> Result<NodalField> {
    trace.check(mesh)?;
    let mut v = vec![0.0; mesh.num_vertices()];
    for (k, &b) in mesh.boundary_vertices().iter().enumerate() {
        v[b as usize] = trace.values()[k];
    }
    Ok(NodalField(v))
}

/// The three parts of a discrete Dirichlet solution `y = y_f + B u + y_0`.
#[derive(Debug, Clone)]
pub struct DirichletSplit {
    /// Zero boundary values, driven by the load.
    pub source_part: NodalField,
    /// Lifting of the boundary values.
    pub lifting: NodalField,
    /// Zero boundary values, driven by `-A (B u)`.
    pub homogenized: NodalField,
    pub iterations: usize,
}

impl DirichletSplit {
    pub fn total(&self) -> NodalField {
        NodalField(
            (0..self.lifting.len())
                .map(|i| self.source_part.0[i] + self.lifting.0[i] + self.homogenized.0[i])
                .collect(),
        )
    }
}

/// Stiffness matrix with its interior block, reused across solves on one mesh.
#[derive(Debug, Clone)]
pub struct DirichletSolver {
    pub stiffness: SparseMatrix,
    interior: Vec<usize>,
    interior_block: SparseMatrix,
    factor: Option<CholeskyFactor>,
}

/// How the interior systems are solved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LinearSolver {
    /// Sparse Cholesky; robust on strongly graded meshes.
    #[default]
    Cholesky,
    /// Jacobi-preconditioned conjugate gradients with a relative residual tolerance.
    ConjugateGradient,
}

impl std::str::FromStr for LinearSolver {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cholesky" => Ok(LinearSolver::Cholesky),
            "cg" => Ok(LinearSolver::ConjugateGradient),
            _ => Err(Error::Invalid(format!(
                "unknown linear solver {s:?} (cholesky|cg)"
            ))),
        }
    }
}

impl std::fmt::Display for LinearSolver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            LinearSolver::Cholesky => "cholesky",
            LinearSolver::ConjugateGradient => "cg",
        })
    }
}

impl DirichletSolver {
    pub fn new(mesh: &Mesh) -> Result<DirichletSolver> {
        DirichletSolver::with_method(mesh, LinearSolver::default())
    }

    pub fn with_method(mesh: &Mesh, method: LinearSolver) -> Result<DirichletSolver> {
        let stiffness = assemble_stiffness(mesh)?;
        DirichletSolver::with_stiffness(mesh, stiffness, method)
    }

    pub fn with_stiffness(
        mesh: &Mesh,
        stiffness: SparseMatrix,
        method: LinearSolver,
    ) -> Result<DirichletSolver> {
        let interior: Vec<usize> = (0..mesh.num_vertices())
            .filter(|&v| !mesh.is_boundary(v as u32))
            .collect();
        let interior_block = stiffness.restrict(&interior);
        let factor = match method {
            LinearSolver::Cholesky if !interior.is_empty() => {
                Some(CholeskyFactor::new(&interior_block)?)
            }
            _ => None,
        };
        Ok(DirichletSolver {
            stiffness,
            interior,
            interior_block,
            factor,
        })
    }

    pub fn interior(&self) -> &[usize] {
        &self.interior
    }

    fn solve_interior(&self, rhs_full: &[f64], tol: f64) -> Result<(Vec<f64>, usize)> {
        let b: Vec<f64> = self.interior.iter().map(|&i| rhs_full[i]).collect();
        let (xi, iterations) = match &self.factor {
            Some(f) => (f.solve(&b)?, 0),
            None => {
                let out = cg_solve(&self.interior_block, &b, tol, None)?;
                (out.x, out.iterations)
            }
        };
        let mut x = vec![0.0; self.stiffness.dim()];
        for (k, &i) in self.interior.iter().enumerate() {
            x[i] = xi[k];
        }
        Ok((x, iterations))
    }

    /// Solves `(grad y, grad v) = load(v)` for all interior hats `v`, with
    /// `y` equal to `lift` on the boundary. `lift` must vanish at interior
    /// vertices. `load = None` is the zero load.
    pub fn solve(
        &self,
        load: Option<&[f64]>,
        lift: &NodalField,
        tol: f64,
    ) -> Result<DirichletSplit> {
        if !(tol > 0.0) {
            return Err(Error::Invalid(format!(
                "solver tolerance must be positive, got {tol}"
            )));
        }
        let n = self.stiffness.dim();
        if lift.len() != n {
            return Err(Error::LengthMismatch {
                what: "lifting",
                expected: n,
                got: lift.len(),
            });
        }
        let mut iterations = 0;
        let source_part = match load {
            Some(l) => {
                if l.len() != n {
                    return Err(Error::LengthMismatch {
                        what: "load vector",
                        expected: n,
                        got: l.len(),
                    });
                }
                let (x, it) = self.solve_interior(l, tol)?;
                iterations += it;
                NodalField(x)
            }
            None => NodalField(vec![0.0; n]),
        };
        let minus_a_lift: Vec<f64> = self.stiffness.mul_vec(&lift.0).iter().map(|v| -v).collect();
        let (y0, it) = self.solve_interior(&minus_a_lift, tol)?;
        iterations += it;
        Ok(DirichletSplit {
            source_part,
            lifting: lift.clone(),
            homogenized: NodalField(y0),
            iterations,
        })
    }

    /// Interior rows of `A y - load`.
    pub fn galerkin_residual(&self, y: &NodalField, load: Option<&[f64]>) -> Vec<f64> {
        let ay = self.stiffness.mul_vec(&y.0);
        self.interior
            .iter()
            .map(|&i| ay[i] - load.map_or(0.0, |l| l[i]))
            .collect()
    }
}

/// Discrete Dirichlet problem `-Laplace y = f`, `y = trace` on the boundary.
pub fn solve_poisson_dirichlet(
    mesh: &Mesh,
    source: Option<&dyn Fn(Point) -> f64>,
    trace: &TraceField,
    tol: f64,
) -> Result<NodalField> {
    let solver = DirichletSolver::new(mesh)?;
    let load = source.map(|f| assemble_load(mesh, f));
    let lift = lifting(mesh, trace)?;
    Ok(solver.solve(load.as_deref(), &lift, tol)?.total())
}
