//! Piecewise linear boundary traces and the regularizations of an `L^2`
//! boundary datum: the `L^2(Gamma)` projection and Carstensen's
//! quasi-interpolant.

use crate::error::{Error, Result};
use crate::geometry::{dist, Point};
use crate::mesh::Mesh;
use crate::quadrature::LineQuadrature;
use crate::sparse::SparseMatrix;

/// Coefficients of a continuous piecewise linear function on the boundary,
/// one per boundary vertex in `Mesh::boundary_vertices` order.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceField(Vec<f64>);

impl TraceField {
    pub fn from_values(values: Vec<f64>) -> TraceField {
        TraceField(values)
    }

    pub fn constant(mesh: &Mesh, c: f64) -> TraceField {
        TraceField(vec![c; mesh.boundary_vertices().len()])
    }

    /// Nodal interpolation of `f` at the boundary vertices.
    pub fn interpolate(mesh: &Mesh, f: impl Fn(Point) -> f64) -> TraceField {
        TraceField(
            mesh.boundary_vertices()
                .iter()
                .map(|&v| f(mesh.vertices()[v as usize]))
                .collect(),
        )
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn check(&self, mesh: &Mesh) -> Result<()> {
        let n = mesh.boundary_vertices().len();
        if self.0.len() != n {
            return Err(Error::LengthMismatch {
                what: "boundary trace",
                expected: n,
                got: self.0.len(),
            });
        }
        Ok(())
    }

    /// Exact `L^2(Gamma)` norm.
    pub fn l2_norm(&self, mesh: &Mesh) -> f64 {
        edge_lengths(mesh)
            .iter()
            .enumerate()
            .map(|(k, l)| {
                let a = self.0[k];
                let b = self.0[(k + 1) % self.0.len()];
                l / 3.0 * (a * a + a * b + b * b)
            })
            .sum::<f64>()
            .sqrt()
    }

    /// Value at a boundary point `p`; `None` if `p` is not on the boundary.
    /// Linear in the number of boundary edges.
    pub fn eval(&self, mesh: &Mesh, p: Point) -> Option<f64> {
        let n = self.0.len();
        mesh.boundary_edges().iter().enumerate().find_map(|(k, e)| {
            let a = mesh.vertices()[e.vertices[0] as usize];
            let b = mesh.vertices()[e.vertices[1] as usize];
            let (l, s) = (dist(a, b), dist(a, p));
            ((s + dist(p, b) - l).abs() <= 1e-12 * l).then(|| {
                let t = s / l;
                (1.0 - t) * self.0[k] + t * self.0[(k + 1) % n]
            })
        })
    }

    pub fn add(&self, other: &TraceField) -> TraceField {
        TraceField(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }
}

/// Length of boundary edge `k`, which joins boundary positions `k` and `k + 1`.
pub fn edge_lengths(mesh: &Mesh) -> Vec<f64> {
    mesh.boundary_edges()
        .iter()
        .map(|e| {
            dist(
                mesh.vertices()[e.vertices[0] as usize],
                mesh.vertices()[e.vertices[1] as usize],
            )
        })
        .collect()
}

/// Gram matrix of the boundary hat functions (cyclic tridiagonal).
pub fn boundary_mass(mesh: &Mesh) -> SparseMatrix {
    let n = mesh.boundary_vertices().len();
    let mut trip = Vec::with_capacity(4 * n);
    for (k, l) in edge_lengths(mesh).into_iter().enumerate() {
        let (i, j) = (k as u32, ((k + 1) % n) as u32);
        trip.push((i, i, l / 3.0));
        trip.push((j, j, l / 3.0));
        trip.push((i, j, l / 6.0));
        trip.push((j, i, l / 6.0));
    }
    SparseMatrix::from_triplets(n, trip)
}

/// Quadrature nodes on every boundary edge, as `(edge, t, weight * length)`.
/// Edges at the corner are graded toward it.
fn boundary_nodes(mesh: &Mesh, quad: &LineQuadrature) -> Vec<(usize, Point, f64, f64)> {
    let regular = quad.nodes(false);
    let graded = quad.nodes(true);
    let mut out = Vec::new();
    for (k, e) in mesh.boundary_edges().iter().enumerate() {
        let a = mesh.vertices()[e.vertices[0] as usize];
        let b = mesh.vertices()[e.vertices[1] as usize];
        let l = dist(a, b);
        let at_start = e.vertices[0] == mesh.corner();
        let at_end = e.vertices[1] == mesh.corner();
        let nodes = if at_start || at_end {
            &graded
        } else {
            &regular
        };
        for &(s, w) in nodes {
            // t is the local coordinate from a to b
            let t = if at_end { 1.0 - s } else { s };
            // measure from the graded end so that points stay off the corner
            let x = if at_end {
                [b[0] + s * (a[0] - b[0]), b[1] + s * (a[1] - b[1])]
            } else {
                [a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])]
            };
            out.push((k, x, t, w * l));
        }
    }
    out
}

/// `(u, lambda_x)_Gamma` and `(1, lambda_x)_Gamma` for every boundary hat,
/// both with the same quadrature.
pub fn boundary_moments(
    mesh: &Mesh,
    u: &dyn Fn(Point) -> f64,
    quad: &LineQuadrature,
) -> (Vec<f64>, Vec<f64>) {
    let n = mesh.boundary_vertices().len();
    let mut num = vec![0.0; n];
    let mut den = vec![0.0; n];
    for (k, x, t, w) in boundary_nodes(mesh, quad) {
        let ux = u(x);
        let (w0, w1) = (w * (1.0 - t), w * t);
        let j = (k + 1) % n;
        num[k] += w0 * ux;
        den[k] += w0;
        num[j] += w1 * ux;
        den[j] += w1;
    }
    (num, den)
}

/// `L^2(Gamma)` projection onto continuous piecewise linear traces.
pub fn l2_project_trace(
    u: &dyn Fn(Point) -> f64,
    mesh: &Mesh,
    quad: &LineQuadrature,
) -> Result<TraceField> {
    let (rhs, _) = boundary_moments(mesh, u, quad);
    let l = edge_lengths(mesh);
    let n = l.len();
    let diag: Vec<f64> = (0..n).map(|k| (l[k] + l[(k + n - 1) % n]) / 3.0).collect();
    // off[k] couples positions k and k + 1
    let off: Vec<f64> = l.iter().map(|l| l / 6.0).collect();
    Ok(TraceField(solve_cyclic_tridiagonal(&diag, &off, &rhs)?))
}

/// Carstensen's quasi-interpolant `pi_x(u) = (u, lambda_x) / (1, lambda_x)`.
pub fn carstensen_trace(
    u: &dyn Fn(Point) -> f64,
    mesh: &Mesh,
    quad: &LineQuadrature,
) -> TraceField {
    let (num, den) = boundary_moments(mesh, u, quad);
    TraceField(num.iter().zip(&den).map(|(a, b)| a / b).collect())
}

/// How a rough boundary datum is turned into a discrete trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Regularization {
    #[default]
    L2Projection,
    Carstensen,
}

impl Regularization {
    pub fn apply(
        &self,
        u: &dyn Fn(Point) -> f64,
        mesh: &Mesh,
        quad: &LineQuadrature,
    ) -> Result<TraceField> {
        match self {
            Regularization::L2Projection => l2_project_trace(u, mesh, quad),
            Regularization::Carstensen => Ok(carstensen_trace(u, mesh, quad)),
        }
    }
}

impl std::str::FromStr for Regularization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "l2proj" => Ok(Regularization::L2Projection),
            "carstensen" => Ok(Regularization::Carstensen),
            _ => Err(Error::Invalid(format!(
                "unknown regularization {s:?} (l2proj|carstensen)"
            ))),
        }
    }
}

impl std::fmt::Display for Regularization {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Regularization::L2Projection => "l2proj",
            Regularization::Carstensen => "carstensen",
        })
    }
}

/// Solves the symmetric cyclic tridiagonal system with diagonal `diag` and
/// `off[k]` coupling unknowns `k` and `k + 1 (mod n)`, by the Thomas algorithm
/// and a Sherman-Morrison correction for the wrap-around entries.
pub fn solve_cyclic_tridiagonal(diag: &[f64], off: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    if off.len() != n || rhs.len() != n {
        return Err(Error::LengthMismatch {
            what: "cyclic tridiagonal system",
            expected: n,
            got: off.len().min(rhs.len()),
        });
    }
    if n < 3 {
        return Err(Error::Invalid(
            "cyclic system needs at least 3 unknowns".into(),
        ));
    }
    let corner = off[n - 1];
    let gamma = -diag[0];
    let mut d = diag.to_vec();
    d[0] -= gamma;
    d[n - 1] -= corner * corner / gamma;
    let y = thomas(&d, &off[..n - 1], rhs);
    let mut u = vec![0.0; n];
    u[0] = gamma;
    u[n - 1] = corner;
    let z = thomas(&d, &off[..n - 1], &u);
    let vy = y[0] + corner / gamma * y[n - 1];
    let vz = z[0] + corner / gamma * z[n - 1];
    let f = vy / (1.0 + vz);
    Ok(y.iter().zip(&z).map(|(y, z)| y - f * z).collect())
}

fn thomas(diag: &[f64], off: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    c[0] = if n > 1 { off[0] / diag[0] } else { 0.0 };
    d[0] = rhs[0] / diag[0];
    for i in 1..n {
        let m = diag[i] - off[i - 1] * c[i - 1];
        if i < n - 1 {
            c[i] = off[i] / m;
        }
        d[i] = (rhs[i] - off[i - 1] * d[i - 1]) / m;
    }
    let mut x = d;
    for i in (0..n - 1).rev() {
        x[i] -= c[i] * x[i + 1];
    }
    x
}
