//! Python bindings for `cornerfem`.
//!
//! Angles are passed in degrees, matching the command line tool.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use cornerfem::fem::solve_poisson_dirichlet;
use cornerfem::geometry::degrees;
use cornerfem::mesh::{refine_to_graded, GradingParams};
use cornerfem::quadrature::VolumeQuadrature;
use cornerfem::study::{self, Approximation, ExperimentConfig, Method, Problem};
use cornerfem::{DscmSettings, SingularExponent};

fn to_py(e: cornerfem::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Triangulation of the cut square with its corner at the origin.
#[pyclass(name = "Mesh", module = "pycornerfem")]
#[derive(Clone)]
struct PyMesh {
    inner: cornerfem::Mesh,
}

#[pymethods]
impl PyMesh {
    /// Coarse fan mesh for the interior angle `omega` (degrees).
    #[new]
    fn new(omega: f64) -> PyResult<Self> {
        let inner = cornerfem::Mesh::initial(degrees(omega)).map_err(to_py)?;
        Ok(PyMesh { inner })
    }

    fn refine_uniform(&self, rounds: usize) -> PyMesh {
        PyMesh {
            inner: self.inner.refine_uniform(rounds),
        }
    }

    /// Bisect towards the corner until the grading condition holds for `mu`
    /// and global size `h`.
    fn refine_graded(&self, mu: f64, h: f64) -> PyResult<PyMesh> {
        let mut params = GradingParams::new(mu, h);
        params.max_generations = params
            .generations_needed(self.inner.max_diameter())
            .max(params.max_generations);
        let inner = refine_to_graded(&self.inner, &params).map_err(to_py)?;
        Ok(PyMesh { inner })
    }

    #[getter]
    fn num_vertices(&self) -> usize {
        self.inner.num_vertices()
    }

    #[getter]
    fn num_triangles(&self) -> usize {
        self.inner.num_triangles()
    }

    fn vertices(&self) -> Vec<(f64, f64)> {
        self.inner.vertices().iter().map(|p| (p[0], p[1])).collect()
    }

    fn triangles(&self) -> Vec<(u32, u32, u32)> {
        self.inner
            .triangles()
            .iter()
            .map(|t| (t[0], t[1], t[2]))
            .collect()
    }

    fn max_diameter(&self) -> f64 {
        self.inner.max_diameter()
    }

    fn total_area(&self) -> f64 {
        self.inner.total_area()
    }

    /// Raises `ValueError` if the mesh is not a valid conforming triangulation.
    fn check(&self) -> PyResult<()> {
        self.inner.check().map_err(to_py)
    }

    fn __repr__(&self) -> String {
        format!(
            "Mesh(vertices={}, triangles={})",
            self.inner.num_vertices(),
            self.inner.num_triangles()
        )
    }
}

/// Result of the singular complement correction.
#[pyclass(name = "DscmSolution", module = "pycornerfem", get_all)]
struct PyDscmSolution {
    z_tilde: Vec<f64>,
    lambda_: f64,
    delta: f64,
    alpha: f64,
    gamma: f64,
    beta: f64,
    error: f64,
}

fn datum(exponent: f64) -> Problem {
    Problem::RoughDatum { exponent }
}

/// Standard finite element solution for the datum `r^-a sin(-a theta)` with
/// its boundary trace regularized by `regularization`. Returns the nodal
/// values and the L2 error.
#[pyfunction]
#[pyo3(signature = (mesh, datum_exponent=0.4999, regularization="l2proj"))]
fn solve_standard(
    py: Python<'_>,
    mesh: &PyMesh,
    datum_exponent: f64,
    regularization: &str,
) -> PyResult<(Vec<f64>, f64)> {
    let reg = regularization.parse().map_err(to_py)?;
    let m = &mesh.inner;
    py.allow_threads(|| {
        let exact = datum(datum_exponent).exact();
        let settings = DscmSettings::default();
        let trace = cornerfem::Regularization::apply(&reg, &*exact, m, &settings.line)?;
        let y = solve_poisson_dirichlet(m, None, &trace, settings.tol)?;
        let err = study::l2_error(
            m,
            Approximation::Fem(&y),
            &*exact,
            &VolumeQuadrature::default(),
        )?;
        Ok((y.values().to_vec(), err))
    })
    .map_err(to_py)
}

/// Finite element solution corrected by the dual singular function.
#[pyfunction]
#[pyo3(signature = (mesh, datum_exponent=0.4999, regularization="l2proj"))]
fn dscm_solve(
    py: Python<'_>,
    mesh: &PyMesh,
    datum_exponent: f64,
    regularization: &str,
) -> PyResult<PyDscmSolution> {
    let reg = regularization.parse().map_err(to_py)?;
    let m = &mesh.inner;
    py.allow_threads(|| {
        let exact = datum(datum_exponent).exact();
        let s = SingularExponent::new(m.omega())?;
        let settings = DscmSettings {
            regularization: reg,
            ..DscmSettings::default()
        };
        let sol = cornerfem::dscm_solve(m, &*exact, None, &s, &settings)?;
        let error = study::l2_error(m, Approximation::Dscm(&sol), &*exact, &settings.volume)?;
        Ok(PyDscmSolution {
            z_tilde: sol.z_tilde.values().to_vec(),
            lambda_: sol.lambda,
            delta: sol.delta,
            alpha: sol.alpha,
            gamma: sol.gamma,
            beta: sol.beta,
            error,
        })
    })
    .map_err(to_py)
}

/// Run a convergence ladder. Returns rows `(unknowns, error, eoc)` with
/// `eoc = None` on the first row.
#[pyfunction]
#[pyo3(signature = (omega, method="standard", levels=5, mu=None, regularization="l2proj", datum_exponent=0.4999))]
fn run_experiment(
    py: Python<'_>,
    omega: f64,
    method: &str,
    levels: usize,
    mu: Option<f64>,
    regularization: &str,
    datum_exponent: f64,
) -> PyResult<Vec<(usize, f64, Option<f64>)>> {
    let method: Method = method.parse().map_err(to_py)?;
    let config = ExperimentConfig {
        mu,
        regularization: regularization.parse().map_err(to_py)?,
        problem: datum(datum_exponent),
        ..ExperimentConfig::new(omega, method, levels)
    };
    let report = py
        .allow_threads(|| study::run_experiment(&config))
        .map_err(to_py)?;
    Ok(report
        .rows
        .iter()
        .map(|r| (r.unknowns, r.error, r.eoc))
        .collect())
}

/// Experimental orders of convergence `ln(e_{i-1}/e_i) / ln(sqrt(N_i/N_{i-1}))`.
#[pyfunction]
fn eoc(errors: Vec<f64>, unknowns: Vec<usize>) -> PyResult<Vec<Option<f64>>> {
    study::eoc(&errors, &unknowns).map_err(to_py)
}

/// Singular exponent `pi / omega` for an angle in degrees.
#[pyfunction]
fn singular_exponent(omega: f64) -> PyResult<f64> {
    Ok(SingularExponent::new(degrees(omega)).map_err(to_py)?.lambda)
}

#[pymodule]
fn pycornerfem(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyMesh>()?;
    m.add_class::<PyDscmSolution>()?;
    m.add_function(wrap_pyfunction!(solve_standard, m)?)?;
    m.add_function(wrap_pyfunction!(dscm_solve, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    m.add_function(wrap_pyfunction!(eoc, m)?)?;
    m.add_function(wrap_pyfunction!(singular_exponent, m)?)?;
    Ok(())
}
