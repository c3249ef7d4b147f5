//! Compressed-row sparse matrices, a Jacobi-preconditioned conjugate
//! gradient solver and a sparse Cholesky factorization.

use std::io::Write;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    values: Vec<f64>,
}

impl SparseMatrix {
    /// Builds an `n x n` matrix from triplets; duplicates are summed in the
    /// order they appear, so the result is deterministic.
    pub fn from_triplets(n: usize, mut triplets: Vec<(u32, u32, f64)>) -> SparseMatrix {
        triplets.sort_by_key(|&(i, j, _)| (i, j));
        let mut row_ptr = vec![0usize; n + 1];
        let mut cols = Vec::with_capacity(triplets.len() / 3);
        let mut values: Vec<f64> = Vec::with_capacity(triplets.len() / 3);
        let mut last: Option<(u32, u32)> = None;
        for (i, j, v) in triplets {
            if last == Some((i, j)) {
                *values.last_mut().unwrap() += v;
            } else {
                cols.push(j);
                values.push(v);
                row_ptr[i as usize + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        SparseMatrix {
            n,
            row_ptr,
            cols,
            values,
        }
    }

    pub fn identity(n: usize) -> SparseMatrix {
        SparseMatrix::from_triplets(n, (0..n as u32).map(|i| (i, i, 1.0)).collect())
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()]
            .iter()
            .zip(&self.values[r])
            .map(|(&j, &v)| (j as usize, v))
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.row(i).find(|&(c, _)| c == j).map_or(0.0, |(_, v)| v)
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.n);
        assert_eq!(y.len(), self.n);
        for (i, yi) in y.iter_mut().enumerate() {
            let mut s = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                s += self.values[k] * x[self.cols[k] as usize];
            }
            *yi = s;
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.mul_vec_into(x, &mut y);
        y
    }

    /// `x^T A y`
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        assert_eq!(x.len(), self.n);
        (0..self.n)
            .map(|i| x[i] * self.row(i).map(|(j, v)| v * y[j]).sum::<f64>())
            .sum()
    }

    pub fn sum_all(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        (0..self.n).all(|i| self.row(i).all(|(j, v)| (v - self.get(j, i)).abs() <= tol))
    }

    /// The principal submatrix on `keep` (indices in increasing order), with
    /// the map from old to new indices.
    pub fn restrict(&self, keep: &[usize]) -> SparseMatrix {
        let mut map = vec![u32::MAX; self.n];
        for (k, &i) in keep.iter().enumerate() {
            map[i] = k as u32;
        }
        let mut row_ptr = Vec::with_capacity(keep.len() + 1);
        row_ptr.push(0);
        let mut cols = Vec::new();
        let mut values = Vec::new();
        for &i in keep {
            for (j, v) in self.row(i) {
                if map[j] != u32::MAX {
                    cols.push(map[j]);
                    values.push(v);
                }
            }
            row_ptr.push(cols.len());
        }
        SparseMatrix {
            n: keep.len(),
            row_ptr,
            cols,
            values,
        }
    }

    /// Coordinate text format (`i j value`, one-based) for debugging.
    pub fn write_coordinate<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{} {} {}", self.n, self.n, self.nnz())?;
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                writeln!(w, "{} {} {:.16e}", i + 1, j + 1, v)?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct CgOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub relative_residual: f64,
}

/// Sparse `L L^T` factorization (fill-reducing ordering chosen by `faer`).
///
/// On strongly graded meshes the nodal values near the corner can exceed the
/// far-field values by many orders of magnitude. A residual-based Krylov
/// stopping rule cannot see the far field then, while the factorization
/// delivers errors that are small relative to the local solution size.
#[derive(Debug, Clone)]
pub struct CholeskyFactor {
    n: usize,
    llt: faer::sparse::linalg::solvers::Llt<usize, f64>,
}

impl CholeskyFactor {
    pub fn new(a: &SparseMatrix) -> Result<CholeskyFactor> {
        use faer::sparse::{SparseColMat, Triplet};
        let n = a.dim();
        // the lower triangle is all the factorization reads
        let lower: Vec<Triplet<usize, usize, f64>> = (0..n)
            .flat_map(|i| {
                a.row(i)
                    .filter(move |&(j, _)| j <= i)
                    .map(move |(j, v)| Triplet::new(i, j, v))
            })
            .collect();
        let m = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &lower)
            .map_err(|e| Error::Invalid(format!("sparse matrix construction failed: {e:?}")))?;
        let llt = m
            .sp_cholesky(faer::Side::Lower)
            .map_err(|e| Error::Invalid(format!("Cholesky factorization failed: {e:?}")))?;
        Ok(CholeskyFactor { n, llt })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        use faer::linalg::solvers::Solve;
        if b.len() != self.n {
            return Err(Error::LengthMismatch {
                what: "right-hand side",
                expected: self.n,
                got: b.len(),
            });
        }
        let mut x = faer::Mat::<f64>::from_fn(self.n, 1, |i, _| b[i]);
        self.llt.solve_in_place(x.as_mut());
        Ok((0..self.n).map(|i| x[(i, 0)]).collect())
    }
}

/// Solves `A x = b` for symmetric positive definite `A` by conjugate
/// gradients with Jacobi preconditioning, stopping when
/// `|b - A x| <= tol |b|`. `maxit = None` means `10 n`.
pub fn cg_solve(a: &SparseMatrix, b: &[f64], tol: f64, maxit: Option<usize>) -> Result<CgOutcome> {
    let n = a.dim();
    if b.len() != n {
        return Err(Error::LengthMismatch {
            what: "right-hand side",
            expected: n,
            got: b.len(),
        });
    }
    let maxit = maxit.unwrap_or(10 * n.max(1));
    let bnorm = norm(b);
    if bnorm == 0.0 {
        return Ok(CgOutcome {
            x: vec![0.0; n],
            iterations: 0,
            relative_residual: 0.0,
        });
    }
    let inv_diag: Vec<f64> = a
        .diagonal()
        .iter()
        .map(|&d| if d > 0.0 { 1.0 / d } else { 1.0 })
        .collect();
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(r, d)| r * d).collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = dot(&r, &z);
    let mut rel = 1.0;
    for it in 1..=maxit {
        a.mul_vec_into(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::NotConverged {
                iterations: it,
                residual: rel,
                tol,
            });
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        rel = norm(&r) / bnorm;
        if rel <= tol {
            // confirm with the true residual to guard against drift
            let true_rel = residual_norm(a, &x, b) / bnorm;
            if true_rel <= tol {
                return Ok(CgOutcome {
                    x,
                    iterations: it,
                    relative_residual: true_rel,
                });
            }
            r = b.iter().zip(a.mul_vec(&x)).map(|(b, ax)| b - ax).collect();
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::NotConverged {
        iterations: maxit,
        residual: rel,
        tol,
    })
}

pub fn residual_norm(a: &SparseMatrix, x: &[f64], b: &[f64]) -> f64 {
    let ax = a.mul_vec(x);
    norm(&ax.iter().zip(b).map(|(ax, b)| b - ax).collect::<Vec<_>>())
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
