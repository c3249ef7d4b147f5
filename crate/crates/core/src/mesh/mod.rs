//! Conforming triangulations of the cut square domain with newest-vertex
//! bisection and grading toward the singular corner.

mod bisect;
mod grading;
mod io;

pub use grading::{refine_to_graded, verify_grading, GradingParams, GradingReport};
pub(crate) use io::fmt_f64;

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::geometry::{self, dist, signed_area, Point};

/// A boundary edge, oriented so that the domain lies to its left.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryEdge {
    pub vertices: [u32; 2],
    pub normal: [f64; 2],
    /// Index of the polygon side this edge lies on (see `geometry::domain_polygon`).
    pub segment: u32,
}

/// Triangulation of the cut square. Triangles are stored counterclockwise
/// with the newest vertex first; the edge opposite it is the refinement edge.
#[derive(Debug, Clone)]
pub struct Mesh {
    vertices: Vec<Point>,
    triangles: Vec<[u32; 3]>,
    boundary_edges: Vec<BoundaryEdge>,
    /// Boundary vertices in loop order, starting at the corner.
    boundary_vertices: Vec<u32>,
    boundary_index: Vec<u32>,
    /// For vertices created by bisection, the endpoints of the split edge.
    parents: Vec<Option<[u32; 2]>>,
    omega: f64,
    corner: u32,
}

pub const INTERIOR: u32 = u32::MAX;

impl Mesh {
    /// Coarse fan triangulation: every triangle has the corner as a vertex and
    /// the polygon corners of the domain as its other vertices.
    pub fn initial(omega: f64) -> Result<Mesh> {
        let poly = geometry::domain_polygon(omega)?;
        let n = poly.len();
        let mut triangles = Vec::with_capacity(n - 2);
        for i in 1..n - 1 {
            triangles.push(with_longest_edge_refinement(
                &poly,
                [0, i as u32, (i + 1) as u32],
            ));
        }
        let boundary_edges = (0..n)
            .map(|i| {
                let a = i as u32;
                let b = ((i + 1) % n) as u32;
                BoundaryEdge {
                    vertices: [a, b],
                    normal: outward_normal(poly[i], poly[(i + 1) % n]),
                    segment: i as u32,
                }
            })
            .collect();
        Mesh::assemble(poly, triangles, boundary_edges, vec![None; n], omega, 0)
    }

    pub(crate) fn assemble(
        vertices: Vec<Point>,
        triangles: Vec<[u32; 3]>,
        boundary_edges: Vec<BoundaryEdge>,
        parents: Vec<Option<[u32; 2]>>,
        omega: f64,
        corner: u32,
    ) -> Result<Mesh> {
        let nv = vertices.len();
        let mut next: HashMap<u32, usize> = HashMap::with_capacity(boundary_edges.len());
        for (k, e) in boundary_edges.iter().enumerate() {
            if next.insert(e.vertices[0], k).is_some() {
                return Err(Error::Invalid(format!(
                    "boundary vertex {} starts two boundary edges",
                    e.vertices[0]
                )));
            }
        }
        // Boundary loop in order, starting at the corner.
        let mut boundary_vertices = Vec::with_capacity(boundary_edges.len());
        let mut ordered_edges = Vec::with_capacity(boundary_edges.len());
        let mut v = corner;
        loop {
            let k = *next
                .get(&v)
                .ok_or_else(|| Error::Invalid(format!("boundary loop broken at vertex {v}")))?;
            boundary_vertices.push(v);
            ordered_edges.push(boundary_edges[k].clone());
            v = boundary_edges[k].vertices[1];
            if v == corner {
                break;
            }
            if boundary_vertices.len() > boundary_edges.len() {
                return Err(Error::Invalid("boundary edges do not form a loop".into()));
            }
        }
        if ordered_edges.len() != boundary_edges.len() {
            return Err(Error::Invalid("boundary has more than one loop".into()));
        }
        let mut boundary_index = vec![INTERIOR; nv];
        for (i, &b) in boundary_vertices.iter().enumerate() {
            boundary_index[b as usize] = i as u32;
        }
        Ok(Mesh {
            vertices,
            triangles,
            boundary_edges: ordered_edges,
            boundary_vertices,
            boundary_index,
            parents,
            omega,
            corner,
        })
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[u32; 3]] {
        &self.triangles
    }

    pub fn boundary_edges(&self) -> &[BoundaryEdge] {
        &self.boundary_edges
    }

    /// Boundary vertices in counterclockwise loop order starting at the corner.
    pub fn boundary_vertices(&self) -> &[u32] {
        &self.boundary_vertices
    }

    /// Position of `v` in `boundary_vertices`, or `None` for interior vertices.
    pub fn boundary_position(&self, v: u32) -> Option<usize> {
        match self.boundary_index[v as usize] {
            INTERIOR => None,
            i => Some(i as usize),
        }
    }

    pub fn is_boundary(&self, v: u32) -> bool {
        self.boundary_index[v as usize] != INTERIOR
    }

    pub fn parents(&self) -> &[Option<[u32; 2]>] {
        &self.parents
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    /// Index of the singular corner (at the origin).
    pub fn corner(&self) -> u32 {
        self.corner
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn num_interior(&self) -> usize {
        self.vertices.len() - self.boundary_vertices.len()
    }

    pub fn corners_of(&self, t: usize) -> [Point; 3] {
        let [a, b, c] = self.triangles[t];
        [
            self.vertices[a as usize],
            self.vertices[b as usize],
            self.vertices[c as usize],
        ]
    }

    pub fn area_of(&self, t: usize) -> f64 {
        let [a, b, c] = self.corners_of(t);
        signed_area(a, b, c)
    }

    pub fn total_area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.area_of(t)).sum()
    }

    /// Diameter (longest edge) of triangle `t`.
    pub fn diameter(&self, t: usize) -> f64 {
        let [a, b, c] = self.corners_of(t);
        dist(a, b).max(dist(b, c)).max(dist(c, a))
    }

    pub fn max_diameter(&self) -> f64 {
        (0..self.triangles.len())
            .map(|t| self.diameter(t))
            .fold(0.0, f64::max)
    }

    /// Distance of triangle `t` to the corner, taken as the smallest vertex radius.
    pub fn corner_distance(&self, t: usize) -> f64 {
        self.corners_of(t)
            .iter()
            .map(|p| p[0].hypot(p[1]))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn touches_corner(&self, t: usize) -> bool {
        self.triangles[t].contains(&self.corner)
    }

    /// Smallest interior angle over all triangles, in radians.
    pub fn min_angle(&self) -> f64 {
        (0..self.triangles.len())
            .map(|t| {
                let p = self.corners_of(t);
                (0..3)
                    .map(|i| {
                        let a = p[i];
                        let b = p[(i + 1) % 3];
                        let c = p[(i + 2) % 3];
                        let u = [b[0] - a[0], b[1] - a[1]];
                        let v = [c[0] - a[0], c[1] - a[1]];
                        let cos = (u[0] * v[0] + u[1] * v[1]) / (dist(a, b) * dist(a, c));
                        cos.clamp(-1.0, 1.0).acos()
                    })
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Total length of the boundary.
    pub fn boundary_length(&self) -> f64 {
        self.boundary_edges
            .iter()
            .map(|e| {
                dist(
                    self.vertices[e.vertices[0] as usize],
                    self.vertices[e.vertices[1] as usize],
                )
            })
            .sum()
    }

    /// Checks conformity, orientation and the boundary description.
    pub fn check(&self) -> Result<()> {
        for t in 0..self.triangles.len() {
            let area = geometry::shape_area(&self.corners_of(t));
            if !(area > 0.0) {
                return Err(Error::DegenerateTriangle { triangle: t, area });
            }
        }
        let mut count: HashMap<(u32, u32), u32> = HashMap::new();
        for tri in &self.triangles {
            for i in 0..3 {
                *count.entry(edge_key(tri[i], tri[(i + 1) % 3])).or_default() += 1;
            }
        }
        let mut boundary: HashMap<(u32, u32), ()> = HashMap::new();
        for e in &self.boundary_edges {
            boundary.insert(edge_key(e.vertices[0], e.vertices[1]), ());
        }
        for (&e, &c) in &count {
            let on_boundary = boundary.contains_key(&e);
            match (c, on_boundary) {
                (1, true) | (2, false) => {}
                _ => {
                    return Err(Error::Invalid(format!(
                        "edge {e:?} is shared by {c} triangles (boundary: {on_boundary})"
                    )))
                }
            }
        }
        if boundary.len() != self.boundary_edges.len()
            || boundary.keys().any(|e| !count.contains_key(e))
        {
            return Err(Error::Invalid(
                "boundary edge not owned by a triangle".into(),
            ));
        }
        Ok(())
    }

    /// Bisects every triangle `rounds` times.
    pub fn refine_uniform(&self, rounds: usize) -> Mesh {
        let mut m = self.clone();
        for _ in 0..rounds {
            let all: Vec<usize> = (0..m.num_triangles()).collect();
            m = m.bisect_marked(&all);
        }
        m
    }

    /// Prolongates nodal values from `coarse` to this mesh, which must have
    /// been obtained from `coarse` by bisection.
    pub fn prolongate(&self, coarse: &Mesh, values: &[f64]) -> Result<Vec<f64>> {
        let nc = coarse.num_vertices();
        if values.len() != nc {
            return Err(Error::LengthMismatch {
                what: "coarse nodal values",
                expected: nc,
                got: values.len(),
            });
        }
        if self.num_vertices() < nc || self.vertices[..nc] != coarse.vertices[..] {
            return Err(Error::Invalid(
                "mesh is not a refinement of the coarse mesh".into(),
            ));
        }
        let mut out = values.to_vec();
        out.reserve(self.num_vertices() - nc);
        for v in nc..self.num_vertices() {
            let [a, b] = self.parents[v]
                .ok_or_else(|| Error::Invalid(format!("vertex {v} has no parents")))?;
            out.push(0.5 * (out[a as usize] + out[b as usize]));
        }
        Ok(out)
    }
}

pub(crate) fn edge_key(a: u32, b: u32) -> (u32, u32) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

pub(crate) fn outward_normal(a: Point, b: Point) -> [f64; 2] {
    let l = dist(a, b);
    [(b[1] - a[1]) / l, -(b[0] - a[0]) / l]
}

/// Rotates a counterclockwise triangle so the vertex opposite its longest
/// edge comes first.
fn with_longest_edge_refinement(pts: &[Point], tri: [u32; 3]) -> [u32; 3] {
    let p = |i: usize| pts[tri[i] as usize];
    // length of the edge opposite vertex i
    let opp = |i: usize| dist(p((i + 1) % 3), p((i + 2) % 3));
    let mut best = 0;
    for i in 1..3 {
        if opp(i) > opp(best) * (1.0 + 1e-12) {
            best = i;
        }
    }
    [tri[best], tri[(best + 1) % 3], tri[(best + 2) % 3]]
}
