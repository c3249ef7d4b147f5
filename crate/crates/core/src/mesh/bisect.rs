use std::collections::HashMap;

use super::{edge_key, BoundaryEdge, Mesh};

const NONE: u32 = u32::MAX;

impl Mesh {
    /// Newest-vertex bisection of the marked triangles plus the closure needed
    /// to keep the mesh conforming.
    ///
    /// The closure works on edges: a marked edge forces the refinement edge of
    /// every triangle containing it to be marked too. Afterwards each triangle
    /// is bisected until none of its edges carries a midpoint, which happens
    /// after at most three bisections per triangle.
    pub fn bisect_marked(&self, marked: &[usize]) -> Mesh {
        if marked.is_empty() {
            return self.clone();
        }
        let mut edge_tris: HashMap<(u32, u32), [u32; 2]> =
            HashMap::with_capacity(self.triangles.len() * 3 / 2 + 8);
        for (t, tri) in self.triangles.iter().enumerate() {
            for i in 0..3 {
                let slot = edge_tris
                    .entry(edge_key(tri[i], tri[(i + 1) % 3]))
                    .or_insert([NONE, NONE]);
                if slot[0] == NONE {
                    slot[0] = t as u32;
                } else {
                    slot[1] = t as u32;
                }
            }
        }

        let mut vertices = self.vertices.clone();
        let mut parents = self.parents.clone();
        let mut midpoint: HashMap<(u32, u32), u32> = HashMap::new();
        let mut queue: Vec<(u32, u32)> = Vec::new();

        let mut mark = |e: (u32, u32),
                        vertices: &mut Vec<[f64; 2]>,
                        parents: &mut Vec<Option<[u32; 2]>>,
                        queue: &mut Vec<(u32, u32)>| {
            if let std::collections::hash_map::Entry::Vacant(slot) = midpoint.entry(e) {
                let a = vertices[e.0 as usize];
                let b = vertices[e.1 as usize];
                slot.insert(vertices.len() as u32);
                vertices.push([0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])]);
                parents.push(Some([e.0, e.1]));
                queue.push(e);
            }
        };

        for &t in marked {
            let tri = self.triangles[t];
            mark(
                edge_key(tri[1], tri[2]),
                &mut vertices,
                &mut parents,
                &mut queue,
            );
        }
        while let Some(e) = queue.pop() {
            for &t in &edge_tris[&e] {
                if t == NONE {
                    continue;
                }
                let tri = self.triangles[t as usize];
                mark(
                    edge_key(tri[1], tri[2]),
                    &mut vertices,
                    &mut parents,
                    &mut queue,
                );
            }
        }

        let mut triangles = Vec::with_capacity(self.triangles.len() + 2 * midpoint.len());
        let mut stack: Vec<[u32; 3]> = Vec::with_capacity(8);
        for &tri in &self.triangles {
            stack.push(tri);
            while let Some([v0, v1, v2]) = stack.pop() {
                match midpoint.get(&edge_key(v1, v2)) {
                    Some(&m) => {
                        stack.push([m, v2, v0]);
                        stack.push([m, v0, v1]);
                    }
                    None => triangles.push([v0, v1, v2]),
                }
            }
        }

        let mut boundary_edges = Vec::with_capacity(self.boundary_edges.len() * 2);
        for e in &self.boundary_edges {
            let [a, b] = e.vertices;
            match midpoint.get(&edge_key(a, b)) {
                Some(&m) => {
                    boundary_edges.push(BoundaryEdge {
                        vertices: [a, m],
                        ..e.clone()
                    });
                    boundary_edges.push(BoundaryEdge {
                        vertices: [m, b],
                        ..e.clone()
                    });
                }
                None => boundary_edges.push(e.clone()),
            }
        }

        Mesh::assemble(
            vertices,
            triangles,
            boundary_edges,
            parents,
            self.omega,
            self.corner,
        )
        .expect("bisection preserves the boundary loop")
    }
}

/// Mutable newest-vertex bisection state for refining one triangle at a
/// time. The closure is recursive: before a triangle is bisected, its
/// neighbor across the refinement edge is bisected until it shares that
/// refinement edge, and then both are split at the common midpoint.
///
/// The first child keeps the index of its parent and the second is
/// appended, so indices stay valid while the refinement proceeds.
pub(crate) struct Refiner {
    omega: f64,
    corner: u32,
    vertices: Vec<[f64; 2]>,
    parents: Vec<Option<[u32; 2]>>,
    triangles: Vec<[u32; 3]>,
    /// Bisection generation of each triangle relative to the input mesh.
    generation: Vec<u32>,
    edge_tris: HashMap<(u32, u32), [u32; 2]>,
    midpoint: HashMap<(u32, u32), u32>,
    boundary_edges: Vec<BoundaryEdge>,
    /// Triangles created or changed since the last call to `take_touched`.
    touched: Vec<u32>,
}

impl Refiner {
    pub(crate) fn new(mesh: &Mesh) -> Refiner {
        let mut r = Refiner {
            omega: mesh.omega,
            corner: mesh.corner,
            vertices: mesh.vertices.clone(),
            parents: mesh.parents.clone(),
            triangles: mesh.triangles.clone(),
            generation: vec![0; mesh.triangles.len()],
            edge_tris: HashMap::with_capacity(mesh.triangles.len() * 3 / 2 + 8),
            midpoint: HashMap::new(),
            boundary_edges: mesh.boundary_edges.clone(),
            touched: Vec::new(),
        };
        for t in 0..r.triangles.len() {
            let tri = r.triangles[t];
            for i in 0..3 {
                r.attach(edge_key(tri[i], tri[(i + 1) % 3]), t as u32);
            }
        }
        r
    }

    pub(crate) fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub(crate) fn corners_of(&self, t: usize) -> [[f64; 2]; 3] {
        self.triangles[t].map(|v| self.vertices[v as usize])
    }

    pub(crate) fn touches_corner(&self, t: usize) -> bool {
        self.triangles[t].contains(&self.corner)
    }

    pub(crate) fn generation(&self, t: usize) -> u32 {
        self.generation[t]
    }

    pub(crate) fn take_touched(&mut self) -> Vec<u32> {
        std::mem::take(&mut self.touched)
    }

    fn attach(&mut self, e: (u32, u32), t: u32) {
        let slot = self.edge_tris.entry(e).or_insert([NONE, NONE]);
        if slot[0] == NONE {
            slot[0] = t;
        } else {
            slot[1] = t;
        }
    }

    fn detach(&mut self, e: (u32, u32), t: u32) {
        if let Some(slot) = self.edge_tris.get_mut(&e) {
            if slot[0] == t {
                slot[0] = slot[1];
                slot[1] = NONE;
            } else if slot[1] == t {
                slot[1] = NONE;
            }
            if slot[0] == NONE {
                self.edge_tris.remove(&e);
            }
        }
    }

    fn neighbor(&self, e: (u32, u32), t: u32) -> Option<u32> {
        let slot = self.edge_tris.get(&e)?;
        [slot[0], slot[1]]
            .into_iter()
            .find(|&s| s != NONE && s != t)
    }

    /// Bisects `t` together with whatever the closure requires.
    pub(crate) fn bisect(&mut self, t: u32) {
        let [_, v1, v2] = self.triangles[t as usize];
        let e = edge_key(v1, v2);
        let nb = loop {
            match self.neighbor(e, t) {
                Some(n) => {
                    let [_, w1, w2] = self.triangles[n as usize];
                    if edge_key(w1, w2) == e {
                        break Some(n);
                    }
                    // refine the neighbor until one of its children has e as refinement edge
                    self.bisect(n);
                }
                None => break None,
            }
        };
        let a = self.vertices[e.0 as usize];
        let b = self.vertices[e.1 as usize];
        let m = self.vertices.len() as u32;
        self.vertices
            .push([0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])]);
        self.parents.push(Some([e.0, e.1]));
        self.midpoint.insert(e, m);
        self.split(t, m);
        if let Some(n) = nb {
            self.split(n, m);
        }
    }

    fn split(&mut self, t: u32, m: u32) {
        let [v0, v1, v2] = self.triangles[t as usize];
        let c = self.triangles.len() as u32;
        let g = self.generation[t as usize] + 1;
        self.detach(edge_key(v1, v2), t);
        self.detach(edge_key(v2, v0), t);
        self.triangles[t as usize] = [m, v0, v1];
        self.triangles.push([m, v2, v0]);
        self.generation[t as usize] = g;
        self.generation.push(g);
        self.attach(edge_key(v2, v0), c);
        self.attach(edge_key(m, v1), t);
        self.attach(edge_key(m, v2), c);
        self.attach(edge_key(m, v0), t);
        self.attach(edge_key(m, v0), c);
        self.touched.push(t);
        self.touched.push(c);
    }

    fn split_boundary(&self, a: u32, b: u32, out: &mut Vec<BoundaryEdge>, proto: &BoundaryEdge) {
        match self.midpoint.get(&edge_key(a, b)) {
            Some(&m) => {
                self.split_boundary(a, m, out, proto);
                self.split_boundary(m, b, out, proto);
            }
            None => out.push(BoundaryEdge {
                vertices: [a, b],
                ..proto.clone()
            }),
        }
    }

    pub(crate) fn finish(self) -> Mesh {
        let mut boundary_edges = Vec::with_capacity(self.boundary_edges.len());
        for e in &self.boundary_edges {
            self.split_boundary(e.vertices[0], e.vertices[1], &mut boundary_edges, e);
        }
        Mesh::assemble(
            self.vertices,
            self.triangles,
            boundary_edges,
            self.parents,
            self.omega,
            self.corner,
        )
        .expect("bisection preserves the boundary loop")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::degrees;
    use std::collections::HashSet;
    use std::f64::consts::PI;

    fn refinement_edges(m: &Mesh) -> usize {
        m.triangles()
            .iter()
            .map(|t| edge_key(t[1], t[2]))
            .collect::<HashSet<_>>()
            .len()
    }

    #[test]
    fn empty_marking_is_identity() {
        let m = Mesh::initial(1.5 * PI).unwrap();
        let r = m.bisect_marked(&[]);
        assert_eq!(r.vertices(), m.vertices());
        assert_eq!(r.triangles(), m.triangles());
    }

    #[test]
    fn marking_all_bisects_each_refinement_edge_once() {
        for omega in [1.5 * PI, degrees(355.0), 0.5 * PI] {
            let m = Mesh::initial(omega).unwrap().refine_uniform(3);
            let edges = refinement_edges(&m);
            let all: Vec<usize> = (0..m.num_triangles()).collect();
            let r = m.bisect_marked(&all);
            r.check().unwrap();
            assert_eq!(r.num_triangles(), 2 * m.num_triangles());
            assert_eq!(r.num_vertices(), m.num_vertices() + edges);
        }
    }

    #[test]
    fn uniform_rounds_double_triangles() {
        let m = Mesh::initial(1.5 * PI).unwrap();
        for k in 0..8 {
            let r = m.refine_uniform(k);
            assert_eq!(r.num_triangles(), m.num_triangles() << k);
            assert!((r.total_area() - 3.0).abs() <= 3e-12);
        }
    }

    #[test]
    fn single_marked_triangle_gets_closure() {
        let m = Mesh::initial(1.5 * PI).unwrap().refine_uniform(4);
        for t in [0, 7, m.num_triangles() - 1] {
            let r = m.bisect_marked(&[t]);
            r.check().unwrap();
            assert!(r.num_triangles() > m.num_triangles());
            assert!((r.total_area() - 3.0).abs() <= 3e-12);
        }
    }
}
